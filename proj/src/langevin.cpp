#include "cbjj/langevin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbjj/escape.hpp"
#include "cbjj/parallel.hpp"

namespace cbjj {

void SimConfig::validate() const {
  if (!(time_step > 0.0 && time_step <= 0.1)) {
    throw ConfigError("time_step must lie in (0, 0.1]");
  }
  if (!(max_time > 0.0) || !std::isfinite(max_time)) {
    throw ConfigError("max_time must be positive");
  }
  if (!(escape_phase_threshold > constants::pi)) {
    throw ConfigError("escape_phase_threshold must exceed pi");
  }
  if (trajectories < 1) {
    throw ConfigError("at least one trajectory is required");
  }
  if (!(rf_coupling >= 0.0)) {
    throw ConfigError("rf_coupling must be non-negative");
  }
}

double rf_current_amplitude(const JunctionParams& params, double power, double coupling) {
  if (power < 0.0) {
    throw DomainError("RF power must be non-negative");
  }
  return coupling * std::sqrt(2.0 * power / params.shunt_resistance()) / params.critical_current();
}

PhaseDynamics make_phase_dynamics(const JunctionParams& params, double temperature, double bias,
                                  const std::optional<RfPulse>& pulse, double coupling) {
  if (!(temperature >= 0.0)) {
    throw DomainError("temperature must be non-negative");
  }
  PhaseDynamics dyn;
  dyn.reduced_bias = reduced_bias(params, bias);
  dyn.damping = 1.0 / params.zero_bias_quality_factor();
  dyn.noise_energy = constants::boltzmann * temperature / params.josephson_energy();
  if (pulse) {
    pulse->validate();
    const double omega0 = params.zero_bias_plasma_frequency();
    dyn.drive_amplitude = rf_current_amplitude(params, pulse->power_watts(), coupling);
    dyn.drive_frequency = 2.0 * constants::pi * pulse->frequency / omega0;
    dyn.drive_start = pulse->arrival_time * omega0;
    dyn.drive_end = dyn.drive_start + pulse->width * omega0;
  }
  return dyn;
}

Trajectory integrate_phase(const PhaseDynamics& dyn, const SimConfig& cfg, Rng& rng) {
  return integrate_phase_observed(dyn, cfg, rng, [](double, double, double) {});
}

Trajectory integrate_phase(const JunctionParams& params, double temperature, double bias,
                           const std::optional<RfPulse>& pulse, const SimConfig& cfg,
                           std::uint64_t trajectory_index) {
  cfg.validate();
  const PhaseDynamics dyn = make_phase_dynamics(params, temperature, bias, pulse, cfg.rf_coupling);
  Rng rng = make_stream(cfg.seed, trajectory_index);
  return integrate_phase(dyn, cfg, rng);
}

std::vector<Trajectory> run_trajectories(const PhaseDynamics& dyn, const SimConfig& cfg) {
  cfg.validate();
  std::vector<Trajectory> out(cfg.trajectories);
  parallel_for(cfg.trajectories, cfg.jobs, [&](std::size_t k) {
    Rng rng = make_stream(cfg.seed, k);
    out[k] = integrate_phase(dyn, cfg, rng);
  });
  return out;
}

EscapeRateEstimate estimate_escape_rate(std::span<const Trajectory> trajectories, double time_unit) {
  std::size_t escapes = 0;
  double exposure = 0.0;
  for (const auto& tr : trajectories) {
    exposure += tr.escape_time * time_unit;
    escapes += tr.escaped ? 1 : 0;
  }
  if (escapes < 10) {
    throw NumericalError("too few escapes (< 10) to estimate a rate; lengthen max_time or add trajectories");
  }
  EscapeRateEstimate est{};
  est.escapes = escapes;
  est.trajectories = trajectories.size();
  est.rate = static_cast<double>(escapes) / exposure;
  est.uncertainty = est.rate / std::sqrt(static_cast<double>(escapes));
  return est;
}

EscapeRateEstimate mc_escape_rate(const JunctionParams& params, const ThermalEnvironment& env, double bias,
                                  const SimConfig& cfg) {
  const PhaseDynamics dyn = make_phase_dynamics(params, env.temperature(), bias, std::nullopt, cfg.rf_coupling);
  const auto trajectories = run_trajectories(dyn, cfg);
  return estimate_escape_rate(trajectories, 1.0 / params.zero_bias_plasma_frequency());
}

BoundaryMap switching_boundary_map(const JunctionParams& params, double temperature,
                                   std::span<const double> bias_grid, std::span<const double> photon_grid,
                                   const RfPulse& pulse_template, const SimConfig& cfg,
                                   const BoundaryMapOptions& options) {
  cfg.validate();
  pulse_template.validate();
  if (bias_grid.empty() || photon_grid.empty()) {
    throw ConfigError("boundary map needs non-empty bias and photon grids");
  }
  for (double n : photon_grid) {
    if (!(n >= 0.0) || !std::isfinite(n)) {
      throw ConfigError("photon numbers must be finite and non-negative");
    }
  }

  BoundaryMap map;
  map.biases.assign(bias_grid.begin(), bias_grid.end());
  map.photon_numbers.assign(photon_grid.begin(), photon_grid.end());
  for (double bias : bias_grid) {
    map.level_counts.push_back(level_count(params, bias));
  }

  const double omega0 = params.zero_bias_plasma_frequency();
  const double tau_j = params.relaxation_time();
  const std::size_t n_photon = photon_grid.size();
  const std::size_t cells = bias_grid.size() * n_photon;
  const std::size_t per_cell = cfg.trajectories;

  // Only the pulse window matters here, so each trajectory starts a short
  // lead time before the pulse instead of at the protocol trigger.
  RfPulse shifted = pulse_template;
  shifted.arrival_time = options.lead_time / omega0;
  SimConfig cell_cfg = cfg;
  cell_cfg.max_time = options.lead_time + pulse_template.width * omega0 + options.settle_time;

  std::vector<unsigned char> switched(cells * per_cell, 0);
  parallel_for(cells * per_cell, cfg.jobs, [&](std::size_t item) {
    const std::size_t cell = item / per_cell;
    const double bias = bias_grid[cell / n_photon];
    const double n_gamma = photon_grid[cell % n_photon];

    Rng rng = make_stream(cfg.seed, item);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * constants::pi);

    std::optional<RfPulse> pulse;
    if (n_gamma > 0.0) {
      RfPulse p = shifted;
      p.power_dbm = dbm_for_photon_number(n_gamma, p.frequency, tau_j);
      pulse = p;
    }
    PhaseDynamics dyn = make_phase_dynamics(params, temperature, bias, pulse, cfg.rf_coupling);
    dyn.drive_phase = phase(rng);
    switched[item] = integrate_phase(dyn, cell_cfg, rng).escaped ? 1 : 0;
  });

  map.efficiency.assign(cells, 0.0);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::size_t hits = 0;
    for (std::size_t k = 0; k < per_cell; ++k) {
      hits += switched[cell * per_cell + k];
    }
    map.efficiency[cell] = static_cast<double>(hits) / static_cast<double>(per_cell);
  }
  return map;
}

std::vector<double> threshold_photon_numbers(const BoundaryMap& map, double level) {
  const std::size_t n_photon = map.photon_numbers.size();
  std::vector<double> out(map.biases.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t b = 0; b < map.biases.size(); ++b) {
    for (std::size_t j = 0; j < n_photon; ++j) {
      const double e = map.at(b, j);
      if (e < level) {
        continue;
      }
      if (j == 0) {
        out[b] = map.photon_numbers[0];
        break;
      }
      const double e0 = map.at(b, j - 1);
      const double x0 = map.photon_numbers[j - 1];
      const double x1 = map.photon_numbers[j];
      const double frac = (level - e0) / (e - e0);
      if (x0 > 0.0) {
        out[b] = std::exp(std::log(x0) + frac * (std::log(x1) - std::log(x0)));
      } else {
        out[b] = x0 + frac * (x1 - x0);
      }
      break;
    }
  }
  return out;
}

}  // namespace cbjj
