#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cbjj/constants.hpp"
#include "cbjj/errors.hpp"
#include "cbjj/escape.hpp"
#include "cbjj/junction.hpp"
#include "cbjj/random.hpp"
#include "cbjj/rf.hpp"

namespace cbjj {

/// Dimensionless RCSJ equation in units of 1/omega_p0 (time), I_c (current)
/// and U_0 (energy):
///
///   phi'' + damping phi' + sin phi = bias + a sin(W t + theta) + xi(t),
///   <xi(t) xi(t')> = 2 damping (k_B T / U_0) delta(t - t'),
///
/// with the drive switched on for t in [drive_start, drive_end).
struct PhaseDynamics {
  double reduced_bias = 0.0;
  double damping = 0.0;       // 1 / Q_0
  double noise_energy = 0.0;  // k_B T / U_0
  double drive_amplitude = 0.0;
  double drive_frequency = 0.0;
  double drive_phase = 0.0;
  double drive_start = 0.0;
  double drive_end = 0.0;

  double drive(double t) const {
    return (t >= drive_start && t < drive_end) ? drive_amplitude * std::sin(drive_frequency * t + drive_phase)
                                               : 0.0;
  }
  double acceleration(double phi, double velocity, double t) const {
    return reduced_bias + drive(t) - std::sin(phi) - damping * velocity;
  }
  double well_minimum() const { return std::asin(reduced_bias); }
  double barrier_maximum() const { return constants::pi - std::asin(reduced_bias); }
  /// Potential plus kinetic energy in units of U_0.
  double energy(double phi, double velocity) const {
    return 0.5 * velocity * velocity - std::cos(phi) - reduced_bias * phi;
  }
};

/// RF current amplitude (in units of I_c) produced by `power` watts on a line
/// of impedance Z0 = R, scaled by the coupling factor kappa.
double rf_current_amplitude(const JunctionParams& params, double power, double coupling);

/// Builds the dimensionless dynamics for a physical operating point.
/// temperature may be 0 (noiseless). The pulse, when present, starts at its
/// arrival time.
PhaseDynamics make_phase_dynamics(const JunctionParams& params, double temperature, double bias,
                                  const std::optional<RfPulse>& pulse, double coupling);

struct SimConfig {
  double time_step = 0.05;                          // in 1/omega_p0
  double max_time = 1.0e4;                          // in 1/omega_p0
  double escape_phase_threshold = 2.0 * constants::pi;  // rad past the well, see escape_phase()
  std::size_t trajectories = 1000;
  std::uint64_t seed = 1;
  double rf_coupling = 2.0;
  unsigned jobs = 1;

  void validate() const;
};

/// Phase beyond which a trajectory counts as switched: the barrier maximum
/// plus (threshold - pi).
inline double escape_phase(const PhaseDynamics& dyn, const SimConfig& cfg) {
  return dyn.barrier_maximum() + (cfg.escape_phase_threshold - constants::pi);
}

struct Trajectory {
  double escape_time;  // dimensionless; max_time when censored
  bool escaped;
};

/// Integrates one trajectory from rest at the well minimum with the stochastic
/// Heun scheme. observer(t, phi, velocity) is called after every step.
/// Throws NumericalError if a noiseless, undriven run gains energy.
template <class Observer>
Trajectory integrate_phase_observed(const PhaseDynamics& dyn, const SimConfig& cfg, Rng& rng, Observer&& observer) {
  const double dt = cfg.time_step;
  const double noise_sigma = std::sqrt(2.0 * dyn.damping * dyn.noise_energy * dt);
  const bool noisy = noise_sigma > 0.0;
  const bool conservative = !noisy && dyn.drive_amplitude == 0.0;
  const double exit_phase = escape_phase(dyn, cfg);
  const auto steps = static_cast<std::uint64_t>(std::ceil(cfg.max_time / dt));

  std::normal_distribution<double> gauss(0.0, 1.0);
  double phi = dyn.well_minimum();
  double v = 0.0;
  const double initial_energy = dyn.energy(phi, v);

  for (std::uint64_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double kick = noisy ? noise_sigma * gauss(rng) : 0.0;
    const double a1 = dyn.acceleration(phi, v, t);
    const double phi_pred = phi + dt * v;
    const double v_pred = v + dt * a1 + kick;
    const double a2 = dyn.acceleration(phi_pred, v_pred, t + dt);
    phi += 0.5 * dt * (v + v_pred);
    v += 0.5 * dt * (a1 + a2) + kick;
    const double t_next = t + dt;
    observer(t_next, phi, v);

    if (phi > exit_phase && v > 0.0) {
      return {std::min(t_next, cfg.max_time), true};
    }
    if (conservative && (k & 1023u) == 0 &&
        dyn.energy(phi, v) > initial_energy + 1e-9 * (1.0 + std::abs(initial_energy))) {
      throw NumericalError("phase integrator gained energy without noise or drive; reduce time_step");
    }
    if (!std::isfinite(phi) || !std::isfinite(v)) {
      throw NumericalError("phase integrator diverged");
    }
  }
  return {cfg.max_time, false};
}

Trajectory integrate_phase(const PhaseDynamics& dyn, const SimConfig& cfg, Rng& rng);

/// One trajectory for a physical operating point, drawing from the stream
/// keyed by (cfg.seed, trajectory_index).
Trajectory integrate_phase(const JunctionParams& params, double temperature, double bias,
                           const std::optional<RfPulse>& pulse, const SimConfig& cfg,
                           std::uint64_t trajectory_index = 0);

/// Runs cfg.trajectories independent trajectories (sharded over cfg.jobs).
std::vector<Trajectory> run_trajectories(const PhaseDynamics& dyn, const SimConfig& cfg);

struct EscapeRateEstimate {
  double rate;         // per time unit supplied to the estimator
  double uncertainty;  // rate / sqrt(escapes)
  std::size_t escapes;
  std::size_t trajectories;
};

/// Censored-exponential maximum likelihood: escapes / total exposure time.
/// Times are multiplied by time_unit (seconds per dimensionless unit) first.
/// Throws NumericalError below 10 escapes.
EscapeRateEstimate estimate_escape_rate(std::span<const Trajectory> trajectories, double time_unit = 1.0);

/// Monte Carlo escape rate in Hz for an undriven junction.
EscapeRateEstimate mc_escape_rate(const JunctionParams& params, const ThermalEnvironment& env, double bias,
                                  const SimConfig& cfg);

struct BoundaryMapOptions {
  /// Integration time before the pulse starts (1/omega_p0); the template's
  /// arrival time is not used.
  double lead_time = 20.0;
  /// Extra integration time after the pulse ends (1/omega_p0) during which a
  /// switch still counts.
  double settle_time = 50.0;
};

/// Switching efficiency on a (bias x photon number) grid.
struct BoundaryMap {
  std::vector<double> biases;          // A
  std::vector<double> level_counts;    // per bias
  std::vector<double> photon_numbers;  // per relaxation time
  std::vector<double> efficiency;      // row-major [bias][photon]

  double at(std::size_t bias_index, std::size_t photon_index) const {
    return efficiency[bias_index * photon_numbers.size() + photon_index];
  }
};

/// Fraction of trajectories that switch while a pulse shaped like
/// `pulse_template` (frequency, width) drives the junction, for every grid
/// cell, counting switches up to settle_time after the pulse. Each
/// trajectory draws its own RF phase. Pulse power is set from the
/// photon number. temperature may be 0.
BoundaryMap switching_boundary_map(const JunctionParams& params, double temperature,
                                   std::span<const double> bias_grid, std::span<const double> photon_grid,
                                   const RfPulse& pulse_template, const SimConfig& cfg,
                                   const BoundaryMapOptions& options = {});

/// Per bias row, the photon number at which the efficiency first reaches
/// `level`, interpolated linearly in log(photon number). NaN when the row
/// never reaches it; the first grid value when it already starts above.
std::vector<double> threshold_photon_numbers(const BoundaryMap& map, double level = 0.5);

}  // namespace cbjj
