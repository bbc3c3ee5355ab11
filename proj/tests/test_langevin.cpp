#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"

#include "cbjj/constants.hpp"
#include "cbjj/escape.hpp"
#include "cbjj/langevin.hpp"

using namespace cbjj;
using doctest::Approx;

namespace {

const JunctionParams kDevice(3.156e-6, 1.6e-12, 50.0);

PhaseDynamics quiet_well(double i, double q) {
  PhaseDynamics d;
  d.reduced_bias = i;
  d.damping = 1.0 / q;
  return d;
}

// Deterministic resonant drive near the small-oscillation frequency.
PhaseDynamics resonant_drive(double i) {
  PhaseDynamics d = quiet_well(i, 6.0);
  d.drive_amplitude = 0.1;
  d.drive_frequency = std::pow(1.0 - i * i, 0.25);
  d.drive_start = 0.0;
  d.drive_end = 1e9;
  return d;
}

}  // namespace

TEST_CASE("config validation") {
  SimConfig c;
  CHECK_NOTHROW(c.validate());
  c.time_step = 0.2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.time_step = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.trajectories = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.escape_phase_threshold = 3.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("particle at rest never escapes at zero temperature") {
  SimConfig cfg;
  cfg.max_time = 2000.0;
  const Trajectory t = integrate_phase(kDevice, 0.0, 0.9 * 3.156e-6, std::nullopt, cfg);
  CHECK_FALSE(t.escaped);
  CHECK(t.escape_time == cfg.max_time);
}

TEST_CASE("escape times never exceed the horizon") {
  const JunctionParams jp(3.156e-6, 1.6e-12, 50.0);
  const double bias = 0.95 * 3.156e-6;
  SimConfig cfg;
  cfg.max_time = 300.0;
  cfg.trajectories = 64;
  const PhaseDynamics dyn = make_phase_dynamics(jp, 0.5, bias, std::nullopt, 2.0);
  for (const auto& t : run_trajectories(dyn, cfg)) {
    CHECK(t.escape_time <= cfg.max_time);
    if (!t.escaped) {
      CHECK(t.escape_time == cfg.max_time);
    }
  }
}

TEST_CASE("resonant drive at zero temperature escapes within a few hundred periods") {
  const PhaseDynamics d = resonant_drive(0.9);
  SimConfig cfg;
  cfg.max_time = 1e5;
  Rng rng(1);
  const Trajectory t = integrate_phase(d, cfg, rng);
  REQUIRE(t.escaped);
  const double period = 2.0 * constants::pi / d.drive_frequency;
  CHECK(t.escape_time / period < 300.0);
}

TEST_CASE("driven escape time converges with the step") {
  const PhaseDynamics d = resonant_drive(0.9);
  auto escape = [&](double dt) {
    SimConfig cfg;
    cfg.max_time = 1e5;
    cfg.time_step = dt;
    Rng rng(1);
    return integrate_phase(d, cfg, rng).escape_time;
  };
  const double ref = escape(0.05 / 32.0);
  for (double dt : {0.1, 0.05, 0.025}) {
    // Detection on the step grid alone costs up to one step.
    CHECK(std::abs(escape(dt) - ref) <= 10.0 * dt);
  }
  CHECK(std::abs(escape(0.025) - ref) < std::abs(escape(0.1) - ref) + 0.025);
}

TEST_CASE("stationary velocity variance follows fluctuation-dissipation") {
  PhaseDynamics d = quiet_well(0.5, 4.0);
  // Barrier of 12 k_B T.
  d.noise_energy = reduced_barrier(0.5) / 12.0;
  SimConfig cfg;
  cfg.max_time = 4000.0;
  double sum = 0.0;
  double n = 0.0;
  bool escaped = false;
  for (std::uint64_t k = 0; k < 8; ++k) {
    Rng rng = make_stream(17, k);
    const Trajectory t = integrate_phase_observed(d, cfg, rng, [&](double time, double, double v) {
      if (time > 100.0) {
        sum += v * v;
        n += 1.0;
      }
    });
    escaped = escaped || t.escaped;
  }
  CHECK_FALSE(escaped);
  CHECK(sum / n == Approx(d.noise_energy).epsilon(0.10));
}

TEST_CASE("noiseless undamped motion conserves energy after the drive stops") {
  PhaseDynamics d = quiet_well(0.3, 1.0);
  d.damping = 0.0;
  d.drive_amplitude = 0.05;
  d.drive_frequency = std::pow(1.0 - 0.09, 0.25);
  d.drive_end = 20.0;
  // Energy drift after the drive, relative to the excitation energy.
  auto drift = [&](double dt) {
    SimConfig cfg;
    cfg.max_time = 500.0;
    cfg.time_step = dt;
    Rng rng(1);
    double e0 = std::nan("");
    double worst = 0.0;
    integrate_phase_observed(d, cfg, rng, [&](double t, double phi, double v) {
      if (t < d.drive_end + 1.0) {
        return;
      }
      const double e = d.energy(phi, v);
      if (std::isnan(e0)) {
        e0 = e;
      }
      worst = std::max(worst, std::abs(e - e0));
    });
    return worst / (e0 - d.energy(d.well_minimum(), 0.0));
  };
  const double coarse = drift(0.02);
  const double fine = drift(0.01);
  CHECK(fine < 1e-3);
  CHECK(coarse / fine > 3.0);
}

TEST_CASE("estimator recovers the rate of injected exponential times") {
  std::mt19937_64 rng(23);
  std::exponential_distribution<double> lifetime(0.01);
  std::vector<Trajectory> traj;
  const double horizon = 300.0;
  for (int k = 0; k < 2000; ++k) {
    const double t = lifetime(rng);
    traj.push_back(t < horizon ? Trajectory{t, true} : Trajectory{horizon, false});
  }
  const auto est = estimate_escape_rate(traj, 2.0);
  CHECK(std::abs(est.rate - 0.005) <= 2.0 * est.uncertainty);
  CHECK(est.uncertainty == Approx(est.rate / std::sqrt(static_cast<double>(est.escapes))));
  std::vector<Trajectory> none(50, Trajectory{horizon, false});
  CHECK_THROWS_AS(estimate_escape_rate(none), NumericalError);
}

TEST_CASE("Monte Carlo rate agrees with thermal activation at a shallow well") {
  const double ic = 3.156e-6;
  const double c = 1.6e-12;
  const double bias = 0.9 * ic;
  const JunctionParams base(ic, c, 50.0);
  const double r = 4.0 / (plasma_frequency(base, bias) * c);
  const JunctionParams jp(ic, c, r);
  const ThermalEnvironment env(barrier_height(jp, bias) / (5.0 * constants::boltzmann));
  const double oracle = kramers_rate(jp, env, bias);
  SimConfig cfg;
  cfg.trajectories = 400;
  cfg.seed = 3;
  cfg.max_time = 10.0 / oracle * jp.zero_bias_plasma_frequency();
  const auto mc = mc_escape_rate(jp, env, bias, cfg);
  CHECK(mc.escapes >= 100);
  CHECK(mc.rate / oracle == Approx(1.0).epsilon(0.35));
}

TEST_CASE("trajectories do not depend on the worker count") {
  const PhaseDynamics dyn = make_phase_dynamics(kDevice, 0.6, 0.93 * 3.156e-6, std::nullopt, 2.0);
  SimConfig cfg;
  cfg.trajectories = 24;
  cfg.max_time = 500.0;
  cfg.seed = 99;
  cfg.jobs = 1;
  const auto a = run_trajectories(dyn, cfg);
  cfg.jobs = 4;
  const auto b = run_trajectories(dyn, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(std::memcmp(&a[k].escape_time, &b[k].escape_time, sizeof(double)) == 0);
    CHECK(a[k].escaped == b[k].escaped);
  }
}

TEST_CASE("RF current amplitude") {
  const double p = 1e-12;
  CHECK(rf_current_amplitude(kDevice, p, 2.0) == Approx(2.0 * std::sqrt(2.0 * p / 50.0) / 3.156e-6));
  CHECK(rf_current_amplitude(kDevice, 0.0, 2.0) == 0.0);
  CHECK_THROWS_AS(rf_current_amplitude(kDevice, -1.0, 2.0), DomainError);
  const RfPulse pulse{8e9, -90.0, 10e-9, 1e-9};
  const auto dyn = make_phase_dynamics(kDevice, 0.0, 2.9e-6, pulse, 2.0);
  const double w0 = kDevice.zero_bias_plasma_frequency();
  CHECK(dyn.drive_frequency == Approx(2.0 * constants::pi * 8e9 / w0));
  CHECK(dyn.drive_start == Approx(1e-9 * w0));
  CHECK(dyn.drive_end - dyn.drive_start == Approx(10e-9 * w0));
  CHECK(dyn.drive(dyn.drive_start - 1.0) == 0.0);
}

TEST_CASE("boundary map edge cells and monotone threshold") {
  const std::vector<double> biases{bias_for_level_count(kDevice, 16.0), bias_for_level_count(kDevice, 6.0),
                                   bias_for_level_count(kDevice, 4.0)};
  const std::vector<double> photons{0.0, 3.0, 10.0, 100.0};
  SimConfig cfg;
  cfg.trajectories = 24;
  cfg.seed = 5;
  const RfPulse pulse{8e9, -90.0, 10e-9, 0.0};
  const BoundaryMap map = switching_boundary_map(kDevice, 0.0, biases, photons, pulse, cfg);
  for (std::size_t b = 0; b < biases.size(); ++b) {
    CHECK(map.at(b, 0) == 0.0);
    CHECK(map.level_counts[b] == Approx(level_count(kDevice, biases[b])));
  }
  for (std::size_t b = 1; b < biases.size(); ++b) {
    CHECK(map.at(b, 3) == 1.0);
  }
  const auto thr = threshold_photon_numbers(map);
  REQUIRE(thr.size() == 3);
  CHECK(thr[2] <= thr[1]);

  cfg.jobs = 3;
  const BoundaryMap again = switching_boundary_map(kDevice, 0.0, biases, photons, pulse, cfg);
  CHECK(again.efficiency == map.efficiency);
}

TEST_CASE("threshold interpolation") {
  BoundaryMap m;
  m.biases = {1.0, 2.0};
  m.level_counts = {8.0, 4.0};
  m.photon_numbers = {1.0, 10.0, 100.0};
  m.efficiency = {0.0, 0.0, 0.2, 0.0, 0.25, 0.75};
  const auto thr = threshold_photon_numbers(m);
  CHECK(std::isnan(thr[0]));
  CHECK(thr[1] == Approx(std::sqrt(10.0 * 100.0)));
}
