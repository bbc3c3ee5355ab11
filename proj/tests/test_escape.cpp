#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"

#include "cbjj/constants.hpp"
#include "cbjj/escape.hpp"
#include "cbjj/junction.hpp"

using namespace cbjj;
using doctest::Approx;

namespace {

const JunctionParams kDevice(3.156e-6, 1.6e-12, 50.0);
const ThermalEnvironment kEnv(0.183);

// Rate written out from scratch: barrier, plasma frequency, prefactor, Boltzmann factor.
double reference_rate(double ic, double c, double r, double t, double bias) {
  const double i = bias / ic;
  const double u0 = ic * constants::flux_quantum / (2.0 * constants::pi);
  const double du = 2.0 * u0 * (std::sqrt(1.0 - i * i) - i * std::acos(i));
  const double wp = std::sqrt(2.0 * constants::pi * ic / (constants::flux_quantum * c)) * std::pow(1.0 - i * i, 0.25);
  const double kt = constants::boltzmann * t;
  const double q = wp * r * c;
  const double root = std::sqrt(1.0 + q * kt / (1.8 * du));
  const double at = 4.0 / ((root + 1.0) * (root + 1.0));
  return at * wp / (2.0 * constants::pi) * std::exp(-du / kt);
}

}  // namespace

TEST_CASE("rate at the reference operating point") {
  const double oracle = reference_rate(3.156e-6, 1.6e-12, 50.0, 0.183, 2.899e-6);
  CHECK(oracle == Approx(102.0).epsilon(0.01));
  CHECK(kramers_rate(kDevice, kEnv, 2.899e-6) == Approx(oracle).epsilon(1e-9));
  const auto k = evaluate_kramers(kDevice, kEnv, 2.899e-6);
  CHECK(k.prefactor == Approx(0.947).epsilon(2e-3));
  CHECK(k.exponent == Approx(18.1).epsilon(5e-3));
  CHECK(k.log_rate == Approx(std::log(k.rate)).epsilon(1e-12));
  CHECK_FALSE(k.underflow);
}

TEST_CASE("rate matches the reference formula on random operating points") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> frac(0.85, 0.97);
  std::uniform_real_distribution<double> temp(0.05, 0.4);
  for (int k = 0; k < 30; ++k) {
    const double bias = frac(rng) * 3.156e-6;
    const double t = temp(rng);
    CHECK(kramers_log_rate(kDevice, ThermalEnvironment(t), bias) ==
          Approx(std::log(reference_rate(3.156e-6, 1.6e-12, 50.0, t, bias))).epsilon(1e-9));
  }
}

TEST_CASE("rate vanishes as temperature goes to zero") {
  const auto cold = evaluate_kramers(kDevice, ThermalEnvironment(1e-6), 2.899e-6);
  CHECK(cold.underflow);
  CHECK(cold.rate == 0.0);
  CHECK(std::isfinite(cold.log_rate));
  CHECK(kramers_rate(kDevice, ThermalEnvironment(0.02), 2.899e-6) < 1e-60);
  CHECK_THROWS_AS(ThermalEnvironment(0.0), DomainError);
  CHECK_THROWS_AS(ThermalEnvironment(-1.0), DomainError);
}

TEST_CASE("exponent cap is configurable") {
  KramersOptions opts;
  opts.exponent_cap = 10.0;
  const auto k = evaluate_kramers(kDevice, kEnv, 2.899e-6, opts);
  CHECK(k.underflow);
  CHECK(k.rate == 0.0);
}

TEST_CASE("increasing in bias and in temperature") {
  // Over the thermal-activation domain: barrier at least k_B T.
  double prev = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double bias = 2.5e-6 + k * (0.999 * 3.156e-6 - 2.5e-6) / 100.0;
    if (barrier_height(kDevice, bias) < kEnv.thermal_energy()) {
      break;
    }
    const double lr = kramers_log_rate(kDevice, kEnv, bias);
    if (k > 0) {
      CHECK(lr > prev);
    }
    prev = lr;
  }
  for (double bias : {2.7e-6, 2.899e-6, 3.0e-6}) {
    double last = -1e300;
    for (double t = 0.05; t < 0.5; t += 0.01) {
      const double lr = kramers_log_rate(kDevice, ThermalEnvironment(t), bias);
      CHECK(lr > last);
      last = lr;
    }
  }
}

TEST_CASE("one decade per about 0.022 uA near 2.9 uA") {
  const double h = 1e-10;
  const double slope = (std::log10(kramers_rate(kDevice, kEnv, 2.9e-6 + h)) -
                        std::log10(kramers_rate(kDevice, kEnv, 2.9e-6 - h))) /
                       (2.0 * h);
  CHECK(1e6 / slope == Approx(0.022).epsilon(0.05));
}

TEST_CASE("slope law on random operating points") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> frac(0.86, 0.96);
  std::uniform_real_distribution<double> temp(0.1, 0.3);
  const double ic = 3.156e-6;
  const double u0 = ic * constants::flux_quantum / (2.0 * constants::pi);
  for (int n = 0; n < 20; ++n) {
    const double bias = frac(rng) * ic;
    const ThermalEnvironment env(temp(rng));
    const double kt = env.thermal_energy();
    const double i = bias / ic;
    // Barrier term from dU/dI = -2 U0 arccos(i) / I_c.
    const double barrier_term = 2.0 * u0 * std::acos(i) / ic / kt;
    // Plasma frequency term: d ln w_p / dI = -i / (2 (1 - i^2) I_c).
    const double plasma_term = -i / (2.0 * (1.0 - i * i) * ic);
    // Prefactor term by differencing a_t alone.
    const double h = 1e-11;
    auto log_at = [&](double b) {
      return std::log(kramers_prefactor(quality_factor(kDevice, b), kt, barrier_height(kDevice, b)));
    };
    const double prefactor_term = (log_at(bias + h) - log_at(bias - h)) / (2.0 * h);
    const double expected = (barrier_term + plasma_term + prefactor_term) / std::log(10.0);
    const double measured =
        (kramers_log_rate(kDevice, env, bias + h) - kramers_log_rate(kDevice, env, bias - h)) / (2.0 * h) /
        std::log(10.0);
    CHECK(measured == Approx(expected).epsilon(0.05));
  }
}

TEST_CASE("prefactor bounds and limit") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> logu(-6.0, 6.0);
  for (int k = 0; k < 200; ++k) {
    const double a = kramers_prefactor(std::pow(10.0, logu(rng)), std::pow(10.0, logu(rng)), std::pow(10.0, logu(rng)));
    CHECK(a > 0.0);
    CHECK(a < 4.0);
  }
  CHECK(kramers_prefactor(1.0, 1e-30, 1.0) == Approx(1.0).epsilon(1e-12));
  CHECK(kramers_prefactor(5.0, 0.0, 1.0) == 1.0);
}

TEST_CASE("bit-identical repeat evaluation") {
  const double a = kramers_rate(kDevice, kEnv, 2.91e-6);
  const double b = kramers_rate(kDevice, kEnv, 2.91e-6);
  CHECK(std::memcmp(&a, &b, sizeof a) == 0);
}

TEST_CASE("validity warnings") {
  const auto cold = evaluate_kramers(kDevice, ThermalEnvironment(0.05), 2.0e-6);
  CHECK(below_crossover(kDevice, ThermalEnvironment(0.05), 2.0e-6));
  bool crossover = false;
  for (const auto& w : cold.warnings) {
    crossover = crossover || w.find("crossover") != std::string::npos;
  }
  CHECK(crossover);
  const JunctionParams overdamped(3.156e-6, 1.6e-12, 5.0);
  const auto od = evaluate_kramers(overdamped, kEnv, 2.899e-6);
  CHECK(od.warnings.size() >= 1);
  CHECK(evaluate_kramers(kDevice, kEnv, 2.899e-6).warnings.empty());
}

TEST_CASE("dark rate curves") {
  const std::vector<double> one{2.9e-6};
  const auto single = dark_rate_curve(kDevice, kEnv, one);
  REQUIRE(single.size() == 1);
  CHECK(single.points()[0].rate == kramers_rate(kDevice, kEnv, 2.9e-6));
  CHECK(single.points()[0].rate_uncertainty == 0.0);

  std::vector<double> grid;
  for (int k = 0; k < 11; ++k) {
    grid.push_back(2.86e-6 + k * 1e-8);
  }
  const auto curve = dark_rate_curve(kDevice, kEnv, grid);
  CHECK(curve.points().front().rate == Approx(1.0).epsilon(0.9));
  CHECK(curve.points().back().rate > 1e3);
  CHECK(curve.points().back().rate < 1e5);

  std::vector<double> deep;
  for (int k = 0; k < 5; ++k) {
    deep.push_back(2.55e-6 + k * 0.05e-6);
  }
  const auto deep_curve = dark_rate_curve(kDevice, kEnv, deep);
  for (const auto& p : deep_curve.points()) {
    CHECK(p.rate < 1e-5);
  }
}

TEST_CASE("rate curve invariants") {
  RateCurve c;
  c.add({2.9e-6, 10.0, 1.0});
  CHECK_THROWS_AS(c.add({2.9e-6, 20.0, 1.0}), DomainError);
  CHECK_THROWS_AS(c.add({2.8e-6, 20.0, 1.0}), DomainError);
  CHECK_THROWS_AS(c.add({3.0e-6, -1.0, 1.0}), DomainError);
  CHECK_THROWS_AS(c.add({3.0e-6, 0.0, 1.0}), DomainError);
  CHECK_NOTHROW(c.add({3.0e-6, 30.0, 2.0}));
}

TEST_CASE("independent trials arithmetic") {
  CHECK(poisson_switch_probability(2.7e-4, 10e-9, 80e-12) == Approx(0.0332).epsilon(2e-3));
  CHECK(poisson_switch_probability(2.7e-4, 1000e-9, 80e-12) == Approx(0.966).epsilon(1e-3));
  CHECK(poisson_switch_probability(0.3, 80e-12, 80e-12) == Approx(0.3).epsilon(1e-12));
  CHECK(poisson_switch_probability(0.0, 10e-9, 80e-12) == 0.0);
  CHECK(poisson_switch_probability(1.0, 10e-9, 80e-12) == 1.0);
  CHECK_THROWS_AS(poisson_switch_probability(1.5, 10e-9, 80e-12), DomainError);
  CHECK_THROWS_AS(poisson_switch_probability(0.1, 0.0, 80e-12), DomainError);
  // Half efficiency at 10 ns needs a per-trial probability of 1 - 0.5^(1/125).
  CHECK(single_trial_probability(0.5, 10e-9, 80e-12) == Approx(1.0 - std::pow(0.5, 1.0 / 125.0)).epsilon(1e-12));
  CHECK(single_trial_probability(0.5, 10e-9, 80e-12) == Approx(5.53e-3).epsilon(2e-3));
}

TEST_CASE("independent trials monotonicity and first-order bound") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> loge(-6.0, -1.0);
  std::uniform_real_distribution<double> logw(-10.0, -6.0);
  for (int k = 0; k < 200; ++k) {
    const double e = std::pow(10.0, loge(rng));
    const double w = std::pow(10.0, logw(rng));
    const double p = poisson_switch_probability(e, w, 80e-12);
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
    CHECK(poisson_switch_probability(e * 1.5, w, 80e-12) >= p);
    CHECK(poisson_switch_probability(e, w * 1.5, 80e-12) >= p);
    const double x = e * w / 80e-12;
    if (x < 0.1) {
      CHECK(std::abs(p - x) <= x * x);
    }
    if (p < 0.99) {
      CHECK(single_trial_probability(p, w, 80e-12) == Approx(e).epsilon(1e-6));
    }
  }
}
