#include "cbjj/escape.hpp"

#include <cmath>
#include <limits>

#include "cbjj/constants.hpp"

namespace cbjj {

ThermalEnvironment::ThermalEnvironment(double temperature) : temperature_(temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw DomainError("effective temperature must be positive");
  }
}

double ThermalEnvironment::thermal_energy() const { return constants::boltzmann * temperature_; }

bool below_crossover(const JunctionParams& params, const ThermalEnvironment& env, double bias) {
  return env.temperature() < crossover_temperature(params, bias);
}

double kramers_prefactor(double quality_factor, double thermal_energy, double barrier) {
  if (!(barrier > 0.0)) {
    // Q k T / (1.8 dU) diverges: a_t -> 0.
    return 0.0;
  }
  const double root = std::sqrt(1.0 + quality_factor * thermal_energy / (1.8 * barrier));
  return 4.0 / ((root + 1.0) * (root + 1.0));
}

KramersRate evaluate_kramers(const JunctionParams& params, const ThermalEnvironment& env, double bias,
                             const KramersOptions& options) {
  const OperatingPoint op = OperatingPoint::at(params, bias);
  const double kT = env.thermal_energy();

  KramersRate out{};
  out.prefactor = kramers_prefactor(op.quality_factor, kT, op.barrier_height);
  out.exponent = op.barrier_height / kT;
  out.log_rate = std::log(out.prefactor) + std::log(op.plasma_angular_frequency / (2.0 * constants::pi)) -
                 out.exponent;
  out.underflow = out.exponent > options.exponent_cap;
  out.rate = out.underflow ? 0.0 : std::exp(out.log_rate);

  if (op.quality_factor < 1.0 || op.quality_factor > 100.0) {
    out.warnings.emplace_back("quality factor outside [1, 100]: intermediate-damping prefactor is unreliable");
  }
  if (env.temperature() < crossover_temperature(params, bias)) {
    out.warnings.emplace_back("temperature below the thermal/quantum crossover: thermal-activation model invalid");
  }
  return out;
}

double kramers_rate(const JunctionParams& params, const ThermalEnvironment& env, double bias,
                    const KramersOptions& options) {
  return evaluate_kramers(params, env, bias, options).rate;
}

double kramers_log_rate(const JunctionParams& params, const ThermalEnvironment& env, double bias) {
  return evaluate_kramers(params, env, bias).log_rate;
}

RateCurve::RateCurve(std::vector<Point> points) {
  points_.reserve(points.size());
  for (const auto& p : points) {
    add(p);
  }
}

void RateCurve::check(const Point& p, bool model_curve) {
  if (!std::isfinite(p.bias) || !std::isfinite(p.rate) || p.rate < 0.0) {
    throw DomainError("rate curve points need finite bias and non-negative rate");
  }
  if (!model_curve && !(p.rate > 0.0 && p.rate_uncertainty > 0.0)) {
    throw DomainError("measured rate curve points need positive rate and uncertainty");
  }
}

void RateCurve::add(Point p) {
  check(p, p.rate_uncertainty == 0.0);
  if (!points_.empty() && !(p.bias > points_.back().bias)) {
    throw DomainError("rate curve biases must be strictly increasing");
  }
  points_.push_back(p);
}

RateCurve dark_rate_curve(const JunctionParams& params, const ThermalEnvironment& env,
                          std::span<const double> bias_grid) {
  RateCurve curve;
  for (double bias : bias_grid) {
    curve.add({bias, kramers_rate(params, env, bias), 0.0});
  }
  return curve;
}

double poisson_switch_probability(double eps_j, double pulse_width, double relaxation_time) {
  if (!(eps_j >= 0.0 && eps_j <= 1.0)) {
    throw DomainError("single-trial probability must lie in [0, 1]");
  }
  if (!(pulse_width > 0.0) || !(relaxation_time > 0.0)) {
    throw DomainError("pulse width and relaxation time must be positive");
  }
  if (eps_j == 1.0) {
    return 1.0;
  }
  const double trials = pulse_width / relaxation_time;
  return -std::expm1(trials * std::log1p(-eps_j));
}

double single_trial_probability(double efficiency, double pulse_width, double relaxation_time) {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
    throw DomainError("efficiency must lie in [0, 1]");
  }
  if (!(pulse_width > 0.0) || !(relaxation_time > 0.0)) {
    throw DomainError("pulse width and relaxation time must be positive");
  }
  if (efficiency == 1.0) {
    return 1.0;
  }
  const double trials = pulse_width / relaxation_time;
  return -std::expm1(std::log1p(-efficiency) / trials);
}

}  // namespace cbjj
