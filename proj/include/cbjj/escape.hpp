#pragma once

#include <span>
#include <vector>

#include "cbjj/errors.hpp"
#include "cbjj/junction.hpp"

namespace cbjj {

/// Effective noise temperature seen by the phase particle.
class ThermalEnvironment {
 public:
  explicit ThermalEnvironment(double temperature);

  double temperature() const { return temperature_; }
  double thermal_energy() const;  // k_B T

 private:
  double temperature_;
};

/// True when T sits below the thermal/quantum crossover at this bias, where the
/// thermal-activation model stops applying.
bool below_crossover(const JunctionParams& params, const ThermalEnvironment& env, double bias);

/// Damping prefactor a_t = 4 / (sqrt(1 + Q k_B T / (1.8 dU)) + 1)^2.
double kramers_prefactor(double quality_factor, double thermal_energy, double barrier);

struct KramersOptions {
  /// dU / k_B T above which the rate is reported as an exact zero.
  double exponent_cap = 700.0;
};

struct KramersRate {
  double rate;         // Hz; 0 when underflowed
  double log_rate;     // natural log of rate, computed without exponentiation
  double prefactor;    // a_t
  double exponent;     // dU / k_B T
  bool underflow;      // exponent exceeded the cap
  Warnings warnings;   // model-validity notes (damping range, crossover)
};

/// Thermal escape rate a_t (omega_p / 2 pi) exp(-dU / k_B T), with diagnostics.
KramersRate evaluate_kramers(const JunctionParams& params, const ThermalEnvironment& env, double bias,
                             const KramersOptions& options = {});

double kramers_rate(const JunctionParams& params, const ThermalEnvironment& env, double bias,
                    const KramersOptions& options = {});

/// Natural log of the rate; finite even where the rate itself underflows.
double kramers_log_rate(const JunctionParams& params, const ThermalEnvironment& env, double bias);

/// Escape rate as a function of bias: measured points carry uncertainties,
/// model curves carry zeros.
class RateCurve {
 public:
  struct Point {
    double bias;
    double rate;
    double rate_uncertainty;
  };

  RateCurve() = default;
  explicit RateCurve(std::vector<Point> points);

  /// Appends a point; bias must exceed the last one.
  void add(Point p);

  const std::vector<Point>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

 private:
  static void check(const Point& p, bool model_curve);
  std::vector<Point> points_;
};

/// Element-wise kramers_rate over an increasing bias grid.
RateCurve dark_rate_curve(const JunctionParams& params, const ThermalEnvironment& env,
                          std::span<const double> bias_grid);

/// Switching probability of a pulse of `pulse_width` made of independent
/// relaxation-time trials: 1 - (1 - eps_j)^(width / tau_j).
double poisson_switch_probability(double eps_j, double pulse_width, double relaxation_time);

/// Inverse of poisson_switch_probability in eps_j.
double single_trial_probability(double efficiency, double pulse_width, double relaxation_time);

}  // namespace cbjj
