#pragma once

#include "cbjj/errors.hpp"

namespace cbjj {

/// Physical parameters of a current-biased junction in the RCSJ picture.
/// All values SI. Construction rejects non-positive entries.
class JunctionParams {
 public:
  JunctionParams(double critical_current, double capacitance, double shunt_resistance);

  /// I_c = 3.156 uA, C = 1.6 pF, R = 50 Ohm.
  static JunctionParams reference_device();

  double critical_current() const { return critical_current_; }
  double capacitance() const { return capacitance_; }
  double shunt_resistance() const { return shunt_resistance_; }

  /// tau_j = R C.
  double relaxation_time() const { return shunt_resistance_ * capacitance_; }
  /// U_0 = I_c Phi_0 / 2 pi.
  double josephson_energy() const;
  /// omega_p0 = sqrt(2 pi I_c / (Phi_0 C)).
  double zero_bias_plasma_frequency() const;
  /// Q_0 = omega_p0 R C, the damping that appears in the dimensionless RCSJ equation.
  double zero_bias_quality_factor() const;

 private:
  double critical_current_;
  double capacitance_;
  double shunt_resistance_;
};

/// Reduced bias i = I / I_c after checking 0 <= I < I_c.
double reduced_bias(const JunctionParams& params, double bias);

/// Well-to-barrier energy difference of U(phi) = -U_0 (cos phi + i phi),
/// 2 U_0 [sqrt(1 - i^2) - i arccos i].
double barrier_height(const JunctionParams& params, double bias);

/// Small-oscillation angular frequency omega_p0 (1 - i^2)^(1/4).
double plasma_frequency(const JunctionParams& params, double bias);

/// Q = omega_p(I) R C.
double quality_factor(const JunctionParams& params, double bias);

/// Barrier depth in units of hbar omega_p.
double level_count(const JunctionParams& params, double bias);

/// hbar omega_p / (2 pi k_B): below this the escape is no longer thermally activated.
double crossover_temperature(const JunctionParams& params, double bias);

/// Inverse of level_count: the bias at which the well holds `levels` levels.
/// Throws DomainError when levels is not in (0, level_count(0)].
double bias_for_level_count(const JunctionParams& params, double levels);

/// Dimensionless washboard barrier 2 [sqrt(1 - i^2) - i arccos i], stable as i -> 1.
double reduced_barrier(double i);

/// Everything that depends on the bias point, evaluated once.
struct OperatingPoint {
  double bias_current;
  double reduced_bias;
  double barrier_height;
  double plasma_angular_frequency;
  double quality_factor;
  double level_count;

  static OperatingPoint at(const JunctionParams& params, double bias);
};

}  // namespace cbjj
