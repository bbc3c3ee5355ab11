#include "cbjj/junction.hpp"

#include <cmath>
#include <string>

#include "cbjj/constants.hpp"
#include "cbjj/rf.hpp"

namespace cbjj {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string(name) + " must be finite and strictly positive");
  }
}

}  // namespace

JunctionParams::JunctionParams(double critical_current, double capacitance, double shunt_resistance)
    : critical_current_(critical_current), capacitance_(capacitance), shunt_resistance_(shunt_resistance) {
  require_positive(critical_current, "critical_current");
  require_positive(capacitance, "capacitance");
  require_positive(shunt_resistance, "shunt_resistance");
}

JunctionParams JunctionParams::reference_device() { return {3.156e-6, 1.6e-12, 50.0}; }

double JunctionParams::josephson_energy() const {
  return critical_current_ * constants::flux_quantum / (2.0 * constants::pi);
}

double JunctionParams::zero_bias_plasma_frequency() const {
  return std::sqrt(2.0 * constants::pi * critical_current_ / (constants::flux_quantum * capacitance_));
}

double JunctionParams::zero_bias_quality_factor() const {
  return zero_bias_plasma_frequency() * relaxation_time();
}

double reduced_bias(const JunctionParams& params, double bias) {
  if (!std::isfinite(bias) || bias < 0.0 || bias >= params.critical_current()) {
    throw DomainError("bias current must lie in [0, I_c)");
  }
  return bias / params.critical_current();
}

double reduced_barrier(double i) {
  // With theta = arccos(i): sqrt(1 - i^2) - i arccos(i) = sin(theta) - theta cos(theta).
  // The direct form cancels catastrophically near i = 1, so small angles use the series.
  const double s = std::sqrt((1.0 - i) * (1.0 + i));
  const double theta = std::atan2(s, i);
  if (theta > 0.1) {
    return 2.0 * (s - i * theta);
  }
  const double t2 = theta * theta;
  const double series =
      theta * t2 * (1.0 / 3.0 - t2 * (1.0 / 30.0 - t2 * (1.0 / 840.0 - t2 * (1.0 / 45360.0 - t2 / 3991680.0))));
  return 2.0 * series;
}

double barrier_height(const JunctionParams& params, double bias) {
  return params.josephson_energy() * reduced_barrier(reduced_bias(params, bias));
}

double plasma_frequency(const JunctionParams& params, double bias) {
  const double i = reduced_bias(params, bias);
  return params.zero_bias_plasma_frequency() * std::pow((1.0 - i) * (1.0 + i), 0.25);
}

double quality_factor(const JunctionParams& params, double bias) {
  return plasma_frequency(params, bias) * params.relaxation_time();
}

double level_count(const JunctionParams& params, double bias) {
  const double omega = plasma_frequency(params, bias);
  if (omega == 0.0) {
    return 0.0;
  }
  return barrier_height(params, bias) / (constants::hbar * omega);
}

double crossover_temperature(const JunctionParams& params, double bias) {
  return constants::hbar * plasma_frequency(params, bias) / (2.0 * constants::pi * constants::boltzmann);
}

double bias_for_level_count(const JunctionParams& params, double levels) {
  const double deepest = level_count(params, 0.0);
  if (!(levels > 0.0) || levels > deepest) {
    throw DomainError("requested level count outside (0, level_count(0)]");
  }
  double lo = 0.0;
  double hi = params.critical_current();
  for (int iter = 0; iter < 200 && hi - lo > 1e-15 * params.critical_current(); ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (level_count(params, mid) > levels) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

OperatingPoint OperatingPoint::at(const JunctionParams& params, double bias) {
  OperatingPoint op{};
  op.bias_current = bias;
  op.reduced_bias = cbjj::reduced_bias(params, bias);
  op.barrier_height = cbjj::barrier_height(params, bias);
  op.plasma_angular_frequency = plasma_frequency(params, bias);
  op.quality_factor = op.plasma_angular_frequency * params.relaxation_time();
  op.level_count = op.plasma_angular_frequency > 0.0
                       ? op.barrier_height / (constants::hbar * op.plasma_angular_frequency)
                       : 0.0;
  return op;
}

// --- RF bookkeeping -------------------------------------------------------

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) {
  if (!(watts > 0.0)) {
    throw DomainError("dBm is undefined for non-positive power");
  }
  return 10.0 * std::log10(watts) + 30.0;
}

void RfPulse::validate() const {
  if (!(frequency > 0.0) || !std::isfinite(frequency)) {
    throw DomainError("RF frequency must be positive");
  }
  if (!(width > 0.0) || !std::isfinite(width)) {
    throw DomainError("RF pulse width must be positive");
  }
  if (!(arrival_time >= 0.0) || !std::isfinite(arrival_time)) {
    throw DomainError("RF arrival time must be non-negative");
  }
  if (std::isnan(power_dbm) || power_dbm == HUGE_VAL) {
    throw DomainError("RF power must be a number");
  }
}

double photon_energy(double frequency) {
  if (!(frequency > 0.0)) {
    throw DomainError("photon frequency must be positive");
  }
  return constants::planck * frequency;
}

double photon_number(const RfPulse& pulse, double relaxation_time) {
  pulse.validate();
  if (!(relaxation_time > 0.0)) {
    throw DomainError("relaxation time must be positive");
  }
  return pulse.power_watts() * relaxation_time / photon_energy(pulse.frequency);
}

double power_for_photon_number(double n_gamma, double frequency, double relaxation_time) {
  if (n_gamma < 0.0 || !(relaxation_time > 0.0)) {
    throw DomainError("photon number must be non-negative and relaxation time positive");
  }
  return n_gamma * photon_energy(frequency) / relaxation_time;
}

double dbm_for_photon_number(double n_gamma, double frequency, double relaxation_time) {
  return watts_to_dbm(power_for_photon_number(n_gamma, frequency, relaxation_time));
}

SensitivitySummary sensitivity_summary(const RfPulse& pulse, double n_gamma, double relaxation_time) {
  pulse.validate();
  if (n_gamma < 0.0 || !(relaxation_time > 0.0)) {
    throw DomainError("photon number must be non-negative and relaxation time positive");
  }
  SensitivitySummary s{};
  s.photon_energy = photon_energy(pulse.frequency);
  s.energy_per_pulse = n_gamma * s.photon_energy * (pulse.width / relaxation_time);
  s.power = s.energy_per_pulse / pulse.width;
  return s;
}

double noise_equivalent_power(double power, double bandwidth) {
  if (!(bandwidth > 0.0)) {
    throw DomainError("bandwidth must be positive");
  }
  return power / std::sqrt(bandwidth);
}

}  // namespace cbjj
