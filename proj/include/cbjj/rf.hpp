#pragma once

namespace cbjj {

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// A rectangular microwave pulse as it reaches the junction.
/// Power is after all line attenuation.
struct RfPulse {
  double frequency;       // Hz
  double power_dbm;       // dBm at the device
  double width;           // s
  double arrival_time;    // s after the trigger

  void validate() const;
  double power_watts() const { return dbm_to_watts(power_dbm); }
};

/// Photon energy h nu.
double photon_energy(double frequency);

/// Mean photons delivered per relaxation time, P tau_j / (h nu).
double photon_number(const RfPulse& pulse, double relaxation_time);

/// Power (W) that delivers n_gamma photons per relaxation time.
double power_for_photon_number(double n_gamma, double frequency, double relaxation_time);

/// Power in dBm that delivers n_gamma photons per relaxation time.
double dbm_for_photon_number(double n_gamma, double frequency, double relaxation_time);

struct SensitivitySummary {
  double photon_energy;     // J
  double energy_per_pulse;  // J, n_gamma h nu (width / tau_j)
  double power;             // W, energy_per_pulse / width
};

SensitivitySummary sensitivity_summary(const RfPulse& pulse, double n_gamma, double relaxation_time);

/// Noise-equivalent power, power / sqrt(bandwidth).
double noise_equivalent_power(double power, double bandwidth);

}  // namespace cbjj
