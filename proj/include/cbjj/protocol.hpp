#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cbjj/errors.hpp"
#include "cbjj/escape.hpp"
#include "cbjj/junction.hpp"
#include "cbjj/rf.hpp"

namespace cbjj {

/// One bias cycle: linear ramp from zero to the hold current, a flat hold,
/// then a reset segment at (slightly negative) current where nothing escapes.
/// Time t = 0 is the end of the ramp, where the trigger fires.
struct BiasWaveform {
  double ramp_duration = 2e-3;
  double hold_current = 0.0;
  double hold_duration = 11e-3;
  double reset_duration = 1e-3;

  double cycle_period() const { return ramp_duration + hold_duration + reset_duration; }
  /// Current at time t relative to the trigger, t in [-ramp_duration, hold + reset).
  double current_at(double t) const;
  void validate(const JunctionParams& params) const;
};

struct ProtocolConfig {
  double rf_delay = 7e-3;  // trigger to RF pulse
  unsigned timeout_cycles = 10;
  std::size_t events_target = 2000;
  std::uint64_t seed = 1;
  unsigned jobs = 1;

  void validate(const BiasWaveform& waveform) const;
};

/// Which of the three switching chances a record used.
enum class SwitchPhase { BeforePulse, DuringPulse, AfterPulse, Censored };

struct SwitchingRecord {
  double lifetime = 0.0;  // s from the first ramp end, accumulated over cycles
  bool censored = false;
  bool switched_in_rf_window = false;
  unsigned cycle_index = 0;  // cycle in which the switch happened (last cycle when censored)
};

/// Acquisition parameters needed to interpret a dataset.
struct AcquisitionInfo {
  double cycle_period = 0.0;
  double hold_duration = 0.0;
  double rf_delay = 0.0;
  double rf_width = 0.0;
  unsigned timeout_cycles = 10;
};

struct SwitchingDataset {
  AcquisitionInfo acquisition;
  /// Free-form generation parameters, written to the file header.
  std::map<std::string, std::string> metadata;
  std::vector<SwitchingRecord> records;

  std::size_t censored_count() const;
  std::size_t switched_count() const { return records.size() - censored_count(); }
  /// Bias cycles consumed over all records (each record uses cycle_index + 1).
  std::size_t attempt_count() const;
  /// Time since the start of the cycle's hold segment.
  double time_in_cycle(const SwitchingRecord& r) const;
  /// Hold time accumulated up to the switch (dead segments removed).
  double hold_time(const SwitchingRecord& r) const;
  SwitchPhase phase(const SwitchingRecord& r) const;
  /// Recomputes switched_in_rf_window from lifetimes and acquisition info.
  void classify();
};

/// Dark escape rate as a function of the instantaneous bias current.
class DarkRateModel {
 public:
  /// Kramers thermal activation at the environment temperature.
  static DarkRateModel kramers(const JunctionParams& params, const ThermalEnvironment& env);
  /// A fixed rate during the hold segment and zero elsewhere.
  static DarkRateModel constant(double rate);

  /// Rate at `current`; `hold_current` identifies the hold segment for the constant model.
  double rate(double current, double hold_current) const;
  const std::string& description() const { return description_; }

 private:
  DarkRateModel(std::function<double(double, double)> fn, std::string description)
      : fn_(std::move(fn)), description_(std::move(description)) {}
  std::function<double(double, double)> fn_;
  std::string description_;
};

/// Probability that a single cycle passes without a dark switch, counting the
/// hold segment only (ramp escapes are redrawn).
double hold_survival_probability(const DarkRateModel& dark, const BiasWaveform& waveform);

/// Expected censored fraction: (hold survival * (1 - eps))^timeout_cycles.
double expected_censored_fraction(const DarkRateModel& dark, const BiasWaveform& waveform,
                                  const ProtocolConfig& protocol, double rf_efficiency);

/// Monte Carlo of the acquisition loop. Each record runs cycles until a
/// switch or the timeout. Within a cycle, dark switches follow the
/// inhomogeneous survival law over the waveform (sampled by thinning);
/// switches during the ramp are discarded and the cycle is redrawn. At the
/// RF delay a still-superconducting junction switches with probability
/// rf_efficiency, at a uniform time inside the pulse.
SwitchingDataset sample_dataset(const DarkRateModel& dark, const BiasWaveform& waveform, const RfPulse& pulse,
                                const ProtocolConfig& protocol, double rf_efficiency);

SwitchingDataset sample_dataset(const JunctionParams& params, const ThermalEnvironment& env,
                                const BiasWaveform& waveform, const RfPulse& pulse, const ProtocolConfig& protocol,
                                double rf_efficiency);

/// RF switching probability of a pulse from a single-trial probability
/// (supplied, or read off a boundary map), through the Poisson trial model.
double rf_efficiency_from_first_principles(double eps_j, const JunctionParams& params, const RfPulse& pulse);

// Dataset text format (version 1):
//   # cbjj-dataset 1
//   # key = value               (metadata, one per line)
//   # columns: lifetime_seconds,censored,cycle_index
//   <lifetime>,<0|1>,<cycle>
inline constexpr int kDatasetFormatVersion = 1;

std::string format_dataset(const SwitchingDataset& dataset);
SwitchingDataset parse_dataset(const std::string& text);
void write_dataset(const SwitchingDataset& dataset, const std::string& path);
SwitchingDataset read_dataset(const std::string& path);

}  // namespace cbjj
