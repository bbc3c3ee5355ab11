#include "cbjj/protocol.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "cbjj/parallel.hpp"
#include "cbjj/random.hpp"

namespace cbjj {

namespace {

constexpr double kMaxExpectedEscapesPerCycle = 1e6;
constexpr int kMaxRampRedraws = 100000;

// Absolute slack when mapping a lifetime back into its cycle.
double cycle_slack(const AcquisitionInfo& acq) { return 1e-9 * acq.cycle_period; }

}  // namespace

double BiasWaveform::current_at(double t) const {
  if (t < 0.0) {
    return t <= -ramp_duration ? 0.0 : hold_current * (1.0 + t / ramp_duration);
  }
  return t < hold_duration ? hold_current : 0.0;
}

void BiasWaveform::validate(const JunctionParams& params) const {
  if (!(ramp_duration > 0.0) || !(hold_duration > 0.0) || !(reset_duration > 0.0)) {
    throw ConfigError("waveform segment durations must be positive");
  }
  if (!(hold_current >= 0.0) || !(hold_current < params.critical_current())) {
    throw ConfigError("hold current must lie in [0, I_c)");
  }
}

void ProtocolConfig::validate(const BiasWaveform& waveform) const {
  if (!(rf_delay >= 0.0) || !(rf_delay < waveform.hold_duration)) {
    throw ConfigError("rf_delay must lie inside the hold segment");
  }
  if (timeout_cycles < 1) {
    throw ConfigError("timeout_cycles must be at least 1");
  }
  if (events_target < 1) {
    throw ConfigError("events_target must be at least 1");
  }
}

std::size_t SwitchingDataset::censored_count() const {
  std::size_t n = 0;
  for (const auto& r : records) {
    n += r.censored ? 1 : 0;
  }
  return n;
}

std::size_t SwitchingDataset::attempt_count() const {
  std::size_t n = 0;
  for (const auto& r : records) {
    n += r.cycle_index + 1;
  }
  return n;
}

double SwitchingDataset::time_in_cycle(const SwitchingRecord& r) const {
  return r.lifetime - static_cast<double>(r.cycle_index) * acquisition.cycle_period;
}

double SwitchingDataset::hold_time(const SwitchingRecord& r) const {
  if (r.censored) {
    return static_cast<double>(r.cycle_index + 1) * acquisition.hold_duration;
  }
  return static_cast<double>(r.cycle_index) * acquisition.hold_duration + time_in_cycle(r);
}

SwitchPhase SwitchingDataset::phase(const SwitchingRecord& r) const {
  if (r.censored) {
    return SwitchPhase::Censored;
  }
  const double t = time_in_cycle(r);
  const double slack = cycle_slack(acquisition);
  if (t < acquisition.rf_delay - slack) {
    return SwitchPhase::BeforePulse;
  }
  if (t <= acquisition.rf_delay + acquisition.rf_width + slack) {
    return SwitchPhase::DuringPulse;
  }
  return SwitchPhase::AfterPulse;
}

void SwitchingDataset::classify() {
  for (auto& r : records) {
    r.switched_in_rf_window = phase(r) == SwitchPhase::DuringPulse;
  }
}

DarkRateModel DarkRateModel::kramers(const JunctionParams& params, const ThermalEnvironment& env) {
  return DarkRateModel(
      [params, env](double current, double) { return current > 0.0 ? kramers_rate(params, env, current) : 0.0; },
      fmt::format("kramers(T={:.6g} K)", env.temperature()));
}

DarkRateModel DarkRateModel::constant(double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw ConfigError("constant dark rate must be finite and non-negative");
  }
  return DarkRateModel([rate](double current, double hold) { return current >= hold && current > 0.0 ? rate : 0.0; },
                       fmt::format("constant({:.6g} Hz)", rate));
}

double DarkRateModel::rate(double current, double hold_current) const { return fn_(current, hold_current); }

double hold_survival_probability(const DarkRateModel& dark, const BiasWaveform& waveform) {
  return std::exp(-dark.rate(waveform.hold_current, waveform.hold_current) * waveform.hold_duration);
}

double expected_censored_fraction(const DarkRateModel& dark, const BiasWaveform& waveform,
                                  const ProtocolConfig& protocol, double rf_efficiency) {
  const double per_cycle = hold_survival_probability(dark, waveform) * (1.0 - rf_efficiency);
  return std::pow(per_cycle, static_cast<double>(protocol.timeout_cycles));
}

namespace {

struct CycleOutcome {
  bool switched = false;
  double time = 0.0;
};

// Earliest accepted dark escape in [0, hold) for one cycle, or +inf.
// Ramp escapes restart the cycle.
double draw_dark_escape(const DarkRateModel& dark, const BiasWaveform& w, double max_rate, Rng& rng) {
  if (max_rate <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  std::exponential_distribution<double> gap(max_rate);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int redraw = 0; redraw < kMaxRampRedraws; ++redraw) {
    double t = -w.ramp_duration;
    bool ramp_escape = false;
    while (true) {
      t += gap(rng);
      if (t >= w.hold_duration) {
        return std::numeric_limits<double>::infinity();
      }
      const double rate = dark.rate(w.current_at(t), w.hold_current);
      if (unit(rng) * max_rate < rate) {
        if (t < 0.0) {
          ramp_escape = true;
          break;
        }
        return t;
      }
    }
    if (!ramp_escape) {
      break;
    }
  }
  throw NumericalError("junction keeps switching during the ramp; bias too close to I_c for the sampler");
}

SwitchingRecord sample_record(const DarkRateModel& dark, const BiasWaveform& w, const RfPulse& pulse,
                              const ProtocolConfig& protocol, double eps, double max_rate, Rng& rng) {
  std::bernoulli_distribution rf_hit(eps);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double period = w.cycle_period();

  for (unsigned cycle = 0; cycle < protocol.timeout_cycles; ++cycle) {
    const double t_dark = draw_dark_escape(dark, w, max_rate, rng);
    CycleOutcome out;
    if (t_dark < protocol.rf_delay) {
      out = {true, t_dark};
    } else if (rf_hit(rng)) {
      out = {true, protocol.rf_delay + unit(rng) * pulse.width};
    } else if (t_dark < w.hold_duration) {
      out = {true, t_dark};
    }
    if (out.switched) {
      SwitchingRecord r;
      r.lifetime = static_cast<double>(cycle) * period + out.time;
      r.cycle_index = cycle;
      return r;
    }
  }
  SwitchingRecord r;
  r.censored = true;
  r.cycle_index = protocol.timeout_cycles - 1;
  r.lifetime = static_cast<double>(protocol.timeout_cycles) * period;
  return r;
}

}  // namespace

SwitchingDataset sample_dataset(const DarkRateModel& dark, const BiasWaveform& waveform, const RfPulse& pulse,
                                const ProtocolConfig& protocol, double rf_efficiency) {
  pulse.validate();
  protocol.validate(waveform);
  if (!(waveform.ramp_duration > 0.0) || !(waveform.hold_duration > 0.0) || !(waveform.reset_duration > 0.0)) {
    throw ConfigError("waveform segment durations must be positive");
  }
  if (!(rf_efficiency >= 0.0 && rf_efficiency <= 1.0)) {
    throw ConfigError("rf_efficiency must lie in [0, 1]");
  }
  if (protocol.rf_delay + pulse.width > waveform.hold_duration) {
    throw ConfigError("RF pulse must end inside the hold segment");
  }

  // The rate over a cycle peaks on the hold plateau.
  const double max_rate = dark.rate(waveform.hold_current, waveform.hold_current);
  if (max_rate * waveform.cycle_period() > kMaxExpectedEscapesPerCycle) {
    throw NumericalError(fmt::format("dark rate {:.3g} Hz overflows the sampler (rate x cycle period > 1e6)",
                                     max_rate));
  }

  SwitchingDataset ds;
  ds.acquisition = {waveform.cycle_period(), waveform.hold_duration, protocol.rf_delay, pulse.width,
                    protocol.timeout_cycles};
  ds.records.resize(protocol.events_target);
  parallel_for(protocol.events_target, protocol.jobs, [&](std::size_t i) {
    Rng rng = make_stream(protocol.seed, i);
    ds.records[i] = sample_record(dark, waveform, pulse, protocol, rf_efficiency, max_rate, rng);
  });
  ds.classify();

  auto& m = ds.metadata;
  m["dark_rate_model"] = dark.description();
  m["hold_dark_rate_hz"] = fmt::format("{:.17g}", max_rate);
  m["rf_efficiency"] = fmt::format("{:.17g}", rf_efficiency);
  m["rf_frequency_hz"] = fmt::format("{:.17g}", pulse.frequency);
  m["rf_power_dbm"] = fmt::format("{:.17g}", pulse.power_dbm);
  m["ramp_duration_s"] = fmt::format("{:.17g}", waveform.ramp_duration);
  m["reset_duration_s"] = fmt::format("{:.17g}", waveform.reset_duration);
  m["hold_current_a"] = fmt::format("{:.17g}", waveform.hold_current);
  m["events_target"] = std::to_string(protocol.events_target);
  m["seed"] = std::to_string(protocol.seed);
  return ds;
}

SwitchingDataset sample_dataset(const JunctionParams& params, const ThermalEnvironment& env,
                                const BiasWaveform& waveform, const RfPulse& pulse, const ProtocolConfig& protocol,
                                double rf_efficiency) {
  waveform.validate(params);
  auto ds = sample_dataset(DarkRateModel::kramers(params, env), waveform, pulse, protocol, rf_efficiency);
  ds.metadata["critical_current_a"] = fmt::format("{:.17g}", params.critical_current());
  ds.metadata["capacitance_f"] = fmt::format("{:.17g}", params.capacitance());
  ds.metadata["shunt_resistance_ohm"] = fmt::format("{:.17g}", params.shunt_resistance());
  ds.metadata["temperature_k"] = fmt::format("{:.17g}", env.temperature());
  return ds;
}

double rf_efficiency_from_first_principles(double eps_j, const JunctionParams& params, const RfPulse& pulse) {
  pulse.validate();
  return poisson_switch_probability(eps_j, pulse.width, params.relaxation_time());
}

}  // namespace cbjj
