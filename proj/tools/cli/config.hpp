#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "cbjj/junction.hpp"
#include "cbjj/protocol.hpp"
#include "cbjj/rf.hpp"

namespace cbjj::cli {

inline constexpr const char* kVersion = "cbjj 0.1.0";

/// Run configuration in lab units. Loaded from JSON; unknown keys are errors.
struct RunConfig {
  struct Junction {
    double ic_uA = 3.156;
    double c_pF = 1.6;
    double r_ohm = 50.0;
  } junction;

  struct Environment {
    double T_mK = 183.0;
  } environment;

  struct Protocol {
    double bias_uA = 2.899;
    double n_level = 0.0;  // > 0: pick the bias with this many levels instead of bias_uA
    double ramp_ms = 2.0;
    double hold_ms = 11.0;
    double reset_ms = 1.0;
    double t_rf_ms = 7.0;
    unsigned timeout_cycles = 10;
    std::size_t events = 2000;
    double bin_width_ms = 0.0;  // 0: t_rf / 70
  } protocol;

  struct Rf {
    double freq_GHz = 8.0;
    double power_dBm = -91.58;
    double width_ns = 10.0;
  } rf;

  struct Sweep {
    std::string variable;
    std::vector<double> grid;
    std::string variable2;
    std::vector<double> grid2;
  } sweep;

  /// Switching efficiency used by the dataset generator.
  struct EfficiencyModel {
    std::string kind = "sigmoid";  // sigmoid | poisson | constant
    double ratio_at_half = 1.5;    // sigmoid in ln(N_gamma / N_level)
    double log_width = 0.15;
    double eps_j = 2.7e-4;  // poisson
    double value = 0.5;     // constant
  } efficiency_model;

  struct Analysis {
    double dark_rate_threshold_Hz = 1.0;
  } analysis;

  struct Sim {
    std::uint64_t seed = 1;
    std::size_t trajectories = 200;
    double dt = 0.05;
    double kappa = 2.0;
    double budget = 2.0e5;  // boundary map: cells x trajectories
    double settle_time = 50.0;
  } sim;

  struct Output {
    std::string directory;
    std::vector<std::string> formats{"csv", "json", "svg"};
  } output;

  struct Sensitivity {
    double n_gamma = 10.0;
  } sensitivity;

  unsigned jobs = 1;  // command line only

  JunctionParams junction_params() const;
  double operating_bias() const;  // A
  double temperature() const { return environment.T_mK * 1e-3; }
  BiasWaveform waveform(double bias) const;
  RfPulse pulse(double power_dbm, double width) const;
  RfPulse pulse() const { return pulse(rf.power_dBm, rf.width_ns * 1e-9); }
  ProtocolConfig protocol_config(std::uint64_t seed) const;
  double bin_width() const;
  bool wants(const std::string& format) const;

  /// The resolved configuration; loading it back gives the same RunConfig.
  nlohmann::json to_json() const;
  /// Digest of the resolved configuration without output settings.
  std::uint64_t digest() const;
};

/// Accepts either a configuration document or a provenance document that
/// embeds one under "config".
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config_file(const std::string& path);

}  // namespace cbjj::cli
