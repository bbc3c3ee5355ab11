#include "cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "cbjj/errors.hpp"
#include "cbjj/analysis.hpp"
#include "cbjj/random.hpp"

namespace cbjj::cli {

using nlohmann::json;

namespace {

// Reads the keys of one object and rejects anything it was not asked for.
class Section {
 public:
  Section(const json& doc, std::string path) : path_(std::move(path)) {
    if (!doc.is_object()) {
      throw ConfigError(fmt::format("{}: expected an object", path_));
    }
    doc_ = &doc;
  }

  bool has(const char* key) const { return doc_->contains(key); }

  const json& child(const char* key) {
    seen_.insert(key);
    return doc_->at(key);
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!doc_->contains(key)) {
      return;
    }
    seen_.insert(key);
    try {
      out = doc_->at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(fmt::format("{}.{}: wrong type", path_, key));
    }
  }

  void finish() const {
    for (const auto& item : doc_->items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError(fmt::format("{}: unknown key '{}'", path_, item.key()));
      }
    }
  }

 private:
  const json* doc_ = nullptr;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> read_grid(Section& s, const char* grid_key, const char* range_key, const std::string& path) {
  std::vector<double> grid;
  if (s.has(grid_key) && s.has(range_key)) {
    throw ConfigError(fmt::format("{}: give either '{}' or '{}', not both", path, grid_key, range_key));
  }
  if (s.has(grid_key)) {
    s.get(grid_key, grid);
    return grid;
  }
  if (!s.has(range_key)) {
    return grid;
  }
  Section r(s.child(range_key), path + "." + range_key);
  double start = 0.0, stop = 0.0;
  std::size_t count = 0;
  std::string scale = "linear";
  r.get("start", start);
  r.get("stop", stop);
  r.get("count", count);
  r.get("scale", scale);
  r.finish();
  if (count < 1) {
    throw ConfigError(fmt::format("{}.{}.count must be at least 1", path, range_key));
  }
  if (scale != "linear" && scale != "log") {
    throw ConfigError(fmt::format("{}.{}.scale must be 'linear' or 'log'", path, range_key));
  }
  if (scale == "log" && !(start > 0.0 && stop > 0.0)) {
    throw ConfigError(fmt::format("{}.{}: log ranges need positive ends", path, range_key));
  }
  for (std::size_t k = 0; k < count; ++k) {
    const double f = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    grid.push_back(scale == "log" ? start * std::pow(stop / start, f) : start + f * (stop - start));
  }
  return grid;
}

void require(bool ok, const std::string& message) {
  if (!ok) {
    throw ConfigError(message);
  }
}

void validate(const RunConfig& c) {
  static const std::set<std::string> kinds{"sigmoid", "poisson", "constant"};
  static const std::set<std::string> formats{"csv", "json", "svg"};
  try {
    const JunctionParams jp = c.junction_params();
    require(c.environment.T_mK >= 0.0 && std::isfinite(c.environment.T_mK), "environment.T_mK must be >= 0");
    require(c.protocol.events >= 1, "protocol.events must be at least 1");
    require(c.protocol.bin_width_ms >= 0.0, "protocol.bin_width_ms must be >= 0");
    require(c.protocol.n_level >= 0.0, "protocol.n_level must be >= 0");
    const BiasWaveform wf = c.waveform(c.operating_bias());
    wf.validate(jp);
    c.protocol_config(c.sim.seed).validate(wf);
    c.pulse().validate();
    require(kinds.count(c.efficiency_model.kind) == 1, "efficiency_model.kind must be sigmoid, poisson or constant");
    require(c.efficiency_model.ratio_at_half > 0.0, "efficiency_model.ratio_at_half must be positive");
    require(c.efficiency_model.log_width > 0.0, "efficiency_model.log_width must be positive");
    require(c.efficiency_model.eps_j >= 0.0 && c.efficiency_model.eps_j <= 1.0,
            "efficiency_model.eps_j must be in [0, 1]");
    require(c.efficiency_model.value >= 0.0 && c.efficiency_model.value <= 1.0,
            "efficiency_model.value must be in [0, 1]");
    require(c.analysis.dark_rate_threshold_Hz > 0.0, "analysis.dark_rate_threshold_Hz must be positive");
    require(c.sim.trajectories >= 1, "sim.trajectories must be at least 1");
    require(c.sim.dt > 0.0 && c.sim.dt <= 0.1, "sim.dt must be in (0, 0.1]");
    require(c.sim.kappa > 0.0, "sim.kappa must be positive");
    require(c.sim.budget > 0.0, "sim.budget must be positive");
    require(c.sim.settle_time >= 0.0, "sim.settle_time must be >= 0");
    require(c.sensitivity.n_gamma >= 0.0, "sensitivity.n_gamma must be >= 0");
    for (const auto& f : c.output.formats) {
      require(formats.count(f) == 1, fmt::format("output.formats: unknown format '{}'", f));
    }
    for (double v : c.sweep.grid) {
      require(std::isfinite(v), "sweep.grid values must be finite");
    }
    for (double v : c.sweep.grid2) {
      require(std::isfinite(v), "sweep.grid2 values must be finite");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

JunctionParams RunConfig::junction_params() const {
  return JunctionParams(junction.ic_uA * 1e-6, junction.c_pF * 1e-12, junction.r_ohm);
}

double RunConfig::operating_bias() const {
  if (protocol.n_level > 0.0) {
    return bias_for_level_count(junction_params(), protocol.n_level);
  }
  return protocol.bias_uA * 1e-6;
}

BiasWaveform RunConfig::waveform(double bias) const {
  BiasWaveform w;
  w.ramp_duration = protocol.ramp_ms * 1e-3;
  w.hold_current = bias;
  w.hold_duration = protocol.hold_ms * 1e-3;
  w.reset_duration = protocol.reset_ms * 1e-3;
  return w;
}

RfPulse RunConfig::pulse(double power_dbm, double width) const {
  RfPulse p;
  p.frequency = rf.freq_GHz * 1e9;
  p.power_dbm = power_dbm;
  p.width = width;
  p.arrival_time = protocol.t_rf_ms * 1e-3;
  return p;
}

ProtocolConfig RunConfig::protocol_config(std::uint64_t seed) const {
  ProtocolConfig p;
  p.rf_delay = protocol.t_rf_ms * 1e-3;
  p.timeout_cycles = protocol.timeout_cycles;
  p.events_target = protocol.events;
  p.seed = seed;
  p.jobs = 1;
  return p;
}

double RunConfig::bin_width() const {
  return protocol.bin_width_ms > 0.0 ? protocol.bin_width_ms * 1e-3 : default_bin_width(protocol.t_rf_ms * 1e-3);
}

bool RunConfig::wants(const std::string& format) const {
  return std::find(output.formats.begin(), output.formats.end(), format) != output.formats.end();
}

json RunConfig::to_json() const {
  json j;
  j["junction"] = {{"ic_uA", junction.ic_uA}, {"c_pF", junction.c_pF}, {"r_ohm", junction.r_ohm}};
  j["environment"] = {{"T_mK", environment.T_mK}};
  j["protocol"] = {{"bias_uA", protocol.bias_uA},         {"n_level", protocol.n_level},
                   {"ramp_ms", protocol.ramp_ms},         {"hold_ms", protocol.hold_ms},
                   {"reset_ms", protocol.reset_ms},       {"t_rf_ms", protocol.t_rf_ms},
                   {"timeout_cycles", protocol.timeout_cycles}, {"events", protocol.events},
                   {"bin_width_ms", protocol.bin_width_ms}};
  j["rf"] = {{"freq_GHz", rf.freq_GHz}, {"power_dBm", rf.power_dBm}, {"width_ns", rf.width_ns}};
  j["sweep"] = {{"variable", sweep.variable}, {"grid", sweep.grid}, {"variable2", sweep.variable2},
                {"grid2", sweep.grid2}};
  j["efficiency_model"] = {{"kind", efficiency_model.kind},
                           {"ratio_at_half", efficiency_model.ratio_at_half},
                           {"log_width", efficiency_model.log_width},
                           {"eps_j", efficiency_model.eps_j},
                           {"value", efficiency_model.value}};
  j["analysis"] = {{"dark_rate_threshold_Hz", analysis.dark_rate_threshold_Hz}};
  j["sim"] = {{"seed", sim.seed},       {"trajectories", sim.trajectories}, {"dt", sim.dt},
              {"kappa", sim.kappa},     {"budget", sim.budget},             {"settle_time", sim.settle_time}};
  j["output"] = {{"directory", output.directory}, {"formats", output.formats}};
  j["sensitivity"] = {{"n_gamma", sensitivity.n_gamma}};
  return j;
}

std::uint64_t RunConfig::digest() const {
  json j = to_json();
  j.erase("output");
  return fnv1a(j.dump());
}

RunConfig parse_config(const json& input) {
  const json& doc = (input.is_object() && input.contains("config") && input.contains("config_digest"))
                        ? input.at("config")
                        : input;
  RunConfig c;
  Section root(doc, "config");
  if (root.has("junction")) {
    Section s(root.child("junction"), "junction");
    s.get("ic_uA", c.junction.ic_uA);
    s.get("c_pF", c.junction.c_pF);
    s.get("r_ohm", c.junction.r_ohm);
    s.finish();
  }
  if (root.has("environment")) {
    Section s(root.child("environment"), "environment");
    s.get("T_mK", c.environment.T_mK);
    s.finish();
  }
  if (root.has("protocol")) {
    Section s(root.child("protocol"), "protocol");
    s.get("bias_uA", c.protocol.bias_uA);
    s.get("n_level", c.protocol.n_level);
    s.get("ramp_ms", c.protocol.ramp_ms);
    s.get("hold_ms", c.protocol.hold_ms);
    s.get("reset_ms", c.protocol.reset_ms);
    s.get("t_rf_ms", c.protocol.t_rf_ms);
    s.get("timeout_cycles", c.protocol.timeout_cycles);
    s.get("events", c.protocol.events);
    s.get("bin_width_ms", c.protocol.bin_width_ms);
    s.finish();
  }
  if (root.has("rf")) {
    Section s(root.child("rf"), "rf");
    s.get("freq_GHz", c.rf.freq_GHz);
    s.get("power_dBm", c.rf.power_dBm);
    s.get("width_ns", c.rf.width_ns);
    s.finish();
  }
  if (root.has("sweep")) {
    Section s(root.child("sweep"), "sweep");
    s.get("variable", c.sweep.variable);
    s.get("variable2", c.sweep.variable2);
    c.sweep.grid = read_grid(s, "grid", "range", "sweep");
    c.sweep.grid2 = read_grid(s, "grid2", "range2", "sweep");
    s.finish();
  }
  if (root.has("efficiency_model")) {
    Section s(root.child("efficiency_model"), "efficiency_model");
    s.get("kind", c.efficiency_model.kind);
    s.get("ratio_at_half", c.efficiency_model.ratio_at_half);
    s.get("log_width", c.efficiency_model.log_width);
    s.get("eps_j", c.efficiency_model.eps_j);
    s.get("value", c.efficiency_model.value);
    s.finish();
  }
  if (root.has("analysis")) {
    Section s(root.child("analysis"), "analysis");
    s.get("dark_rate_threshold_Hz", c.analysis.dark_rate_threshold_Hz);
    s.finish();
  }
  if (root.has("sim")) {
    Section s(root.child("sim"), "sim");
    s.get("seed", c.sim.seed);
    s.get("trajectories", c.sim.trajectories);
    s.get("dt", c.sim.dt);
    s.get("kappa", c.sim.kappa);
    s.get("budget", c.sim.budget);
    s.get("settle_time", c.sim.settle_time);
    s.finish();
  }
  if (root.has("output")) {
    Section s(root.child("output"), "output");
    s.get("directory", c.output.directory);
    s.get("formats", c.output.formats);
    s.finish();
  }
  if (root.has("sensitivity")) {
    Section s(root.child("sensitivity"), "sensitivity");
    s.get("n_gamma", c.sensitivity.n_gamma);
    s.finish();
  }
  root.finish();
  validate(c);
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot open config file '{}'", path));
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  return parse_config(doc);
}

}  // namespace cbjj::cli
