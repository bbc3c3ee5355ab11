#include "cli/report.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "cbjj/errors.hpp"

namespace cbjj::cli {

std::string cell(double v) {
  if (std::isnan(v)) {
    return "nan";
  }
  if (std::isinf(v)) {
    return v > 0 ? "inf" : "-inf";
  }
  return fmt::format("{:.10g}", v);
}

std::string cell(long long v) { return fmt::format("{}", v); }

std::string Table::to_csv() const {
  std::string out = fmt::format("# {}\n# {}\n", kVersion, title);
  for (const auto& [name, description] : columns) {
    out += fmt::format("# {}: {}\n", name, description);
  }
  for (std::size_t k = 0; k < columns.size(); ++k) {
    out += (k ? "," : "") + columns[k].first;
  }
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      out += (k ? "," : "") + row[k];
    }
    out += "\n";
  }
  return out;
}

Bundle::Bundle(const RunConfig& config, std::string command, std::filesystem::path directory)
    : config_(config), command_(std::move(command)), directory_(std::move(directory)) {
  std::error_code ec;
  std::filesystem::create_directories(directory_, ec);
  if (ec) {
    throw ConfigError(fmt::format("cannot create output directory '{}': {}", directory_.string(), ec.message()));
  }
}

void Bundle::write(const std::string& file, const std::string& text) {
  const auto path = directory_ / file;
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  }
  out << text;
  files_.push_back(file);
}

void Bundle::table(const std::string& name, const Table& table) {
  if (config_.wants("csv")) {
    write(name + ".csv", table.to_csv());
  }
}

void Bundle::document(const std::string& name, const std::string& json_text) {
  if (config_.wants("json")) {
    write(name + ".json", json_text + "\n");
  }
}

void Bundle::plot(const std::string& name, const std::string& svg_text) {
  if (config_.wants("svg")) {
    write(name + ".svg", svg_text);
  }
}

void Bundle::warn(std::string message) {
  if (std::find(warnings_.begin(), warnings_.end(), message) == warnings_.end()) {
    warnings_.push_back(std::move(message));
  }
}

void Bundle::failure(std::size_t index, double x, const std::string& message) {
  failures_.push_back({{"index", index}, {"x", std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr)},
                       {"error", message}});
}

int Bundle::finish() {
  std::error_code ec;
  std::filesystem::remove(directory_ / "failures.json", ec);
  if (!failures_.empty()) {
    nlohmann::json doc{{"command", command_}, {"failures", failures_}};
    write("failures.json", doc.dump(2) + "\n");
  }
  nlohmann::json prov;
  prov["version"] = kVersion;
  prov["command"] = command_;
  prov["seed"] = config_.sim.seed;
  prov["config_digest"] = fmt::format("{:016x}", config_.digest());
  // The output location is not part of the run; replays choose their own.
  prov["config"] = config_.to_json();
  prov["config"]["output"].erase("directory");
  prov["warnings"] = warnings_;
  prov["files"] = files_;
  const std::string text = prov.dump(2) + "\n";
  std::ofstream out(directory_ / "provenance.json", std::ios::binary);
  out << text;
  return failures_.empty() ? 0 : 3;
}

}  // namespace cbjj::cli
