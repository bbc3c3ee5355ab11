#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cli/config.hpp"

namespace cbjj::cli {

/// CSV table; column descriptions go into the header comment.
struct Table {
  std::string title;
  std::vector<std::pair<std::string, std::string>> columns;  // name, description
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::string to_csv() const;
};

std::string cell(double v);
std::string cell(long long v);
inline std::string cell(std::size_t v) { return cell(static_cast<long long>(v)); }
inline std::string cell(unsigned v) { return cell(static_cast<long long>(v)); }
inline std::string cell(int v) { return cell(static_cast<long long>(v)); }
inline std::string cell(bool v) { return v ? "1" : "0"; }
inline std::string cell(const std::string& v) { return v; }
inline std::string cell(const char* v) { return v; }

/// Collects the outputs of one command and writes them to a directory.
/// Tables go to <name>.csv, fits and documents to <name>.json, plots to
/// <name>.svg, filtered by the configured formats. provenance.json is always
/// written; failures.json only when some point failed.
class Bundle {
 public:
  Bundle(const RunConfig& config, std::string command, std::filesystem::path directory);

  void table(const std::string& name, const Table& table);
  void document(const std::string& name, const std::string& json_text);
  void plot(const std::string& name, const std::string& svg_text);
  void warn(std::string message);
  void failure(std::size_t index, double x, const std::string& message);

  const std::vector<std::string>& warnings() const { return warnings_; }
  std::size_t failure_count() const { return failures_.size(); }
  const std::filesystem::path& directory() const { return directory_; }

  /// Writes the provenance block (and failure manifest). Returns 0, or 3 when
  /// points failed.
  int finish();

 private:
  void write(const std::string& file, const std::string& text);

  const RunConfig& config_;
  std::string command_;
  std::filesystem::path directory_;
  std::vector<std::string> files_;
  std::vector<std::string> warnings_;
  nlohmann::json failures_ = nlohmann::json::array();
};

}  // namespace cbjj::cli
