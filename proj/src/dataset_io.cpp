#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "cbjj/protocol.hpp"

namespace cbjj {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) {
      throw std::invalid_argument(s);
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError("dataset: cannot parse " + what + " '" + s + "'");
  }
}

unsigned long to_unsigned(const std::string& s, const std::string& what) {
  unsigned long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("dataset: cannot parse " + what + " '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_dataset(const SwitchingDataset& ds) {
  std::string out = fmt::format("# cbjj-dataset {}\n", kDatasetFormatVersion);
  const auto& a = ds.acquisition;
  out += fmt::format("# cycle_period_s = {:.17g}\n", a.cycle_period);
  out += fmt::format("# hold_duration_s = {:.17g}\n", a.hold_duration);
  out += fmt::format("# rf_delay_s = {:.17g}\n", a.rf_delay);
  out += fmt::format("# rf_width_s = {:.17g}\n", a.rf_width);
  out += fmt::format("# timeout_cycles = {}\n", a.timeout_cycles);
  for (const auto& [key, value] : ds.metadata) {
    out += fmt::format("# {} = {}\n", key, value);
  }
  out += "# columns: lifetime_seconds,censored,cycle_index\n";
  for (const auto& r : ds.records) {
    out += fmt::format("{:.17g},{},{}\n", r.lifetime, r.censored ? 1 : 0, r.cycle_index);
  }
  return out;
}

SwitchingDataset parse_dataset(const std::string& text) {
  SwitchingDataset ds;
  std::istringstream in(text);
  std::string line;
  bool saw_magic = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) {
      continue;
    }
    if (t[0] == '#') {
      const std::string body = trim(std::string_view(t).substr(1));
      if (body.rfind("cbjj-dataset", 0) == 0) {
        const auto version = to_unsigned(trim(std::string_view(body).substr(12)), "format version");
        if (version != static_cast<unsigned long>(kDatasetFormatVersion)) {
          throw ConfigError(fmt::format("dataset: unsupported format version {}", version));
        }
        saw_magic = true;
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string::npos) {
        continue;  // plain comment, e.g. the column legend
      }
      const std::string key = trim(std::string_view(body).substr(0, eq));
      const std::string value = trim(std::string_view(body).substr(eq + 1));
      if (key == "cycle_period_s") {
        ds.acquisition.cycle_period = to_double(value, key);
      } else if (key == "hold_duration_s") {
        ds.acquisition.hold_duration = to_double(value, key);
      } else if (key == "rf_delay_s") {
        ds.acquisition.rf_delay = to_double(value, key);
      } else if (key == "rf_width_s") {
        ds.acquisition.rf_width = to_double(value, key);
      } else if (key == "timeout_cycles") {
        ds.acquisition.timeout_cycles = static_cast<unsigned>(to_unsigned(value, key));
      } else {
        ds.metadata[key] = value;
      }
      continue;
    }
    std::array<std::string, 3> fields;
    std::size_t start = 0;
    for (std::size_t f = 0; f < 3; ++f) {
      const auto comma = t.find(',', start);
      if ((f < 2 && comma == std::string::npos) || (f == 2 && comma != std::string::npos)) {
        throw ConfigError(fmt::format("dataset line {}: expected 3 comma-separated fields", line_no));
      }
      fields[f] = trim(std::string_view(t).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      start = comma + 1;
    }
    SwitchingRecord r;
    r.lifetime = to_double(fields[0], "lifetime");
    const auto censored = to_unsigned(fields[1], "censored flag");
    if (censored > 1 || !(r.lifetime >= 0.0)) {
      throw ConfigError(fmt::format("dataset line {}: invalid record", line_no));
    }
    r.censored = censored == 1;
    r.cycle_index = static_cast<unsigned>(to_unsigned(fields[2], "cycle index"));
    ds.records.push_back(r);
  }
  if (!saw_magic) {
    throw ConfigError("dataset: missing '# cbjj-dataset <version>' header");
  }
  ds.classify();
  return ds;
}

void write_dataset(const SwitchingDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot open " + path + " for writing");
  }
  out << format_dataset(dataset);
}

SwitchingDataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open dataset " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

}  // namespace cbjj
