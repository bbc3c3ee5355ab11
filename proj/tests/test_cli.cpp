#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "doctest.h"
#include "json.hpp"

#include "cbjj/errors.hpp"
#include "cli/app.hpp"
#include "cli/config.hpp"

using nlohmann::json;
using namespace cbjj;
using namespace cbjj::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  static std::atomic<int> counter{0};
  const fs::path p = fs::temp_directory_path() /
                     ("cbjj_test_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

int run(const std::vector<std::string>& args) { return run_cli(args); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

// CSV as header -> column of strings; '#' lines are comments.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::vector<std::string> column(const std::string& name) const {
    std::vector<std::string> out;
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) {
        for (const auto& r : rows) {
          out.push_back(r.at(k));
        }
        return out;
      }
    }
    FAIL("no column " << name);
    return out;
  }
};

Csv read_csv(const fs::path& p) {
  Csv csv;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) {
      fields.push_back(f);
    }
    if (csv.header.empty()) {
      csv.header = fields;
    } else {
      csv.rows.push_back(fields);
    }
  }
  return csv;
}

bool has_warning(const json& prov, const std::string& needle) {
  for (const auto& w : prov.at("warnings")) {
    if (w.get<std::string>().find(needle) != std::string::npos) {
      return true;
    }
  }
  return false;
}

double parameter(const json& report, const std::string& name) {
  for (const auto& p : report.at("parameters")) {
    if (p.at("name") == name) {
      return p.at("value").get<double>();
    }
  }
  FAIL("no parameter " << name);
  return 0.0;
}

double uncertainty(const json& report, const std::string& name) {
  for (const auto& p : report.at("parameters")) {
    if (p.at("name") == name) {
      return p.at("uncertainty").get<double>();
    }
  }
  FAIL("no parameter " << name);
  return 0.0;
}

// Small JSON-schema subset: type, required, properties, additionalProperties
// (false only), items, enum, pattern, $ref, allOf, anyOf.
class SchemaValidator {
 public:
  explicit SchemaValidator(json root) : root_(std::move(root)) {}

  std::vector<std::string> validate(const json& doc, const std::string& definition) const {
    std::vector<std::string> errors;
    check(doc, root_.at("definitions").at(definition), "$", errors);
    return errors;
  }

  // Definition name for an output file, or "" when the file is not covered.
  std::string definition_for(const std::string& filename) const {
    for (const auto& [pattern, def] : root_.at("documents").items()) {
      if (std::regex_match(filename, std::regex(pattern))) {
        return def.get<std::string>();
      }
    }
    return "";
  }

 private:
  static bool type_ok(const json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    return false;
  }

  void check(const json& v, const json& s, const std::string& where, std::vector<std::string>& errors) const {
    if (s.contains("$ref")) {
      const std::string ref = s.at("$ref");
      REQUIRE(ref.rfind("#/definitions/", 0) == 0);
      check(v, root_.at("definitions").at(ref.substr(14)), where, errors);
    }
    if (s.contains("allOf")) {
      for (const auto& sub : s.at("allOf")) {
        check(v, sub, where, errors);
      }
    }
    if (s.contains("anyOf")) {
      bool any = false;
      for (const auto& sub : s.at("anyOf")) {
        std::vector<std::string> e;
        check(v, sub, where, e);
        any = any || e.empty();
      }
      if (!any) {
        errors.push_back(where + ": matches no alternative");
      }
    }
    if (s.contains("type")) {
      const json& t = s.at("type");
      bool ok = false;
      if (t.is_array()) {
        for (const auto& x : t) {
          ok = ok || type_ok(v, x);
        }
      } else {
        ok = type_ok(v, t);
      }
      if (!ok) {
        errors.push_back(where + ": wrong type, expected " + t.dump());
        return;
      }
    }
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s.at("enum")) {
        found = found || e == v;
      }
      if (!found) {
        errors.push_back(where + ": " + v.dump() + " not in enum");
      }
    }
    if (s.contains("pattern") && v.is_string()) {
      if (!std::regex_search(v.get<std::string>(), std::regex(s.at("pattern").get<std::string>()))) {
        errors.push_back(where + ": does not match " + s.at("pattern").get<std::string>());
      }
    }
    if (v.is_object()) {
      if (s.contains("required")) {
        for (const auto& key : s.at("required")) {
          if (!v.contains(key.get<std::string>())) {
            errors.push_back(where + ": missing " + key.get<std::string>());
          }
        }
      }
      const bool closed = s.contains("additionalProperties") && s.at("additionalProperties") == false;
      for (const auto& [key, value] : v.items()) {
        const bool known = s.contains("properties") && s.at("properties").contains(key);
        if (known) {
          check(value, s.at("properties").at(key), where + "." + key, errors);
        } else if (closed) {
          errors.push_back(where + ": unexpected key " + key);
        }
      }
    }
    if (v.is_array() && s.contains("items")) {
      for (std::size_t k = 0; k < v.size(); ++k) {
        check(v[k], s.at("items"), where + "[" + std::to_string(k) + "]", errors);
      }
    }
  }

  json root_;
};

const SchemaValidator& schema() {
  static const SchemaValidator v(load(fs::path(CBJJ_SCHEMA_PATH)));
  return v;
}

// Every JSON output under dir validates against its definition, and every
// SVG has a CSV next to it.
void check_bundle(const fs::path& dir) {
  int documents = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    const fs::path& p = entry.path();
    if (p.extension() == ".json") {
      const std::string def = schema().definition_for(p.filename().string());
      INFO(p.string());
      REQUIRE_MESSAGE(!def.empty(), "no schema definition for " << p.filename());
      const auto errors = schema().validate(load(p), def);
      for (const auto& e : errors) {
        INFO(e);
        CHECK(false);
      }
      ++documents;
    } else if (p.extension() == ".svg") {
      INFO(p.string());
      fs::path csv = p;
      csv.replace_extension(".csv");
      CHECK(fs::exists(csv));
      const std::string text = slurp(p);
      CHECK(text.rfind("<svg", 0) == 0);
      CHECK(text.find("<!-- " + std::string(kVersion) + " -->") != std::string::npos);
      CHECK(text.find("</svg>") != std::string::npos);
      CHECK(std::count(text.begin(), text.end(), '<') == std::count(text.begin(), text.end(), '>'));
    }
  }
  CHECK(documents >= 1);
}

json rate_config() {
  return {{"protocol", {{"events", 400}}}, {"sweep", {{"variable", "bias_uA"}, {"grid", {2.88, 2.90, 2.92}}}}};
}

}  // namespace

TEST_CASE("config: defaults load and the resolved form round-trips") {
  const RunConfig c = parse_config(json::object());
  CHECK(c.junction.ic_uA == doctest::Approx(3.156));
  CHECK(c.sim.kappa == 2.0);
  const RunConfig again = parse_config(c.to_json());
  CHECK(again.to_json() == c.to_json());
  CHECK(again.digest() == c.digest());
}

TEST_CASE("config: digest ignores output settings but not physics") {
  const RunConfig a = parse_config(json::object());
  const RunConfig b = parse_config({{"output", {{"directory", "/elsewhere"}, {"formats", {"csv"}}}}});
  const RunConfig d = parse_config({{"environment", {{"T_mK", 150.0}}}});
  CHECK(a.digest() == b.digest());
  CHECK(a.digest() != d.digest());
}

TEST_CASE("config: unknown keys are rejected at any depth") {
  CHECK_THROWS_AS(parse_config({{"junktion", json::object()}}), ConfigError);
  CHECK_THROWS_AS(parse_config({{"junction", {{"ic", 3.0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config({{"sim", {{"seed", 1}, {"steps", 10}}}}), ConfigError);
}

TEST_CASE("config: invalid physical values are rejected") {
  CHECK_THROWS_AS(parse_config({{"junction", {{"c_pF", -1.0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config({{"environment", {{"T_mK", -5.0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config({{"protocol", {{"bias_uA", 4.0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config({{"sim", {{"dt", 0.5}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config({{"efficiency_model", {{"kind", "magic"}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config({{"junction", {{"ic_uA", "three"}}}}), ConfigError);
}

TEST_CASE("config: a provenance document is accepted as a configuration") {
  const RunConfig c = parse_config({{"environment", {{"T_mK", 150.0}}}});
  json prov{{"version", kVersion}, {"command", "sensitivity"}, {"config_digest", "0"}, {"config", c.to_json()}};
  CHECK(parse_config(prov).digest() == c.digest());
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("exit");
  const std::string out = (dir / "out").string();
  SUBCASE("empty sweep is a configuration error") {
    const auto cfg = write_config(dir, json::object());
    CHECK(run({"rate-curve", "-c", cfg.string(), "-o", out}) == kConfigError);
  }
  SUBCASE("missing config file") {
    CHECK(run({"sensitivity", "-c", (dir / "nope.json").string(), "-o", out}) == kConfigError);
  }
  SUBCASE("unknown fit model") {
    CHECK(run({"fit", "--model", "gaussian", "-o", out, (dir / "x.dat").string()}) == kConfigError);
  }
  SUBCASE("unsupported sweep variable") {
    const auto cfg = write_config(dir, {{"sweep", {{"variable", "T_mK"}, {"grid", {1.0}}}}});
    CHECK(run({"rate-curve", "-c", cfg.string(), "-o", out}) == kConfigError);
  }
  SUBCASE("boundary map over budget") {
    const auto cfg = write_config(dir, {{"sweep", {{"grid", {2.85, 2.95}}, {"grid2", {0.0, 10.0}}}},
                                        {"sim", {{"trajectories", 100}, {"budget", 50.0}}}});
    CHECK(run({"boundary-map", "-c", cfg.string(), "-o", out}) == kBudgetError);
  }
  SUBCASE("help") { CHECK(run({"--help"}) == kOk); }
  SUBCASE("unknown option") { CHECK(run({"sensitivity", "--frobnicate"}) == kConfigError); }
}

TEST_CASE("rate-curve: too few points skip the Kramers fit with a warning") {
  const fs::path dir = scratch("rate_single");
  const auto cfg = write_config(dir, {{"protocol", {{"events", 300}}}, {"sweep", {{"grid", {2.9}}}}});
  REQUIRE(run({"rate-curve", "-c", cfg.string(), "-o", (dir / "out").string()}) == kOk);
  const json prov = load(dir / "out" / "provenance.json");
  CHECK(has_warning(prov, "Kramers fit skipped"));
  CHECK_FALSE(fs::exists(dir / "out" / "fit_kramers.json"));
  check_bundle(dir / "out");
}

TEST_CASE("rate-curve: Kramers fit over a bias sweep recovers the configured temperature") {
  const fs::path dir = scratch("rate_fit");
  const auto cfg = write_config(
      dir, {{"protocol", {{"events", 1500}}},
            {"sweep", {{"variable", "bias_uA"}, {"grid", {2.86, 2.87, 2.88, 2.89, 2.90, 2.91, 2.92, 2.93}}}}});
  REQUIRE(run({"rate-curve", "-c", cfg.string(), "-o", (dir / "out").string()}) == kOk);
  const json k = load(dir / "out" / "fit_kramers.json");
  CHECK(k.at("converged") == true);
  const double T = parameter(k, "T");
  const double sT = uncertainty(k, "T");
  CHECK(std::abs(T - 0.183) < 4.0 * sT + 0.005);
  const Csv csv = read_csv(dir / "out" / "rate_curve.csv");
  CHECK(csv.rows.size() == 8);
  check_bundle(dir / "out");
}

TEST_CASE("rate-curve: below the crossover temperature the run warns") {
  const fs::path dir = scratch("rate_cold");
  const auto cfg = write_config(dir, {{"environment", {{"T_mK", 50.0}}},
                                      {"protocol", {{"events", 200}}},
                                      {"sweep", {{"grid", {2.0}}}}});
  const int code = run({"rate-curve", "-c", cfg.string(), "-o", (dir / "out").string()});
  CHECK((code == kOk || code == kNumericalError));
  const json prov = load(dir / "out" / "provenance.json");
  CHECK(has_warning(prov, "crossover"));
  check_bundle(dir / "out");
}

TEST_CASE("efficiency-scan: photon-number sweep crosses eps = 0.5 at the generator midpoint") {
  const fs::path dir = scratch("eff_ngamma");
  const auto cfg = write_config(
      dir, {{"environment", {{"T_mK", 160.0}}},
            {"protocol", {{"n_level", 8.0}, {"events", 1000}}},
            {"sweep", {{"variable", "n_gamma"}, {"grid", {6.0, 8.0, 10.0, 11.0, 12.0, 13.0, 14.0, 16.0, 20.0}}}}});
  REQUIRE(run({"efficiency-scan", "-c", cfg.string(), "-o", (dir / "out").string()}) == kOk);
  const json crossing = load(dir / "out" / "crossing.json");
  // Generator: sigmoid in ln(N_gamma / N_level) centred at ratio 1.5.
  const double x50 = parameter(crossing, "x50");
  const double s50 = uncertainty(crossing, "x50");
  CHECK(std::abs(x50 - 12.0) < 2.0 * s50 + 0.05);
  const Csv csv = read_csv(dir / "out" / "efficiency_scan.csv");
  CHECK(csv.header.front() == "sweep_n_gamma");
  CHECK(std::count(csv.header.begin(), csv.header.end(), "n_gamma") == 1);
  for (const auto& r : csv.column("regime")) {
    CHECK(r == "high_dark");
  }
  check_bundle(dir / "out");
}

TEST_CASE("efficiency-scan: the estimator switches at the dark-rate threshold") {
  const fs::path dir = scratch("eff_bias");
  const auto cfg = write_config(
      dir, {{"protocol", {{"events", 600}}}, {"sweep", {{"variable", "bias_uA"}, {"grid", {2.6, 2.75, 2.9}}}}});
  REQUIRE(run({"efficiency-scan", "-c", cfg.string(), "-o", (dir / "out").string()}) == kOk);
  const Csv csv = read_csv(dir / "out" / "efficiency_scan.csv");
  const auto regime = csv.column("regime");
  const auto dark = csv.column("dark_rate_Hz");
  REQUIRE(regime.size() == 3);
  for (std::size_t k = 0; k < regime.size(); ++k) {
    CHECK(regime[k] == (std::stod(dark[k]) >= 1.0 ? "high_dark" : "low_dark"));
  }
  CHECK(regime.front() == "low_dark");
  CHECK(regime.back() == "high_dark");
  check_bundle(dir / "out");
}

TEST_CASE("pulse-width-scan: two points skip the fit") {
  const fs::path dir = scratch("pw_two");
  const auto cfg = write_config(dir, {{"protocol", {{"events", 400}}}, {"sweep", {{"grid", {5.0, 10.0}}}}});
  REQUIRE(run({"pulse-width-scan", "-c", cfg.string(), "-o", (dir / "out").string()}) == kOk);
  CHECK(has_warning(load(dir / "out" / "provenance.json"), "pulse-width fit skipped"));
  check_bundle(dir / "out");
}

TEST_CASE("pulse-width-scan: saturated efficiencies are flagged ill-conditioned") {
  const fs::path dir = scratch("pw_sat");
  const auto cfg = write_config(dir, {{"protocol", {{"events", 400}}},
                                      {"efficiency_model", {{"kind", "poisson"}, {"eps_j", 0.02}}},
                                      {"sweep", {{"grid", {100.0, 200.0, 400.0, 700.0, 1000.0}}}}});
  REQUIRE(run({"pulse-width-scan", "-c", cfg.string(), "-o", (dir / "out").string()}) == kOk);
  CHECK(has_warning(load(dir / "out" / "provenance.json"), "ill-conditioned"));
  check_bundle(dir / "out");
}

TEST_CASE("boundary-map: no photons, no switching at zero temperature") {
  const fs::path dir = scratch("bmap");
  const auto cfg = write_config(dir, {{"environment", {{"T_mK", 0.0}}},
                                      {"sim", {{"trajectories", 20}}},
                                      {"sweep", {{"variable", "bias_uA"},
                                                 {"grid", {2.85, 2.95}},
                                                 {"variable2", "n_gamma"},
                                                 {"grid2", {0.0, 5.0, 40.0}}}}});
  REQUIRE(run({"boundary-map", "-c", cfg.string(), "-o", (dir / "out").string()}) == kOk);
  const Csv csv = read_csv(dir / "out" / "boundary_map.csv");
  const auto n = csv.column("n_gamma");
  const auto p = csv.column("efficiency");
  int zeros = 0;
  for (std::size_t k = 0; k < n.size(); ++k) {
    if (std::stod(n[k]) == 0.0) {
      CHECK(std::stod(p[k]) == 0.0);
      ++zeros;
    }
    if (std::stod(n[k]) == 40.0) {
      CHECK(std::stod(p[k]) == 1.0);
    }
  }
  CHECK(zeros == 2);
  check_bundle(dir / "out");
}

TEST_CASE("sensitivity: photon energy arithmetic") {
  const fs::path dir = scratch("sens");
  REQUIRE(run({"sensitivity", "-o", (dir / "ten").string()}) == kOk);
  const json ten = load(dir / "ten" / "sensitivity.json");
  constexpr double h = 6.62607015e-34;
  CHECK(ten.at("photon_energy").get<double>() == doctest::Approx(h * 8e9).epsilon(1e-12));
  CHECK(ten.at("energy_per_pulse").get<double>() == doctest::Approx(6.62607015e-21).epsilon(1e-9));
  CHECK(ten.at("power").get<double>() == doctest::Approx(6.62607015e-21 / 1e-8).epsilon(1e-9));
  const double nep = ten.at("nep").get<double>();
  CHECK(nep > 1e-18);
  CHECK(nep < 1e-16);
  const auto cfg = write_config(dir, {{"sensitivity", {{"n_gamma", 1.0}}}});
  REQUIRE(run({"sensitivity", "-c", cfg.string(), "-o", (dir / "one").string()}) == kOk);
  const json one = load(dir / "one" / "sensitivity.json");
  CHECK(one.at("energy_per_pulse").get<double>() == doctest::Approx(0.6626e-21).epsilon(1e-3));
  check_bundle(dir / "ten");
}

TEST_CASE("fit: saved datasets refit to the in-run results") {
  const fs::path dir = scratch("fit");
  const auto cfg = write_config(dir, rate_config());
  REQUIRE(run({"rate-curve", "-c", cfg.string(), "-o", (dir / "rc").string(), "--save-datasets"}) == kOk);
  const fs::path ds = dir / "rc" / "datasets" / "rate_curve_001.dat";
  REQUIRE(fs::exists(ds));
  REQUIRE(run({"fit", "-o", (dir / "fit").string(), ds.string()}) == kOk);
  const json refit = load(dir / "fit" / "fit_000.json");
  const json original = load(dir / "rc" / "fit_exponential_001.json");
  CHECK(refit.at("fit") == "exponential");
  CHECK(parameter(refit, "rate") == doctest::Approx(parameter(original, "rate")).epsilon(0.05));
  check_bundle(dir / "fit");

  const auto ecfg = write_config(dir, {{"protocol", {{"events", 800}}},
                                       {"sweep", {{"variable", "bias_uA"}, {"grid", {2.9}}}}});
  REQUIRE(run({"efficiency-scan", "-c", ecfg.string(), "-o", (dir / "es").string(), "--save-datasets"}) == kOk);
  std::vector<std::string> args{"fit", "-o", (dir / "fit_rf").string()};
  for (const auto& e : fs::directory_iterator(dir / "es" / "datasets")) {
    args.push_back(e.path().string());
  }
  REQUIRE(args.size() == 4);
  REQUIRE(run(args) == kOk);
  const json rf = load(dir / "fit_rf" / "fit_000.json");
  CHECK(rf.at("fit") == "rf_histogram");
  const double eps = rf.at("efficiency").at("value").get<double>();
  const double s = rf.at("efficiency").at("uncertainty").get<double>();
  const Csv csv = read_csv(dir / "es" / "efficiency_scan.csv");
  CHECK(eps == doctest::Approx(std::stod(csv.column("eps").front())).epsilon(1e-6));
  CHECK(std::abs(eps - std::stod(csv.column("eps_generator").front())) < 4.0 * s);
  check_bundle(dir / "fit_rf");

  REQUIRE(run({"fit", "--model", "low-dark", "-o", (dir / "fit_ld").string(), args.back()}) == kOk);
  check_bundle(dir / "fit_ld");
}

TEST_CASE("provenance replay reproduces every output byte for byte") {
  const fs::path dir = scratch("replay");
  const auto cfg = write_config(dir, rate_config());
  REQUIRE(run({"rate-curve", "-c", cfg.string(), "-o", (dir / "a").string(), "-s", "7", "-j", "2"}) == kOk);
  REQUIRE(run({"rate-curve", "-c", (dir / "a" / "provenance.json").string(), "-o", (dir / "b").string()}) == kOk);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    const fs::path other = dir / "b" / e.path().filename();
    INFO(e.path().filename().string());
    REQUIRE(fs::exists(other));
    CHECK(slurp(e.path()) == slurp(other));
    ++compared;
  }
  CHECK(compared >= 5);
  CHECK(load(dir / "a" / "provenance.json").at("seed") == 7);
}

TEST_CASE("output formats and default directory") {
  const fs::path dir = scratch("formats");
  const auto cfg = write_config(dir, rate_config());
  REQUIRE(run({"rate-curve", "-c", cfg.string(), "-o", (dir / "csv").string(), "-f", "csv"}) == kOk);
  for (const auto& e : fs::directory_iterator(dir / "csv")) {
    const auto ext = e.path().extension();
    CHECK(ext != ".svg");
    if (ext == ".json") {
      CHECK(e.path().filename() == "provenance.json");
    }
  }
  CHECK(fs::exists(dir / "csv" / "rate_curve.csv"));
  CHECK(run({"rate-curve", "-c", cfg.string(), "-o", (dir / "bad").string(), "-f", "pdf"}) == kConfigError);

  ::setenv("CBJJ_OUT_DIR", (dir / "env").string().c_str(), 1);
  const int code = run({"sensitivity"});
  ::unsetenv("CBJJ_OUT_DIR");
  REQUIRE(code == kOk);
  CHECK(fs::exists(dir / "env" / "sensitivity" / "sensitivity.json"));
}
