#include "cli/app.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "cbjj/errors.hpp"
#include "cli/commands.hpp"
#include "cli/config.hpp"

namespace cbjj::cli {

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  std::string format;
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned jobs = 1;
};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("-c,--config", o.config, "JSON run configuration (or a provenance.json to replay)");
  sub->add_option("-o,--out", o.out, "output directory");
  sub->add_option("-s,--seed", o.seed, "random seed (overrides sim.seed)")->each([&o](const std::string&) {
    o.seed_given = true;
  });
  sub->add_option("-j,--jobs", o.jobs, "worker threads")->check(CLI::Range(1u, 1024u));
  sub->add_option("-f,--format", o.format, "comma-separated output formats: csv,json,svg");
}

RunConfig resolve(const CommonOptions& o, const std::string& command) {
  RunConfig c = o.config.empty() ? parse_config(nlohmann::json::object()) : load_config_file(o.config);
  if (o.seed_given) {
    c.sim.seed = o.seed;
  }
  c.jobs = o.jobs;
  if (!o.format.empty()) {
    c.output.formats.clear();
    std::stringstream ss(o.format);
    for (std::string f; std::getline(ss, f, ',');) {
      if (f != "csv" && f != "json" && f != "svg") {
        throw ConfigError(fmt::format("unknown format '{}'", f));
      }
      c.output.formats.push_back(f);
    }
  }
  if (!o.out.empty()) {
    c.output.directory = o.out;
  } else if (c.output.directory.empty()) {
    const char* env = std::getenv("CBJJ_OUT_DIR");
    c.output.directory = (std::filesystem::path(env && *env ? env : "cbjj-out") / command).string();
  }
  return c;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Current-biased Josephson junction photon detector: simulation and analysis"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonOptions opts;
  bool save = false;
  FitOptions fit_opts;
  std::vector<std::string> datasets;

  auto* rate = app.add_subcommand("rate-curve", "dark switching rate vs bias with a thermal-activation fit");
  auto* eff = app.add_subcommand("efficiency-scan", "switching efficiency vs bias, level count or RF power");
  auto* width = app.add_subcommand("pulse-width-scan", "switching efficiency vs RF pulse width");
  auto* map = app.add_subcommand("boundary-map", "Langevin switching map over bias and photon number");
  auto* sens = app.add_subcommand("sensitivity", "energy, power and NEP at a threshold photon number");
  auto* fit = app.add_subcommand("fit", "fit histograms of dataset files");
  for (auto* sub : {rate, eff, width, map, sens, fit}) {
    add_common(sub, opts);
  }
  for (auto* sub : {rate, eff, width}) {
    sub->add_flag("--save-datasets", save, "also write the generated datasets");
  }
  fit->add_option("datasets", datasets, "dataset files")->required();
  fit->add_option("--model", fit_opts.model, "auto, exponential, rf or low-dark");
  fit->add_option("--bin-width-ms", fit_opts.bin_width_ms, "histogram bin width (0: automatic)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    const RunConfig c = resolve(opts, name);
    const std::filesystem::path out = c.output.directory;
    int code = kOk;
    if (sub == rate) {
      code = cmd_rate_curve(c, out, save);
    } else if (sub == eff) {
      code = cmd_efficiency_scan(c, out, save);
    } else if (sub == width) {
      code = cmd_pulse_width_scan(c, out, save);
    } else if (sub == map) {
      code = cmd_boundary_map(c, out);
    } else if (sub == sens) {
      code = cmd_sensitivity(c, out);
    } else {
      code = cmd_fit(c, datasets, fit_opts, out);
    }
    if (code == kNumericalError) {
      std::cerr << fmt::format("cbjj {}: some points failed, see {}/failures.json\n", name, out.string());
    } else {
      std::cerr << fmt::format("cbjj {}: wrote {}\n", name, out.string());
    }
    return code;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kBudgetError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOtherError;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"cbjj"};
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace cbjj::cli
