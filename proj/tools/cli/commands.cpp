#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <variant>

#include <fmt/format.h>

#include "cbjj/analysis.hpp"
#include "cbjj/constants.hpp"
#include "cbjj/errors.hpp"
#include "cbjj/escape.hpp"
#include "cbjj/langevin.hpp"
#include "cbjj/parallel.hpp"
#include "cbjj/random.hpp"
#include "cli/report.hpp"
#include "cli/svg.hpp"

namespace cbjj::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
using Outcome = std::variant<T, std::string>;

// Runs fn(i) on every sweep point. Point-level numerical or domain failures
// become error strings; configuration and budget errors abort the command.
template <class T, class Fn>
std::vector<Outcome<T>> run_points(std::size_t n, unsigned jobs, Fn fn) {
  std::vector<Outcome<T>> out(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    try {
      out[i] = fn(i);
    } catch (const ConfigError&) {
      throw;
    } catch (const BudgetError&) {
      throw;
    } catch (const std::exception& e) {
      out[i] = std::string(e.what());
    }
  });
  return out;
}

const std::vector<double>& require_grid(const RunConfig& c, std::initializer_list<const char*> allowed,
                                        std::string& variable) {
  if (c.sweep.grid.empty()) {
    throw ConfigError("empty sweep: sweep.grid (or sweep.range) is required");
  }
  variable = c.sweep.variable.empty() ? *allowed.begin() : c.sweep.variable;
  for (const char* a : allowed) {
    if (variable == a) {
      return c.sweep.grid;
    }
  }
  std::string list;
  for (const char* a : allowed) {
    list += (list.empty() ? "" : ", ") + std::string(a);
  }
  throw ConfigError(fmt::format("sweep.variable '{}' not supported here (use one of: {})", variable, list));
}

double checked_bias(const JunctionParams& jp, double bias_uA) {
  const double bias = bias_uA * 1e-6;
  if (!(bias >= 0.0 && bias < jp.critical_current())) {
    throw ConfigError(fmt::format("sweep bias {} uA outside [0, I_c)", bias_uA));
  }
  return bias;
}

double bias_from_levels(const JunctionParams& jp, double levels) {
  try {
    return bias_for_level_count(jp, levels);
  } catch (const DomainError& e) {
    throw ConfigError(fmt::format("sweep level count {}: {}", levels, e.what()));
  }
}

ThermalEnvironment thermal_environment(const RunConfig& c) {
  if (!(c.temperature() > 0.0)) {
    throw ConfigError("this command needs environment.T_mK > 0");
  }
  return ThermalEnvironment(c.temperature());
}

void maybe_save(const SwitchingDataset& ds, const fs::path& out, bool save, const std::string& name) {
  if (save) {
    fs::create_directories(out / "datasets");
    write_dataset(ds, (out / "datasets" / (name + ".dat")).string());
  }
}

// Dark-count histogram on the hold-time clock with a bin width matched to
// the observed lifetimes unless one is given.
Histogram hold_time_histogram(const SwitchingDataset& ds, double bin_width) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : ds.records) {
    if (!r.censored) {
      sum += ds.hold_time(r);
      ++n;
    }
  }
  if (n == 0) {
    throw DomainError("no switching events in the dataset");
  }
  const double mean = std::max(sum / static_cast<double>(n), 1e-12);
  const double span = static_cast<double>(ds.acquisition.timeout_cycles) * ds.acquisition.hold_duration;
  HistogramOptions opt;
  opt.axis = TimeAxis::HoldTime;
  opt.bin_width = bin_width > 0.0 ? bin_width : mean / 20.0;
  const double end = bin_width > 0.0 ? span : std::min(span, 25.0 * mean);
  opt.range_end = std::max(1.0, std::floor(end / opt.bin_width + 1e-9)) * opt.bin_width;
  return histogram_from_dataset(ds, opt);
}

// First-cycle histogram on the lifetime clock covering whole bins of the hold.
Histogram rf_histogram(const SwitchingDataset& ds, double bin_width) {
  HistogramOptions opt;
  opt.axis = TimeAxis::Lifetime;
  opt.bin_width = bin_width;
  opt.range_end = std::floor(ds.acquisition.hold_duration / bin_width + 1e-9) * bin_width;
  return histogram_from_dataset(ds, opt);
}

json parse(const std::string& text) { return json::parse(text); }

std::string fixed_label(double v) { return fmt::format("{:.3g}", v); }

// ---------------------------------------------------------------------------
// Efficiency estimation shared by the scan commands.

struct EfficiencyPoint {
  double x = 0.0;
  double bias = 0.0;
  double n_level = 0.0;
  double power_dbm = 0.0;
  double n_gamma = 0.0;
  double width = 0.0;
  double eps_true = 0.0;
  double dark_rate = 0.0;
  bool low_dark = false;
  EfficiencyEstimate est;
  std::size_t switched = 0;
  std::size_t censored = 0;
  std::string fit_doc;  // empty in the low-dark regime
};

EfficiencyPoint measure_efficiency(const RunConfig& c, const JunctionParams& jp, const ThermalEnvironment& env,
                                   double bias, double power_dbm, double width, std::uint64_t seed, const fs::path& out,
                                   bool save, const std::string& name) {
  EfficiencyPoint p;
  p.bias = bias;
  p.power_dbm = power_dbm;
  p.width = width;
  const RfPulse pulse = c.pulse(power_dbm, width);
  p.n_gamma = photon_number(pulse, jp.relaxation_time());
  p.n_level = level_count(jp, bias);
  p.eps_true = generator_efficiency(c, p.n_gamma, p.n_level, width);
  p.dark_rate = kramers_rate(jp, env, bias);
  p.low_dark = p.dark_rate < c.analysis.dark_rate_threshold_Hz;

  const SwitchingDataset ds = sample_dataset(jp, env, c.waveform(bias), pulse, c.protocol_config(seed), p.eps_true);
  maybe_save(ds, out, save, name);
  p.switched = ds.switched_count();
  p.censored = ds.censored_count();
  if (p.low_dark) {
    p.est = efficiency_low_dark(ds);
  } else {
    const Histogram h = rf_histogram(ds, c.bin_width());
    const FitResult fit = fit_rf_histogram(h, c.protocol.t_rf_ms * 1e-3, ds.censored_count() + h.overflow);
    p.fit_doc = fit_report_json(fit, "rf_histogram", digest_histogram(h));
    p.est = efficiency_from_fit(fit, c.protocol.t_rf_ms * 1e-3);
  }
  return p;
}

// Uncertainty used when efficiencies enter a weighted fit: never below half
// the interval width, so 0/N and N/N points keep a finite weight.
double fit_sigma(const EfficiencyEstimate& e) {
  return std::max({e.uncertainty, 0.5 * (e.upper - e.lower), 1e-4});
}

}  // namespace

double generator_efficiency(const RunConfig& c, double n_gamma, double n_level, double width) {
  const auto& m = c.efficiency_model;
  if (m.kind == "constant") {
    return m.value;
  }
  if (m.kind == "poisson") {
    return poisson_switch_probability(m.eps_j, width, c.junction_params().relaxation_time());
  }
  if (!(n_gamma > 0.0) || !(n_level > 0.0)) {
    return 0.0;
  }
  const double z = (std::log(n_gamma / n_level) - std::log(m.ratio_at_half)) / m.log_width;
  return 1.0 / (1.0 + std::exp(-z));
}

// ---------------------------------------------------------------------------

int cmd_rate_curve(const RunConfig& c, const fs::path& out, bool save_datasets) {
  std::string variable;
  const auto& grid = require_grid(c, {"bias_uA"}, variable);
  const JunctionParams jp = c.junction_params();
  const ThermalEnvironment env = thermal_environment(c);
  std::vector<double> biases;
  for (double v : grid) {
    biases.push_back(checked_bias(jp, v));
  }
  for (std::size_t k = 1; k < biases.size(); ++k) {
    if (!(biases[k] > biases[k - 1])) {
      throw ConfigError("rate-curve biases must be strictly increasing");
    }
  }

  Bundle bundle(c, "rate-curve", out);
  for (double b : biases) {
    if (below_crossover(jp, env, b)) {
      bundle.warn(fmt::format("temperature {} mK is below the crossover temperature at {} uA; thermal escape "
                              "model outside its validity range",
                              c.environment.T_mK, b * 1e6));
    }
    for (const auto& w : evaluate_kramers(jp, env, b).warnings) {
      bundle.warn(w);
    }
  }

  struct Point {
    double rate, sigma;
    std::size_t switched, censored;
    std::string doc;
    Warnings warnings;
  };
  const RfPulse dark_pulse = c.pulse(-std::numeric_limits<double>::infinity(), c.rf.width_ns * 1e-9);
  const auto results = run_points<Point>(biases.size(), c.jobs, [&](std::size_t i) {
    const auto seed = derive_seed(c.sim.seed, "rate-curve", i);
    const SwitchingDataset ds =
        sample_dataset(jp, env, c.waveform(biases[i]), dark_pulse, c.protocol_config(seed), 0.0);
    maybe_save(ds, out, save_datasets, fmt::format("rate_curve_{:03}", i));
    const Histogram h = hold_time_histogram(ds, c.protocol.bin_width_ms * 1e-3);
    const FitResult fit = fit_exponential(h, ds.censored_count() + h.overflow);
    return Point{fit.value("rate"), fit.uncertainty("rate"), ds.switched_count(), ds.censored_count(),
                 fit_report_json(fit, "exponential", digest_histogram(h)), fit.warnings};
  });

  RateCurve curve;
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (const auto* err = std::get_if<std::string>(&results[i])) {
      bundle.failure(i, grid[i], *err);
      continue;
    }
    const auto& p = std::get<Point>(results[i]);
    bundle.document(fmt::format("fit_exponential_{:03}", i), p.doc);
    for (const auto& w : p.warnings) {
      bundle.warn(fmt::format("point {}: {}", i, w));
    }
    if (p.rate > 0.0 && p.sigma > 0.0 && std::isfinite(p.sigma)) {
      curve.add({biases[i], p.rate, p.sigma});
      ok.push_back(i);
    }
  }

  std::optional<FitResult> kfit;
  if (curve.size() < 6) {
    bundle.warn(fmt::format("Kramers fit skipped: {} usable point(s), at least 6 needed", curve.size()));
  } else {
    try {
      kfit = fit_kramers(curve, jp);
      std::vector<double> flat;
      for (const auto& pt : curve.points()) {
        flat.insert(flat.end(), {pt.bias, pt.rate, pt.rate_uncertainty});
      }
      bundle.document("fit_kramers", fit_report_json(*kfit, "kramers", digest_values(flat)));
      for (const auto& w : kfit->warnings) {
        bundle.warn(w);
      }
    } catch (const DomainError& e) {
      bundle.warn(fmt::format("Kramers fit skipped: {}", e.what()));
    } catch (const NumericalError& e) {
      bundle.failure(biases.size(), kNaN, fmt::format("Kramers fit: {}", e.what()));
    }
  }

  auto fitted_rate = [&](double bias) {
    if (!kfit || !(kfit->value("I_c") > bias)) {
      return kNaN;
    }
    const JunctionParams fp(kfit->value("I_c"), jp.capacitance(), jp.shunt_resistance());
    return kramers_rate(fp, ThermalEnvironment(kfit->value("T")), bias);
  };

  Table table;
  table.title = "dark switching rate vs bias current";
  table.columns = {{"bias_uA", "hold bias current [uA]"},
                   {"level_count", "barrier depth in plasma quanta"},
                   {"rate_Hz", "fitted escape rate 1/tau [Hz]"},
                   {"rate_sigma_Hz", "1-sigma uncertainty of rate_Hz [Hz]"},
                   {"model_config_Hz", "thermal activation rate at the configured junction and T [Hz]"},
                   {"model_fit_Hz", "thermal activation rate at the fitted T and I_c [Hz]"},
                   {"switched", "non-censored records"},
                   {"censored", "censored records"}};
  svg::Series data{"simulated", {}, {}, {}, false, "#1f77b4"};
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!std::holds_alternative<Point>(results[i])) {
      continue;
    }
    const auto& p = std::get<Point>(results[i]);
    table.add_row({cell(grid[i]), cell(level_count(jp, biases[i])), cell(p.rate), cell(p.sigma),
                   cell(kramers_rate(jp, env, biases[i])), cell(fitted_rate(biases[i])), cell(p.switched),
                   cell(p.censored)});
    data.x.push_back(grid[i]);
    data.y.push_back(p.rate);
    data.yerr.push_back(p.sigma);
  }
  bundle.table("rate_curve", table);

  svg::LinePlot plot;
  plot.title = "Escape rate vs bias current";
  plot.x = {"bias current [uA]", false};
  plot.y = {"escape rate [Hz]", true};
  plot.series.push_back(data);
  svg::Series model{kfit ? "thermal activation fit" : "thermal activation model", {}, {}, {}, true, "#d62728"};
  const double lo = biases.front(), hi = biases.back();
  for (int k = 0; k <= 100; ++k) {
    const double b = lo + (hi - lo) * k / 100.0;
    model.x.push_back(b * 1e6);
    model.y.push_back(kfit ? fitted_rate(b) : kramers_rate(jp, env, b));
  }
  plot.series.push_back(model);
  if (kfit) {
    plot.title += fmt::format(" (T = {:.1f} +- {:.1f} mK, I_c = {:.4f} +- {:.4f} uA)", kfit->value("T") * 1e3,
                              kfit->uncertainty("T") * 1e3, kfit->value("I_c") * 1e6, kfit->uncertainty("I_c") * 1e6);
  }
  bundle.plot("rate_curve", plot.render());
  return bundle.finish();
}

// ---------------------------------------------------------------------------

int cmd_efficiency_scan(const RunConfig& c, const fs::path& out, bool save_datasets) {
  std::string variable;
  const auto& grid = require_grid(c, {"bias_uA", "n_level", "power_dBm", "n_gamma"}, variable);
  const JunctionParams jp = c.junction_params();
  const ThermalEnvironment env = thermal_environment(c);
  const double width = c.rf.width_ns * 1e-9;
  const double freq = c.rf.freq_GHz * 1e9;

  std::vector<double> bias(grid.size(), c.operating_bias());
  std::vector<double> power(grid.size(), c.rf.power_dBm);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (variable == "bias_uA") {
      bias[i] = checked_bias(jp, grid[i]);
    } else if (variable == "n_level") {
      bias[i] = bias_from_levels(jp, grid[i]);
    } else if (variable == "power_dBm") {
      power[i] = grid[i];
    } else {
      if (!(grid[i] > 0.0)) {
        throw ConfigError("n_gamma sweep values must be positive");
      }
      power[i] = dbm_for_photon_number(grid[i], freq, jp.relaxation_time());
    }
  }

  Bundle bundle(c, "efficiency-scan", out);
  const auto results = run_points<EfficiencyPoint>(grid.size(), c.jobs, [&](std::size_t i) {
    auto p = measure_efficiency(c, jp, env, bias[i], power[i], width, derive_seed(c.sim.seed, "efficiency-scan", i),
                                out, save_datasets, fmt::format("efficiency_{:03}", i));
    p.x = grid[i];
    return p;
  });

  // Abscissa for the crossing fit and the plot; power sweeps use N_gamma.
  const bool by_power = variable == "power_dBm" || variable == "n_gamma";
  auto abscissa = [&](const EfficiencyPoint& p) { return by_power ? p.n_gamma : p.x; };

  Table table;
  table.title = "switching efficiency scan";
  table.columns = {{"sweep_" + variable, "sweep value"},
                   {"bias_uA", "hold bias current [uA]"},
                   {"n_level", "barrier depth in plasma quanta"},
                   {"power_dBm", "RF power at the junction [dBm]"},
                   {"n_gamma", "photons per relaxation time"},
                   {"eps_generator", "efficiency used to generate the data"},
                   {"eps", "estimated efficiency"},
                   {"eps_sigma", "1-sigma uncertainty of eps"},
                   {"eps_lower", "lower interval bound"},
                   {"eps_upper", "upper interval bound"},
                   {"regime", "high_dark (histogram fit) or low_dark (ratio estimator)"},
                   {"dark_rate_Hz", "dark switching rate at the hold bias [Hz]"},
                   {"switched", "non-censored records"},
                   {"censored", "censored records"}};
  std::vector<double> fx, fy, fs_;
  svg::Series data{"estimated", {}, {}, {}, false, "#1f77b4"};
  svg::Series truth{"generator", {}, {}, {}, true, "#7f7f7f"};
  svg::SecondaryAxis top;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (const auto* err = std::get_if<std::string>(&results[i])) {
      bundle.failure(i, grid[i], *err);
      continue;
    }
    const auto& p = std::get<EfficiencyPoint>(results[i]);
    if (!p.fit_doc.empty()) {
      bundle.document(fmt::format("fit_rf_{:03}", i), p.fit_doc);
    }
    for (const auto& w : p.est.warnings) {
      bundle.warn(fmt::format("point {}: {}", i, w));
    }
    table.add_row({cell(p.x), cell(p.bias * 1e6), cell(p.n_level), cell(p.power_dbm), cell(p.n_gamma),
                   cell(p.eps_true), cell(p.est.value), cell(p.est.uncertainty), cell(p.est.lower),
                   cell(p.est.upper), cell(p.low_dark ? "low_dark" : "high_dark"), cell(p.dark_rate),
                   cell(p.switched), cell(p.censored)});
    const double ax = abscissa(p);
    data.x.push_back(ax);
    data.y.push_back(p.est.value);
    data.yerr.push_back(p.est.uncertainty);
    truth.x.push_back(ax);
    truth.y.push_back(p.eps_true);
    fx.push_back(ax);
    fy.push_back(p.est.value);
    fs_.push_back(fit_sigma(p.est));
    top.positions.push_back(ax);
    if (by_power) {
      top.labels.push_back(fixed_label(p.power_dbm));
    } else if (variable == "bias_uA") {
      top.labels.push_back(fixed_label(p.n_level));
    } else {
      top.labels.push_back(fixed_label(p.bias * 1e6));
    }
  }
  bundle.table("efficiency_scan", table);

  double crossing = kNaN;
  double crossing_sigma = kNaN;
  if (fx.size() >= 3) {
    try {
      const FitResult fit = fit_logistic_crossing(fx, fy, fs_);
      crossing = fit.value("x50");
      crossing_sigma = fit.uncertainty("x50");
      json doc = parse(fit_report_json(fit, "logistic_crossing", digest_values(fy)));
      doc["abscissa"] = by_power ? "n_gamma" : variable;
      if (by_power) {
        const double f = c.rf.freq_GHz * 1e9;
        doc["crossing_power_dBm"] = dbm_for_photon_number(crossing, f, jp.relaxation_time());
      }
      bundle.document("crossing", doc.dump(2));
    } catch (const std::exception& e) {
      bundle.warn(fmt::format("eps = 0.5 crossing not determined: {}", e.what()));
    }
  } else {
    bundle.warn("eps = 0.5 crossing not determined: fewer than 3 points");
  }

  svg::LinePlot plot;
  plot.title = std::isfinite(crossing)
                   ? fmt::format("Switching efficiency (eps = 0.5 at {:.4g} +- {:.2g})", crossing, crossing_sigma)
                   : "Switching efficiency";
  plot.x = {by_power ? "photons per relaxation time" : variable, by_power};
  plot.y = {"switching efficiency", false};
  plot.series = {truth, data};
  top.label = by_power ? "RF power [dBm]" : (variable == "bias_uA" ? "levels in the well" : "bias current [uA]");
  plot.top = top;
  if (std::isfinite(crossing)) {
    plot.markers.push_back({crossing, "eps = 0.5", true});
  }
  plot.markers.push_back({0.5, "", false});
  bundle.plot("efficiency_scan", plot.render());
  return bundle.finish();
}

// ---------------------------------------------------------------------------

int cmd_pulse_width_scan(const RunConfig& c, const fs::path& out, bool save_datasets) {
  std::string variable;
  const auto& grid = require_grid(c, {"width_ns"}, variable);
  for (double w : grid) {
    if (!(w > 0.0)) {
      throw ConfigError("pulse widths must be positive");
    }
  }
  const JunctionParams jp = c.junction_params();
  const ThermalEnvironment env = thermal_environment(c);
  const double bias = c.operating_bias();

  Bundle bundle(c, "pulse-width-scan", out);
  const auto results = run_points<EfficiencyPoint>(grid.size(), c.jobs, [&](std::size_t i) {
    auto p = measure_efficiency(c, jp, env, bias, c.rf.power_dBm, grid[i] * 1e-9,
                                derive_seed(c.sim.seed, "pulse-width-scan", i), out, save_datasets,
                                fmt::format("pulse_width_{:03}", i));
    p.x = grid[i];
    return p;
  });

  std::vector<PulseWidthPoint> points;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (const auto* err = std::get_if<std::string>(&results[i])) {
      bundle.failure(i, grid[i], *err);
      continue;
    }
    const auto& p = std::get<EfficiencyPoint>(results[i]);
    if (!p.fit_doc.empty()) {
      bundle.document(fmt::format("fit_rf_{:03}", i), p.fit_doc);
    }
    for (const auto& w : p.est.warnings) {
      bundle.warn(fmt::format("point {}: {}", i, w));
    }
    points.push_back({p.width, std::clamp(p.est.value, 0.0, 1.0), fit_sigma(p.est)});
    index.push_back(i);
  }

  std::optional<FitResult> fit;
  if (points.size() < 4) {
    bundle.warn(fmt::format("pulse-width fit skipped: {} point(s), at least 4 needed", points.size()));
  } else {
    try {
      fit = fit_pulse_width(points, jp.relaxation_time());
      std::vector<double> flat;
      for (const auto& p : points) {
        flat.insert(flat.end(), {p.width, p.efficiency, p.uncertainty});
      }
      bundle.document("fit_pulse_width", fit_report_json(*fit, "pulse_width", digest_values(flat)));
      for (const auto& w : fit->warnings) {
        bundle.warn(w);
      }
    } catch (const DomainError& e) {
      bundle.warn(fmt::format("pulse-width fit skipped: {}", e.what()));
    } catch (const NumericalError& e) {
      bundle.failure(grid.size(), kNaN, fmt::format("pulse-width fit: {}", e.what()));
    }
  }
  auto model = [&](double width) {
    return fit ? poisson_switch_probability(fit->value("eps_j"), width, jp.relaxation_time()) : kNaN;
  };

  Table table;
  table.title = "switching efficiency vs RF pulse width";
  table.columns = {{"width_ns", "RF pulse width [ns]"},
                   {"n_gamma", "photons per relaxation time"},
                   {"eps_generator", "efficiency used to generate the data"},
                   {"eps", "estimated efficiency"},
                   {"eps_sigma", "1-sigma uncertainty used in the fit"},
                   {"regime", "high_dark (histogram fit) or low_dark (ratio estimator)"},
                   {"eps_model", "independent-trial model at the fitted single-trial probability"}};
  svg::Series data{"estimated", {}, {}, {}, false, "#1f77b4"};
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = std::get<EfficiencyPoint>(results[index[k]]);
    table.add_row({cell(p.x), cell(p.n_gamma), cell(p.eps_true), cell(points[k].efficiency),
                   cell(points[k].uncertainty), cell(p.low_dark ? "low_dark" : "high_dark"), cell(model(p.width))});
    data.x.push_back(p.x);
    data.y.push_back(points[k].efficiency);
    data.yerr.push_back(points[k].uncertainty);
  }
  bundle.table("pulse_width_scan", table);

  svg::LinePlot plot;
  plot.title = fit ? fmt::format("Efficiency vs pulse width (eps_j = {:.3g} +- {:.2g})", fit->value("eps_j"),
                                 fit->uncertainty("eps_j"))
                   : "Efficiency vs pulse width";
  plot.x = {"pulse width [ns]", true};
  plot.y = {"switching efficiency", false};
  plot.series.push_back(data);
  if (fit && !data.x.empty()) {
    svg::Series curve{"independent-trial fit", {}, {}, {}, true, "#d62728"};
    const auto [mn, mx] = std::minmax_element(data.x.begin(), data.x.end());
    for (int k = 0; k <= 100; ++k) {
      const double w = *mn * std::pow(*mx / *mn, k / 100.0);
      curve.x.push_back(w);
      curve.y.push_back(model(w * 1e-9));
    }
    plot.series.push_back(curve);
  }
  bundle.plot("pulse_width_scan", plot.render());
  return bundle.finish();
}

// ---------------------------------------------------------------------------

int cmd_boundary_map(const RunConfig& c, const fs::path& out) {
  std::string variable;
  const auto& grid = require_grid(c, {"bias_uA", "n_level"}, variable);
  if (!c.sweep.variable2.empty() && c.sweep.variable2 != "n_gamma") {
    throw ConfigError("boundary-map needs sweep.variable2 = 'n_gamma'");
  }
  if (c.sweep.grid2.empty()) {
    throw ConfigError("empty sweep: boundary-map needs sweep.grid2 (photon numbers)");
  }
  for (double n : c.sweep.grid2) {
    if (!(n >= 0.0)) {
      throw ConfigError("photon numbers must be >= 0");
    }
  }
  const JunctionParams jp = c.junction_params();
  std::vector<double> biases;
  for (double v : grid) {
    biases.push_back(variable == "bias_uA" ? checked_bias(jp, v) : bias_from_levels(jp, v));
  }
  const double cost = static_cast<double>(biases.size() * c.sweep.grid2.size() * c.sim.trajectories);
  if (cost > c.sim.budget) {
    throw BudgetError(fmt::format("boundary map needs {} trajectories, budget is {}", cost, c.sim.budget));
  }

  SimConfig sim;
  sim.time_step = c.sim.dt;
  sim.trajectories = c.sim.trajectories;
  sim.seed = derive_seed(c.sim.seed, "boundary-map", 0);
  sim.rf_coupling = c.sim.kappa;
  sim.jobs = c.jobs;
  BoundaryMapOptions opt;
  opt.settle_time = c.sim.settle_time;

  Bundle bundle(c, "boundary-map", out);
  const BoundaryMap map =
      switching_boundary_map(jp, c.temperature(), biases, c.sweep.grid2, c.pulse(), sim, opt);
  const std::vector<double> thresholds = threshold_photon_numbers(map);

  Table cells;
  cells.title = "switching efficiency map";
  cells.columns = {{"bias_uA", "bias current [uA]"},
                   {"n_level", "barrier depth in plasma quanta"},
                   {"n_gamma", "photons per relaxation time"},
                   {"efficiency", "fraction of trajectories switching during the pulse"}};
  for (std::size_t b = 0; b < map.biases.size(); ++b) {
    for (std::size_t n = 0; n < map.photon_numbers.size(); ++n) {
      cells.add_row({cell(map.biases[b] * 1e6), cell(map.level_counts[b]), cell(map.photon_numbers[n]),
                     cell(map.at(b, n))});
    }
  }
  bundle.table("boundary_map", cells);

  Table thr;
  thr.title = "eps = 0.5 threshold per bias row";
  thr.columns = {{"bias_uA", "bias current [uA]"},
                 {"n_level", "barrier depth in plasma quanta"},
                 {"threshold_n_gamma", "photon number where the efficiency reaches 0.5 (nan: not reached)"},
                 {"ratio", "threshold_n_gamma / n_level"}};
  json summary;
  summary["thresholds"] = json::array();
  bool monotone = true;
  double last = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < map.biases.size(); ++b) {
    const double t = thresholds[b];
    const double ratio = t / map.level_counts[b];
    thr.add_row({cell(map.biases[b] * 1e6), cell(map.level_counts[b]), cell(t), cell(ratio)});
    summary["thresholds"].push_back({{"bias_uA", map.biases[b] * 1e6},
                                     {"n_level", map.level_counts[b]},
                                     {"threshold_n_gamma", std::isfinite(t) ? json(t) : json(nullptr)},
                                     {"ratio", std::isfinite(ratio) ? json(ratio) : json(nullptr)}});
    if (std::isfinite(t)) {
      monotone = monotone && t <= last * (1.0 + 1e-12);
      last = t;
    }
  }
  summary["monotone_in_bias"] = monotone;
  summary["trajectories_per_cell"] = c.sim.trajectories;
  summary["temperature_K"] = c.temperature();
  summary["rf_coupling"] = c.sim.kappa;
  bundle.table("boundary_threshold", thr);
  bundle.document("boundary_summary", summary.dump(2));
  if (!monotone) {
    bundle.warn("eps = 0.5 threshold is not monotone in bias (statistical noise or coarse grid)");
  }

  // Rows in ascending bias for the heatmap.
  std::vector<std::size_t> order(map.biases.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    order[k] = k;
  }
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return map.biases[a] < map.biases[b]; });
  svg::Heatmap hm;
  hm.title = "Switching efficiency vs bias and photon number";
  const bool log_x = std::all_of(map.photon_numbers.begin(), map.photon_numbers.end(), [](double n) { return n > 0; });
  hm.x = {"photons per relaxation time", log_x};
  hm.y = {"bias current [uA]", false};
  hm.xs = map.photon_numbers;
  hm.colorbar_label = "efficiency";
  svg::Series contour{"eps = 0.5", {}, {}, {}, true, "#ffffff"};
  svg::Series levels{"N_gamma = N_level", {}, {}, {}, true, "#ff7f0e"};
  for (auto k : order) {
    hm.ys.push_back(map.biases[k] * 1e6);
    for (std::size_t n = 0; n < map.photon_numbers.size(); ++n) {
      hm.values.push_back(map.at(k, n));
    }
    if (std::isfinite(thresholds[k])) {
      contour.x.push_back(thresholds[k]);
      contour.y.push_back(map.biases[k] * 1e6);
    }
    levels.x.push_back(map.level_counts[k]);
    levels.y.push_back(map.biases[k] * 1e6);
  }
  hm.overlays = {contour, levels};
  bundle.plot("boundary_map", hm.render());
  return bundle.finish();
}

// ---------------------------------------------------------------------------

int cmd_sensitivity(const RunConfig& c, const fs::path& out) {
  const JunctionParams jp = c.junction_params();
  const double bias = c.operating_bias();
  const RfPulse pulse = c.pulse();
  const double n = c.sensitivity.n_gamma;
  const SensitivitySummary s = sensitivity_summary(pulse, n, jp.relaxation_time());
  const double q = quality_factor(jp, bias);
  const double nu_p = plasma_frequency(jp, bias) / (2.0 * constants::pi);
  const double bandwidth = nu_p / q;
  const double nep = noise_equivalent_power(s.power, bandwidth);

  Bundle bundle(c, "sensitivity", out);
  Table t;
  t.title = "detector sensitivity at the threshold photon number";
  t.columns = {{"quantity", "name"}, {"value", "value in SI units"}, {"unit", "SI unit"}};
  const std::vector<std::tuple<std::string, double, std::string>> rows{
      {"n_gamma", n, "1"},
      {"frequency", pulse.frequency, "Hz"},
      {"pulse_width", pulse.width, "s"},
      {"relaxation_time", jp.relaxation_time(), "s"},
      {"photon_energy", s.photon_energy, "J"},
      {"energy_per_pulse", s.energy_per_pulse, "J"},
      {"power", s.power, "W"},
      {"plasma_frequency", nu_p, "Hz"},
      {"quality_factor", q, "1"},
      {"bandwidth", bandwidth, "Hz"},
      {"nep", nep, "W/sqrt(Hz)"}};
  json doc;
  for (const auto& [name, value, unit] : rows) {
    t.add_row({name, cell(value), unit});
    doc[name] = value;
  }
  doc["bias_A"] = bias;
  bundle.table("sensitivity", t);
  bundle.document("sensitivity", doc.dump(2));
  return bundle.finish();
}

// ---------------------------------------------------------------------------

int cmd_fit(const RunConfig& c, const std::vector<std::string>& datasets, const FitOptions& options,
            const fs::path& out) {
  if (datasets.empty()) {
    throw ConfigError("fit needs at least one dataset file");
  }
  static const std::vector<std::string> models{"auto", "exponential", "rf", "low-dark"};
  if (std::find(models.begin(), models.end(), options.model) == models.end()) {
    throw ConfigError(fmt::format("unknown fit model '{}'", options.model));
  }
  if (options.bin_width_ms < 0.0) {
    throw ConfigError("bin width must be >= 0");
  }
  Bundle bundle(c, "fit", out);
  Table summary;
  summary.title = "fits of ingested datasets";
  summary.columns = {{"dataset", "file name"},
                     {"model", "exponential, rf or low-dark"},
                     {"records", "records in the file"},
                     {"censored", "censored records"},
                     {"quantity", "rate_Hz or eps"},
                     {"value", "estimate"},
                     {"sigma", "1-sigma uncertainty"}};

  for (std::size_t i = 0; i < datasets.size(); ++i) {
    SwitchingDataset ds;
    try {
      ds = read_dataset(datasets[i]);
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("{}: {}", datasets[i], e.what()));
    }
    std::string model = options.model;
    if (model == "auto") {
      const auto it = ds.metadata.find("rf_power_dbm");
      const bool no_rf = it != ds.metadata.end() && it->second == "-inf";
      model = (ds.acquisition.rf_width > 0.0 && !no_rf) ? "rf" : "exponential";
    }
    const std::string name = fs::path(datasets[i]).filename().string();
    try {
      std::string quantity;
      double value = kNaN, sigma = kNaN;
      std::optional<Histogram> hist;
      std::vector<double> expected;
      if (model == "low-dark") {
        const EfficiencyEstimate e = efficiency_low_dark(ds);
        quantity = "eps";
        value = e.value;
        sigma = e.uncertainty;
        json doc{{"fit", "low_dark_ratio"}, {"eps", e.value}, {"sigma", e.uncertainty},
                 {"lower", e.lower},        {"upper", e.upper}, {"warnings", e.warnings}};
        bundle.document(fmt::format("fit_{:03}", i), doc.dump(2));
      } else if (model == "exponential") {
        hist = hold_time_histogram(ds, options.bin_width_ms * 1e-3);
        const FitResult fit = fit_exponential(*hist, ds.censored_count() + hist->overflow);
        quantity = "rate_Hz";
        value = fit.value("rate");
        sigma = fit.uncertainty("rate");
        expected = expected_counts(*hist, fit.value("N0"), fit.value("tau"));
        bundle.document(fmt::format("fit_{:03}", i), fit_report_json(fit, "exponential", digest_histogram(*hist)));
      } else {
        const double width =
            options.bin_width_ms > 0.0 ? options.bin_width_ms * 1e-3 : default_bin_width(ds.acquisition.rf_delay);
        hist = rf_histogram(ds, width);
        const FitResult fit = fit_rf_histogram(*hist, ds.acquisition.rf_delay, ds.censored_count() + hist->overflow);
        const EfficiencyEstimate e = efficiency_from_fit(fit, ds.acquisition.rf_delay);
        quantity = "eps";
        value = e.value;
        sigma = e.uncertainty;
        if (std::isfinite(fit.value("tau"))) {
          expected = expected_counts(*hist, fit.value("N0"), fit.value("tau"), fit.value("N_RF"),
                                     ds.acquisition.rf_delay);
        }
        json doc = parse(fit_report_json(fit, "rf_histogram", digest_histogram(*hist)));
        doc["efficiency"] = {{"value", e.value}, {"uncertainty", e.uncertainty}, {"warnings", e.warnings}};
        bundle.document(fmt::format("fit_{:03}", i), doc.dump(2));
        for (const auto& w : e.warnings) {
          bundle.warn(fmt::format("{}: {}", name, w));
        }
      }
      summary.add_row({name, model, cell(ds.records.size()), cell(ds.censored_count()), quantity, cell(value),
                       cell(sigma)});
      if (hist) {
        Table ht;
        ht.title = fmt::format("histogram of {}", name);
        ht.columns = {{"bin_start_s", "left bin edge [s]"},
                      {"count", "switching events in the bin"},
                      {"expected", "fitted expected count (nan when unavailable)"}};
        svg::Series counts{"counts", {}, {}, {}, false, "#1f77b4"};
        svg::Series fitted{"fit", {}, {}, {}, true, "#d62728"};
        for (std::size_t k = 0; k < hist->size(); ++k) {
          const double mu = k < expected.size() ? expected[k] : kNaN;
          ht.add_row({cell(hist->edge(k)), cell(static_cast<long long>(hist->counts[k])), cell(mu)});
          counts.x.push_back(hist->edge(k) * 1e3);
          counts.y.push_back(static_cast<double>(hist->counts[k]));
          fitted.x.push_back(hist->edge(k) * 1e3);
          fitted.y.push_back(mu);
        }
        bundle.table(fmt::format("histogram_{:03}", i), ht);
        svg::LinePlot plot;
        plot.title = fmt::format("{} ({} fit)", name, model);
        plot.x = {model == "exponential" ? "accumulated hold time [ms]" : "time after ramp [ms]", false};
        plot.y = {"counts per bin", false};
        plot.series = {counts, fitted};
        bundle.plot(fmt::format("histogram_{:03}", i), plot.render());
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      bundle.failure(i, kNaN, fmt::format("{}: {}", name, e.what()));
    }
  }
  bundle.table("fit_summary", summary);
  return bundle.finish();
}

}  // namespace cbjj::cli
