#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include <fmt/format.h>

#include "cbjj/analysis.hpp"
#include "cbjj/constants.hpp"
#include "cbjj/optimize.hpp"

namespace cbjj {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Poisson deviance residual: sum of squares is twice the negative log
// likelihood up to a constant, so least squares on these is the MLE.
double deviance_residual(double observed, double expected) {
  if (!(expected > 0.0)) {
    return observed > 0.0 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
  }
  double d = expected - observed;
  if (observed > 0.0) {
    d += observed * std::log(observed / expected);
  }
  const double mag = std::sqrt(2.0 * std::max(d, 0.0));
  return observed >= expected ? mag : -mag;
}

struct PoissonProblem {
  const Histogram* hist;
  // natural parameters -> expected counts per bin
  std::function<std::vector<double>(const Eigen::VectorXd&)> model;
};

// Inverse Fisher information of the Poisson likelihood in natural parameters.
Eigen::MatrixXd poisson_covariance(const PoissonProblem& p, const Eigen::VectorXd& theta) {
  const auto mu = p.model(theta);
  const Eigen::Index n = theta.size();
  Eigen::MatrixXd grad(static_cast<Eigen::Index>(mu.size()), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(std::abs(theta[j]), 1e-3);
    Eigen::VectorXd tp = theta, tm = theta;
    tp[j] += h;
    tm[j] -= h;
    const auto up = p.model(tp);
    const auto dn = p.model(tm);
    for (std::size_t k = 0; k < mu.size(); ++k) {
      grad(static_cast<Eigen::Index>(k), j) = (up[k] - dn[k]) / (2.0 * h);
    }
  }
  Eigen::MatrixXd fisher = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < mu.size(); ++k) {
    if (mu[k] > 0.0) {
      const Eigen::RowVectorXd g = grad.row(static_cast<Eigen::Index>(k));
      fisher += g.transpose() * g / mu[k];
    }
  }
  return fisher.completeOrthogonalDecomposition().pseudoInverse();
}

void fill_uncertainties(FitResult& fit) {
  fit.uncertainties.resize(fit.values.size());
  for (std::size_t i = 0; i < fit.values.size(); ++i) {
    const double v = fit.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    fit.uncertainties[i] = v >= 0.0 ? std::sqrt(v) : std::numeric_limits<double>::quiet_NaN();
  }
}

std::size_t nonempty_bins(const Histogram& h) {
  return static_cast<std::size_t>(std::count_if(h.counts.begin(), h.counts.end(), [](auto c) { return c > 0; }));
}

// Mean of binned times measured from the histogram origin, with a floor of one bin.
double mean_time_guess(const Histogram& h, std::ptrdiff_t skip_bin = -1) {
  double sum = 0.0;
  double n = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (static_cast<std::ptrdiff_t>(k) == skip_bin) {
      continue;
    }
    const double c = static_cast<double>(h.counts[k]);
    sum += c * (static_cast<double>(k) + 0.5) * h.bin_width;
    n += c;
  }
  return n > 0.0 ? std::max(sum / n, h.bin_width) : h.bin_width * static_cast<double>(h.size());
}

double n0_guess(double counts, double tau, const Histogram& h) {
  const double span = h.bin_width * static_cast<double>(h.size());
  const double frac = -std::expm1(-span / tau) * std::exp(-h.origin / tau);
  return std::max(counts, 1.0) / std::max(frac, 1e-12);
}

}  // namespace

std::size_t FitResult::index(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) {
      return i;
    }
  }
  throw DomainError(fmt::format("fit has no parameter '{}'", name));
}

bool FitResult::has_warning(std::string_view fragment) const {
  return std::any_of(warnings.begin(), warnings.end(),
                     [&](const std::string& w) { return w.find(fragment) != std::string::npos; });
}

double exponential_model(double t, double n0, double tau, double dt) { return n0 * dt / tau * std::exp(-t / tau); }

double rf_model(double t, double n0, double tau, double n_rf, double t_rf, double dt) {
  double v = exponential_model(t, n0, tau, dt);
  if (t >= t_rf) {
    v -= n_rf * dt / tau * std::exp(-(t - t_rf) / tau);
    if (t < t_rf + dt) {
      v += n_rf;
    }
  }
  return v;
}

std::vector<double> expected_counts(const Histogram& hist, double n0, double tau, double n_rf, double t_rf) {
  std::vector<double> mu(hist.size());
  const double w = hist.bin_width;
  const double bin_fraction = -std::expm1(-w / tau);
  const std::ptrdiff_t rf_bin = (n_rf != 0.0 && t_rf >= hist.origin) ? hist.bin_of(t_rf) : -1;
  for (std::size_t k = 0; k < hist.size(); ++k) {
    const double a = hist.edge(k);
    double m = n0 * std::exp(-a / tau) * bin_fraction;
    if (rf_bin >= 0 && static_cast<std::ptrdiff_t>(k) >= rf_bin) {
      m -= n_rf * std::exp(-(a - t_rf) / tau) * bin_fraction;
      if (static_cast<std::ptrdiff_t>(k) == rf_bin) {
        m += n_rf;
      }
    }
    mu[k] = m;
  }
  return mu;
}

namespace {

FitResult exponential_fit(const Histogram& hist, std::optional<std::uint64_t> tail) {
  if (nonempty_bins(hist) < 5) {
    throw DomainError("degenerate histogram: an exponential fit needs at least 5 non-empty bins");
  }
  const double t_end = hist.edge(hist.size());
  const double tail_obs = tail ? static_cast<double>(*tail) : 0.0;
  const double total = static_cast<double>(hist.binned());

  // Expected counts per bin, followed by the tail cell when it is used.
  auto model = [&hist, &tail, t_end](double n0, double tau) {
    auto mu = expected_counts(hist, n0, tau);
    if (tail) {
      mu.push_back(n0 * std::exp(-t_end / tau));
    }
    return mu;
  };
  auto observed = [&hist, &tail, tail_obs](std::size_t k) {
    return k < hist.size() ? static_cast<double>(hist.counts[k]) : tail_obs;
  };
  PoissonProblem problem{&hist, [&](const Eigen::VectorXd& p) { return model(p[0], p[1]); }};
  auto residuals = [&](const Eigen::VectorXd& x) {
    const auto mu = model(std::exp(x[0]), std::exp(x[1]));
    Eigen::VectorXd r(static_cast<Eigen::Index>(mu.size()));
    for (std::size_t k = 0; k < mu.size(); ++k) {
      r[static_cast<Eigen::Index>(k)] = deviance_residual(observed(k), mu[k]);
    }
    return r;
  };

  double tau0 = mean_time_guess(hist);
  double n00 = n0_guess(total, tau0, hist);
  if (tail) {
    // Censored-exponential estimate: events over total exposure.
    double exposure = tail_obs * (t_end - hist.origin);
    for (std::size_t k = 0; k < hist.size(); ++k) {
      exposure += static_cast<double>(hist.counts[k]) * (static_cast<double>(k) + 0.5) * hist.bin_width;
    }
    tau0 = std::max(exposure / std::max(total, 1.0), hist.bin_width);
    n00 = (total + tail_obs) * std::exp(hist.origin / tau0);
  }
  Eigen::VectorXd x0(2);
  x0 << std::log(n00), std::log(tau0);
  const LmResult lm = levenberg_marquardt(residuals, x0);
  if (!lm.converged) {
    throw NumericalError("exponential histogram fit did not converge: " + lm.message);
  }
  const double n0 = std::exp(lm.x[0]);
  const double tau = std::exp(lm.x[1]);
  if (!tail && tau > 100.0 * (t_end - hist.origin)) {
    throw NumericalError("tau unconstrained: the histogram is too flat to fix the decay time");
  }

  FitResult fit;
  fit.names = {"N0", "tau", "rate"};
  fit.values = {n0, tau, 1.0 / tau};
  Eigen::VectorXd natural(2);
  natural << n0, tau;
  const Eigen::MatrixXd cov2 = poisson_covariance(problem, natural);
  Eigen::MatrixXd jac(3, 2);
  jac << 1.0, 0.0, 0.0, 1.0, 0.0, -1.0 / (tau * tau);
  fit.covariance = jac * cov2 * jac.transpose();
  fill_uncertainties(fit);
  const auto mu = model(n0, tau);
  double chi2 = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const double r = deviance_residual(observed(k), mu[k]);
    chi2 += r * r;
  }
  fit.n_points = mu.size();
  fit.chi2_reduced = chi2 / std::max<double>(1.0, static_cast<double>(mu.size()) - 2.0);
  fit.converged = true;
  fit.iterations = lm.iterations;
  return fit;
}

// Histogram fits run on a clock measured in bins, so the optimizer sees the
// same numbers whatever time unit the caller uses.
Histogram in_bin_units(const Histogram& hist) {
  if (!(hist.bin_width > 0.0)) {
    throw DomainError("histogram bin width must be positive");
  }
  Histogram u = hist;
  u.origin = hist.origin / hist.bin_width;
  u.bin_width = 1.0;
  return u;
}

// Scales time-like parameters back: `power` is each parameter's exponent of time.
FitResult rescale_time(FitResult fit, double unit, const std::vector<int>& power) {
  const auto n = static_cast<Eigen::Index>(power.size());
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d[i] = std::pow(unit, power[static_cast<std::size_t>(i)]);
    fit.values[static_cast<std::size_t>(i)] *= d[i];
  }
  fit.covariance = d.asDiagonal() * fit.covariance * d.asDiagonal();
  fill_uncertainties(fit);
  return fit;
}

}  // namespace

FitResult fit_exponential(const Histogram& hist) {
  return rescale_time(exponential_fit(in_bin_units(hist), std::nullopt), hist.bin_width, {0, 1, -1});
}

FitResult fit_exponential(const Histogram& hist, std::uint64_t tail_count) {
  return rescale_time(exponential_fit(in_bin_units(hist), tail_count), hist.bin_width, {0, 1, -1});
}

namespace {

FitResult rf_fit(const Histogram& hist, double t_rf, std::optional<std::uint64_t> tail) {
  const double pos = (t_rf - hist.origin) / hist.bin_width;
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) > 1e-6 || nearest < 0.0 || nearest >= static_cast<double>(hist.size())) {
    throw DomainError("RF arrival time is not aligned with a bin edge inside the histogram");
  }
  const auto rf_bin = static_cast<std::size_t>(nearest);
  const double rf_counts = static_cast<double>(hist.counts[rf_bin]);
  const double outside = static_cast<double>(hist.binned()) - rf_counts;

  FitResult fit;
  fit.names = {"N0", "tau", "N_RF"};
  fit.n_points = hist.size();

  if (outside < 10.0) {
    // No thermal background to speak of: everything sits in the RF bin.
    fit.values = {outside, kInf, rf_counts};
    fit.covariance = Eigen::MatrixXd::Zero(3, 3);
    fit.covariance(0, 0) = outside;
    fit.covariance(1, 1) = kInf;
    fit.covariance(2, 2) = rf_counts;
    fill_uncertainties(fit);
    fit.converged = true;
    fit.warnings.emplace_back("tau unconstrained: fewer than 10 counts outside the RF bin");
    return fit;
  }
  if (nonempty_bins(hist) < 5) {
    throw DomainError("degenerate histogram: the RF fit needs at least 5 non-empty bins");
  }

  // Expected counts per bin, followed by the survivors past the last bin when
  // the tail is supplied.
  const double t_end = hist.edge(hist.size());
  const double tail_obs = tail ? static_cast<double>(*tail) : 0.0;
  auto model = [&hist, &tail, t_rf, t_end](double n0, double tau, double n_rf) {
    auto mu = expected_counts(hist, n0, tau, n_rf, t_rf);
    if (tail) {
      mu.push_back(n0 * std::exp(-t_end / tau) - n_rf * std::exp(-(t_end - t_rf) / tau));
    }
    return mu;
  };
  auto observed = [&hist, tail_obs](std::size_t k) {
    return k < hist.size() ? static_cast<double>(hist.counts[k]) : tail_obs;
  };
  auto deviance = [&](const std::vector<double>& mu) {
    double c = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
      const double r = deviance_residual(observed(k), mu[k]);
      c += r * r;
    }
    return c;
  };
  PoissonProblem problem{&hist, [&](const Eigen::VectorXd& p) { return model(p[0], p[1], p[2]); }};
  auto residuals = [&](const Eigen::VectorXd& x) {
    const auto mu = model(std::exp(x[0]), std::exp(x[1]), x[2]);
    Eigen::VectorXd r(static_cast<Eigen::Index>(mu.size()));
    for (std::size_t k = 0; k < mu.size(); ++k) {
      r[static_cast<Eigen::Index>(k)] = deviance_residual(observed(k), mu[k]);
    }
    return r;
  };

  const double tau0 = mean_time_guess(hist, static_cast<std::ptrdiff_t>(rf_bin));
  double neighbours = 0.0;
  int n_neigh = 0;
  for (std::ptrdiff_t d : {-1, 1}) {
    const auto k = static_cast<std::ptrdiff_t>(rf_bin) + d;
    if (k >= 0 && k < static_cast<std::ptrdiff_t>(hist.size())) {
      neighbours += static_cast<double>(hist.counts[static_cast<std::size_t>(k)]);
      ++n_neigh;
    }
  }
  const double excess = std::max(rf_counts - (n_neigh > 0 ? neighbours / n_neigh : 0.0), 0.0);

  // N0 from the bins before the pulse when there are any; the RF population
  // cannot exceed the survivors at t_rf.
  double before = 0.0;
  for (std::size_t k = 0; k < rf_bin; ++k) {
    before += static_cast<double>(hist.counts[k]);
  }
  const double span_before = t_rf - hist.origin;
  double n0_start = n0_guess(outside + rf_counts - excess, tau0, hist);
  if (before >= 10.0 && span_before > 0.0) {
    n0_start = before / -std::expm1(-span_before / tau0) * std::exp(-hist.origin / tau0);
  }
  if (tail) {
    // Every record is either binned or in the tail.
    n0_start = (outside + rf_counts + tail_obs) * std::exp(hist.origin / tau0);
  }
  const double survivors = n0_start * std::exp(-t_rf / tau0);
  const double n_rf_start = std::min(excess, 0.9 * survivors);

  Eigen::VectorXd x0(3);
  x0 << std::log(n0_start), std::log(tau0), n_rf_start;
  if (!residuals(x0).allFinite()) {
    x0[2] = 0.0;
  }
  LmOptions opts;
  opts.lower = Eigen::VectorXd::Constant(3, -kInf);
  opts.upper = Eigen::VectorXd::Constant(3, kInf);
  opts.lower[2] = 0.0;
  const LmResult lm = levenberg_marquardt(residuals, x0, opts);
  if (!lm.converged) {
    throw NumericalError("RF histogram fit did not converge: " + lm.message);
  }

  const double n0 = std::exp(lm.x[0]);
  const double tau = std::exp(lm.x[1]);
  const double n_rf = lm.x[2];
  fit.values = {n0, tau, n_rf};
  Eigen::VectorXd natural(3);
  natural << n0, tau, n_rf;
  fit.covariance = poisson_covariance(problem, natural);
  fill_uncertainties(fit);
  const auto mu = model(n0, tau, n_rf);
  fit.n_points = mu.size();
  fit.chi2_reduced = deviance(mu) / std::max<double>(1.0, static_cast<double>(mu.size()) - 3.0);
  fit.converged = true;
  fit.iterations = lm.iterations;
  if (n_rf == 0.0) {
    fit.warnings.emplace_back("N_RF at its lower bound 0");
  }
  if (fit.uncertainties[1] > tau) {
    fit.warnings.emplace_back("tau unconstrained: relative uncertainty above 100%");
  }
  return fit;
}

}  // namespace

FitResult fit_rf_histogram(const Histogram& hist, double t_rf) {
  return rescale_time(rf_fit(in_bin_units(hist), t_rf / hist.bin_width, std::nullopt), hist.bin_width, {0, 1, 0});
}

FitResult fit_rf_histogram(const Histogram& hist, double t_rf, std::uint64_t tail_count) {
  return rescale_time(rf_fit(in_bin_units(hist), t_rf / hist.bin_width, tail_count), hist.bin_width, {0, 1, 0});
}

FitResult fit_kramers(const RateCurve& curve, const JunctionParams& prior) {
  const auto& pts = curve.points();
  if (pts.size() < 6) {
    throw DomainError("insufficient span: a Kramers fit needs at least 6 points");
  }
  double rmin = kInf, rmax = 0.0;
  for (const auto& p : pts) {
    if (!(p.rate > 0.0 && p.rate_uncertainty > 0.0)) {
      throw DomainError("Kramers fit needs positive rates with positive uncertainties");
    }
    rmin = std::min(rmin, p.rate);
    rmax = std::max(rmax, p.rate);
  }
  if (rmax / rmin < 100.0) {
    throw DomainError("insufficient span: rates must cover at least two decades");
  }
  const double max_bias = pts.back().bias;
  const double ic_scale = prior.critical_current();

  auto make_params = [&](double ic) { return JunctionParams(ic, prior.capacitance(), prior.shunt_resistance()); };

  // Bootstrap: for trial I_c, log(rate / (omega_p / 2 pi)) is linear in dU with
  // slope -1/kT (prefactor absorbed in the intercept). Keep the I_c whose line fits best.
  double best_chi2 = kInf, best_ic = 0.0, best_t = 0.0;
  for (int s = 0; s <= 400; ++s) {
    const double ic = max_bias * (1.0 + 1e-4 * std::pow(2000.0, s / 400.0));
    const JunctionParams jp = make_params(ic);
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> xs, ys, ws;
    for (const auto& p : pts) {
      const double x = barrier_height(jp, p.bias);
      const double y = std::log(p.rate / (plasma_frequency(jp, p.bias) / (2.0 * constants::pi)));
      const double w = std::pow(p.rate / p.rate_uncertainty, 2);
      sw += w; sx += w * x; sy += w * y; sxx += w * x * x; sxy += w * x * y;
      xs.push_back(x); ys.push_back(y); ws.push_back(w);
    }
    const double det = sw * sxx - sx * sx;
    if (!(std::abs(det) > 0.0)) {
      continue;
    }
    const double slope = (sw * sxy - sx * sy) / det;
    const double icpt = (sy - slope * sx) / sw;
    if (!(slope < 0.0)) {
      continue;
    }
    double chi2 = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      chi2 += ws[k] * std::pow(ys[k] - icpt - slope * xs[k], 2);
    }
    if (chi2 < best_chi2) {
      best_chi2 = chi2;
      best_ic = ic;
      best_t = -1.0 / (slope * constants::boltzmann);
    }
  }
  if (!(best_ic > 0.0)) {
    throw NumericalError("Kramers fit bootstrap failed: no I_c gives a decreasing log-rate line");
  }

  auto residuals = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(pts.size()));
    const double t = std::exp(x[0]);
    const double ic = x[1] * ic_scale;
    if (!(ic > max_bias)) {
      r.setConstant(std::numeric_limits<double>::quiet_NaN());
      return r;
    }
    if (!(t > 0.0) || !std::isfinite(t)) {
      r.setConstant(std::numeric_limits<double>::quiet_NaN());
      return r;
    }
    const JunctionParams jp = make_params(ic);
    const ThermalEnvironment env(t);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double model = kramers_log_rate(jp, env, pts[k].bias);
      r[static_cast<Eigen::Index>(k)] = (model - std::log(pts[k].rate)) / (pts[k].rate_uncertainty / pts[k].rate);
    }
    return r;
  };
  Eigen::VectorXd x0(2);
  x0 << std::log(best_t), best_ic / ic_scale;
  const LmResult lm = levenberg_marquardt(residuals, x0);
  if (!lm.converged) {
    throw NumericalError("Kramers fit did not converge: " + lm.message);
  }

  FitResult fit;
  fit.names = {"T", "I_c"};
  const double t = std::exp(lm.x[0]);
  const double ic = lm.x[1] * ic_scale;
  fit.values = {t, ic};
  Eigen::MatrixXd jac(2, 2);
  jac << t, 0.0, 0.0, ic_scale;
  fit.covariance = jac * gauss_newton_covariance(lm.jacobian) * jac.transpose();
  fill_uncertainties(fit);
  fit.n_points = pts.size();
  fit.chi2_reduced = 2.0 * lm.cost / std::max<double>(1.0, static_cast<double>(pts.size()) - 2.0);
  fit.converged = true;
  fit.iterations = lm.iterations;
  const ThermalEnvironment env(t);
  const JunctionParams jp = make_params(ic);
  for (const auto& p : pts) {
    if (below_crossover(jp, env, p.bias)) {
      fit.warnings.emplace_back("fitted temperature below the crossover temperature for part of the curve");
      break;
    }
  }
  return fit;
}

FitResult fit_pulse_width(std::span<const PulseWidthPoint> points, double relaxation_time) {
  if (points.size() < 2) {
    throw DomainError("pulse-width fit needs at least 2 points");
  }
  if (!(relaxation_time > 0.0)) {
    throw DomainError("relaxation time must be positive");
  }
  FitResult fit;
  double wmin = kInf, wmax = 0.0;
  std::vector<double> guesses;
  bool all_saturated = true;
  for (const auto& p : points) {
    if (!(p.width > 0.0) || !(p.uncertainty > 0.0) || !(p.efficiency >= 0.0 && p.efficiency <= 1.0)) {
      throw DomainError("pulse-width points need positive width, positive uncertainty and efficiency in [0, 1]");
    }
    wmin = std::min(wmin, p.width);
    wmax = std::max(wmax, p.width);
    all_saturated = all_saturated && p.efficiency > 0.95;
    const double e = std::clamp(p.efficiency, 1e-9, 1.0 - 1e-9);
    guesses.push_back(single_trial_probability(e, p.width, relaxation_time));
  }
  if (points.size() < 4) {
    fit.warnings.emplace_back("fewer than 4 points");
  }
  if (wmax / wmin < 10.0) {
    fit.warnings.emplace_back("widths span less than one decade");
  }
  std::nth_element(guesses.begin(), guesses.begin() + guesses.size() / 2, guesses.end());
  const double eps0 = guesses[guesses.size() / 2];

  auto residuals = [&](const Eigen::VectorXd& x) {
    const double eps_j = std::exp(x[0]);
    Eigen::VectorXd r(static_cast<Eigen::Index>(points.size()));
    for (std::size_t k = 0; k < points.size(); ++k) {
      const double model = eps_j >= 1.0 ? 1.0 : poisson_switch_probability(eps_j, points[k].width, relaxation_time);
      r[static_cast<Eigen::Index>(k)] = (model - points[k].efficiency) / points[k].uncertainty;
    }
    return r;
  };
  Eigen::VectorXd x0(1);
  x0 << std::log(eps0);
  LmOptions opts;
  opts.upper = Eigen::VectorXd::Constant(1, 0.0);
  opts.lower = Eigen::VectorXd::Constant(1, -kInf);
  const LmResult lm = levenberg_marquardt(residuals, x0, opts);
  if (!lm.converged) {
    throw NumericalError("pulse-width fit did not converge: " + lm.message);
  }
  const double eps_j = std::exp(lm.x[0]);
  fit.names = {"eps_j"};
  fit.values = {eps_j};
  fit.covariance = eps_j * eps_j * gauss_newton_covariance(lm.jacobian);
  fill_uncertainties(fit);
  fit.n_points = points.size();
  fit.chi2_reduced = points.size() > 1 ? 2.0 * lm.cost / static_cast<double>(points.size() - 1) : 0.0;
  fit.converged = true;
  fit.iterations = lm.iterations;
  if (all_saturated || !(fit.uncertainties[0] < 0.5 * eps_j)) {
    fit.warnings.emplace_back("ill-conditioned: efficiencies saturated, eps_j poorly determined");
  }
  return fit;
}

FitResult fit_logistic_crossing(std::span<const double> x, std::span<const double> efficiency,
                                std::span<const double> uncertainty) {
  if (x.size() != efficiency.size() || x.size() != uncertainty.size()) {
    throw DomainError("logistic fit inputs differ in length");
  }
  if (x.size() < 3) {
    throw DomainError("logistic fit needs at least 3 points");
  }
  for (double v : x) {
    if (!(v > 0.0)) {
      throw DomainError("logistic fit abscissae must be positive");
    }
  }
  // Initial crossing: first bracket of 0.5, interpolated in log x.
  double x50 = x[x.size() / 2];
  for (std::size_t k = 1; k < x.size(); ++k) {
    const double e0 = efficiency[k - 1] - 0.5;
    const double e1 = efficiency[k] - 0.5;
    if ((e0 <= 0.0 && e1 >= 0.0) || (e0 >= 0.0 && e1 <= 0.0)) {
      const double f = e1 != e0 ? -e0 / (e1 - e0) : 0.5;
      x50 = std::exp(std::log(x[k - 1]) + f * (std::log(x[k]) - std::log(x[k - 1])));
      break;
    }
  }
  const double direction = efficiency.back() >= efficiency.front() ? 1.0 : -1.0;
  auto residuals = [&](const Eigen::VectorXd& p) {
    const double s = direction * std::exp(p[1]);
    Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double model = 1.0 / (1.0 + std::exp(-(std::log(x[k]) - p[0]) / s));
      r[static_cast<Eigen::Index>(k)] = (model - efficiency[k]) / std::max(uncertainty[k], 1e-6);
    }
    return r;
  };
  Eigen::VectorXd p0(2);
  p0 << std::log(x50), std::log(0.2);
  const LmResult lm = levenberg_marquardt(residuals, p0);
  if (!lm.converged) {
    throw NumericalError("logistic crossing fit did not converge: " + lm.message);
  }
  FitResult fit;
  fit.names = {"x50", "s"};
  const double xc = std::exp(lm.x[0]);
  const double s = direction * std::exp(lm.x[1]);
  fit.values = {xc, s};
  Eigen::MatrixXd jac(2, 2);
  jac << xc, 0.0, 0.0, s;
  fit.covariance = jac * gauss_newton_covariance(lm.jacobian) * jac.transpose();
  fill_uncertainties(fit);
  fit.n_points = x.size();
  fit.chi2_reduced = 2.0 * lm.cost / std::max<double>(1.0, static_cast<double>(x.size()) - 2.0);
  fit.converged = true;
  fit.iterations = lm.iterations;
  return fit;
}

}  // namespace cbjj
