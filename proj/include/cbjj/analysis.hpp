#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cbjj/errors.hpp"
#include "cbjj/escape.hpp"
#include "cbjj/junction.hpp"
#include "cbjj/protocol.hpp"

namespace cbjj {

// ---------------------------------------------------------------------------
// Histograms

/// Fixed-width histogram of switching times. Bin k covers
/// [origin + k width, origin + (k+1) width); the left edge belongs to the bin.
struct Histogram {
  double bin_width = 0.0;
  double origin = 0.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t underflow = 0;  // times before origin
  std::uint64_t overflow = 0;   // times past the last bin

  std::size_t size() const { return counts.size(); }
  double edge(std::size_t k) const { return origin + static_cast<double>(k) * bin_width; }
  std::uint64_t binned() const;
  /// Bin index holding time t, or -1 outside the range.
  std::ptrdiff_t bin_of(double t) const;
};

Histogram make_histogram(std::span<const double> times, double bin_width, double origin, std::size_t bins);

/// Which clock to histogram a dataset on.
enum class TimeAxis {
  Lifetime,  // raw lifetimes, as recorded
  HoldTime,  // accumulated hold time: dead ramp/reset segments removed
};

struct HistogramOptions {
  double bin_width = 0.0;  // 0: rf_delay / 70 when rf_delay > 0
  double range_end = 0.0;  // 0: cover every non-censored record
  TimeAxis axis = TimeAxis::Lifetime;
};

/// Bins the non-censored records; censored records never enter.
Histogram histogram_from_dataset(const SwitchingDataset& dataset, const HistogramOptions& options = {});

/// Default bin width for an RF delay (70 bins up to the pulse).
inline double default_bin_width(double rf_delay) { return rf_delay / 70.0; }

// ---------------------------------------------------------------------------
// Fit results

struct FitResult {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> uncertainties;
  Eigen::MatrixXd covariance;
  double chi2_reduced = 0.0;
  std::size_t n_points = 0;
  bool converged = false;
  int iterations = 0;
  Warnings warnings;

  std::size_t index(std::string_view name) const;
  double value(std::string_view name) const { return values[index(name)]; }
  double uncertainty(std::string_view name) const { return uncertainties[index(name)]; }
  bool has_warning(std::string_view fragment) const;
};

// ---------------------------------------------------------------------------
// Histogram models
//
// Per-bin switching counts for a bin of width dt starting at t:
//   thermal:  (N0 dt / tau) exp(-t / tau)
//   with RF:  thermal - (N_RF dt / tau) exp(-(t - t_rf) / tau) theta(t - t_rf)
//             + N_RF [theta(t - t_rf) - theta(t - t_rf - dt)],   theta(0) = 1.

double exponential_model(double t, double n0, double tau, double dt);
double rf_model(double t, double n0, double tau, double n_rf, double t_rf, double dt);

/// Expected counts in every histogram bin: the models above averaged over
/// each bin, which is what the likelihood compares with.
std::vector<double> expected_counts(const Histogram& hist, double n0, double tau, double n_rf = 0.0,
                                    double t_rf = -1.0);

// ---------------------------------------------------------------------------
// Fits

/// Poisson maximum-likelihood fit of the thermal model. Parameters: N0, tau
/// plus derived rate = 1/tau.
FitResult fit_exponential(const Histogram& hist);

/// Same fit with `tail_count` records known to survive past the last bin
/// (censored or beyond the range). They add one Poisson cell with expectation
/// N0 exp(-t_end / tau), which pins tau when few records switch in range.
FitResult fit_exponential(const Histogram& hist, std::uint64_t tail_count);

/// Joint Poisson fit of the thermal + RF model with the pulse at t_rf.
/// Parameters N0, tau, N_RF (N_RF >= 0). Raises the warning
/// "tau unconstrained" when too few counts fall outside the RF bin.
FitResult fit_rf_histogram(const Histogram& hist, double t_rf);

/// Same, with tail_count records known to survive past the last bin
/// (overflow plus censored) entered as one extra Poisson cell. This pins N0.
FitResult fit_rf_histogram(const Histogram& hist, double t_rf, std::uint64_t tail_count);

struct EfficiencyEstimate {
  double value = 0.0;
  double uncertainty = 0.0;
  double lower = 0.0;  // interval bounds (Wilson for counts, +-1 sigma for fits)
  double upper = 0.0;
  Warnings warnings;
};

/// eps = N_RF / (N0 exp(-t_rf / tau)) with covariance propagation. Values in
/// (1, 1 + 3 sigma] are clamped to 1 with a warning; larger values throw.
EfficiencyEstimate efficiency_from_fit(const FitResult& fit, double t_rf);

/// Binomial estimate with a 68.27% Wilson score interval.
EfficiencyEstimate efficiency_from_counts(std::size_t switches, std::size_t attempts);

/// Low-dark-count estimator: RF-window switches over the cycles in which the
/// junction was still superconducting when the pulse arrived.
EfficiencyEstimate efficiency_low_dark(const SwitchingDataset& dataset);

/// Weighted least squares on log(rate) with free T and I_c; C and R from the prior.
/// Parameters: T (K), I_c (A).
FitResult fit_kramers(const RateCurve& curve, const JunctionParams& prior);

struct PulseWidthPoint {
  double width;  // s
  double efficiency;
  double uncertainty;
};

/// One-parameter weighted fit of eps(width) = 1 - (1 - eps_j)^(width / tau_j).
FitResult fit_pulse_width(std::span<const PulseWidthPoint> points, double relaxation_time);

/// Weighted logistic fit eps(x) = 1 / (1 + exp(-(ln x - ln x50) / s)).
/// Parameters: x50, s. Used to locate the eps = 0.5 working point.
FitResult fit_logistic_crossing(std::span<const double> x, std::span<const double> efficiency,
                                std::span<const double> uncertainty);

/// Structured report for one fit: parameters, uncertainties, covariance,
/// chi2, warnings and a digest of the inputs.
std::string fit_report_json(const FitResult& fit, std::string_view fit_name, std::uint64_t inputs_digest);

std::uint64_t digest_histogram(const Histogram& hist);
std::uint64_t digest_values(std::span<const double> values);

}  // namespace cbjj
