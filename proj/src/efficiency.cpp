#include <cmath>

#include <fmt/format.h>

#include "cbjj/analysis.hpp"

namespace cbjj {

EfficiencyEstimate efficiency_from_fit(const FitResult& fit, double t_rf) {
  const double n0 = fit.value("N0");
  const double tau = fit.value("tau");
  const double n_rf = fit.value("N_RF");
  if (!std::isfinite(tau) || !(n0 > 0.0) || !(tau > 0.0)) {
    throw NumericalError("invalid fit: efficiency needs finite positive N0 and tau");
  }
  const double survivors = n0 * std::exp(-t_rf / tau);
  const double eps = n_rf / survivors;

  const std::size_t i0 = fit.index("N0");
  const std::size_t it = fit.index("tau");
  const std::size_t ir = fit.index("N_RF");
  Eigen::Vector3d grad(-eps / n0, -eps * t_rf / (tau * tau), 1.0 / survivors);
  Eigen::Matrix3d cov;
  const std::size_t idx[3] = {i0, it, ir};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      cov(a, b) = fit.covariance(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]));
    }
  }
  const double var = grad.dot(cov * grad);

  EfficiencyEstimate est;
  est.value = eps;
  est.uncertainty = var > 0.0 ? std::sqrt(var) : 0.0;
  if (eps > 1.0) {
    if (eps <= 1.0 + 3.0 * est.uncertainty) {
      est.warnings.push_back(fmt::format("efficiency {:.4g} above 1 within 3 sigma, clamped to 1", eps));
      est.value = 1.0;
    } else {
      throw NumericalError(fmt::format("fitted efficiency {:.4g} +- {:.2g} exceeds 1 by more than 3 sigma", eps,
                                       est.uncertainty));
    }
  }
  est.lower = std::max(0.0, est.value - est.uncertainty);
  est.upper = std::min(1.0, est.value + est.uncertainty);
  for (const auto& w : fit.warnings) {
    est.warnings.push_back(w);
  }
  return est;
}

EfficiencyEstimate efficiency_from_counts(std::size_t switches, std::size_t attempts) {
  if (attempts == 0) {
    throw DomainError("efficiency needs at least one attempt");
  }
  if (switches > attempts) {
    throw DomainError("more switches than attempts");
  }
  const double n = static_cast<double>(attempts);
  const double p = static_cast<double>(switches) / n;
  constexpr double z = 1.0;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n));
  EfficiencyEstimate est;
  est.value = p;
  est.uncertainty = std::sqrt(p * (1.0 - p) / n);
  est.lower = std::max(0.0, centre - half);
  est.upper = std::min(1.0, centre + half);
  return est;
}

EfficiencyEstimate efficiency_low_dark(const SwitchingDataset& dataset) {
  // A cycle is an RF attempt only if the junction was still superconducting
  // when the pulse arrived.
  std::size_t rf = 0;
  std::size_t attempts = 0;
  for (const auto& r : dataset.records) {
    rf += r.switched_in_rf_window ? 1 : 0;
    attempts += r.cycle_index + (dataset.phase(r) == SwitchPhase::BeforePulse ? 0 : 1);
  }
  if (attempts == 0) {
    throw DomainError("dataset holds no RF attempts");
  }
  return efficiency_from_counts(rf, attempts);
}

}  // namespace cbjj
