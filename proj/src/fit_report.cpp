#include <cmath>
#include <cstring>

#include <fmt/format.h>
#include "json.hpp"

#include "cbjj/analysis.hpp"
#include "cbjj/random.hpp"

namespace cbjj {

namespace {

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::uint64_t fold(std::uint64_t h, std::uint64_t v) { return mix64(h ^ v); }

std::uint64_t bits(double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof u);
  return u;
}

}  // namespace

std::string fit_report_json(const FitResult& fit, std::string_view fit_name, std::uint64_t inputs_digest) {
  nlohmann::json doc;
  doc["fit"] = std::string(fit_name);
  auto params = nlohmann::json::array();
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    params.push_back({{"name", fit.names[i]},
                      {"value", number(fit.values[i])},
                      {"uncertainty", number(i < fit.uncertainties.size() ? fit.uncertainties[i] : NAN)}});
  }
  doc["parameters"] = params;
  auto cov = nlohmann::json::array();
  for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) {
      row.push_back(number(fit.covariance(r, c)));
    }
    cov.push_back(row);
  }
  doc["covariance"] = cov;
  doc["chi2_reduced"] = number(fit.chi2_reduced);
  doc["n_points"] = fit.n_points;
  doc["converged"] = fit.converged;
  doc["iterations"] = fit.iterations;
  doc["warnings"] = fit.warnings;
  doc["inputs_digest"] = fmt::format("{:016x}", inputs_digest);
  return doc.dump(2);
}

std::uint64_t digest_histogram(const Histogram& hist) {
  std::uint64_t h = fold(0x9d3c5f1e2a7b4c61ULL, bits(hist.bin_width));
  h = fold(h, bits(hist.origin));
  for (auto c : hist.counts) {
    h = fold(h, c);
  }
  h = fold(h, hist.underflow);
  return fold(h, hist.overflow);
}

std::uint64_t digest_values(std::span<const double> values) {
  std::uint64_t h = fold(0x51ed270b27a3c8f1ULL, values.size());
  for (double v : values) {
    h = fold(h, bits(v));
  }
  return h;
}

}  // namespace cbjj
