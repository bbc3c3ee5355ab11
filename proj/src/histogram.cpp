#include <algorithm>
#include <cmath>
#include <numeric>

#include "cbjj/analysis.hpp"

namespace cbjj {

std::uint64_t Histogram::binned() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

std::ptrdiff_t Histogram::bin_of(double t) const {
  // The small offset keeps times that sit on an edge (up to rounding) in the
  // bin to the right, matching theta(0) = 1.
  const double x = (t - origin) / bin_width + 1e-9;
  if (x < 0.0) {
    return -1;
  }
  const double k = std::floor(x);
  if (k >= static_cast<double>(counts.size())) {
    return -1;
  }
  return static_cast<std::ptrdiff_t>(k);
}

Histogram make_histogram(std::span<const double> times, double bin_width, double origin, std::size_t bins) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw DomainError("histogram bin width must be positive");
  }
  if (bins == 0) {
    throw DomainError("histogram needs at least one bin");
  }
  Histogram h;
  h.bin_width = bin_width;
  h.origin = origin;
  h.counts.assign(bins, 0);
  for (double t : times) {
    const auto k = h.bin_of(t);
    if (k >= 0) {
      ++h.counts[static_cast<std::size_t>(k)];
    } else if (t < origin) {
      ++h.underflow;
    } else {
      ++h.overflow;
    }
  }
  return h;
}

Histogram histogram_from_dataset(const SwitchingDataset& dataset, const HistogramOptions& options) {
  double width = options.bin_width;
  if (width <= 0.0) {
    if (!(dataset.acquisition.rf_delay > 0.0)) {
      throw DomainError("no bin width given and the dataset has no RF delay to derive one");
    }
    width = default_bin_width(dataset.acquisition.rf_delay);
  }

  std::vector<double> times;
  times.reserve(dataset.records.size());
  for (const auto& r : dataset.records) {
    if (r.censored) {
      continue;
    }
    times.push_back(options.axis == TimeAxis::Lifetime ? r.lifetime : dataset.hold_time(r));
  }

  double end = options.range_end;
  if (end <= 0.0) {
    end = times.empty() ? width : *std::max_element(times.begin(), times.end()) + width;
  }
  const auto bins = static_cast<std::size_t>(std::max(1.0, std::ceil(end / width - 1e-9)));
  return make_histogram(times, width, 0.0, bins);
}

}  // namespace cbjj
