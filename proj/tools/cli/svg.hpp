#pragma once

#include <optional>
#include <string>
#include <vector>

namespace cbjj::cli::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> yerr;  // empty: no error bars
  bool line = false;         // polyline instead of markers
  std::string color = "#1f77b4";
};

struct Axis {
  std::string label;
  bool log = false;
};

/// Extra labels along the top edge at given primary-axis positions.
struct SecondaryAxis {
  std::string label;
  std::vector<double> positions;
  std::vector<std::string> labels;
};

/// Reference line across the plot at a fixed x (vertical) or y.
struct Marker {
  double value;
  std::string label;
  bool vertical = true;
};

struct LinePlot {
  std::string title;
  Axis x;
  Axis y;
  std::vector<Series> series;
  std::optional<SecondaryAxis> top;
  std::vector<Marker> markers;

  std::string render() const;
};

/// Cell map: values[row * xs.size() + col] in [0, 1], rows follow ys.
struct Heatmap {
  std::string title;
  Axis x;
  Axis y;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> values;
  std::string colorbar_label;
  std::vector<Series> overlays;

  std::string render() const;
};

}  // namespace cbjj::cli::svg
