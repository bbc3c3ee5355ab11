#include "cli/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "cli/config.hpp"

namespace cbjj::cli::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 78.0;
constexpr double kRight = 24.0;
constexpr double kTop = 56.0;
constexpr double kBottom = 56.0;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) { return fmt::format("{:.2f}", v); }

struct Scale {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;
  double pix_lo = 0.0;
  double pix_hi = 1.0;

  double t(double v) const { return log ? std::log10(v) : v; }
  double operator()(double v) const {
    const double f = (t(v) - t(lo)) / (t(hi) - t(lo));
    return pix_lo + f * (pix_hi - pix_lo);
  }
};

Scale make_scale(std::vector<double> values, bool log, double pix_lo, double pix_hi) {
  values.erase(std::remove_if(values.begin(), values.end(),
                              [log](double v) { return !std::isfinite(v) || (log && v <= 0.0); }),
               values.end());
  Scale s{1.0, 10.0, log, pix_lo, pix_hi};
  if (values.empty()) {
    return s;
  }
  auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  double lo = *mn, hi = *mx;
  if (log) {
    if (hi / lo < 1.001) {
      lo /= 2.0;
      hi *= 2.0;
    }
    const double pad = std::pow(hi / lo, 0.04);
    lo /= pad;
    hi *= pad;
  } else {
    if (hi - lo <= 1e-300 * std::max(1.0, std::abs(hi))) {
      const double d = std::abs(hi) > 0.0 ? 0.1 * std::abs(hi) : 1.0;
      lo -= d;
      hi += d;
    }
    const double pad = 0.04 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  s.lo = lo;
  s.hi = hi;
  return s;
}

std::vector<double> ticks(const Scale& s) {
  std::vector<double> out;
  if (s.log) {
    const int a = static_cast<int>(std::ceil(std::log10(s.lo) - 1e-9));
    const int b = static_cast<int>(std::floor(std::log10(s.hi) + 1e-9));
    const bool dense = b - a < 2;
    const int stride = std::max(1, (b - a + 1) / 8 + 1);
    for (int e = a - 1; e <= b; ++e) {
      for (double m : dense ? std::vector<double>{1, 2, 5} : std::vector<double>{1}) {
        const double v = m * std::pow(10.0, e);
        if (v >= s.lo && v <= s.hi && (dense || (e - a) % stride == 0)) {
          out.push_back(v);
        }
      }
    }
    return out;
  }
  const double span = s.hi - s.lo;
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  for (double v = std::ceil(s.lo / step) * step; v <= s.hi + 1e-9 * step; v += step) {
    out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return out;
}

std::string tick_label(double v) { return fmt::format("{:.4g}", v); }

std::string header(const std::string& title) {
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight);
  out += fmt::format("<!-- {} -->\n", kVersion);
  out += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
  out += fmt::format("<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", num(kWidth / 2),
                     escape(title));
  return out;
}

std::string axes(const Scale& xs, const Scale& ys, const Axis& xa, const Axis& ya) {
  std::string out;
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", num(x0),
                     num(y1), num(x1 - x0), num(y0 - y1));
  for (double v : ticks(xs)) {
    const double px = xs(v);
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", num(px), num(y0),
                       num(y0 + 5));
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", num(px), num(y0 + 18),
                       tick_label(v));
  }
  for (double v : ticks(ys)) {
    const double py = ys(v);
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", num(x0 - 5), num(py),
                       num(x0));
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", num(x0 - 8), num(py + 4),
                       tick_label(v));
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", num((x0 + x1) / 2),
                     num(kHeight - 14), escape(xa.label));
  out += fmt::format("<text transform=\"translate(18,{}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                     num((y0 + y1) / 2), escape(ya.label));
  return out;
}

std::string draw_series(const Series& s, const Scale& xs, const Scale& ys, std::size_t legend_slot) {
  std::string out;
  auto ok = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!xs.log || x > 0.0) && (!ys.log || y > 0.0);
  };
  if (s.line) {
    std::string pts;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (ok(s.x[k], s.y[k])) {
        pts += fmt::format("{},{} ", num(xs(s.x[k])), num(ys(s.y[k])));
      }
    }
    if (!pts.empty()) {
      pts.pop_back();
      out += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", pts, s.color);
    }
  } else {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!ok(s.x[k], s.y[k])) {
        continue;
      }
      const double px = xs(s.x[k]);
      const double py = ys(s.y[k]);
      if (k < s.yerr.size() && s.yerr[k] > 0.0 && std::isfinite(s.yerr[k])) {
        double lo = s.y[k] - s.yerr[k];
        const double hi = s.y[k] + s.yerr[k];
        if (ys.log && lo <= 0.0) {
          lo = ys.lo;
        }
        out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"{3}\"/>\n", num(px),
                           num(ys(std::max(lo, ys.log ? ys.lo : -1e300))), num(ys(hi)), s.color);
      }
      out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>\n", num(px), num(py), s.color);
    }
  }
  if (!s.label.empty()) {
    const double ly = kTop + 14.0 + 16.0 * static_cast<double>(legend_slot);
    const double lx = kWidth - kRight - 170.0;
    out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n", num(lx),
                       num(ly - 4), num(lx + 18), num(ly - 4), s.color);
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", num(lx + 24), num(ly), escape(s.label));
  }
  return out;
}

std::array<int, 3> colormap(double v) {
  // Five-stop perceptual ramp, dark blue to yellow.
  static constexpr std::array<std::array<double, 3>, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                                               {94, 201, 98}, {253, 231, 37}}};
  if (!std::isfinite(v)) {
    return {200, 200, 200};
  }
  const double f = std::clamp(v, 0.0, 1.0) * 4.0;
  const auto i = std::min<std::size_t>(3, static_cast<std::size_t>(f));
  const double w = f - static_cast<double>(i);
  std::array<int, 3> c{};
  for (int k = 0; k < 3; ++k) {
    c[k] = static_cast<int>(std::lround(stops[i][k] * (1.0 - w) + stops[i + 1][k] * w));
  }
  return c;
}

// Cell edges halfway between centers (geometric halfway on log axes).
std::vector<double> cell_edges(const std::vector<double>& centers, bool log) {
  std::vector<double> e(centers.size() + 1);
  auto mid = [log](double a, double b) { return log ? std::sqrt(a * b) : 0.5 * (a + b); };
  for (std::size_t k = 1; k < centers.size(); ++k) {
    e[k] = mid(centers[k - 1], centers[k]);
  }
  if (centers.size() == 1) {
    e[0] = log ? centers[0] / 1.5 : centers[0] - 0.5;
    e[1] = log ? centers[0] * 1.5 : centers[0] + 0.5;
  } else {
    e[0] = log ? centers[0] * centers[0] / e[1] : 2.0 * centers[0] - e[1];
    const std::size_t n = centers.size();
    e[n] = log ? centers[n - 1] * centers[n - 1] / e[n - 1] : 2.0 * centers[n - 1] - e[n - 1];
  }
  return e;
}

}  // namespace

std::string LinePlot::render() const {
  std::vector<double> all_x, all_y;
  for (const auto& s : series) {
    all_x.insert(all_x.end(), s.x.begin(), s.x.end());
    for (std::size_t k = 0; k < s.y.size(); ++k) {
      all_y.push_back(s.y[k]);
      if (k < s.yerr.size() && std::isfinite(s.yerr[k])) {
        all_y.push_back(s.y[k] + s.yerr[k]);
        if (!y.log || s.y[k] - s.yerr[k] > 0.0) {
          all_y.push_back(s.y[k] - s.yerr[k]);
        }
      }
    }
  }
  for (const auto& m : markers) {
    (m.vertical ? all_x : all_y).push_back(m.value);
  }
  const Scale xs = make_scale(all_x, x.log, kLeft, kWidth - kRight);
  const Scale ys = make_scale(all_y, y.log, kHeight - kBottom, kTop);

  std::string out = header(title);
  out += axes(xs, ys, x, y);
  std::size_t slot = 0;
  for (const auto& s : series) {
    out += draw_series(s, xs, ys, slot);
    slot += s.label.empty() ? 0 : 1;
  }
  for (const auto& m : markers) {
    if (!std::isfinite(m.value)) {
      continue;
    }
    if (m.vertical) {
      const double px = xs(m.value);
      out += fmt::format(
          "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n", num(px),
          num(kTop), num(kHeight - kBottom));
      out += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"gray\">{}</text>\n", num(px + 4), num(kHeight - kBottom - 6),
                         escape(m.label));
    } else {
      const double py = ys(m.value);
      out += fmt::format(
          "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n", num(kLeft),
          num(py), num(kWidth - kRight));
      out += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"gray\">{}</text>\n", num(kLeft + 4), num(py - 4),
                         escape(m.label));
    }
  }
  if (top) {
    for (std::size_t k = 0; k < top->positions.size() && k < top->labels.size(); ++k) {
      const double p = top->positions[k];
      if (!std::isfinite(p) || (x.log && p <= 0.0) || p < xs.lo || p > xs.hi) {
        continue;
      }
      const double px = xs(p);
      out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", num(px),
                         num(kTop - 5), num(kTop));
      out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", num(px), num(kTop - 8),
                         escape(top->labels[k]));
    }
    out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                       num((kLeft + kWidth - kRight) / 2), num(kTop - 24), escape(top->label));
  }
  out += "</svg>\n";
  return out;
}

std::string Heatmap::render() const {
  const std::vector<double> ex = cell_edges(xs, x.log);
  const std::vector<double> ey = cell_edges(ys, y.log);
  const double right = kWidth - kRight - 60.0;
  Scale sx{ex.front(), ex.back(), x.log, kLeft, right};
  Scale sy{ey.front(), ey.back(), y.log, kHeight - kBottom, kTop};
  if (sx.lo > sx.hi) {
    std::swap(sx.lo, sx.hi);
  }
  if (sy.lo > sy.hi) {
    std::swap(sy.lo, sy.hi);
  }

  std::string out = header(title);
  for (std::size_t r = 0; r < ys.size(); ++r) {
    for (std::size_t c = 0; c < xs.size(); ++c) {
      const double v = values[r * xs.size() + c];
      const auto col = colormap(v);
      const double px0 = sx(ex[c]), px1 = sx(ex[c + 1]);
      const double py0 = sy(ey[r]), py1 = sy(ey[r + 1]);
      out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"rgb({},{},{})\"/>\n",
                         num(std::min(px0, px1)), num(std::min(py0, py1)), num(std::abs(px1 - px0)),
                         num(std::abs(py1 - py0)), col[0], col[1], col[2]);
    }
  }
  out += axes(sx, sy, x, y);
  std::size_t slot = 0;
  for (const auto& s : overlays) {
    out += draw_series(s, sx, sy, slot);
    slot += s.label.empty() ? 0 : 1;
  }
  // Colour bar.
  const double bx = kWidth - kRight - 40.0;
  const double bh = kHeight - kBottom - kTop;
  for (int k = 0; k < 50; ++k) {
    const auto col = colormap((k + 0.5) / 50.0);
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"{}\" fill=\"rgb({},{},{})\"/>\n", num(bx),
                       num(kTop + bh * (1.0 - (k + 1) / 50.0)), num(bh / 50.0 + 0.5), col[0], col[1], col[2]);
  }
  for (double v : {0.0, 0.5, 1.0}) {
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", num(bx + 18), num(kTop + bh * (1.0 - v) + 4),
                       tick_label(v));
  }
  out += fmt::format("<text transform=\"translate({},{}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
                     num(bx - 6), num(kTop + bh / 2), escape(colorbar_label));
  out += "</svg>\n";
  return out;
}

}  // namespace cbjj::cli::svg
