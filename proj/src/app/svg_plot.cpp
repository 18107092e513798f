#include "ksfno/app/svg_plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace ksfno::app::svg {
namespace {

constexpr double kPanelW = 360.0;
constexpr double kPanelH = 280.0;
constexpr double kMarginL = 80.0;
constexpr double kMarginR = 16.0;
constexpr double kMarginT = 52.0;
constexpr double kMarginB = 48.0;
constexpr std::array<const char*, 6> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string open_svg(double w, double h, const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + "<text x=\"" + num(w / 2) +
         "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) + "</text>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 11) {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + anchor + "\" font-size=\"" +
         std::to_string(size) + "\">" + escape(s) + "</text>\n";
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool empty() const { return !(lo <= hi); }
  void pad() {
    if (empty()) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

std::optional<double> plotted_y(double y, bool log_y) {
  if (!std::isfinite(y)) return std::nullopt;
  if (!log_y) return y;
  if (y <= 0.0) return std::nullopt;
  return std::log10(y);
}

std::string line_panel(const LinePanel& panel, double ox, double oy) {
  const double x0 = ox + kMarginL, y0 = oy + kMarginT;
  const double w = kPanelW - kMarginL - kMarginR, h = kPanelH - kMarginT - kMarginB;
  Range xr, yr;
  for (const Series& s : panel.series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (const auto y = plotted_y(s.y[k], panel.log_y)) {
        xr.add(s.x[k]);
        yr.add(*y);
      }
    }
  }
  if (panel.reference_y) {
    if (const auto y = plotted_y(*panel.reference_y, panel.log_y)) yr.add(*y);
  }
  xr.pad();
  yr.pad();
  auto px = [&](double x) { return x0 + (x - xr.lo) / (xr.hi - xr.lo) * w; };
  auto py = [&](double y) { return y0 + h - (y - yr.lo) / (yr.hi - yr.lo) * h; };

  std::string out;
  out += text(ox + kPanelW / 2, oy + 40, panel.title, "middle", 12);
  out += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = xr.lo + (xr.hi - xr.lo) * t / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * t / 4.0;
    out += text(px(fx), y0 + h + 14, label(fx));
    out += text(x0 - 4, py(fy) + 4, label(panel.log_y ? std::pow(10.0, fy) : fy), "end");
    out += "<line x1=\"" + num(x0) + "\" x2=\"" + num(x0 + w) + "\" y1=\"" + num(py(fy)) + "\" y2=\"" + num(py(fy)) +
           "\" stroke=\"#ddd\"/>\n";
  }
  out += text(x0 + w / 2, y0 + h + 32, panel.x_label);
  out += "<text transform=\"translate(" + num(ox + 14) + "," + num(y0 + h / 2) +
         ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">" +
         escape(panel.y_label + (panel.log_y ? " (log scale)" : "")) + "</text>\n";

  if (panel.reference_y) {
    if (const auto y = plotted_y(*panel.reference_y, panel.log_y)) {
      out += "<line x1=\"" + num(x0) + "\" x2=\"" + num(x0 + w) + "\" y1=\"" + num(py(*y)) + "\" y2=\"" +
             num(py(*y)) + "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
    }
  }
  for (std::size_t si = 0; si < panel.series.size(); ++si) {
    const Series& s = panel.series[si];
    const char* color = kPalette[si % kPalette.size()];
    std::string points;
    auto flush = [&] {
      if (!points.empty()) {
        out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + points +
               "\"/>\n";
      }
      points.clear();
    };
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      const auto y = plotted_y(s.y[k], panel.log_y);
      if (!y) {
        flush();
        continue;
      }
      points += (points.empty() ? "" : " ") + num(px(s.x[k])) + "," + num(py(*y));
    }
    flush();
    const double ly = y0 + 12 + 14.0 * static_cast<double>(si);
    out += "<line x1=\"" + num(x0 + w - 90) + "\" x2=\"" + num(x0 + w - 74) + "\" y1=\"" + num(ly - 4) + "\" y2=\"" +
           num(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += text(x0 + w - 70, ly, s.label, "start", 10);
  }
  return out;
}

// Piecewise-linear approximation of the viridis colormap.
std::string color(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                                               {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(t), 3);
  const double f = t - static_cast<double>(k);
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(stops[k][0] + f * (stops[k + 1][0] - stops[k][0]))),
                static_cast<int>(std::lround(stops[k][1] + f * (stops[k + 1][1] - stops[k][1]))),
                static_cast<int>(std::lround(stops[k][2] + f * (stops[k + 1][2] - stops[k][2]))));
  return buf;
}

std::string heat_panel(const HeatPanel& panel, double ox, double oy) {
  constexpr int kLevels = 64;
  const double side = kPanelH - kMarginT - kMarginB;
  const double x0 = ox + (kPanelW - side) / 2, y0 = oy + kMarginT;
  const double cell = side / static_cast<double>(panel.n);
  Range r;
  for (double v : panel.values) {
    if (std::isfinite(v)) r.add(v);
  }
  const Range shown = r;
  r.pad();
  auto level = [&](double v) {
    if (!std::isfinite(v)) return 0;
    return std::clamp(static_cast<int>((v - r.lo) / (r.hi - r.lo) * kLevels), 0, kLevels - 1);
  };

  std::string out = text(ox + kPanelW / 2, oy + 40, panel.title, "middle", 12);
  out += "<g shape-rendering=\"crispEdges\">\n";
  // Horizontal runs of equal quantized color become one rect.
  for (std::size_t i = 0; i < panel.n; ++i) {
    std::size_t j = 0;
    while (j < panel.n) {
      const int lv = level(panel.values[i * panel.n + j]);
      std::size_t end = j + 1;
      while (end < panel.n && level(panel.values[i * panel.n + end]) == lv) ++end;
      out += "<rect x=\"" + num(x0 + cell * static_cast<double>(j)) + "\" y=\"" + num(y0 + cell * static_cast<double>(i)) +
             "\" width=\"" + num(cell * static_cast<double>(end - j) + 0.3) + "\" height=\"" + num(cell + 0.3) +
             "\" fill=\"" + color((lv + 0.5) / kLevels) + "\"/>\n";
      j = end;
    }
  }
  out += "</g>\n";
  const double bar_y = y0 + side + 10;
  for (int k = 0; k < 16; ++k) {
    out += "<rect x=\"" + num(x0 + side * k / 16.0) + "\" y=\"" + num(bar_y) + "\" width=\"" + num(side / 16.0 + 0.3) +
           "\" height=\"8\" fill=\"" + color((k + 0.5) / 16.0) + "\"/>\n";
  }
  if (!shown.empty()) {
    out += text(x0, bar_y + 22, label(shown.lo), "start");
    out += text(x0 + side, bar_y + 22, label(shown.hi), "end");
  }
  return out;
}

}  // namespace

std::string line_figure(const std::string& title, const std::vector<LinePanel>& panels) {
  const double w = kPanelW * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  std::string out = open_svg(w, kPanelH, title);
  for (std::size_t k = 0; k < panels.size(); ++k) out += line_panel(panels[k], kPanelW * static_cast<double>(k), 0.0);
  return out + "</svg>\n";
}

std::string heatmap_figure(const std::string& title, const std::vector<HeatPanel>& panels) {
  const double w = kPanelW * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
  std::string out = open_svg(w, kPanelH, title);
  for (std::size_t k = 0; k < panels.size(); ++k) out += heat_panel(panels[k], kPanelW * static_cast<double>(k), 0.0);
  return out + "</svg>\n";
}

}  // namespace ksfno::app::svg
