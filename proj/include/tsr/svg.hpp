#pragma once

// Minimal static-SVG emission: a canvas of rect/line/circle/text primitives
// plus three small chart builders (histogram panel, scatter, line chart).
// Charts are pure functions of the data handed to them, so every figure can
// be rebuilt from the CSV rows alongside it.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "tsr/errors.hpp"
#include "tsr/io.hpp"

namespace tsr {

using Vec = Eigen::VectorXd;
using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return std::string(buf);
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (const char c : s) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
  return out;
}

/// Fixed palette for multi-series charts.
inline const char* svg_color(size_t i) {
  static constexpr std::array<const char*, 6> palette = {
      "#2962ff", "#d81b60", "#2e7d32", "#ef6c00", "#6a1b9a", "#00838f"};
  return palette[i % palette.size()];
}

}  // namespace detail

class SvgCanvas {
 public:
  SvgCanvas(double width, double height) : width_(width), height_(height) {
    if (!(width > 0.0) || !(height > 0.0))
      throw param_error("SvgCanvas: size must be positive");
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "none") {
    body_ += "<rect x=\"" + detail::svg_num(x) + "\" y=\"" + detail::svg_num(y) +
             "\" width=\"" + detail::svg_num(w) + "\" height=\"" +
             detail::svg_num(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke +
             "\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0) {
    body_ += "<line x1=\"" + detail::svg_num(x1) + "\" y1=\"" +
             detail::svg_num(y1) + "\" x2=\"" + detail::svg_num(x2) + "\" y2=\"" +
             detail::svg_num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
             detail::svg_num(width) + "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& stroke, double width = 1.5) {
    if (pts.empty()) return;
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
             detail::svg_num(width) + "\" points=\"";
    for (const auto& [x, y] : pts)
      body_ += detail::svg_num(x) + "," + detail::svg_num(y) + " ";
    body_ += "\"/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& fill,
              double opacity = 1.0) {
    body_ += "<circle cx=\"" + detail::svg_num(cx) + "\" cy=\"" +
             detail::svg_num(cy) + "\" r=\"" + detail::svg_num(r) + "\" fill=\"" +
             fill + "\"";
    if (opacity < 1.0)
      body_ += " fill-opacity=\"" + detail::svg_num(opacity) + "\"";
    body_ += "/>\n";
  }

  void text(double x, double y, const std::string& s, double size = 12.0,
            const std::string& anchor = "start", const std::string& fill = "#333") {
    body_ += "<text x=\"" + detail::svg_num(x) + "\" y=\"" + detail::svg_num(y) +
             "\" font-family=\"sans-serif\" font-size=\"" + detail::svg_num(size) +
             "\" text-anchor=\"" + anchor + "\" fill=\"" + fill + "\">" +
             detail::svg_escape(s) + "</text>\n";
  }

  std::string str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           detail::svg_num(width_) + "\" height=\"" + detail::svg_num(height_) +
           "\" viewBox=\"0 0 " + detail::svg_num(width_) + " " +
           detail::svg_num(height_) + "\">\n<rect width=\"100%\" height=\"100%\" " +
           "fill=\"#ffffff\"/>\n" + body_ + "</svg>\n";
  }

  void write(const std::filesystem::path& path) const {
    write_text_atomic(path, str());
  }

 private:
  double width_, height_;
  std::string body_;
};

/// Stacked per-series histograms over a shared x range, one row per series.
inline std::string svg_histogram_panel(
    const std::vector<std::pair<std::string, Vec>>& series, double lo, double hi,
    int bins = 120) {
  if (series.empty()) throw param_error("svg_histogram_panel: no series");
  if (!(hi > lo)) throw param_error("svg_histogram_panel: bad range");
  if (bins < 2) throw param_error("svg_histogram_panel: too few bins");

  const double panel_w = 640.0, row_h = 110.0, margin = 46.0, gap = 16.0;
  const double plot_w = panel_w - 2.0 * margin;
  const double total_h =
      static_cast<double>(series.size()) * (row_h + gap) + margin;
  SvgCanvas svg(panel_w, total_h);

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& [label, values] = series[si];
    std::vector<double> counts(static_cast<size_t>(bins), 0.0);
    for (Eigen::Index i = 0; i < values.size(); ++i) {
      const double u = (values[i] - lo) / (hi - lo);
      if (u < 0.0 || u >= 1.0) continue;
      counts[static_cast<size_t>(u * bins)] += 1.0;
    }
    const double peak = std::max(
        1.0, *std::max_element(counts.begin(), counts.end()));

    const double top = margin / 2.0 + static_cast<double>(si) * (row_h + gap);
    const double base = top + row_h;
    const double bw = plot_w / bins;
    for (int b = 0; b < bins; ++b) {
      const double h = counts[static_cast<size_t>(b)] / peak * (row_h - 18.0);
      if (h <= 0.0) continue;
      svg.rect(margin + b * bw, base - h, std::max(bw - 0.4, 0.3), h,
               detail::svg_color(si));
    }
    svg.line(margin, base, margin + plot_w, base, "#999", 1.0);
    svg.text(margin, top + 12.0, label, 12.0);
    svg.text(margin, base + 14.0, format_double(lo), 10.0, "start", "#777");
    svg.text(margin + plot_w, base + 14.0, format_double(hi), 10.0, "end", "#777");
  }
  return svg.str();
}

/// Square scatter plot; large batches are thinned by a deterministic stride.
inline std::string svg_scatter(const RowMat& points, double lo, double hi,
                               const std::string& title, int max_points = 4000) {
  if (points.cols() != 2) throw param_error("svg_scatter: points must be 2D");
  if (!(hi > lo)) throw param_error("svg_scatter: bad range");

  const double size = 480.0, margin = 36.0;
  const double plot = size - 2.0 * margin;
  SvgCanvas svg(size, size);
  svg.rect(margin, margin, plot, plot, "none", "#bbb");
  svg.text(size / 2.0, margin - 10.0, title, 13.0, "middle");

  const auto n = points.rows();
  const auto stride = std::max<Eigen::Index>(
      1, (n + max_points - 1) / std::max(1, max_points));
  for (Eigen::Index i = 0; i < n; i += stride) {
    const double ux = (points(i, 0) - lo) / (hi - lo);
    const double uy = (points(i, 1) - lo) / (hi - lo);
    if (ux < 0.0 || ux > 1.0 || uy < 0.0 || uy > 1.0) continue;
    svg.circle(margin + ux * plot, margin + (1.0 - uy) * plot, 1.3, "#2962ff",
               0.55);
  }
  return svg.str();
}

struct LineSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

/// Multi-series line chart with automatic ranges and a top-right legend.
inline std::string svg_line_chart(const std::vector<LineSeries>& series,
                                  const std::string& x_label,
                                  const std::string& y_label) {
  if (series.empty()) throw param_error("svg_line_chart: no series");
  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  bool first = true;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (first) {
        x_lo = x_hi = x;
        y_lo = y_hi = y;
        first = false;
      }
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  if (first) throw param_error("svg_line_chart: no points");
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  if (y_hi == y_lo) y_hi = y_lo + 1.0;
  y_hi += 0.06 * (y_hi - y_lo);  // headroom so the top curve is not clipped

  const double w = 640.0, h = 420.0, margin = 52.0;
  const double pw = w - 2.0 * margin, ph = h - 2.0 * margin;
  SvgCanvas svg(w, h);
  svg.rect(margin, margin, pw, ph, "none", "#bbb");
  const auto px = [&](double x) { return margin + (x - x_lo) / (x_hi - x_lo) * pw; };
  const auto py = [&](double y) {
    return margin + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph;
  };

  for (size_t si = 0; si < series.size(); ++si) {
    std::vector<std::pair<double, double>> path;
    path.reserve(series[si].points.size());
    for (const auto& [x, y] : series[si].points) path.emplace_back(px(x), py(y));
    svg.polyline(path, detail::svg_color(si), 1.6);
    const double ly = margin + 16.0 + 15.0 * static_cast<double>(si);
    svg.line(w - margin - 94.0, ly - 4.0, w - margin - 74.0, ly - 4.0,
             detail::svg_color(si), 2.0);
    svg.text(w - margin - 68.0, ly, series[si].label, 11.0);
  }

  svg.text(w / 2.0, h - 12.0, x_label, 12.0, "middle");
  svg.text(14.0, margin - 10.0, y_label, 12.0);
  svg.text(margin, h - margin + 16.0, format_double(x_lo), 10.0, "start", "#777");
  svg.text(w - margin, h - margin + 16.0, format_double(x_hi), 10.0, "end", "#777");
  svg.text(margin - 6.0, h - margin, format_double(y_lo), 10.0, "end", "#777");
  svg.text(margin - 6.0, margin + 10.0, format_double(y_hi), 10.0, "end", "#777");
  return svg.str();
}

}  // namespace tsr
