#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "wqed/io.hpp"

namespace wqed::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  if (!(hi > lo)) hi = lo + 1.0;
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * step; t += step)
    ticks.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return ticks;
}

inline const char* line_color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf"};
  return palette[i % 7];
}

// Blue-to-yellow map for heatmap intensities in [0, 1].
inline std::string heat_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const int r = static_cast<int>(255.0 * std::pow(v, 0.7));
  const int g = static_cast<int>(235.0 * std::pow(v, 1.1));
  const int b = static_cast<int>(80.0 + 120.0 * (1.0 - v));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace detail

/// Standalone SVG line plot. `provenance` is embedded as a comment so every
/// figure records the configuration that produced it.
inline void line_plot(const std::filesystem::path& path, const std::vector<Series>& series,
                      const std::string& title, const std::string& xlabel,
                      const std::string& ylabel, const std::string& provenance) {
  if (series.empty()) throw std::invalid_argument("line_plot: no series");
  for (const Series& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size())
      throw std::invalid_argument("line_plot: empty or ragged series '" + s.label + "'");
    for (double v : s.y)
      if (!std::isfinite(v)) throw std::invalid_argument("line_plot: non-finite value");
  }
  double xlo = series[0].x[0], xhi = xlo, ylo = series[0].y[0], yhi = ylo;
  for (const Series& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  if (yhi == ylo) yhi = ylo + 1.0;
  if (xhi == xlo) xhi = xlo + 1.0;
  const double w = 720, h = 480, ml = 70, mr = 20, mt = 40, mb = 55;
  const auto px = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * (w - ml - mr); };
  const auto py = [&](double y) { return h - mb - (y - ylo) / (yhi - ylo) * (h - mt - mb); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(w) + "\" height=\"" +
       detail::fmt(h) + "\" viewBox=\"0 0 " + detail::fmt(w) + " " + detail::fmt(h) + "\">\n";
  s += "<!-- provenance: " + provenance + " -->\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + detail::fmt(w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
       title + "</text>\n";
  // axes
  s += "<line x1=\"" + detail::fmt(ml) + "\" y1=\"" + detail::fmt(h - mb) + "\" x2=\"" +
       detail::fmt(w - mr) + "\" y2=\"" + detail::fmt(h - mb) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + detail::fmt(ml) + "\" y1=\"" + detail::fmt(mt) + "\" x2=\"" +
       detail::fmt(ml) + "\" y2=\"" + detail::fmt(h - mb) + "\" stroke=\"black\"/>\n";
  for (double t : detail::nice_ticks(xlo, xhi)) {
    s += "<line x1=\"" + detail::fmt(px(t)) + "\" y1=\"" + detail::fmt(h - mb) + "\" x2=\"" +
         detail::fmt(px(t)) + "\" y2=\"" + detail::fmt(h - mb + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + detail::fmt(px(t)) + "\" y=\"" + detail::fmt(h - mb + 20) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + detail::fmt(t) + "</text>\n";
  }
  for (double t : detail::nice_ticks(ylo, yhi)) {
    s += "<line x1=\"" + detail::fmt(ml - 5) + "\" y1=\"" + detail::fmt(py(t)) + "\" x2=\"" +
         detail::fmt(ml) + "\" y2=\"" + detail::fmt(py(t)) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + detail::fmt(ml - 8) + "\" y=\"" + detail::fmt(py(t) + 4) +
         "\" text-anchor=\"end\" font-size=\"12\">" + detail::fmt(t) + "</text>\n";
  }
  s += "<text x=\"" + detail::fmt((ml + w - mr) / 2) + "\" y=\"" + detail::fmt(h - 12) +
       "\" text-anchor=\"middle\" font-size=\"13\">" + xlabel + "</text>\n";
  s += "<text x=\"18\" y=\"" + detail::fmt((mt + h - mb) / 2) +
       "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " +
       detail::fmt((mt + h - mb) / 2) + ")\">" + ylabel + "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    s += "<polyline fill=\"none\" stroke=\"" + std::string(detail::line_color(i)) +
         "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < series[i].x.size(); ++k)
      s += detail::fmt(px(series[i].x[k])) + "," + detail::fmt(py(series[i].y[k])) + " ";
    s += "\"/>\n";
    const double lx = w - mr - 160, ly = mt + 18.0 * static_cast<double>(i) + 10;
    s += "<line x1=\"" + detail::fmt(lx) + "\" y1=\"" + detail::fmt(ly) + "\" x2=\"" +
         detail::fmt(lx + 24) + "\" y2=\"" + detail::fmt(ly) + "\" stroke=\"" +
         detail::line_color(i) + "\" stroke-width=\"1.5\"/>\n";
    s += "<text x=\"" + detail::fmt(lx + 30) + "\" y=\"" + detail::fmt(ly + 4) +
         "\" font-size=\"12\">" + series[i].label + "</text>\n";
  }
  s += "</svg>\n";
  io::write_file_atomic(path, s);
}

/// Standalone SVG heatmap of a square matrix rendered as a rect grid. Grids
/// larger than max_cells per side are max-pooled down; no raster formats are
/// involved.
inline void heatmap(const std::filesystem::path& path, const std::vector<double>& values,
                    std::size_t n, double t_lo, double t_hi, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::string& provenance, std::size_t max_cells = 400) {
  if (n == 0 || values.size() != n * n) throw std::invalid_argument("heatmap: not a square grid");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("heatmap: non-finite value");
  // max-pool to at most max_cells per side
  const std::size_t block = (n + max_cells - 1) / max_cells;
  const std::size_t m = (n + block - 1) / block;
  std::vector<double> pooled(m * m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      double& cell = pooled[(i / block) * m + (k / block)];
      cell = std::max(cell, values[i * n + k]);
    }
  double vmax = 0.0;
  for (double v : pooled) vmax = std::max(vmax, v);
  if (vmax == 0.0) vmax = 1.0;

  const double w = 640, h = 640, ml = 70, mr = 30, mt = 40, mb = 55;
  const double cw = (w - ml - mr) / static_cast<double>(m);
  const double ch = (h - mt - mb) / static_cast<double>(m);
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(w) + "\" height=\"" +
       detail::fmt(h) + "\" viewBox=\"0 0 " + detail::fmt(w) + " " + detail::fmt(h) + "\">\n";
  s += "<!-- provenance: " + provenance + " -->\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + detail::fmt(w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
       title + "</text>\n";
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < m; ++k) {
      // row index i = first time axis, drawn upward from the bottom
      const double x = ml + static_cast<double>(k) * cw;
      const double y = h - mb - static_cast<double>(i + 1) * ch;
      s += "<rect x=\"" + detail::fmt(x) + "\" y=\"" + detail::fmt(y) + "\" width=\"" +
           detail::fmt(cw + 0.5) + "\" height=\"" + detail::fmt(ch + 0.5) + "\" fill=\"" +
           detail::heat_color(pooled[i * m + k] / vmax) + "\"/>\n";
    }
  for (double t : detail::nice_ticks(t_lo, t_hi)) {
    const double fx = ml + (t - t_lo) / (t_hi - t_lo) * (w - ml - mr);
    const double fy = h - mb - (t - t_lo) / (t_hi - t_lo) * (h - mt - mb);
    s += "<text x=\"" + detail::fmt(fx) + "\" y=\"" + detail::fmt(h - mb + 20) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + detail::fmt(t) + "</text>\n";
    s += "<text x=\"" + detail::fmt(ml - 8) + "\" y=\"" + detail::fmt(fy + 4) +
         "\" text-anchor=\"end\" font-size=\"12\">" + detail::fmt(t) + "</text>\n";
  }
  s += "<text x=\"" + detail::fmt((ml + w - mr) / 2) + "\" y=\"" + detail::fmt(h - 12) +
       "\" text-anchor=\"middle\" font-size=\"13\">" + xlabel + "</text>\n";
  s += "<text x=\"18\" y=\"" + detail::fmt((mt + h - mb) / 2) +
       "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " +
       detail::fmt((mt + h - mb) / 2) + ")\">" + ylabel + "</text>\n";
  s += "</svg>\n";
  io::write_file_atomic(path, s);
}

}  // namespace wqed::svg
