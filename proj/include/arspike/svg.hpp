#ifndef ARSPIKE_SVG_HPP
#define ARSPIKE_SVG_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "arspike/common.hpp"
#include "arspike/csv.hpp"

namespace arspike {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

inline std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace detail

/// Self-contained static line plot; deterministic bytes for fixed input.
inline std::string svg_plot_text(const std::string& title,
                                 const std::string& xlabel,
                                 const std::string& ylabel,
                                 const std::vector<PlotSeries>& series,
                                 int width = 640, int height = 480) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  const double L = 62, R = 18, T = 36, B = 46;
  const double W = width, H = height;

  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  bool seen = false;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!seen) {
        x0 = x1 = s.x[i];
        y0 = y1 = s.y[i];
        seen = true;
      } else {
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
      }
    }
  }
  if (x1 - x0 < 1e-300) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (y1 - y0 < 1e-300) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double xpad = 0.04 * (x1 - x0), ypad = 0.04 * (y1 - y0);
  x0 -= xpad;
  x1 += xpad;
  y0 -= ypad;
  y1 += ypad;

  auto mx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto my = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" viewBox=\"0 0 " + std::to_string(width) + " " +
         std::to_string(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Frame and gridlines with five divisions per axis.
  for (int t = 0; t <= 5; ++t) {
    const double fx = x0 + (x1 - x0) * t / 5.0;
    const double fy = y0 + (y1 - y0) * t / 5.0;
    const std::string gx = detail::px(mx(fx));
    const std::string gy = detail::px(my(fy));
    out += "<line x1=\"" + gx + "\" y1=\"" + detail::px(T) + "\" x2=\"" + gx +
           "\" y2=\"" + detail::px(H - B) +
           "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    out += "<line x1=\"" + detail::px(L) + "\" y1=\"" + gy + "\" x2=\"" +
           detail::px(W - R) + "\" y2=\"" + gy +
           "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    out += "<text x=\"" + gx + "\" y=\"" + detail::px(H - B + 16) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
           detail::xml_escape(detail::tick_label(fx)) + "</text>\n";
    out += "<text x=\"" + detail::px(L - 6) + "\" y=\"" + detail::px(my(fy) + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
           detail::xml_escape(detail::tick_label(fy)) + "</text>\n";
  }
  out += "<rect x=\"" + detail::px(L) + "\" y=\"" + detail::px(T) + "\" width=\"" +
         detail::px(W - L - R) + "\" height=\"" + detail::px(H - T - B) +
         "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = palette[si % 6];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += detail::px(mx(s.x[i])) + "," + detail::px(my(s.y[i]));
    }
    if (pts.empty()) continue;
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\"" +
           (s.dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
  }

  // Legend, top-right inside the frame.
  double ly = T + 14;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    if (s.label.empty()) continue;
    const char* color = palette[si % 6];
    const double lx = W - R - 170;
    out += "<line x1=\"" + detail::px(lx) + "\" y1=\"" + detail::px(ly - 4) +
           "\" x2=\"" + detail::px(lx + 24) + "\" y2=\"" + detail::px(ly - 4) +
           "\" stroke=\"" + color + "\" stroke-width=\"1.5\"" +
           (s.dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
    out += "<text x=\"" + detail::px(lx + 30) + "\" y=\"" + detail::px(ly) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" +
           detail::xml_escape(s.label) + "</text>\n";
    ly += 16;
  }

  out += "<text x=\"" + detail::px((L + W - R) / 2) + "\" y=\"" +
         detail::px(T - 12) +
         "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">" +
         detail::xml_escape(title) + "</text>\n";
  out += "<text x=\"" + detail::px((L + W - R) / 2) + "\" y=\"" +
         detail::px(H - 10) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
         detail::xml_escape(xlabel) + "</text>\n";
  out += "<text x=\"14\" y=\"" + detail::px((T + H - B) / 2) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 14 " +
         detail::px((T + H - B) / 2) + ")\">" + detail::xml_escape(ylabel) +
         "</text>\n";
  out += "</svg>\n";
  return out;
}

inline void write_svg_plot(const std::string& path, const std::string& title,
                           const std::string& xlabel, const std::string& ylabel,
                           const std::vector<PlotSeries>& series,
                           int width = 640, int height = 480) {
  write_text_file(path, svg_plot_text(title, xlabel, ylabel, series, width, height));
}

}  // namespace arspike

#endif  // ARSPIKE_SVG_HPP
