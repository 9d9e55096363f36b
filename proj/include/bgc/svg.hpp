#pragma once

// Minimal SVG scatter/line plots written by hand: points, segments, axis
// ticks and labels. Output is deterministic for identical inputs.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bgc/error.hpp"
#include "bgc/stats.hpp"

namespace bgc {

class SvgPlot {
public:
  SvgPlot(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

  void add_points(const std::vector<double>& x, const std::vector<double>& y,
                  const std::string& colour = "#1f77b4") {
    if (x.size() != y.size()) throw ShapeError("plot series differ in length");
    for (std::size_t i = 0; i < x.size(); ++i)
      if (std::isfinite(x[i]) && std::isfinite(y[i])) points_.push_back({x[i], y[i], colour});
  }

  void add_segment(double x0, double y0, double x1, double y1,
                   const std::string& colour = "#d62728") {
    if (std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) && std::isfinite(y1))
      segments_.push_back({x0, y0, x1, y1, colour});
  }

  /// Connects consecutive points of a series with segments.
  void add_polyline(const std::vector<double>& x, const std::vector<double>& y,
                    const std::string& colour = "#2ca02c") {
    if (x.size() != y.size()) throw ShapeError("plot series differ in length");
    for (std::size_t i = 1; i < x.size(); ++i) add_segment(x[i - 1], y[i - 1], x[i], y[i], colour);
    add_points(x, y, colour);
  }

  std::string render() const {
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    bool first = true;
    auto grow = [&](double x, double y) {
      if (first) {
        x0 = x1 = x;
        y0 = y1 = y;
        first = false;
      }
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    };
    for (const auto& p : points_) grow(p.x, p.y);
    for (const auto& s : segments_) {
      grow(s.x0, s.y0);
      grow(s.x1, s.y1);
    }
    if (x1 - x0 <= 0) {
      x0 -= 1;
      x1 += 1;
    }
    if (y1 - y0 <= 0) {
      y0 -= 1;
      y1 += 1;
    }
    const double padx = 0.05 * (x1 - x0), pady = 0.05 * (y1 - y0);
    x0 -= padx;
    x1 += padx;
    y0 -= pady;
    y1 += pady;

    auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); };
    auto py = [&](double y) {
      return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
    };
    std::string out;
    out += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
               "viewBox=\"0 0 %d %d\">\n",
               kWidth, kHeight, kWidth, kHeight);
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += fmt("<text x=\"%d\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" "
               "text-anchor=\"middle\">%s</text>\n",
               kWidth / 2, escape(title_).c_str());
    const double ax = kLeft, ay = kHeight - kBottom;
    out += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n", ax,
               ay, static_cast<double>(kWidth - kRight), ay);
    out += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n", ax,
               ay, ax, static_cast<double>(kTop));
    for (int i = 0; i <= kTicks; ++i) {
      const double xv = x0 + (x1 - x0) * i / kTicks;
      const double yv = y0 + (y1 - y0) * i / kTicks;
      out += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
                 px(xv), ay, px(xv), ay + 5);
      out += fmt("<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"10\" "
                 "text-anchor=\"middle\">%.3g</text>\n",
                 px(xv), ay + 18, xv);
      out += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n",
                 ax - 5, py(yv), ax, py(yv));
      out += fmt("<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"10\" "
                 "text-anchor=\"end\">%.3g</text>\n",
                 ax - 8, py(yv) + 3, yv);
    }
    out += fmt("<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"12\" "
               "text-anchor=\"middle\">%s</text>\n",
               (kLeft + kWidth - kRight) / 2, kHeight - 8, escape(x_label_).c_str());
    out += fmt("<text x=\"14\" y=\"%d\" font-family=\"sans-serif\" font-size=\"12\" "
               "text-anchor=\"middle\" transform=\"rotate(-90 14 %d)\">%s</text>\n",
               (kTop + kHeight - kBottom) / 2, (kTop + kHeight - kBottom) / 2,
               escape(y_label_).c_str());
    for (const auto& s : segments_)
      out += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" "
                 "stroke-width=\"2\"/>\n",
                 px(s.x0), py(s.y0), px(s.x1), py(s.y1), s.colour.c_str());
    for (const auto& p : points_)
      out += fmt("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"%s\"/>\n", px(p.x), py(p.y),
                 p.colour.c_str());
    out += "</svg>\n";
    return out;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw InputError("cannot open '" + path.string() + "' for writing");
    os << render();
  }

private:
  struct Point {
    double x, y;
    std::string colour;
  };
  struct Segment {
    double x0, y0, x1, y1;
    std::string colour;
  };

  static constexpr int kWidth = 640, kHeight = 420;
  static constexpr int kLeft = 60, kRight = 20, kTop = 36, kBottom = 48;
  static constexpr int kTicks = 5;

  template <typename... Args>
  static std::string fmt(const char* f, Args... args) {
    const int n = std::snprintf(nullptr, 0, f, args...);
    std::string s(static_cast<std::size_t>(n), '\0');
    std::snprintf(s.data(), s.size() + 1, f, args...);
    return s;
  }

  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
      }
    }
    return out;
  }

  std::string title_, x_label_, y_label_;
  std::vector<Point> points_;
  std::vector<Segment> segments_;
};

/// Scatter of (x, y) with the two fitted lines drawn over their own ranges.
inline SvgPlot two_lines_plot(const std::vector<double>& x, const std::vector<double>& y,
                              const TwoLinesReport& t, const std::string& title,
                              const std::string& x_label, const std::string& y_label) {
  SvgPlot plot(title, x_label, y_label);
  plot.add_points(x, y);
  const double lo = *std::min_element(x.begin(), x.end());
  const double hi = *std::max_element(x.begin(), x.end());
  plot.add_segment(lo, t.left.intercept + t.left.slope * lo, t.breakpoint,
                   t.left.intercept + t.left.slope * t.breakpoint);
  plot.add_segment(t.breakpoint, t.right.intercept + t.right.slope * t.breakpoint, hi,
                   t.right.intercept + t.right.slope * hi, "#ff7f0e");
  return plot;
}

}  // namespace bgc
