#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

namespace chemocal::svg {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Series {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<Point> points;
  std::vector<double> error;  // optional symmetric y error per point
  bool line = false;
  bool markers = true;
};

struct Bars {
  std::string color = "#888888";
  std::vector<double> lo, hi, height;
};

struct HLine {
  double y = 0.0;
  std::string color = "#d62728";
  std::string label;
};

/// Minimal deterministic 2-D chart. Output depends only on the data.
class Chart {
 public:
  Chart(std::string title, std::string x_label, std::string y_label)
      : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

  void add(Series s) { series_.push_back(std::move(s)); }
  void add(Bars b) { bars_.push_back(std::move(b)); }
  void add(HLine h) { hlines_.push_back(std::move(h)); }
  void identity_line(bool on = true) { identity_ = on; }
  void note(std::string text) { notes_.push_back(std::move(text)); }

  std::string render(double width = 640.0, double height = 480.0) const {
    double x0 = inf(), x1 = -inf(), y0 = inf(), y1 = -inf();
    auto take = [&](double x, double y) {
      if (!std::isfinite(x) || !std::isfinite(y)) return;
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    };
    for (const auto& s : series_)
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        const double e = i < s.error.size() && std::isfinite(s.error[i]) ? s.error[i] : 0.0;
        take(s.points[i].x, s.points[i].y - e);
        take(s.points[i].x, s.points[i].y + e);
      }
    for (const auto& b : bars_)
      for (std::size_t i = 0; i < b.height.size(); ++i) {
        take(b.lo[i], 0.0);
        take(b.hi[i], b.height[i]);
      }
    for (const auto& h : hlines_) take(x0 == inf() ? 0.0 : x0, h.y);
    if (x0 == inf()) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (identity_) {
      x0 = y0 = std::min(x0, y0);
      x1 = y1 = std::max(x1, y1);
    }
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double padx = 0.04 * (x1 - x0), pady = 0.04 * (y1 - y0);
    x0 -= padx, x1 += padx, y0 -= pady, y1 += pady;

    const double left = 70, right = 20, top = 40, bottom = 55;
    const double pw = width - left - right, ph = height - top - bottom;
    auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::string o;
    o += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" viewBox=\"0 0 %g %g\">\n", width, height,
             width, height);
    o += fmt("<rect x=\"0\" y=\"0\" width=\"%g\" height=\"%g\" fill=\"white\"/>\n", width, height);
    o += fmt("<text x=\"%g\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">", width / 2) +
         escape(title_) + "</text>\n";
    o += fmt("<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n", left, top, pw, ph);
    for (int t = 0; t <= 5; ++t) {
      const double xv = x0 + (x1 - x0) * t / 5.0, yv = y0 + (y1 - y0) * t / 5.0;
      o += fmt("<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">%.3g</text>\n",
               sx(xv), top + ph + 16, xv);
      o += fmt("<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">%.3g</text>\n",
               left - 6, sy(yv) + 4, yv);
    }
    o += fmt("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">", left + pw / 2,
             height - 12) +
         escape(x_label_) + "</text>\n";
    o += fmt("<text x=\"16\" y=\"%g\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
             "transform=\"rotate(-90 16 %g)\">",
             top + ph / 2, top + ph / 2) +
         escape(y_label_) + "</text>\n";

    if (identity_)
      o += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n", sx(x0),
               sy(x0), sx(x1), sy(x1));
    for (const auto& b : bars_)
      for (std::size_t i = 0; i < b.height.size(); ++i) {
        const double yt = sy(std::max(0.0, b.height[i])), yb = sy(std::max(y0, 0.0));
        o += fmt("<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\" stroke=\"white\"/>\n", sx(b.lo[i]), yt,
                 sx(b.hi[i]) - sx(b.lo[i]), std::max(0.0, yb - yt), b.color.c_str());
      }
    for (const auto& h : hlines_) {
      o += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" stroke-dasharray=\"6 3\"/>\n", left,
               sy(h.y), left + pw, sy(h.y), h.color.c_str());
      if (!h.label.empty())
        o += fmt("<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"11\" fill=\"%s\">", left + 4, sy(h.y) - 4,
                 h.color.c_str()) +
             escape(h.label) + "</text>\n";
    }
    for (const auto& s : series_) {
      if (s.line && s.points.size() > 1) {
        std::string path;
        for (const auto& p : s.points) {
          if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
          path += fmt(path.empty() ? "M%.2f %.2f" : " L%.2f %.2f", sx(p.x), sy(p.y));
        }
        o += "<path d=\"" + path + "\" fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\"/>\n";
      }
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        const auto& p = s.points[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
        if (i < s.error.size() && std::isfinite(s.error[i]) && s.error[i] > 0)
          o += fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\"/>\n", sx(p.x), sy(p.y - s.error[i]),
                   sx(p.x), sy(p.y + s.error[i]), s.color.c_str());
        if (s.markers)
          o += fmt("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\" fill=\"%s\"/>\n", sx(p.x), sy(p.y), s.color.c_str());
      }
    }
    double ly = top + 14;
    for (const auto& s : series_) {
      if (s.label.empty()) continue;
      o += fmt("<rect x=\"%.2f\" y=\"%.2f\" width=\"10\" height=\"10\" fill=\"%s\"/>\n", left + pw - 150, ly - 9, s.color.c_str());
      o += fmt("<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"11\">", left + pw - 135, ly) + escape(s.label) +
           "</text>\n";
      ly += 15;
    }
    for (const auto& n : notes_) {
      o += fmt("<text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" font-size=\"11\">", left + 8, ly) + escape(n) + "</text>\n";
      ly += 15;
    }
    o += "</svg>\n";
    return o;
  }

 private:
  static double inf() { return std::numeric_limits<double>::infinity(); }

  template <typename... A>
  static std::string fmt(const char* f, A... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
  }

  static std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '&') o += "&amp;";
      else if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '"') o += "&quot;";
      else o += c;
    }
    return o;
  }

  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  std::vector<Bars> bars_;
  std::vector<HLine> hlines_;
  std::vector<std::string> notes_;
  bool identity_ = false;
};

}  // namespace chemocal::svg
