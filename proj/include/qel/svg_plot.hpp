#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "qel/error.hpp"
#include "qel/series_io.hpp"

namespace qel {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title, x_label, y_label;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

namespace detail {

inline std::string svg_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '<') out += "&lt;";
    else if (ch == '>') out += "&gt;";
    else if (ch == '&') out += "&amp;";
    else out += ch;
  }
  return out;
}

}  // namespace detail

/// Static line plot as SVG. Non-finite points (and nonpositive ones on a log
/// axis) break the polyline.
inline void write_svg_plot(const PlotSpec& spec, const std::string& path) {
  const double W = 640, H = 420, ml = 70, mr = 150, mt = 40, mb = 50;
  auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
  auto usable = [&](double v) { return std::isfinite(v) && (!spec.log_y || v > 0.0); };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : spec.series)
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!std::isfinite(s.x[k]) || !usable(s.y[k])) continue;
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, ty(s.y[k]));
      y1 = std::max(y1, ty(s.y[k]));
    }
  if (!(x0 <= x1)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = W - ml - mr, ph = H - mt - mb;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ofstream os(path);
  if (!os) throw Error("cannot open plot for writing: " + path);
  using detail::svg_number;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
     << detail::svg_escape(spec.title) << "</text>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 18 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
       << svg_number(xv) << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << (spec.log_y ? "1e" + svg_number(yv) : svg_number(yv)) << "</text>\n";
  }
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
     << detail::svg_escape(spec.x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << mt + ph / 2 << "\" transform=\"rotate(-90 16 " << mt + ph / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << detail::svg_escape(spec.y_label)
     << "</text>\n";
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const auto& ser = spec.series[s];
    const char* col = colors[s % 6];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
      pts.clear();
    };
    for (std::size_t k = 0; k < ser.x.size() && k < ser.y.size(); ++k) {
      if (!std::isfinite(ser.x[k]) || !usable(ser.y[k])) {
        flush();
        continue;
      }
      pts += svg_number(px(ser.x[k])) + "," + svg_number(py(ty(ser.y[k]))) + " ";
      // isolated points still show as a dot
      os << "<circle cx=\"" << svg_number(px(ser.x[k])) << "\" cy=\"" << svg_number(py(ty(ser.y[k])))
         << "\" r=\"2\" fill=\"" << col << "\"/>\n";
    }
    flush();
    os << "<text x=\"" << W - mr + 10 << "\" y=\"" << mt + 16 * (s + 1) << "\" fill=\"" << col
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::svg_escape(ser.label) << "</text>\n";
  }
  os << "</svg>\n";
  if (!os) throw Error("write failure on plot: " + path);
}

/// Q(t), C(t), the E components and 1/Q(t) from a recorded series; returns
/// the written paths.
inline std::vector<std::string> write_series_plots(const std::vector<DiagnosticsRecord>& rec,
                                                   const std::string& dir) {
  if (rec.empty()) throw std::invalid_argument("no records to plot");
  std::vector<double> t;
  for (const auto& r : rec) t.push_back(r.t);
  auto column = [&](double DiagnosticsRecord::*m) {
    std::vector<double> v;
    for (const auto& r : rec) v.push_back(r.*m);
    return v;
  };
  std::vector<double> invQ;
  for (const auto& r : rec) invQ.push_back(r.Q != 0.0 ? 1.0 / r.Q : std::numeric_limits<double>::quiet_NaN());

  std::vector<std::string> paths;
  auto emit = [&](const std::string& name, PlotSpec spec) {
    const std::string p = dir + "/" + name;
    write_svg_plot(spec, p);
    paths.push_back(p);
  };
  emit("Q.svg", {"tracked score Q(t)", "t", "Q", false, {{"Q", t, column(&DiagnosticsRecord::Q)}}});
  emit("C.svg", {"source strength C(t)", "t", "C", false, {{"C", t, column(&DiagnosticsRecord::C)}}});
  emit("E_components.svg",
       {"master error components", "t", "value (log)", true,
        {{"delta_jet", t, column(&DiagnosticsRecord::delta_jet)},
         {"mu", t, column(&DiagnosticsRecord::mu)},
         {"Rprof", t, column(&DiagnosticsRecord::Rprof)},
         {"rho", t, column(&DiagnosticsRecord::rho)},
         {"eps_strain", t, column(&DiagnosticsRecord::eps_strain)},
         {"E", t, column(&DiagnosticsRecord::E)}}});
  emit("inverse_Q.svg", {"1/Q(t)", "t", "1/Q", false, {{"1/Q", t, invQ}}});
  return paths;
}

}  // namespace qel
