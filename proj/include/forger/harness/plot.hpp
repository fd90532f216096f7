#ifndef FORGER_HARNESS_PLOT_HPP_
#define FORGER_HARNESS_PLOT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "forger/core.hpp"

namespace forger {

/// Trailing moving average; the first points average what is available.
inline std::vector<double> trailing_mean(const std::vector<double>& x, std::size_t window) {
  if (window == 0) throw ContractError("trailing_mean: window must be positive");
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum += x[i];
    if (i >= window) sum -= x[i - window];
    out[i] = sum / static_cast<double>(std::min(window, i + 1));
  }
  return out;
}

struct Curve {
  std::string label;
  std::vector<std::vector<double>> runs;  // one series per seed
};

struct CurveSummary {
  std::vector<double> mean, lo, hi;
};

/// Smooths every run, then takes mean/min/max over runs (truncated to the
/// shortest run).
inline CurveSummary summarize(const Curve& c, std::size_t window = 10) {
  CurveSummary s;
  if (c.runs.empty()) return s;
  std::size_t len = c.runs.front().size();
  for (const auto& r : c.runs) len = std::min(len, r.size());
  std::vector<std::vector<double>> smooth;
  for (const auto& r : c.runs) smooth.push_back(trailing_mean(std::vector<double>(r.begin(), r.begin() + len), window));
  s.mean.assign(len, 0.0);
  s.lo.assign(len, 0.0);
  s.hi.assign(len, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    double lo = smooth[0][i], hi = smooth[0][i], sum = 0.0;
    for (const auto& r : smooth) {
      lo = std::min(lo, r[i]);
      hi = std::max(hi, r[i]);
      sum += r[i];
    }
    s.mean[i] = sum / static_cast<double>(smooth.size());
    s.lo[i] = lo;
    s.hi[i] = hi;
  }
  return s;
}

/// Line chart: mean curve per label, min-max band when a curve has more
/// than one run.
inline void write_svg(std::ostream& os, const std::vector<Curve>& curves, const std::string& title,
                      const std::string& ylabel = "episode return", std::size_t window = 10) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  const double W = 720, H = 420, L = 70, R = 180, T = 40, B = 50;
  std::vector<CurveSummary> sums;
  double ymin = 0, ymax = 0, xmax = 1;
  bool first = true;
  for (const auto& c : curves) {
    sums.push_back(summarize(c, window));
    const auto& s = sums.back();
    for (std::size_t i = 0; i < s.mean.size(); ++i) {
      if (first) {
        ymin = s.lo[i];
        ymax = s.hi[i];
        first = false;
      }
      ymin = std::min(ymin, s.lo[i]);
      ymax = std::max(ymax, s.hi[i]);
    }
    xmax = std::max(xmax, static_cast<double>(s.mean.size() > 1 ? s.mean.size() - 1 : 1));
  }
  if (ymax - ymin < 1e-12) {
    ymax += 1.0;
    ymin -= 1.0;
  }
  auto px = [&](double x) { return L + (W - L - R) * x / xmax; };
  auto py = [&](double y) { return T + (H - T - B) * (1.0 - (y - ymin) / (ymax - ymin)); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << L << "\" y=\"22\" font-size=\"14\">" << title << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = ymin + (ymax - ymin) * i / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << num(y) << "</text>\n";
    const double x = xmax * i / 4.0;
    os << "<text x=\"" << num(px(x)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << static_cast<long>(std::lround(x))
       << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">episode</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
     << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& s = sums[c];
    const char* color = palette[c % (sizeof palette / sizeof *palette)];
    if (s.mean.empty()) continue;
    if (curves[c].runs.size() > 1) {
      os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.hi.size(); ++i) os << num(px(i)) << ',' << num(py(s.hi[i])) << ' ';
      for (std::size_t i = s.lo.size(); i-- > 0;) os << num(px(i)) << ',' << num(py(s.lo[i])) << ' ';
      os << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.mean.size(); ++i) os << num(px(i)) << ',' << num(py(s.mean[i])) << ' ';
    os << "\"/>\n";
    const double ly = T + 16.0 * c + 8;
    os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 36 << "\" y=\"" << ly + 4 << "\">" << curves[c].label << "</text>\n";
  }
  os << "</svg>\n";
}

inline void save_svg(const std::string& path, const std::vector<Curve>& curves, const std::string& title,
                     const std::string& ylabel = "episode return") {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_svg(os, curves, title, ylabel);
}

}  // namespace forger

#endif  // FORGER_HARNESS_PLOT_HPP_
