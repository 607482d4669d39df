#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "conditioned.hpp"
#include "hitting.hpp"
#include "sde_engine.hpp"

namespace besq {

inline std::string fmt17(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

inline std::string path_csv(const PathSample& p) {
  std::ostringstream o;
  o << "t";
  for (int i = 0; i < p.n(); ++i) o << ",x" << i + 1;
  o << "\n";
  for (std::size_t k = 0; k < p.times.size(); ++k) {
    o << fmt17(p.times[k]);
    for (int i = 0; i < p.n(); ++i) o << "," << fmt17(p.values[i][k]);
    o << "\n";
  }
  return o.str();
}

inline std::string conditioned_csv(const ConditionedPair& c) {
  std::ostringstream o;
  o << "t,x1,x2\n";
  for (std::size_t k = 0; k < c.times.size(); ++k)
    o << fmt17(c.times[k]) << "," << fmt17(c.x1[k]) << "," << fmt17(c.x2[k]) << "\n";
  return o.str();
}

inline std::string survival_csv(const SurvivalCurve& c) {
  std::ostringstream o;
  o << "t,alive,total,p_hat,ci_lo,ci_hi\n";
  for (std::size_t k = 0; k < c.t.size(); ++k)
    o << fmt17(c.t[k]) << "," << c.alive[k] << "," << c.total << "," << fmt17(c.p_hat[k]) << "," << fmt17(c.ci_lo[k])
      << "," << fmt17(c.ci_hi[k]) << "\n";
  return o.str();
}

inline nlohmann::ordered_json fit_json(const ExponentFit& f) {
  nlohmann::ordered_json j;
  j["theta_hat"] = f.theta_hat;
  j["stderr"] = f.stderr_;
  j["window"] = {f.t_min, f.t_max};
  j["r_squared"] = f.r_squared;
  j["frame"] = std::string(frame_name(f.frame));
  j["epsilon"] = f.epsilon;
  return j;
}

struct Series {
  std::string label;
  std::vector<double> x, y;
};

/// Minimal SVG line chart; non-finite or (on log axes) nonpositive points are skipped.
inline std::string svg_chart(const std::vector<Series>& series, const std::string& title, bool log_x = false,
                             bool log_y = false) {
  const double W = 720, H = 440, L = 70, R = 20, T = 40, B = 50;
  auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  auto ok = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!log_x || x > 0) && (!log_y || y > 0);
  };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t k = 0; k < s.x.size(); ++k)
      if (ok(s.x[k], s.y[k])) {
        x0 = std::min(x0, tx(s.x[k])), x1 = std::max(x1, tx(s.x[k]));
        y0 = std::min(y0, ty(s.y[k])), y1 = std::max(y1, ty(s.y[k]));
      }
  if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
  if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">" << title << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  char buf[64];
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
    std::snprintf(buf, sizeof buf, log_x ? "1e%.2g" : "%.3g", xv);
    o << "<text x=\"" << L + (W - L - R) * k / 4 << "\" y=\"" << H - B + 18
      << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << buf << "</text>\n";
    std::snprintf(buf, sizeof buf, log_y ? "1e%.2g" : "%.3g", yv);
    o << "<text x=\"" << L - 6 << "\" y=\"" << H - B - (H - T - B) * k / 4 + 4
      << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << buf << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* col = colors[s % 6];
    o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t k = 0; k < series[s].x.size(); ++k)
      if (ok(series[s].x[k], series[s].y[k])) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(series[s].x[k]), py(series[s].y[k]));
        o << buf;
      }
    o << "\"/>\n";
    o << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 + 14 * s << "\" fill=\"" << col
      << "\" font-size=\"12\" font-family=\"sans-serif\">" << series[s].label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Reads a numeric CSV with a header line back into columns.
inline std::vector<std::vector<double>> read_csv_columns(const std::string& path, std::vector<std::string>* header) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(f, line);
  std::vector<std::string> names;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) names.push_back(cell);
  }
  std::vector<std::vector<double>> cols(names.size());
  while (std::getline(f, line)) {
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t c = 0; c < names.size() && std::getline(ss, cell, ','); ++c) cols[c].push_back(std::stod(cell));
  }
  if (header) *header = names;
  return cols;
}

}  // namespace besq
