#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "errors.hpp"

namespace besq {

struct Interval {
  double lo;
  double hi;
};

/// 95% Wilson score interval for k successes out of n.
inline Interval wilson_interval(double k, double n, double z = 1.959963984540054) {
  if (n <= 0) return {0.0, 1.0};
  const double p = k / n, z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  return {std::max(0.0, std::min(p, centre - half)), std::min(1.0, std::max(p, centre + half))};
}

/// Asymptotic Kolmogorov tail P(K > lambda).
inline double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double distance;
  double p_value;
};

inline double ks_p_value(double d, double n_eff) {
  const double s = std::sqrt(n_eff);
  return kolmogorov_q((s + 0.12 + 0.11 / s) * d);
}

inline KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return {d, ks_p_value(d, n)};
}

/// Two-sample statistic; ties (including censoring atoms) are stepped over together.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb))};
}

inline double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw domain_error("quantile of empty sample");
  std::sort(x.begin(), x.end());
  const double pos = q * (x.size() - 1);
  const auto k = static_cast<std::size_t>(std::floor(pos));
  if (k + 1 >= x.size()) return x.back();
  return x[k] + (pos - k) * (x[k + 1] - x[k]);
}

struct MeanVar {
  double mean;
  double var;
};

/// Two-pass sample mean and unbiased variance.
inline MeanVar mean_var(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= x.size();
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return {m, x.size() > 1 ? s / (x.size() - 1) : 0.0};
}

}  // namespace besq
