#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "errors.hpp"

namespace besq {

enum class BoundKind { trivial, theorem13, remark41, k_collision };

inline std::string_view bound_kind_name(BoundKind k) {
  switch (k) {
    case BoundKind::trivial: return "trivial";
    case BoundKind::theorem13: return "theorem13";
    case BoundKind::remark41: return "remark41";
    case BoundKind::k_collision: return "k-collision";
  }
  return "?";
}

struct ThetaBounds {
  double lower;
  double upper;
  BoundKind kind;
};

struct NegDimResult {
  double theta;
  double c_n;
};

/// Tail constant: P(T0 > t) ~ c_x t^{-(1 - delta/2)} for a single process from x.
inline double c_const(double x, double delta) {
  if (!(x > 0.0)) throw domain_error("c_const needs x > 0");
  if (!(delta < 2.0)) throw domain_error("c_const needs delta < 2");
  const double nu = 1.0 - 0.5 * delta;
  return std::pow(x, nu) / (std::pow(2.0, nu) * nu * std::tgamma(nu));
}

/// Exact P(T0 > t) for one process from x (regularized lower incomplete gamma).
inline double single_survival_exact(double x, double delta, double t) {
  if (!(x > 0.0) || !(delta < 2.0)) throw domain_error("single_survival_exact domain");
  if (t <= 0.0) return 1.0;
  return boost::math::gamma_p(1.0 - 0.5 * delta, x / (2.0 * t));
}

enum class AsymptoteKind { single, pair };

inline double survival_asymptote(AsymptoteKind kind, double x_total, double delta, double t) {
  if (!(t > 0.0)) throw domain_error("t must be positive");
  if (kind == AsymptoteKind::single) return c_const(x_total, delta) * std::pow(t, -(1.0 - 0.5 * delta));
  if (!(delta > 0.0)) throw domain_error("pair asymptote needs delta in (0,1)");
  if (delta >= 1.0) throw domain_error("transient intersection: pairs never meet for delta >= 1");
  return c_const(x_total, 2.0 * delta) * std::pow(t, -(1.0 - delta));
}

inline void check_unit_delta(double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) throw domain_error("delta must lie in [0,1]");
}

inline ThetaBounds trivial_theta_bounds(int n, double delta) {
  if (n < 2) throw domain_error("n must be at least 2");
  check_unit_delta(delta);
  return {(n / 2) * (1.0 - delta), n * (1.0 - 0.5 * delta) - 1.0, BoundKind::trivial};
}

// The roots below are written in rationalized form, which is exact algebra and
// avoids cancellation when the square root is close to 6 - 5 delta.
inline double f_of_delta(double delta) {
  check_unit_delta(delta);
  const double b = 6.0 - 5.0 * delta;
  const double r = 8.0 * delta * (1.0 - delta);
  return 0.25 * r / (std::sqrt(b * b + r) + b);
}

inline double a_of_delta(double delta) {
  check_unit_delta(delta);
  const double b = 6.0 - 5.0 * delta;
  return 2.0 * delta / (std::sqrt(b * b + 8.0 * delta * (1.0 - delta)) + b);
}

/// At delta = 1 the quadratic for a degenerates and a(1) = 1 is the continuous limit.
inline bool a_of_delta_degenerate(double delta) { return delta == 1.0; }

struct PolyF {
  double f1;
  double f2;
};

inline PolyF poly_f(double a, double delta) {
  const double q = 2.0 * (1.0 - delta) * a * a + (6.0 - 5.0 * delta) * a;
  return {q - delta, -q + 8.0 - 7.0 * delta};
}

inline ThetaBounds theta3_bounds(double delta) {
  check_unit_delta(delta);
  return {2.0 * (1.0 - delta), 2.0 * (1.0 - delta) + f_of_delta(delta), BoundKind::theorem13};
}

/// Bounds valid for any n >= 3; n = 3 uses the sharper upper bound.
inline ThetaBounds theorem13_bounds(int n, double delta) {
  if (n < 3) throw domain_error("n must be at least 3");
  if (n == 3) return theta3_bounds(delta);
  check_unit_delta(delta);
  return {(n - 1) * (1.0 - delta), n * (1.0 - 0.5 * delta) - 1.0, BoundKind::theorem13};
}

/// Conjectured refinement of the n = 3 upper bound (not proven).
inline double theta_plus_remark41(double delta) {
  check_unit_delta(delta);
  const double b = 6.0 - 5.0 * delta;
  const double r = 144.0 * delta * delta * (1.0 - delta) / (16.0 + 9.0 * delta);
  return 2.0 * (1.0 - delta) + 0.25 * r / (std::sqrt(b * b + r) + b);
}

inline ThetaBounds remark41_bounds(double delta) {
  return {2.0 * (1.0 - delta), theta_plus_remark41(delta), BoundKind::remark41};
}

inline double k_collision_lower_bound(int n, int k, double delta) {
  if (k < 1 || k > n) throw domain_error("k must lie in 1..n");
  return (n - k + 1) * (1.0 - 0.5 * k * delta);
}

inline bool k_collision_vacuous(int n, int k, double delta) { return k_collision_lower_bound(n, k, delta) <= 0.0; }

inline NegDimResult theta_negative_dim(int n, double delta, const std::vector<double>& x) {
  if (n < 2 || static_cast<int>(x.size()) != n) throw domain_error("need n >= 2 coordinates");
  if (delta > 0.0) throw domain_error("negative-dimension result needs delta <= 0");
  std::vector<double> c(n);
  for (int i = 0; i < n; ++i) {
    if (!(x[i] > 0.0)) throw domain_error("all coordinates must be positive");
    c[i] = c_const(x[i], delta);
  }
  double cn = 0.0;
  for (int j = 0; j < n; ++j) {
    double prod = 1.0;
    for (int i = 0; i < n; ++i)
      if (i != j) prod *= c[i];
    cn += prod;
  }
  return {(n - 1) * (1.0 - 0.5 * delta), cn};
}

/// P(H > t) for absorbed coordinates: at least n-1 of them still positive at t.
inline double negdim_survival_exact(double delta, const std::vector<double>& x, double t) {
  const int n = static_cast<int>(x.size());
  std::vector<double> p(n);
  for (int i = 0; i < n; ++i) p[i] = single_survival_exact(x[i], delta, t);
  double all = 1.0, sum = 0.0;
  for (double v : p) all *= v;
  for (int j = 0; j < n; ++j) {
    double prod = 1.0;
    for (int i = 0; i < n; ++i)
      if (i != j) prod *= p[i];
    sum += prod;
  }
  return sum - (n - 1) * all;
}

inline double mu_from_theta(double theta, double delta) { return -theta * (theta - 1.0 + 1.5 * delta); }

struct Maximum {
  double arg;
  double value;
};

/// Grid scan then golden-section refinement around the best grid cell.
inline Maximum maximize(const std::function<double(double)>& g, double lo, double hi, int grid = 1000,
                        double tol = 1e-9) {
  int best = 0;
  double best_v = g(lo);
  for (int i = 1; i <= grid; ++i) {
    const double v = g(lo + (hi - lo) * i / grid);
    if (v > best_v) best_v = v, best = i;
  }
  const double h = (hi - lo) / grid;
  double a = std::max(lo, lo + (best - 1) * h), b = std::min(hi, lo + (best + 1) * h);
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double gc = g(c), gd = g(d);
  while (b - a > tol) {
    if (gc > gd) {
      b = d, d = c, gd = gc;
      c = b - r * (b - a), gc = g(c);
    } else {
      a = c, c = d, gc = gd;
      d = a + r * (b - a), gd = g(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, g(x)};
}

}  // namespace besq
