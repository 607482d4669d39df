#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "errors.hpp"

namespace besq {

/// e[k] = Pi_k(x) for k = 0..kmax, by the usual one-coordinate-at-a-time recurrence.
inline std::vector<double> elementary_symmetric_all(const std::vector<double>& x, int kmax) {
  std::vector<double> e(kmax + 1, 0.0);
  e[0] = 1.0;
  for (double v : x)
    for (int m = kmax; m >= 1; --m) e[m] += v * e[m - 1];
  return e;
}

inline double elementary_symmetric(const std::vector<double>& x, int k) {
  const int n = static_cast<int>(x.size());
  if (k < 1 || k > n) throw domain_error("k must lie in 1..n");
  return elementary_symmetric_all(x, k)[k];
}

struct SymmetricCoords {
  double S, A, P;
};

inline SymmetricCoords symmetric_coords(const std::vector<double>& x) {
  if (x.size() != 3) throw domain_error("symmetric coordinates need 3 values");
  return {x[0] + x[1] + x[2], x[0] * x[1] + x[1] * x[2] + x[2] * x[0], x[0] * x[1] * x[2]};
}

struct AuxReadout {
  double Z = 0, Y = 0, V = 0, D = 0;
  double Q = std::numeric_limits<double>::quiet_NaN();
  double D1 = 0, D2 = 0;  // sum of first derivatives, sum of x_i times second derivatives
};

/// Functional Pi_{n-1}. Y uses the leave-one-out form sum_i x_i Pi_{n-2}(x without i)^2.
inline AuxReadout aux_upper(const std::vector<double>& x, double delta) {
  const int n = static_cast<int>(x.size());
  if (n < 2) throw domain_error("upper functional needs n >= 2");
  AuxReadout r;
  r.Z = elementary_symmetric_all(x, n - 1)[n - 1];
  std::vector<double> rest(n - 1);
  double d1 = 0.0, y = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0, m = 0; j < n; ++j)
      if (j != i) rest[m++] = x[j];
    const double g = elementary_symmetric_all(rest, n - 2)[n - 2];
    d1 += g;
    y += x[i] * g * g;
  }
  r.Y = y;
  r.D1 = d1;
  r.D2 = 0.0;
  if (r.Z > 0.0) {
    r.V = r.Y / r.Z;
    r.D = delta * r.D1 / r.V;
    return r;
  }
  double s = 0.0;
  for (double v : x) s += v;
  if (n == 3 && s > 0.0) {
    r.V = std::numeric_limits<double>::infinity();
    r.D = 0.0;
    return r;
  }
  throw boundary_error("state on the collision set: upper functional vanishes");
}

/// Functional S^a (A - P/S) for n = 3, via its closed forms.
inline AuxReadout aux_lower(const std::vector<double>& x, double delta, double a) {
  if (x.size() != 3) throw domain_error("lower functional needs 3 coordinates");
  const auto [S, A, P] = symmetric_coords(x);
  if (!(S > 0.0)) throw singular_origin("lower functional is singular at the origin");
  const double w = (x[0] + x[1]) * (x[1] + x[2]) * (x[2] + x[0]) / S;  // A - P/S
  const double ps = P / S;
  const double sa1 = std::pow(S, a - 1.0);
  AuxReadout r;
  r.Q = S * S + a * (a + 4.0) * A + (1.0 - a) * (a + 5.0) * ps;
  r.Z = sa1 * S * w;
  r.Y = sa1 * sa1 * S * w * r.Q;
  r.V = sa1 * r.Q;
  r.D = (2.0 * delta * S * S + (delta * (3.0 * a - 1.0) + 2.0 * a * (a + 3.0)) * A +
         (1.0 - a) * (3.0 * delta + 2.0 * (a + 4.0)) * ps) /
        r.Q;
  r.D1 = sa1 * (2.0 * S * S + (3.0 * a - 1.0) * A + 3.0 * (1.0 - a) * ps);
  r.D2 = sa1 * (a * (a + 3.0) * A + (1.0 - a) * (a + 4.0) * ps);
  return r;
}

struct FunctionalId {
  enum Kind { upper, lower } kind = upper;
  double a = 0.0;

  double operator()(const std::vector<double>& x) const {
    if (kind == upper) return elementary_symmetric(x, static_cast<int>(x.size()) - 1);
    const auto [S, A, P] = symmetric_coords(x);
    return std::pow(S, a) * (A - P / S);
  }
};

struct DerivativeSums {
  double grad_sum;    // sum_i d phi / dx_i
  double diag_sum;    // sum_i x_i d^2 phi / dx_i^2
  double square_sum;  // sum_i x_i (d phi / dx_i)^2, i.e. Y
};

inline double default_fd_step(const std::vector<double>& x) {
  double m = 1.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return 1e-3 * m;
}

/// Central differences, optionally Richardson-extrapolated once (h and h/2).
inline DerivativeSums finite_difference_oracle(const FunctionalId& phi, const std::vector<double>& x, double h,
                                               bool richardson = true) {
  if (!(h > 0.0)) throw domain_error("step must be positive");
  for (double v : x)
    if (!(v > h)) throw domain_error("coordinates must exceed the step");
  const double f0 = phi(x);
  auto derivs = [&](std::size_t i, double step) {
    std::vector<double> y = x;
    y[i] = x[i] + step;
    const double fp = phi(y);
    y[i] = x[i] - step;
    const double fm = phi(y);
    return std::pair{(fp - fm) / (2.0 * step), (fp - 2.0 * f0 + fm) / (step * step)};
  };
  DerivativeSums out{0, 0, 0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto [d1, d2] = derivs(i, h);
    if (richardson) {
      auto [e1, e2] = derivs(i, 0.5 * h);
      d1 = (4.0 * e1 - d1) / 3.0;
      d2 = (4.0 * e2 - d2) / 3.0;
    }
    out.grad_sum += d1;
    out.diag_sum += x[i] * d2;
    out.square_sum += x[i] * d1 * d1;
  }
  return out;
}

struct AngularState {
  double abar;
  double pbar;
  double discriminant;
  bool in_domain;
};

inline double angular_discriminant(double a, double p) {
  return -4.0 * a * a * a + a * a + 18.0 * a * p - 4.0 * p - 27.0 * p * p;
}

inline AngularState angular_state(const std::vector<double>& x, double tol = 1e-12) {
  const auto [S, A, P] = symmetric_coords(x);
  if (!(S > 0.0)) throw singular_origin("angular coordinates need S > 0");
  AngularState st;
  st.abar = A / (S * S);
  st.pbar = P / (S * S * S);
  st.discriminant = angular_discriminant(st.abar, st.pbar);
  st.in_domain = st.pbar >= -tol && st.pbar * st.discriminant >= -tol;
  return st;
}

using AngularFn = std::function<double(double, double)>;

struct SplitResidual {
  double lhs;
  double rhs;
  double residual;
};

/// Second-order central stencil for a function of three variables.
struct Stencil3 {
  std::function<double(double, double, double)> f;
  double h[3];
  double at(const double* z, int i, double di, int j = -1, double dj = 0.0) const {
    double y[3] = {z[0], z[1], z[2]};
    y[i] += di * h[i];
    if (j >= 0) y[j] += dj * h[j];
    return f(y[0], y[1], y[2]);
  }
  double d1(const double* z, int i) const { return (at(z, i, 1) - at(z, i, -1)) / (2 * h[i]); }
  double d2(const double* z, int i) const { return (at(z, i, 1) - 2 * f(z[0], z[1], z[2]) + at(z, i, -1)) / (h[i] * h[i]); }
  double d11(const double* z, int i, int j) const {
    return (at(z, i, 1, j, 1) - at(z, i, 1, j, -1) - at(z, i, -1, j, 1) + at(z, i, -1, j, -1)) / (4 * h[i] * h[j]);
  }
};

/// Generator of (S, A, P) for three independent BESQ(delta) coordinates.
inline double symmetric_generator(const Stencil3& st, const double* z, double delta) {
  const double s = z[0], a = z[1], p = z[2];
  return 2 * s * st.d2(z, 0) + 2 * (s * a + 3 * p) * st.d2(z, 1) + 2 * a * p * st.d2(z, 2) + 8 * a * st.d11(z, 0, 1) +
         12 * p * st.d11(z, 0, 2) + 8 * p * s * st.d11(z, 1, 2) + 3 * delta * st.d1(z, 0) +
         2 * delta * s * st.d1(z, 1) + delta * a * st.d1(z, 2);
}

/// Angular generator acting on phi(u, v), u = A/S^2, v = P/S^3.
inline double angular_generator(const AngularFn& phi, double u, double v, double delta, double h) {
  Stencil3 st{[&](double x, double y, double) { return phi(x, y); }, {h * u, h * v, 1.0}};
  const double z[3] = {u, v, 0.0};
  return 2 * (u * (1 - 4 * u) + 3 * v) * st.d2(z, 0) + 2 * v * (u - 9 * v) * st.d2(z, 1) +
         8 * v * (1 - 3 * u) * st.d11(z, 0, 1) + 2 * (delta * (1 - 3 * u) - 2 * u) * st.d1(z, 0) +
         (delta * (u - 9 * v) - 12 * v) * st.d1(z, 1);
}

/// Both sides of the radial/angular split for psi(s,a,p) = s^theta phi(a/s^2, p/s^3).
/// Steps are relative to each coordinate, so the point must be strictly interior.
inline SplitResidual generator_split_residual(double theta, double delta, const AngularFn& phi, double s, double a,
                                              double p, double h = 1e-4) {
  if (!(h > 0.0)) throw domain_error("step must be positive");
  if (!(s > 0.0 && a > 0.0 && p > 0.0)) throw boundary_error("point must be interior to the positive cone");
  const double u = a / (s * s), v = p / (s * s * s);
  if (!(angular_discriminant(u, v) > 0.0)) throw boundary_error("angular point must be interior to the domain");
  Stencil3 psi{[&](double ss, double aa, double pp) {
                 return std::pow(ss, theta) * phi(aa / (ss * ss), pp / (ss * ss * ss));
               },
               {h * s, h * a, h * p}};
  const double z[3] = {s, a, p};
  SplitResidual r;
  r.lhs = symmetric_generator(psi, z, delta);
  Stencil3 radial{[&](double ss, double, double) { return std::pow(ss, theta); }, {h * s, 1.0, 1.0}};
  const double radial_part = 2 * s * radial.d2(z, 0) + 3 * delta * radial.d1(z, 0);
  r.rhs = phi(u, v) * radial_part + std::pow(s, theta) / s * angular_generator(phi, u, v, delta, h);
  r.residual = std::abs(r.lhs - r.rhs);
  return r;
}

}  // namespace besq
