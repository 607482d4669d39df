#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "functionals.hpp"
#include "rng.hpp"
#include "sde_engine.hpp"

namespace besq {

struct CheckRow {
  std::string suite;
  std::string check;
  double value;
  double tolerance;
  bool pass;
};

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline std::vector<double> random_state(RngStream& rng, int n, double lo, double hi) {
  std::vector<double> x(n);
  for (double& v : x) v = lo + (hi - lo) * rng.uniform();
  return x;
}

/// Closed-form derivative sums of both functionals against central differences.
inline std::vector<CheckRow> derivative_identity_suite(std::uint64_t seed, int points = 1000, double tol = 1e-6) {
  RngStream rng(seed, 0);
  double r1 = 0, r2 = 0, r3 = 0, u1 = 0, u3 = 0;
  for (int k = 0; k < points; ++k) {
    const auto x = random_state(rng, 3, 0.2, 5.0);
    const double a = rng.uniform();
    const auto cf = aux_lower(x, 0.5, a);
    const auto fd = finite_difference_oracle({FunctionalId::lower, a}, x, default_fd_step(x));
    r1 = std::max(r1, rel_diff(fd.grad_sum, cf.D1));
    r2 = std::max(r2, rel_diff(fd.diag_sum, cf.D2));
    r3 = std::max(r3, rel_diff(fd.square_sum, cf.Y));
    const int n = 3 + k % 3;
    const auto y = random_state(rng, n, 0.2, 5.0);
    const auto up = aux_upper(y, 0.5);
    const auto fu = finite_difference_oracle({FunctionalId::upper, 0.0}, y, default_fd_step(y));
    u1 = std::max(u1, rel_diff(fu.grad_sum, 2.0 * elementary_symmetric(y, n - 2)));
    u3 = std::max(u3, rel_diff(fu.square_sum, up.Y));
  }
  // Residual decay under step halving, without extrapolation.
  const std::vector<double> x0{1.0, 2.0, 3.0};
  const auto cf = aux_lower(x0, 0.5, 0.3);
  auto resid = [&](double h) {
    const auto fd = finite_difference_oracle({FunctionalId::lower, 0.3}, x0, h, false);
    return std::abs(fd.diag_sum - cf.D2) + std::abs(fd.grad_sum - cf.D1) + std::abs(fd.square_sum - cf.Y);
  };
  const double ratio = resid(1e-2) / resid(5e-3);
  return {
      {"derivatives", "lower: sum of first derivatives", r1, tol, r1 < tol},
      {"derivatives", "lower: sum x_i times second derivatives", r2, tol, r2 < tol},
      {"derivatives", "lower: sum x_i times squared first derivatives", r3, tol, r3 < tol},
      {"derivatives", "upper n=3..5: sum of first derivatives = 2 Pi_{n-2}", u1, tol, u1 < tol},
      {"derivatives", "upper n=3..5: Y closed form", u3, tol, u3 < tol},
      {"derivatives", "residual ratio under step halving (second order => 4)", ratio, 1.0,
       std::abs(ratio - 4.0) < 1.0},
  };
}

inline double split_test_fn_1(double u, double v) { return u + 2.0 * v + u * u; }
inline double split_test_fn_2(double u, double v) { return std::exp(u) * (1.0 + v) - 3.0 * u * v; }

/// Radial/angular split of the symmetric generator, the angular domain, and its corner.
inline std::vector<CheckRow> angular_suite(std::uint64_t seed, int points = 100, double tol = 1e-5) {
  RngStream rng(seed, 1);
  double worst = 0;
  for (int k = 0; k < points; ++k) {
    const auto x = random_state(rng, 3, 0.2, 2.0);
    const auto c = symmetric_coords(x);
    const double theta = 2.0 * rng.uniform(), delta = rng.uniform();
    for (auto fn : {split_test_fn_1, split_test_fn_2})
      worst = std::max(worst, generator_split_residual(theta, delta, fn, c.S, c.A, c.P).residual);
  }
  const double constant = generator_split_residual(0.0, 0.5, [](double, double) { return 1.0; }, 2.0, 1.0, 0.1).residual;
  const double corner = std::abs(angular_discriminant(1.0 / 3.0, 1.0 / 27.0));

  long outside = 0, visited = 0;
  ModelParams p{3, 0.5, {1.0, 1.0, 1.0}};
  const auto grid = uniform_grid(10.0, 1000);
  for (int r = 0; r < 20; ++r) {
    p.x0 = random_state(rng, 3, 0.0, 2.0);
    RngStream path_rng(seed, 100 + r);
    const auto path = simulate_paths(p, grid, Scheme::exact, path_rng);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const std::vector<double> y{path.values[0][k], path.values[1][k], path.values[2][k]};
      if (!(y[0] + y[1] + y[2] > 0.0)) continue;
      ++visited;
      outside += !angular_state(y).in_domain;
    }
  }
  return {
      {"angular", "split residual, two test functions", worst, tol, worst < tol},
      {"angular", "constants are harmonic", constant, 1e-12, constant < 1e-12},
      {"angular", "discriminant at corner (1/3, 1/27)", corner, 1e-12, corner < 1e-12},
      {"angular", "fraction of simulated states outside the domain", visited ? double(outside) / visited : 1.0, 0.0,
       visited > 0 && outside == 0},
  };
}

inline std::vector<CheckRow> algebra_suite() {
  double e1 = 0, e2 = 0, arange = 0;
  for (int i = 0; i <= 1000; ++i) {
    const double d = i / 1000.0;
    const double a = a_of_delta(d);
    const auto f = poly_f(a, d);
    e1 = std::max(e1, std::abs(f.f1));
    e2 = std::max(e2, std::abs(f.f2 - 8.0 * (1.0 - d)));
    if (a < 0.0 || a > 1.0) arange = 1;
  }
  const auto fmax = maximize(f_of_delta, 0.0, 1.0);
  const auto gmax = maximize([](double d) { return theta_plus_remark41(d) - 2.0 * (1.0 - d); }, 0.0, 1.0);
  return {
      {"algebra", "max |f1(a(delta), delta)|", e1, 1e-12, e1 < 1e-12},
      {"algebra", "max |f2(a(delta), delta) - 8(1-delta)|", e2, 1e-12, e2 < 1e-12},
      {"algebra", "a(delta) outside [0,1] on grid", arange, 0.0, arange == 0},
      {"algebra", "max of f over [0,1] (0.079)", fmax.value, 1e-3, std::abs(fmax.value - 0.079) <= 1e-3},
      {"algebra", "max refinement gap (0.048)", gmax.value, 1e-3, std::abs(gmax.value - 0.048) <= 1e-3},
  };
}

/// Effective-dimension and speed bounds of both functionals on random positive states.
inline std::vector<CheckRow> dimension_bound_suite(std::uint64_t seed, int states = 10000) {
  RngStream rng(seed, 2);
  long upper_bad = 0, v_bad = 0, lower_d_bad = 0, lower_v_bad = 0;
  double worst_lower_d = 1e300, max_v_ratio = 0;
  for (int k = 0; k < states; ++k) {
    const double delta = rng.uniform();
    for (int n = 3; n <= 5; ++n) {
      const auto x = random_state(rng, n, 0.0, 10.0);
      const auto r = aux_upper(x, delta);
      if (!(r.D > 0.0 && r.D <= 2.0 * delta * (1 + 1e-15))) ++upper_bad;
      const double pi = elementary_symmetric(x, n - 2);
      if (!(r.V >= pi * (1 - 1e-14) && r.V <= 2.0 * pi * (1 + 1e-14))) ++v_bad;
    }
    const auto x = random_state(rng, 3, 0.0, 10.0);
    const double a = a_of_delta(delta);
    const auto r = aux_lower(x, delta, a);
    const double S = x[0] + x[1] + x[2];
    worst_lower_d = std::min(worst_lower_d, r.D - 2.0 * delta);
    if (r.D < 2.0 * delta - 1e-12) ++lower_d_bad;
    const double ratio = r.V / std::pow(S, a + 1.0);
    max_v_ratio = std::max(max_v_ratio, ratio);
    if (ratio > 4.5) ++lower_v_bad;
  }
  return {
      {"dimension", "upper: states with D outside (0, 2 delta]", double(upper_bad), 0, upper_bad == 0},
      {"dimension", "upper: states with V outside [Pi_{n-2}, 2 Pi_{n-2}]", double(v_bad), 0, v_bad == 0},
      {"dimension", "lower: min of D - 2 delta", worst_lower_d, -1e-12, lower_d_bad == 0},
      {"dimension", "lower: max V / S^(a+1) (bound 4.5)", max_v_ratio, 4.5, lower_v_bad == 0},
  };
}

}  // namespace besq
