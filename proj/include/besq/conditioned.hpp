#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "hitting.hpp"
#include "rng.hpp"
#include "sde_engine.hpp"

namespace besq {

/// Advances du = 2 sqrt(u(1-u)) dW + delta (1 - 2u) dt over dt in substeps no longer
/// than `cap`. Away from the boundaries a substep is truncated Euler. Within `layer` of
/// a boundary, w = min(u, 1-u) takes an exact CIR step for dw = delta(1 - 2w) dt +
/// 2 sqrt(w (1 - w0)) dW with the diffusion factor frozen at the current w0, which keeps
/// the square-root boundary behaviour that Euler misses.
inline double jacobi_transition_step(double u, double delta, double dt, RngStream& rng, double cap = 1e-3,
                                     double layer = 0.05) {
  if (dt <= 0.0) return u;
  const auto m = static_cast<long>(std::ceil(dt / cap));
  const double h = dt / static_cast<double>(m), sh = std::sqrt(h);
  const double kappa = 2.0 * delta, decay = std::exp(-kappa * h);
  for (long k = 0; k < m; ++k) {
    const bool low = u <= 0.5;
    double w = low ? u : 1.0 - u;
    if (w > layer) {
      const double v = u * (1.0 - u);
      u += delta * (1.0 - 2.0 * u) * h + 2.0 * std::sqrt(v) * sh * rng.normal();
      u = u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u);
      continue;
    }
    const double sig2 = 4.0 * (1.0 - w);
    const double c = sig2 * (1.0 - decay) / (4.0 * kappa);
    const auto pois = rng.poisson(0.5 * w * decay / c);
    w = 2.0 * c * rng.gamma(2.0 * delta / sig2 + static_cast<double>(pois));
    w = w > 1.0 ? 1.0 : w;
    u = low ? w : 1.0 - w;
  }
  return u;
}

struct JacobiExit {
  double u;
  bool exited;
};

/// Same diffusion, advanced until min(u, 1-u) < level or dt is used up. Substeps shrink
/// in proportion to the distance to the nearer boundary, and each substep is taken on
/// the square root of that distance, so approaches to tiny levels are resolved.
inline JacobiExit jacobi_advance_until(double u, double delta, double dt, double level, RngStream& rng,
                                       double cap = 1e-3, double rel = 0.02) {
  double left = dt;
  while (left > 0.0) {
    const bool low = u <= 0.5;
    double w = low ? u : 1.0 - u;
    if (w < level) return {u, true};
    double h = std::min({cap, rel * w, left});
    if (h >= left) h = left;
    left = (h == left) ? 0.0 : left - h;
    const double r = std::sqrt(w) + std::sqrt(h * (1.0 - w)) * rng.normal();
    w = (r > 0.0 ? r * r : 0.0) + (delta * (1.0 - 2.0 * w) - (1.0 - w)) * h;
    w = w < 0.0 ? 0.0 : (w > 1.0 ? 1.0 : w);
    u = low ? w : 1.0 - w;
  }
  return {u, std::min(u, 1.0 - u) < level};
}

struct ConditionedPair {
  std::vector<double> times;
  std::vector<double> s_tilde;
  std::vector<double> u;
  std::vector<double> x1, x2;
  std::vector<double> clock;
  std::int64_t clock_guard_hits = 0;
};

struct ConditionedOptions {
  double rel_step = 0.01;     // radial step relative to the current radius
  double radius_floor = 1e-300;
  double jacobi_cap = 1e-3;
};

/// Pair conditioned never to meet: radius is BESQ(4 - 2 delta); the angle u is a Jacobi
/// diffusion run on the clock C_t = int_0^t ds / S(s), and X1 = S u(C_t), X2 = S - X1.
inline ConditionedPair sample_conditioned_pair(double delta, std::array<double, 2> x0, const std::vector<double>& grid,
                                               RngStream& rng, const ConditionedOptions& opt = {}) {
  if (!(delta > 0.0 && delta < 1.0)) throw domain_error("conditioned pair needs 0 < delta < 1");
  if (!(x0[0] >= 0.0 && x0[1] >= 0.0) || !(x0[0] + x0[1] > 0.0)) throw domain_error("start needs S0 > 0");
  check_grid(grid);
  const double dim = 4.0 - 2.0 * delta;
  ConditionedPair out;
  double s = x0[0] + x0[1], u = x0[0] / s, c = 0.0, t = 0.0;
  auto record = [&] {
    out.times.push_back(t);
    const double a = s * u, b = s - a;
    out.x1.push_back(a);
    out.x2.push_back(b);
    out.s_tilde.push_back(a + b);
    out.u.push_back(u);
    out.clock.push_back(c);
  };
  record();
  for (std::size_t k = 1; k < grid.size(); ++k) {
    while (t < grid[k]) {
      double dt = opt.rel_step * std::max(s, opt.radius_floor);
      if (t + dt >= grid[k]) dt = grid[k] - t;
      const double s_new = besq_transition_unchecked(s, dim, dt, rng);
      if (s_new < opt.radius_floor) ++out.clock_guard_hits;
      const double dc = 0.5 * dt * (1.0 / std::max(s, opt.radius_floor) + 1.0 / std::max(s_new, opt.radius_floor));
      u = jacobi_transition_step(u, delta, dc, rng, opt.jacobi_cap);
      c += dc;
      s = s_new;
      t = (dt == grid[k] - t) ? grid[k] : t + dt;
    }
    record();
  }
  return out;
}

/// First time min(X1, X2) < eps for the conditioned pair, or `never` before horizon.
inline double conditioned_pair_single_zero_time(double delta, std::array<double, 2> x0, double eps, double horizon,
                                                RngStream& rng, const ConditionedOptions& opt = {}) {
  if (!(delta > 0.0 && delta < 1.0)) throw domain_error("conditioned pair needs 0 < delta < 1");
  if (!(x0[0] + x0[1] > 0.0)) throw domain_error("start needs S0 > 0");
  const double dim = 4.0 - 2.0 * delta;
  double s = x0[0] + x0[1], u = x0[0] / s, t = 0.0;
  if (std::min(x0[0], x0[1]) < eps) return 0.0;
  while (t < horizon) {
    double dt = opt.rel_step * std::max(s, opt.radius_floor);
    if (t + dt >= horizon) dt = horizon - t;
    const double s_new = besq_transition_unchecked(s, dim, dt, rng);
    const double dc = 0.5 * dt * (1.0 / std::max(s, opt.radius_floor) + 1.0 / std::max(s_new, opt.radius_floor));
    t = (dt == horizon - t) ? horizon : t + dt;
    const auto step = jacobi_advance_until(u, delta, dc, eps / std::max(s, s_new), rng, opt.jacobi_cap);
    u = step.u;
    s = s_new;
    if (step.exited || std::min(u, 1.0 - u) * s < eps) return t;
  }
  return never;
}

struct TripleSample {
  PathSample path;
  std::int64_t attempts = 0;
};

/// One skeleton run recorded on grid; returns false if any pair falls below eps.
inline bool run_triple_attempt(const ModelParams& p, double eps, const std::vector<double>& grid, RngStream& rng,
                               double rel_step, PathSample& out) {
  const PairList pairs = all_pairs(p.n);
  std::vector<double> x = p.x0;
  for (int i = 0; i < p.n; ++i) out.values[i][0] = x[i];
  if (pair_hit(x, pairs, eps)) return false;
  double t = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    while (t < grid[k]) {
      double dt = rel_step * std::max(pair_gap(x, pairs), eps);
      if (t + dt >= grid[k]) dt = grid[k] - t;
      for (int i = 0; i < p.n; ++i) x[i] = besq_transition_sample(x[i], p.delta, dt, rng);
      t = (dt == grid[k] - t) ? grid[k] : t + dt;
      if (pair_hit(x, pairs, eps)) return false;
    }
    for (int i = 0; i < p.n; ++i) out.values[i][k] = x[i];
  }
  return true;
}

/// Plain rejection: three independent paths until one has no joint eps-zero up to grid.back().
inline TripleSample sample_conditioned_triple_rejection(double delta, const std::vector<double>& x0, double eps,
                                                        const std::vector<double>& grid, RngStream& rng,
                                                        std::int64_t max_attempts, double rel_step = 0.05) {
  if (!(eps > 0.0)) throw domain_error("epsilon must be positive");
  if (x0.size() != 3) throw domain_error("triple sampler needs 3 coordinates");
  check_grid(grid);
  ModelParams p{3, delta, x0};
  p.validate();
  TripleSample out;
  out.path.times = grid;
  out.path.scheme = Scheme::exact;
  out.path.seed = rng.seed();
  out.path.stream_id = rng.stream_id();
  out.path.values.assign(3, std::vector<double>(grid.size()));
  while (out.attempts < max_attempts) {
    ++out.attempts;
    if (run_triple_attempt(p, eps, grid, rng, rel_step, out.path)) return out;
  }
  throw rejection_exhausted("no path avoided joint zeros in " + std::to_string(max_attempts) +
                                " attempts; survival probability below about " +
                                std::to_string(3.0 / static_cast<double>(max_attempts)),
                            out.attempts);
}

}  // namespace besq
