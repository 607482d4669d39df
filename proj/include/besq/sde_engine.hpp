#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace besq {

struct ModelParams {
  int n = 1;
  double delta = 0.5;
  std::vector<double> x0{1.0};

  void validate() const {
    if (n < 1) throw domain_error("n must be at least 1");
    if (static_cast<int>(x0.size()) != n) throw domain_error("x0 must have n coordinates");
    if (!(delta < 2.0)) throw domain_error("dimension must be below 2");
    for (double x : x0)
      if (!(x >= 0.0) || !std::isfinite(x)) throw domain_error("x0 coordinates must be finite and nonnegative");
  }

  /// True when at least two coordinates of x0 are zero.
  bool on_collision_set() const {
    int zeros = 0;
    for (double x : x0) zeros += (x == 0.0);
    return zeros >= 2;
  }
};

enum class Scheme { exact, euler_shared_noise, cir_frame };

inline std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::exact: return "exact-transition";
    case Scheme::euler_shared_noise: return "euler-shared-noise";
    case Scheme::cir_frame: return "cir-frame";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view s) {
  if (s == "exact" || s == "exact-transition") return Scheme::exact;
  if (s == "euler" || s == "euler-shared-noise") return Scheme::euler_shared_noise;
  if (s == "cir" || s == "cir-frame") return Scheme::cir_frame;
  throw unsupported_scheme("unknown scheme: " + std::string(s));
}

struct PathSample {
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // values[i][k] = X_i(times[k])
  Scheme scheme = Scheme::exact;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::vector<std::vector<double>> noise;  // euler only: noise[i][k] drives step k -> k+1

  int n() const { return static_cast<int>(values.size()); }
};

/// One draw of X_{t+dt} given X_t = x: 2dt * Gamma(dim/2 + N), N ~ Poisson(x / 2dt).
/// Valid for any dimension dim > 0; no argument checks.
inline double besq_transition_unchecked(double x, double dim, double dt, RngStream& rng) {
  if (dt == 0.0) return x;
  const auto k = rng.poisson(x / (2.0 * dt));
  return 2.0 * dt * rng.gamma(0.5 * dim + static_cast<double>(k));
}

inline double besq_transition_sample(double x, double delta, double dt, RngStream& rng) {
  if (!(x >= 0.0) || !(dt >= 0.0)) throw domain_error("transition needs x >= 0 and dt >= 0");
  if (!(delta > 0.0 && delta < 2.0))
    throw unsupported_scheme("exact transition needs 0 < delta < 2; use the euler scheme");
  return besq_transition_unchecked(x, delta, dt, rng);
}

/// Euler step on sqrt(X) with the Ito correction moved into the drift.
/// The map x -> x' is nondecreasing for fixed z, so shared noise keeps paths ordered.
inline double euler_step(double x, double delta, double dt, double z) {
  if (delta <= 0.0 && x <= 0.0) return 0.0;
  const double r = std::sqrt(x > 0.0 ? x : 0.0) + std::sqrt(dt) * z;
  const double y = (r > 0.0 ? r * r : 0.0) + (delta - 1.0) * dt;
  return y > 0.0 ? y : 0.0;
}

inline void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw domain_error("empty time grid");
  if (grid.front() != 0.0) throw domain_error("time grid must start at 0");
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw domain_error("time grid must be strictly increasing");
}

inline PathSample simulate_paths(const ModelParams& p, const std::vector<double>& grid, Scheme scheme,
                                 RngStream& rng) {
  p.validate();
  check_grid(grid);
  if (scheme != Scheme::euler_shared_noise && !(p.delta > 0.0))
    throw unsupported_scheme("exact and cir-frame schemes need 0 < delta < 2");

  PathSample out;
  out.times = grid;
  out.scheme = scheme;
  out.seed = rng.seed();
  out.stream_id = rng.stream_id();
  const std::size_t m = grid.size();
  out.values.assign(p.n, std::vector<double>(m));
  for (int i = 0; i < p.n; ++i) out.values[i][0] = p.x0[i];

  switch (scheme) {
    case Scheme::exact:
      for (std::size_t k = 1; k < m; ++k)
        for (int i = 0; i < p.n; ++i)
          out.values[i][k] = besq_transition_sample(out.values[i][k - 1], p.delta, grid[k] - grid[k - 1], rng);
      break;
    case Scheme::euler_shared_noise:
      out.noise.assign(p.n, std::vector<double>(m - 1));
      for (std::size_t k = 1; k < m; ++k)
        for (int i = 0; i < p.n; ++i) {
          const double z = rng.normal();
          out.noise[i][k - 1] = z;
          out.values[i][k] = euler_step(out.values[i][k - 1], p.delta, grid[k] - grid[k - 1], z);
        }
      break;
    case Scheme::cir_frame: {
      std::vector<double> x = p.x0;
      for (std::size_t k = 1; k < m; ++k) {
        const double dt = std::expm1(grid[k]) - std::expm1(grid[k - 1]);
        const double scale = std::exp(-grid[k]);
        for (int i = 0; i < p.n; ++i) {
          x[i] = besq_transition_sample(x[i], p.delta, dt, rng);
          out.values[i][k] = scale * x[i];
        }
      }
      break;
    }
  }
  return out;
}

inline std::vector<double> uniform_grid(double tmax, std::size_t steps) {
  std::vector<double> g(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) g[k] = tmax * static_cast<double>(k) / static_cast<double>(steps);
  g.back() = tmax;
  return g;
}

/// First zero of one process started at x: x / (2G), G ~ Gamma(1 - delta/2).
inline double exact_single_hitting_time(double x, double delta, RngStream& rng) {
  if (!(x > 0.0)) throw domain_error("hitting time needs x > 0");
  if (!(delta < 2.0)) throw domain_error("dimension >= 2 never hits zero");
  return x / (2.0 * rng.gamma(1.0 - 0.5 * delta));
}

}  // namespace besq
