#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>
#include <utility>
#include <vector>

#include "analytic.hpp"
#include "errors.hpp"
#include "functionals.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "sde_engine.hpp"
#include "stats.hpp"

namespace besq {

inline constexpr double never = std::numeric_limits<double>::infinity();

using PairList = std::vector<std::pair<int, int>>;

inline PairList all_pairs(int n) {
  PairList out;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
  return out;
}

struct HittingRecord {
  std::vector<double> T_single;
  PairList pairs;
  std::vector<double> T_pair;
  double H = never;
  int first_pair = -1;  // index into pairs, -1 if no joint zero
  double epsilon = 0;
  double horizon = 0;
};

/// Grid-time detection: T_i first time X_i < eps, T_ij first time max(X_i, X_j) < eps.
inline HittingRecord first_joint_zero(const PathSample& path, double eps) {
  if (!(eps > 0.0)) throw domain_error("epsilon must be positive");
  const int n = path.n();
  HittingRecord r;
  r.epsilon = eps;
  r.horizon = path.times.empty() ? 0.0 : path.times.back();
  r.pairs = all_pairs(n);
  r.T_single.assign(n, never);
  r.T_pair.assign(r.pairs.size(), never);
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    for (int i = 0; i < n; ++i)
      if (r.T_single[i] == never && path.values[i][k] < eps) r.T_single[i] = path.times[k];
    for (std::size_t q = 0; q < r.pairs.size(); ++q) {
      const auto [i, j] = r.pairs[q];
      if (r.T_pair[q] == never && std::max(path.values[i][k], path.values[j][k]) < eps) {
        r.T_pair[q] = path.times[k];
        if (r.first_pair < 0) r.first_pair = static_cast<int>(q), r.H = path.times[k];
      }
    }
  }
  return r;
}

struct SkeletonOptions {
  double rel_step = 0.05;
  PairList pairs;  // empty means all pairs
};

inline double pair_gap(const std::vector<double>& x, const PairList& pairs) {
  double r = never;
  for (const auto& [i, j] : pairs) r = std::min(r, x[i] + x[j]);
  return r;
}

inline bool pair_hit(const std::vector<double>& x, const PairList& pairs, double eps) {
  for (const auto& [i, j] : pairs)
    if (x[i] < eps && x[j] < eps) return true;
  return false;
}

/// First eps-joint-zero time of one replica, or `never` if it survives past horizon.
///
/// For 0 < delta < 2 the path is sampled with exact transitions on a skeleton whose
/// step is rel_step * max(r, eps), r the smallest pair sum, so excursions toward a
/// collision are resolved at their own scale. For delta <= 0 coordinates are absorbed
/// and the first joint zero is exact: the earliest pair whose both members have died.
/// With n = 1 the event is the first zero of the single coordinate.
inline double skeleton_hitting_time(const ModelParams& p, double eps, double horizon, RngStream& rng,
                                    const SkeletonOptions& opt = {}) {
  if (p.n == 1) {
    if (p.x0[0] <= 0.0) return 0.0;
    const double t = exact_single_hitting_time(p.x0[0], p.delta, rng);
    return t <= horizon ? t : never;
  }
  const PairList pairs = opt.pairs.empty() ? all_pairs(p.n) : opt.pairs;
  if (p.delta <= 0.0) {
    std::vector<double> T(p.n);
    for (int i = 0; i < p.n; ++i) T[i] = p.x0[i] > 0.0 ? exact_single_hitting_time(p.x0[i], p.delta, rng) : 0.0;
    double h = never;
    for (const auto& [i, j] : pairs) h = std::min(h, std::max(T[i], T[j]));
    return h <= horizon ? h : never;
  }
  std::vector<double> x = p.x0;
  if (pair_hit(x, pairs, eps)) return 0.0;
  double t = 0.0;
  while (t < horizon) {
    double dt = opt.rel_step * std::max(pair_gap(x, pairs), eps);
    if (t + dt >= horizon) dt = horizon - t;
    for (int i = 0; i < p.n; ++i) x[i] = besq_transition_sample(x[i], p.delta, dt, rng);
    t = (dt == horizon - t) ? horizon : t + dt;
    if (pair_hit(x, pairs, eps)) return t;
  }
  return never;
}

enum class Frame { power, cir };

inline std::string_view frame_name(Frame f) { return f == Frame::power ? "power" : "cir"; }

inline Frame parse_frame(std::string_view s) {
  if (s == "power") return Frame::power;
  if (s == "cir") return Frame::cir;
  throw domain_error("frame must be power or cir");
}

/// Original-time value of a grid point in the given frame.
inline double original_time(double t, Frame f) { return f == Frame::power ? t : std::expm1(t); }

struct SurvivalCurve {
  std::vector<double> t;
  std::vector<std::int64_t> alive;
  std::int64_t total = 0;
  std::vector<double> p_hat, ci_lo, ci_hi;
  Frame frame = Frame::power;
  double epsilon = 0;
};

/// Counts of H > original_time(t_k) for streamed hitting times.
struct SurvivalCounter {
  std::vector<double> thresholds;
  std::vector<std::int64_t> dead_in_bin;  // bin k: thresholds[k-1] < H <= thresholds[k]
  std::int64_t total = 0;

  SurvivalCounter() = default;
  SurvivalCounter(const std::vector<double>& t_grid, Frame f) : dead_in_bin(t_grid.size() + 1, 0) {
    for (double t : t_grid) thresholds.push_back(original_time(t, f));
  }
  void add(double h) {
    ++total;
    const auto k = std::lower_bound(thresholds.begin(), thresholds.end(), h) - thresholds.begin();
    ++dead_in_bin[k];
  }
  void merge(const SurvivalCounter& o) {
    total += o.total;
    for (std::size_t k = 0; k < dead_in_bin.size(); ++k) dead_in_bin[k] += o.dead_in_bin[k];
  }
};

inline void fill_bands(SurvivalCurve& c) {
  c.p_hat.resize(c.t.size());
  c.ci_lo.resize(c.t.size());
  c.ci_hi.resize(c.t.size());
  for (std::size_t k = 0; k < c.t.size(); ++k) {
    const double n = static_cast<double>(c.total);
    c.p_hat[k] = c.total > 0 ? c.alive[k] / n : 0.0;
    const auto ci = wilson_interval(static_cast<double>(c.alive[k]), n);
    c.ci_lo[k] = ci.lo;
    c.ci_hi[k] = ci.hi;
  }
}

inline SurvivalCurve curve_from_counter(const SurvivalCounter& s, const std::vector<double>& t_grid, Frame f,
                                        double eps) {
  SurvivalCurve c;
  c.t = t_grid;
  c.frame = f;
  c.epsilon = eps;
  c.total = s.total;
  std::int64_t dead = 0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    dead += s.dead_in_bin[k];
    c.alive.push_back(s.total - dead);
  }
  fill_bands(c);
  return c;
}

inline SurvivalCurve survival_from_samples(const std::vector<double>& h, const std::vector<double>& t_grid,
                                           Frame f = Frame::power, double eps = 0.0) {
  SurvivalCounter s(t_grid, f);
  for (double v : h) s.add(v);
  return curve_from_counter(s, t_grid, f, eps);
}

struct SurvivalOptions {
  unsigned workers = 0;
  SkeletonOptions skeleton;
};

inline void check_t_grid(const std::vector<double>& g) {
  if (g.empty()) throw domain_error("empty t grid");
  for (std::size_t k = 1; k < g.size(); ++k)
    if (!(g[k] > g[k - 1])) throw domain_error("t grid must be increasing");
  if (g.front() < 0.0) throw domain_error("t grid must be nonnegative");
}

/// True when no pair in the detector can ever meet (sum dimension >= 2).
inline bool pairs_transient(const ModelParams& p) { return p.n >= 2 && p.delta >= 1.0; }

/// Replica i draws from RngStream(seed, i); counts merge commutatively.
inline SurvivalCurve survival_curve(const ModelParams& p, double eps, const std::vector<double>& t_grid,
                                    std::int64_t replicas, std::uint64_t seed, Frame frame,
                                    const SurvivalOptions& opt = {}) {
  p.validate();
  check_t_grid(t_grid);
  if (replicas < 1) throw domain_error("need at least one replica");
  if (!(eps > 0.0)) throw domain_error("epsilon must be positive");
  const double horizon = original_time(t_grid.back(), frame);
  SurvivalCounter init(t_grid, frame);
  auto counts = parallel_reduce(
      static_cast<std::size_t>(replicas), resolve_workers(opt.workers), init,
      [&](SurvivalCounter& acc, std::size_t i) {
        RngStream rng(seed, i);
        acc.add(skeleton_hitting_time(p, eps, horizon, rng, opt.skeleton));
      },
      [](SurvivalCounter& a, const SurvivalCounter& b) { a.merge(b); });
  return curve_from_counter(counts, t_grid, frame, eps);
}

inline std::vector<double> geometric_grid(double t0, double t1, double ratio = std::pow(2.0, 0.25)) {
  std::vector<double> g;
  for (double t = t0; t < t1 * (1 - 1e-12); t *= ratio) g.push_back(t);
  g.push_back(t1);
  return g;
}

inline std::vector<double> linear_grid(double t0, double t1, std::size_t steps) {
  std::vector<double> g(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) g[k] = t0 + (t1 - t0) * k / steps;
  return g;
}

struct ExponentFit {
  double theta_hat = 0;
  double stderr_ = 0;
  double t_min = 0, t_max = 0;
  double r_squared = 0;
  Frame frame = Frame::power;
  double epsilon = 0;
  int points = 0;
};

/// Decay fit of log p against x(t) (log t or t). The slope is estimated from successive
/// log-ratios log(n_k / n_{k-1}), which are uncorrelated with binomial variance
/// (1 - q) / (n_{k-1} q), q the model survival ratio; weights are refreshed from the
/// current slope a few times.
inline ExponentFit fit_decay(const SurvivalCurve& c, double t_min, double t_max, bool log_axis) {
  std::vector<double> x, L, n, ts;
  for (std::size_t k = 0; k < c.t.size(); ++k) {
    if (c.t[k] < t_min || c.t[k] > t_max) continue;
    if (log_axis && !(c.t[k] > 0.0)) continue;
    const double cnt = c.p_hat[k] * static_cast<double>(c.total);
    if (cnt < 10.0) continue;
    ts.push_back(c.t[k]);
    x.push_back(log_axis ? std::log(c.t[k]) : c.t[k]);
    L.push_back(std::log(c.p_hat[k]));
    n.push_back(cnt);
  }
  if (x.size() < 4) throw fit_error("fewer than 4 usable points in the fit window");
  const std::size_t m = x.size();

  double theta;
  {
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < m; ++k) mx += x[k], my += L[k];
    mx /= m, my /= m;
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < m; ++k) sxy += (x[k] - mx) * (L[k] - my), sxx += (x[k] - mx) * (x[k] - mx);
    theta = -sxy / sxx;
  }
  double info = 0;
  for (int pass = 0; pass < 4; ++pass) {
    double num = 0;
    info = 0;
    for (std::size_t k = 1; k < m; ++k) {
      const double dx = x[k] - x[k - 1], y = L[k] - L[k - 1];
      const double q = std::exp(-std::max(theta, 0.0) * dx);
      const double var = std::max((1.0 - q) / (n[k - 1] * q), 0.5 / (n[k - 1] * n[k - 1]));
      num += -dx * y / var;
      info += dx * dx / var;
    }
    theta = num / info;
  }

  double sw = 0, swr = 0;
  std::vector<double> w(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double p = std::exp(L[k]);
    w[k] = 1.0 / std::max((1.0 - p) / (c.total * p), 0.5 / (n[k] * n[k]));
    sw += w[k];
    swr += w[k] * (L[k] + theta * x[k]);
  }
  const double intercept = swr / sw;
  double lbar = 0;
  for (std::size_t k = 0; k < m; ++k) lbar += w[k] * L[k];
  lbar /= sw;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const double e = L[k] - (intercept - theta * x[k]);
    ss_res += w[k] * e * e;
    ss_tot += w[k] * (L[k] - lbar) * (L[k] - lbar);
  }

  ExponentFit f;
  f.theta_hat = theta;
  f.stderr_ = 1.0 / std::sqrt(info);
  f.t_min = ts.front();
  f.t_max = ts.back();
  f.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  f.frame = c.frame;
  f.epsilon = c.epsilon;
  f.points = static_cast<int>(m);
  return f;
}

inline ExponentFit fit_powerlaw_exponent(const SurvivalCurve& c, double t_min, double t_max) {
  return fit_decay(c, t_min, t_max, true);
}

inline ExponentFit fit_exponential_rate(const SurvivalCurve& c, double t_min, double t_max) {
  return fit_decay(c, t_min, t_max, false);
}

/// Fit in whichever frame the curve lives in.
inline ExponentFit fit_exponent(const SurvivalCurve& c, double t_min, double t_max) {
  return c.frame == Frame::power ? fit_powerlaw_exponent(c, t_min, t_max) : fit_exponential_rate(c, t_min, t_max);
}

struct EpsExtrapolation {
  ExponentFit fit;  // theta at eps -> 0
  double beta = 0;
  double c = 0;
  double c_stderr = 0;
  bool beta_identified = false;
  bool refused = false;
  std::vector<std::pair<double, ExponentFit>> raw;
};

/// theta(eps) = theta0 + c eps^beta, weighted by the fit stderrs, beta scanned on (0, 2].
/// If c is not distinguishable from 0, or the best beta sits on the edge of the scan
/// (where eps^beta is nearly constant and c trades off against theta0), the weighted
/// mean is returned and beta is flagged.
inline EpsExtrapolation extrapolate_eps(std::vector<std::pair<double, ExponentFit>> fits) {
  std::sort(fits.begin(), fits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < fits.size(); ++i)
    if (fits[i].first == fits[i - 1].first) throw fit_error("duplicate epsilon values");
  if (fits.size() < 3) throw fit_error("extrapolation needs at least 3 distinct epsilon values");
  EpsExtrapolation out;
  out.raw = fits;
  const std::size_t m = fits.size();

  int up = 0, down = 0;
  for (std::size_t i = 1; i < m; ++i) {
    const double d = fits[i].second.theta_hat - fits[i - 1].second.theta_hat;
    const double s = std::hypot(fits[i].second.stderr_, fits[i - 1].second.stderr_);
    if (d > 2 * s) ++up;
    if (d < -2 * s) ++down;
  }
  out.fit = fits.front().second;
  out.fit.epsilon = 0.0;
  if (up > 0 && down > 0) {
    out.refused = true;
    out.fit.theta_hat = std::numeric_limits<double>::quiet_NaN();
    out.fit.stderr_ = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  std::vector<double> w(m), th(m), le(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double s = std::max(fits[i].second.stderr_, 1e-12);
    w[i] = 1.0 / (s * s);
    th[i] = fits[i].second.theta_hat;
    le[i] = std::log(fits[i].first);
  }
  struct Wls {
    double t0, c, se_t0, se_c, chi2;
  };
  auto wls = [&](double beta) {
    double s0 = 0, s1 = 0, s2 = 0, r0 = 0, r1 = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double z = std::exp(beta * le[i]);
      s0 += w[i], s1 += w[i] * z, s2 += w[i] * z * z, r0 += w[i] * th[i], r1 += w[i] * z * th[i];
    }
    const double det = s0 * s2 - s1 * s1;
    Wls r;
    r.t0 = (s2 * r0 - s1 * r1) / det;
    r.c = (s0 * r1 - s1 * r0) / det;
    r.se_t0 = std::sqrt(s2 / det);
    r.se_c = std::sqrt(s0 / det);
    r.chi2 = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = th[i] - r.t0 - r.c * std::exp(beta * le[i]);
      r.chi2 += w[i] * e * e;
    }
    return r;
  };
  constexpr double beta_lo = 1e-3, beta_hi = 2.0;
  const auto best = maximize([&](double b) { return -wls(b).chi2; }, beta_lo, beta_hi, 400, 1e-9);
  const bool interior = best.arg > beta_lo + 1e-2 && best.arg < beta_hi - 1e-2;
  const Wls r = wls(best.arg);
  out.beta = best.arg;
  out.c = r.c;
  out.c_stderr = r.se_c;
  if (interior && std::isfinite(r.se_c) && std::abs(r.c) > 2.0 * r.se_c) {
    out.beta_identified = true;
    out.fit.theta_hat = r.t0;
    out.fit.stderr_ = r.se_t0;
    return out;
  }
  double sw = 0, swt = 0;
  for (std::size_t i = 0; i < m; ++i) sw += w[i], swt += w[i] * th[i];
  out.fit.theta_hat = swt / sw;
  out.fit.stderr_ = 1.0 / std::sqrt(sw);
  return out;
}

struct TimeFunctional {
  enum Kind { V_upper, V_lower, X1, prod_m, X1_pow_b } kind = X1;
  double a = 0.0;  // V_lower exponent
  int m = 1;       // prod_m: product of the first m coordinates
  double b = 1.0;  // X1_pow_b power

  /// Homogeneity degree of the integral in t.
  double kappa(int n) const {
    switch (kind) {
      case V_upper: return n - 1.0;
      case V_lower: return 2.0 + a;
      case X1: return 2.0;
      case prod_m: return m + 1.0;
      case X1_pow_b: return b + 1.0;
    }
    return 0;
  }

  /// Value at state x; NaN where the functional is singular.
  double operator()(const std::vector<double>& x, double delta) const {
    switch (kind) {
      case V_upper:
        try {
          const double v = aux_upper(x, delta).V;
          return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN();
        } catch (const std::exception&) {
          return std::numeric_limits<double>::quiet_NaN();
        }
      case V_lower:
        try {
          return aux_lower(x, delta, a).V;
        } catch (const std::exception&) {
          return std::numeric_limits<double>::quiet_NaN();
        }
      case X1: return x[0];
      case prod_m: {
        double p = 1.0;
        for (int i = 0; i < m; ++i) p *= x[i];
        return p;
      }
      case X1_pow_b: return std::pow(x[0], b);
    }
    return 0;
  }
};

struct TimeChangeCurve {
  std::vector<double> t;
  std::vector<std::vector<double>> samples;  // samples[k]: integrals at t[k] over kept replicas
  std::int64_t flagged = 0;
  double kappa = 0;

  /// Integrals at t[k] divided by t[k]^kappa.
  std::vector<double> normalized(std::size_t k) const {
    std::vector<double> v = samples[k];
    const double s = std::pow(t[k], kappa);
    for (double& x : v) x /= s;
    return v;
  }
};

/// Trapezoid integrals of the functional along exact-transition paths, recorded at each t.
/// Steps are at most t_list.back() / steps and land on every t in t_list.
inline TimeChangeCurve time_change_integral(const ModelParams& p, const TimeFunctional& fn,
                                            const std::vector<double>& t_list, std::int64_t replicas,
                                            std::uint64_t seed, std::size_t steps = 2000, unsigned workers = 0) {
  p.validate();
  check_t_grid(t_list);
  if (!(t_list.front() > 0.0)) throw domain_error("integration times must be positive");
  if (fn.kind == TimeFunctional::prod_m && (fn.m < 1 || fn.m > p.n)) throw domain_error("prod_m needs 1 <= m <= n");
  if ((fn.kind == TimeFunctional::V_lower) && p.n != 3) throw domain_error("lower functional needs n = 3");
  const double hmax = t_list.back() / static_cast<double>(steps);
  std::vector<double> grid{0.0};
  std::vector<std::size_t> marks;
  for (double t : t_list) {
    const double t0 = grid.back();
    const auto k = static_cast<std::size_t>(std::ceil((t - t0) / hmax - 1e-9));
    for (std::size_t j = 1; j <= k; ++j) grid.push_back(j == k ? t : t0 + (t - t0) * j / k);
    marks.push_back(grid.size() - 1);
  }

  const auto n_rep = static_cast<std::size_t>(replicas);
  std::vector<std::vector<double>> per(n_rep);
  std::vector<char> bad(n_rep, 0);
  parallel_for(n_rep, resolve_workers(workers), [&](std::size_t r) {
    RngStream rng(seed, r);
    std::vector<double> x = p.x0;
    double f_prev = fn(x, p.delta), rho = 0.0;
    bool ok = std::isfinite(f_prev);
    std::vector<double> out;
    out.reserve(marks.size());
    std::size_t mk = 0;
    for (std::size_t k = 1; k < grid.size() && ok; ++k) {
      const double dt = grid[k] - grid[k - 1];
      for (int i = 0; i < p.n; ++i) x[i] = besq_transition_sample(x[i], p.delta, dt, rng);
      const double f = fn(x, p.delta);
      if (!std::isfinite(f)) ok = false;
      rho += 0.5 * dt * (f_prev + f);
      f_prev = f;
      if (k == marks[mk]) out.push_back(rho), ++mk;
    }
    if (ok) per[r] = std::move(out);
    else bad[r] = 1;
  });

  TimeChangeCurve c;
  c.t = t_list;
  c.kappa = fn.kappa(p.n);
  c.samples.assign(t_list.size(), {});
  for (std::size_t r = 0; r < n_rep; ++r) {
    if (bad[r]) {
      ++c.flagged;
      continue;
    }
    for (std::size_t k = 0; k < t_list.size(); ++k) c.samples[k].push_back(per[r][k]);
  }
  return c;
}

/// Least-squares slope of log P(sample <= eps) against log eps.
inline double small_ball_slope(const std::vector<double>& sample, const std::vector<double>& eps,
                               std::vector<double>* probs = nullptr) {
  std::vector<double> lx, ly;
  for (double e : eps) {
    const double k = static_cast<double>(std::count_if(sample.begin(), sample.end(), [&](double v) { return v <= e; }));
    const double pr = k / sample.size();
    if (probs) probs->push_back(pr);
    if (k == 0) throw fit_error("no sample below the smallest level");
    lx.push_back(std::log(e));
    ly.push_back(std::log(pr));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= lx.size(), my /= ly.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  return sxy / sxx;
}

}  // namespace besq
