#include <gtest/gtest.h>

#include <besq/analytic.hpp>
#include <besq/hitting.hpp>
#include <besq/sde_engine.hpp>
#include <besq/stats.hpp>

using namespace besq;

TEST(Transition, ZeroTimeIsIdentity) {
  RngStream r(1);
  EXPECT_EQ(besq_transition_sample(1.0, 0.5, 0.0, r), 1.0);
}

TEST(Transition, MeanMatchesDriftIntegral) {
  RngStream r(2);
  const int n = 100000;
  std::vector<double> v(n);
  for (auto& x : v) x = besq_transition_sample(1.0, 0.5, 1.0, r);
  const auto mv = mean_var(v);
  EXPECT_NEAR(mv.mean, 1.5, 0.01);
  EXPECT_NEAR(mv.mean, 1.5, 4 * std::sqrt(5.0 / n));
}

TEST(Transition, VarianceMatchesSecondMoment) {
  RngStream r(3);
  const int n = 1000000;
  std::vector<double> v(n);
  for (auto& x : v) x = besq_transition_sample(1.0, 0.5, 1.0, r);
  EXPECT_NEAR(mean_var(v).var, 5.0, 0.05);
}

TEST(Transition, MomentsAtSeveralStates) {
  for (double x : {0.0, 0.3, 4.0})
    for (double d : {0.25, 1.5})
      for (double dt : {0.01, 2.0}) {
        RngStream r(11);
        const int n = 100000;
        std::vector<double> v(n);
        for (auto& y : v) y = besq_transition_sample(x, d, dt, r);
        const auto mv = mean_var(v);
        const double var = 4 * x * dt + 2 * d * dt * dt;
        EXPECT_NEAR(mv.mean, x + d * dt, 4 * std::sqrt(var / n)) << x << " " << d << " " << dt;
        // variance of the sample variance needs the 4th moment; a loose relative band suffices
        EXPECT_NEAR(mv.var / var, 1.0, 0.05) << x << " " << d << " " << dt;
      }
}

TEST(Transition, Errors) {
  RngStream r(1);
  EXPECT_THROW(besq_transition_sample(-1.0, 0.5, 1.0, r), domain_error);
  EXPECT_THROW(besq_transition_sample(1.0, 0.5, -1.0, r), domain_error);
  EXPECT_THROW(besq_transition_sample(1.0, -0.5, 1.0, r), unsupported_scheme);
  EXPECT_THROW(besq_transition_sample(1.0, 2.0, 1.0, r), unsupported_scheme);
}

TEST(Transition, AdditivityInDimensionAndStart) {
  RngStream r(4);
  const int n = 100000;
  std::vector<double> sum(n), one(n);
  for (int i = 0; i < n; ++i) {
    sum[i] = besq_transition_sample(0.7, 0.3, 1.0, r) + besq_transition_sample(1.1, 0.45, 1.0, r);
    one[i] = besq_transition_sample(1.8, 0.75, 1.0, r);
  }
  EXPECT_GT(ks_two_sample(sum, one).p_value, 0.01);
}

TEST(Paths, SinglePointGridReturnsStart) {
  ModelParams p{3, 0.5, {1, 1, 1}};
  RngStream r(1);
  const auto path = simulate_paths(p, {0.0}, Scheme::exact, r);
  ASSERT_EQ(path.times.size(), 1u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(path.values[i][0], 1.0);
}

TEST(Paths, GridErrors) {
  ModelParams p{1, 0.5, {1}};
  RngStream r(1);
  EXPECT_THROW(simulate_paths(p, {}, Scheme::exact, r), domain_error);
  EXPECT_THROW(simulate_paths(p, {0.0, 1.0, 0.5}, Scheme::exact, r), domain_error);
  EXPECT_THROW(simulate_paths(p, {0.5, 1.0}, Scheme::exact, r), domain_error);
  ModelParams q{1, -0.5, {1}};
  EXPECT_THROW(simulate_paths(q, {0.0, 1.0}, Scheme::exact, r), unsupported_scheme);
  EXPECT_THROW(simulate_paths(q, {0.0, 1.0}, Scheme::cir_frame, r), unsupported_scheme);
  ModelParams bad{2, 0.5, {1}};
  EXPECT_THROW(simulate_paths(bad, {0.0, 1.0}, Scheme::exact, r), domain_error);
}

TEST(Paths, NonnegativeAllSchemes) {
  for (Scheme s : {Scheme::exact, Scheme::euler_shared_noise, Scheme::cir_frame})
    for (double d : {0.25, 0.9, 1.7}) {
      ModelParams p{3, d, {0.01, 1, 0}};
      RngStream r(9);
      const auto path = simulate_paths(p, uniform_grid(5.0, 2000), s, r);
      for (const auto& row : path.values)
        for (double v : row) ASSERT_GE(v, 0.0);
    }
  ModelParams p{2, -1.0, {0.5, 1}};
  RngStream r(9);
  const auto path = simulate_paths(p, uniform_grid(5.0, 2000), Scheme::euler_shared_noise, r);
  for (const auto& row : path.values)
    for (double v : row) ASSERT_GE(v, 0.0);
}

TEST(Paths, NegativeDimensionAbsorbs) {
  ModelParams p{3, -0.5, {0.2, 0.5, 1.0}};
  int absorbed = 0;
  for (int rep = 0; rep < 50; ++rep) {
    RngStream r(5, rep);
    const auto path = simulate_paths(p, uniform_grid(5.0, 5000), Scheme::euler_shared_noise, r);
    for (const auto& row : path.values) {
      bool dead = false;
      for (double v : row) {
        if (dead) ASSERT_EQ(v, 0.0);
        if (v == 0.0) dead = true;
      }
      absorbed += dead;
    }
  }
  EXPECT_GT(absorbed, 0);
}

TEST(Paths, SharedNoiseKeepsOrder) {
  const auto grid = uniform_grid(5.0, 2000);
  for (double d : {-1.0, 0.25, 0.5, 1.5})
    for (int rep = 0; rep < 20; ++rep) {
      RngStream r1(3, rep), r2(3, rep);
      const auto lo = simulate_paths({3, d, {1, 0.5, 0.01}}, grid, Scheme::euler_shared_noise, r1);
      const auto hi = simulate_paths({3, d, {2, 0.5, 0.3}}, grid, Scheme::euler_shared_noise, r2);
      ASSERT_EQ(lo.noise, hi.noise);
      for (int i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < grid.size(); ++k) ASSERT_LE(lo.values[i][k], hi.values[i][k]);
    }
}

TEST(Paths, Deterministic) {
  ModelParams p{3, 0.5, {1, 2, 3}};
  for (Scheme s : {Scheme::exact, Scheme::euler_shared_noise, Scheme::cir_frame}) {
    RngStream a(77, 5), b(77, 5);
    const auto pa = simulate_paths(p, uniform_grid(3.0, 100), s, a);
    const auto pb = simulate_paths(p, uniform_grid(3.0, 100), s, b);
    EXPECT_EQ(pa.values, pb.values);
    EXPECT_EQ(pa.seed, 77u);
    EXPECT_EQ(pa.stream_id, 5u);
  }
}

TEST(Paths, CirFrameIsRescaledPath) {
  ModelParams p{2, 0.5, {1, 3}};
  const auto s_grid = uniform_grid(2.0, 50);
  RngStream a(8), b(8);
  const auto cir = simulate_paths(p, s_grid, Scheme::cir_frame, a);
  std::vector<double> t_grid;
  for (double s : s_grid) t_grid.push_back(std::expm1(s));
  const auto orig = simulate_paths(p, t_grid, Scheme::exact, b);
  for (int i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < s_grid.size(); ++k)
      EXPECT_NEAR(cir.values[i][k], std::exp(-s_grid[k]) * orig.values[i][k], 1e-12 * (1 + orig.values[i][k]));
}

TEST(Paths, CirFrameStationaryMean) {
  // the rescaled process has drift delta - x, so its mean relaxes to delta
  ModelParams p{1, 0.5, {3.0}};
  const int n = 20000;
  double sum = 0;
  for (int rep = 0; rep < n; ++rep) {
    RngStream r(12, rep);
    sum += simulate_paths(p, uniform_grid(8.0, 8), Scheme::cir_frame, r).values[0].back();
  }
  EXPECT_NEAR(sum / n, 0.5 + 2.5 * std::exp(-8.0), 4 * std::sqrt(1.0 / n));
}

TEST(HittingTime, Errors) {
  RngStream r(1);
  EXPECT_THROW(exact_single_hitting_time(0.0, 0.5, r), domain_error);
  EXPECT_THROW(exact_single_hitting_time(1.0, 2.0, r), domain_error);
}

TEST(HittingTime, ShrinksWithStart) {
  RngStream r(1);
  std::vector<double> v(10000);
  for (auto& t : v) t = exact_single_hitting_time(1e-8, 0.5, r);
  EXPECT_LT(quantile(v, 0.99), 1e-5);
}

TEST(HittingTime, TailConstant) {
  RngStream r(21);
  const int n = 1000000;
  const double t = 1000.0;
  long alive = 0;
  for (int i = 0; i < n; ++i) alive += exact_single_hitting_time(1.0, 0.5, r) > t;
  const double p = double(alive) / n;
  const double scaled = p * std::pow(t, 0.75);
  const double se = std::sqrt(p * (1 - p) / n) * std::pow(t, 0.75);
  EXPECT_NEAR(scaled, c_const(1.0, 0.5), 3 * se + 0.01 * c_const(1.0, 0.5));
}

/// Euler-threshold oracle: first grid time a fine Euler path drops below eps.
static std::vector<double> euler_threshold_times(double x, double delta, double dt, double eps, double horizon, int paths,
                                                 std::uint64_t seed) {
  std::vector<double> out(paths);
  const double sdt = std::sqrt(dt);
  for (int rep = 0; rep < paths; ++rep) {
    RngStream r(seed, rep);
    double v = x, t = 0;
    out[rep] = horizon;
    while (t < horizon) {
      const double z = r.normal();
      const double s = std::sqrt(v) + sdt * z;
      v = std::max((s > 0 ? s * s : 0.0) + (delta - 1) * dt, 0.0);
      t += dt;
      if (v < eps) {
        out[rep] = t;
        break;
      }
    }
  }
  return out;
}

class HittingLaw : public ::testing::TestWithParam<double> {};

TEST_P(HittingLaw, MatchesEulerThresholdOracle) {
  const double delta = GetParam(), horizon = 5.0;
  const auto oracle = euler_threshold_times(1.0, delta, 1e-4, 1e-5, horizon, 2000, 99);
  RngStream r(100);
  std::vector<double> exact(200000);
  for (auto& t : exact) t = std::min(exact_single_hitting_time(1.0, delta, r), horizon);
  const auto ks = ks_two_sample(exact, oracle);
  EXPECT_LT(ks.distance, 0.04);
  EXPECT_GT(ks.p_value, 0.001);
}

INSTANTIATE_TEST_SUITE_P(Dimensions, HittingLaw, ::testing::Values(0.5, -0.5, -1.0));

TEST(HittingTime, SurvivalMatchesIncompleteGamma) {
  RngStream r(5);
  std::vector<double> v(100000);
  for (auto& t : v) t = exact_single_hitting_time(2.0, 0.3, r);
  const auto ks = ks_one_sample(v, [](double t) { return 1.0 - single_survival_exact(2.0, 0.3, t); });
  EXPECT_GT(ks.p_value, 0.01);
}
