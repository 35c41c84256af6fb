#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qcels/hamiltonians.hpp"
#include "qcels/multilevel.hpp"

using namespace qcels;

TEST(Schedule, Example) {
  const auto s = build_schedule(1.0, 0.25, 5, 100);
  ASSERT_EQ(s.J, 3);
  EXPECT_EQ(s.taus, (std::vector<double>{0.2, 0.4, 0.8}));
  EXPECT_NEAR(s.N * s.tau_last(), 4.0, 1e-12);
}

TEST(Schedule, HalfEpsilonAndDoubling) {
  EXPECT_EQ(build_schedule(1.0, 0.5, 5, 1).J, 2);
  for (double eps : {0.3, 0.1, 1e-3, std::ldexp(1.0, -10), 3e-5}) {
    const auto s = build_schedule(0.7, eps, 7, 1);
    EXPECT_EQ(s.J, static_cast<int>(std::ceil(std::log2(1 / eps))) + 1);
    for (int j = 1; j < s.J; ++j) EXPECT_EQ(s.taus[static_cast<std::size_t>(j)], 2 * s.taus[static_cast<std::size_t>(j - 1)]);
    EXPECT_EQ(s.taus.back() / s.taus.front(), std::ldexp(1.0, s.J - 1));
    EXPECT_NEAR(s.N * s.tau_last(), 0.7 / eps, 1e-12 * 0.7 / eps);
    EXPECT_LE(s.taus.front(), 0.7 / 7);
  }
}

TEST(Schedule, DomainErrors) {
  EXPECT_THROW(build_schedule(1.0, 0.7, 5, 1), DomainError);
  EXPECT_THROW(build_schedule(1.0, 0.0, 5, 1), DomainError);
  EXPECT_THROW(build_schedule(5.0, 0.1, 5, 1), DomainError);
  EXPECT_THROW(build_schedule(1.0, 0.1, 1, 1), DomainError);
  EXPECT_THROW(build_schedule(1.0, 0.1, 5, 0), DomainError);
}

TEST(Multilevel, NoiselessExact) {
  SpectralModel m{{-0.61}, {1.0}, ""};
  MultilevelOptions opt;
  opt.noiseless = true;
  const auto r = run_multilevel(m, build_schedule(1.0, 1e-4, 5, 1), CounterRng(0), opt);
  EXPECT_NEAR(r.theta_star, -0.61, 1e-9);
  EXPECT_TRUE(r.success);
}

TEST(Multilevel, IntervalNestingAndCosts) {
  const auto m = make_spectral_model(normalize(eigendecompose(build_tfim(6, 4.0))), 0.8, residual::PseudoRandom{2});
  const auto s = build_schedule(1.0, std::ldexp(1.0, -8), 5, 100);
  const auto r = run_multilevel(m, s, CounterRng(12));
  ASSERT_EQ(r.history.size(), static_cast<std::size_t>(s.J));
  EXPECT_EQ(r.history[0].lambda_min, -kPi);
  EXPECT_EQ(r.history[0].lambda_max, kPi);
  for (std::size_t j = 1; j < r.history.size(); ++j) {
    const auto& prev = r.history[j - 1];
    const auto& cur = r.history[j];
    EXPECT_NEAR(cur.lambda_max - cur.lambda_min, kPi / prev.tau, 1e-12);
    EXPECT_NEAR(0.5 * (cur.lambda_min + cur.lambda_max), prev.theta_star, 1e-12);
    EXPECT_GE(prev.theta_star, prev.lambda_min);
    EXPECT_LE(prev.theta_star, prev.lambda_max);
  }
  EXPECT_EQ(r.t_max, s.N * s.tau_last());
  EXPECT_EQ(r.t_max_circuit, (s.N - 1) * s.tau_last());
  double theorem = 0.0;
  for (double tau : s.taus) theorem += s.N * (s.N - 1) * s.N_s * tau;
  EXPECT_NEAR(r.t_total_theorem, theorem, 1e-9 * theorem);
  EXPECT_NEAR(r.t_total, theorem / 2, 1e-9 * theorem);  // one Re/Im pair per shot
  const auto c = cost_report(r);
  EXPECT_GE(c.t_total_circuit, c.t_max_theorem);
  // Geometric levels: the last one carries at least half of the total.
  const double last = s.N * (s.N - 1) * s.N_s * s.tau_last() / 2.0;
  EXPECT_GE(last, c.t_total_circuit / 2);
  const auto j = to_json(r);
  EXPECT_EQ(j.at("history").size(), static_cast<std::size_t>(s.J));
  EXPECT_EQ(j.at("t_total").at("theorem"), r.t_total_theorem);
}

TEST(Multilevel, Deterministic) {
  SpectralModel m{{-0.4, 0.2}, {0.85, 0.15}, ""};
  const auto s = build_schedule(1.0, 1e-3, 5, 50);
  const auto a = run_multilevel(m, s, CounterRng(77));
  const auto b = run_multilevel(m, s, CounterRng(77));
  EXPECT_EQ(a.theta_star, b.theta_star);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Multilevel, UnitOverlapHighShots) {
  SpectralModel m{{0.37}, {1.0}, ""};
  const auto s = build_schedule(1.0, 1e-3, 5, 100000);
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed)
    if (run_multilevel(m, s, CounterRng(seed)).wrapped_error <= 1e-3) ++ok;
  EXPECT_GE(ok, 38);
}

TEST(Multilevel, ContainmentAtEveryLevel) {
  const double p0 = 0.8;
  const auto m = make_spectral_model(normalize(eigendecompose(build_tfim(6, 4.0))), p0, residual::PseudoRandom{3});
  const double delta = feasibility_delta(p0);
  const auto s = build_schedule(delta, std::ldexp(1.0, -6), 5, 1000);
  const int runs = 40;
  int ok = 0;
  for (int seed = 0; seed < runs; ++seed) {
    const auto r = run_multilevel(m, s, CounterRng(500 + static_cast<std::uint64_t>(seed)));
    bool all = true;
    for (const auto& h : r.history)
      all = all && wrapped_distance(h.theta_star, m.ground_energy(), 2 * kPi) <= delta / (s.N * h.tau);
    if (all) ++ok;
  }
  EXPECT_GE(ok, oracle::binomial_lower(runs, 1 - s.eta, 0.01));
}

TEST(RoughEstimate, OracleStatistics) {
  SpectralModel m{{-0.5, 0.3}, {0.5, 0.5}, ""};
  const double D = 0.4;
  EXPECT_EQ(rough_estimate(m, OraclePrior{}, D, CounterRng(3)), rough_estimate(m, OraclePrior{}, D, CounterRng(3)));
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const double u = rough_estimate(m, OraclePrior{}, D, CounterRng(seed)) + 0.5;
    EXPECT_LE(std::abs(u), D / 2);
    mean += std::abs(u);
  }
  mean /= 1000;
  EXPECT_NEAR(mean, D / 4, 0.05 * D / 4);
}

TEST(RoughEstimate, InjectedAndIntervals) {
  SpectralModel m{{-0.5, 0.3}, {0.5, 0.5}, ""};
  const double prior = rough_estimate(m, InjectedPrior{-0.5}, 0.2, CounterRng(0));
  EXPECT_EQ(prior, -0.5);
  const auto iv = prior_intervals(prior, 0.2);
  EXPECT_TRUE(iv.inner.contains(-0.5));
  EXPECT_NEAR(iv.inner.hi, -0.4, 1e-15);
  EXPECT_NEAR(iv.outer.hi, -0.2, 1e-15);
  EXPECT_NEAR(iv.distance, 0.2, 1e-12);
  EXPECT_TRUE(prior_intervals(3.0, 0.5).covers_everything());
  EXPECT_NEAR(gap_intervals(-0.5, 0.4).distance, 0.2, 1e-12);
}

TEST(Presets, IntervalDistanceAndShots) {
  // p0 = 0.4, excited weights 0.1 at 0.0 then 0.5 at 0.4: cumulative 0.1 < 0.4/3, then 0.6.
  SpectralModel m{{-0.4, 0.0, 0.4}, {0.4, 0.1, 0.5}, ""};
  EXPECT_NEAR(interval_distance(m), 0.2, 1e-15);
  SpectralModel heavy{{-0.4, 0.0}, {0.4, 0.6}, ""};
  EXPECT_NEAR(interval_distance(heavy), 0.1, 1e-15);
  EXPECT_THROW(interval_distance(SpectralModel{{-0.4}, {1.0}, ""}), DomainError);
  EXPECT_EQ(default_gsee_shots(0.4, 130), static_cast<int>(std::floor(15 / 0.16 * std::log(130.0))));
  EXPECT_EQ(default_filter_degree(0.1152), 130);
}

TEST(SmallOverlap, ConstantFilterMatchesMultilevelBitwise) {
  const auto m = make_spectral_model(normalize(eigendecompose(build_tfim(6, 4.0))), 0.9, residual::PseudoRandom{4});
  const auto s = build_schedule(1.0, std::ldexp(1.0, -7), 5, 200);
  const auto full = IntervalPair::make({-kPi, kPi}, {-kPi, kPi});
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto a = run_multilevel(m, s, CounterRng(seed));
    const auto b = run_gsee_small_overlap(m, full, 0.01, s, CounterRng(seed));
    EXPECT_EQ(a.theta_star, b.theta_star);
    EXPECT_EQ(a.t_total, b.t_total);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t j = 0; j < a.history.size(); ++j) {
      EXPECT_EQ(a.history[j].theta_star, b.history[j].theta_star);
      EXPECT_EQ(a.history[j].objective, b.history[j].objective);
    }
  }
}

TEST(SmallOverlap, FilteredSyntheticModel) {
  // Weight 0.3 on the ground level, 0.7 outside I': relative overlap 1.
  SpectralModel m{{-0.5, 0.4}, {0.3, 0.7}, ""};
  const auto iv = IntervalPair::make({-kPi, -0.3}, {-kPi, 0.0});
  ASSERT_EQ(relative_overlap(m, iv), 1.0);
  const auto f = build_filter(iv, 1e-3);
  const double eps = std::ldexp(1.0, -6);
  const auto s = build_schedule(1.0, eps, 5, 2000);
  const int runs = 20;
  int ok = 0;
  for (int seed = 0; seed < runs; ++seed) {
    const auto r = run_gsee_small_overlap(m, f, s, CounterRng(static_cast<std::uint64_t>(seed)));
    if (r.wrapped_error <= eps) ++ok;
    EXPECT_EQ(r.t_max, s.N * s.tau_last() + f.degree);
    EXPECT_GE(r.t_total_bound, r.t_total);
  }
  EXPECT_GE(ok, oracle::binomial_lower(runs, 1 - s.eta, 0.01));
}

TEST(SmallOverlap, UndefinedOverlapPropagates) {
  SpectralModel m{{0.5, 0.7}, {0.5, 0.5}, ""};
  const auto iv = IntervalPair::make({-kPi, -0.3}, {-kPi, 0.0});
  EXPECT_THROW(run_gsee_small_overlap(m, iv, 0.01, build_schedule(1.0, 0.1, 5, 10), CounterRng(0)),
               UndefinedOverlapError);
}
