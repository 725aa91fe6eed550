#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "inout/diagnostics.hpp"
#include "inout/errors.hpp"
#include "inout/geometry.hpp"
#include "inout/random.hpp"
#include "inout/sampler.hpp"
#include "inout/theory.hpp"

using namespace inout;
using Body = ConvexBody<double>;

namespace {

SampleMatrix exact_samples(const Body& body, int n, std::uint64_t seed) {
  Rng rng(seed);
  SampleMatrix s(body.dim(), n);
  for (int i = 0; i < n; ++i) s.col(i) = exact_uniform_sample(body, rng);
  return s;
}

InOutParams schedule_params(std::uint64_t m, double eta, std::uint64_t d) {
  const auto s = theory::per_iteration_schedule(m, 1.0, eta, d);
  InOutParams p;
  p.h = s.h;
  p.N = s.N;
  p.m = m;
  p.eta = eta;
  return p;
}

}  // namespace

TEST(Diagnostics, BoxMoments) {
  const auto m = empirical_moments(exact_samples(Body::box(4, -1, 1), 100000, 1));
  EXPECT_TRUE(m.converged);
  EXPECT_NEAR(m.cov_opnorm, 1.0 / 3.0, 0.01);
  EXPECT_NEAR(m.cov_trace, 4.0 / 3.0, 0.01);
  EXPECT_LT(m.mean.norm(), 0.01);
  EXPECT_LT((m.cov - Eigen::MatrixXd::Identity(4, 4) / 3.0).cwiseAbs().maxCoeff(), 0.01);
}

TEST(Diagnostics, RepeatedPointHasZeroCovariance) {
  SampleMatrix s = Eigen::Vector3d(0.1, -0.2, 0.3).replicate(1, 50);
  const auto m = empirical_moments(s);
  EXPECT_NEAR(m.cov_opnorm, 0.0, 1e-25);
  EXPECT_NEAR(m.cov_trace, 0.0, 1e-25);
  EXPECT_NEAR(m.second_moment, 0.0, 1e-25);
}

TEST(DiagnosticsProperty, OpnormBoundedByTrace) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + trial % 6;
    SampleMatrix s(d, 30);
    for (int j = 0; j < 30; ++j)
      for (int i = 0; i < d; ++i) s(i, j) = rng.normal() * (1.0 + i);
    const auto m = empirical_moments(s);
    EXPECT_LE(m.cov_opnorm, m.cov_trace * (1 + 1e-12));
    EXPECT_GE(m.cov_opnorm, m.cov.diagonal().maxCoeff() * (1 - 1e-6));
  }
}

TEST(Diagnostics, BallMarginalCdfClosedForms) {
  for (double x : {-0.9, -0.3, 0.0, 0.4, 0.95}) {
    EXPECT_NEAR(ball_marginal_cdf(x, 0.0, 1.0, 1), (x + 1) / 2, 1e-14);
    EXPECT_NEAR(ball_marginal_cdf(x, 0.0, 1.0, 2), 0.5 + (x * std::sqrt(1 - x * x) + std::asin(x)) / std::numbers::pi,
                1e-14);
    EXPECT_NEAR(ball_marginal_cdf(x, 0.0, 1.0, 3), 0.5 + 0.75 * x - 0.25 * x * x * x, 1e-14);
    EXPECT_NEAR(ball_marginal_cdf(2 * x + 1, 1.0, 2.0, 3), ball_marginal_cdf(x, 0.0, 1.0, 3), 1e-14);
  }
  EXPECT_EQ(ball_marginal_cdf(-5, 0, 1, 4), 0.0);
  EXPECT_EQ(ball_marginal_cdf(5, 0, 1, 4), 1.0);
}

TEST(Diagnostics, MarginalKs) {
  const auto box = Body::box(5, -1, 1);
  const auto good = exact_samples(box, 5000, 3);
  const auto res = marginal_ks(good, box);
  EXPECT_TRUE(res.pass);
  EXPECT_EQ(res.statistic.size(), 5u);
  EXPECT_DOUBLE_EQ(res.per_test_alpha, 0.002);
  SampleMatrix shifted = good.array() * 0.95;
  EXPECT_FALSE(marginal_ks(shifted, box).pass);

  const auto ball = Body::ball(Eigen::Vector3d(1, 2, 3), 2.0);
  EXPECT_TRUE(marginal_ks(exact_samples(ball, 5000, 4), ball).pass);
  EXPECT_THROW(marginal_ks(exact_samples(Body::simplex(2), 100, 5), Body::simplex(2)), UnsupportedOperation);
}

TEST(Diagnostics, BlowupTailTrivialLimits) {
  const auto body = Body::box(3, -1, 1);
  Rng rng(6);
  const auto huge = blowup_tail_mc(body, 0.1, 100.0, 10000, rng);
  EXPECT_EQ(huge.exceed.successes, 0u);
  const auto tiny_h = blowup_tail_mc(body, 1e-12, 0.01, 10000, rng);
  EXPECT_EQ(tiny_h.exceed.successes, 0u);
  EXPECT_THROW(blowup_tail_mc(Body::polytope(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, 1),
                                             Eigen::Vector2d(0, 0), 10.0),
                              0.1, 0.1, 10, rng),
               UnsupportedOperation);
}

TEST(Diagnostics, BlowupTailAtScheduleRadius) {
  // At the schedule's delta the bound is about e^-137, far below what 10^6 draws can
  // resolve; the run must still see no exceedance at all.
  const auto body = Body::box(5, -1, 1);
  const auto s = theory::per_iteration_schedule(50, 1.0, 0.1, 5);
  Rng rng(7);
  const auto tail = blowup_tail_mc(body, s.h, s.delta, 1000000, rng);
  EXPECT_EQ(tail.exceed.successes, 0u);
  EXPECT_LE(tail.exceed.estimate, tail.bound);
  EXPECT_LT(tail.bound, 1e-50);
}

TEST(Diagnostics, BlowupTailBoundHoldsOnResolvableRadii) {
  const auto body = Body::box(5, -1, 1);
  const auto s = theory::per_iteration_schedule(50, 1.0, 0.1, 5);
  Rng rng(8);
  for (double delta : {0.05, 0.1, 0.2, 0.3}) {
    const auto tail = blowup_tail_mc(body, s.h, delta, 200000, rng);
    EXPECT_TRUE(tail.satisfied) << delta << " upper=" << tail.exceed.upper << " bound=" << tail.bound;
  }
}

TEST(Diagnostics, ReferenceBinMasses) {
  const auto box = reference_bin_masses(Body::box(2, -1, 1), 4);
  ASSERT_EQ(box.size(), 16);
  EXPECT_LT((box.array() - 1.0 / 16).abs().maxCoeff(), 1e-15);
  const auto disk = reference_bin_masses(Body::ball(2), 2);
  EXPECT_NEAR(disk.sum(), 1.0, 1e-12);
  EXPECT_LT((disk.array() - 0.25).abs().maxCoeff(), 2e-3);
}

TEST(Diagnostics, HistogramDivergence) {
  const auto body = Body::box(2, -1, 1);
  const int n = 100000, bins = 8;
  const double floor = static_cast<double>(bins * bins) / n;
  const auto kl = oracle1d::DivergenceKind::kl();
  EXPECT_LE(histogram_divergence(exact_samples(body, n, 9), body, bins, kl), 2 * floor);
  SampleMatrix point = Eigen::Vector2d(0.3, 0.3).replicate(1, n);
  EXPECT_GT(histogram_divergence(point, body, bins, kl), 2.0);
  const auto ball = Body::ball(3);
  EXPECT_LE(histogram_divergence(exact_samples(ball, n, 10), ball, 5, kl), 0.01);
  EXPECT_THROW(histogram_divergence(exact_samples(Body::box(4, -1, 1), 10, 11), Body::box(4, -1, 1), 4, kl),
               ParameterError);
}

TEST(Diagnostics, HistogramTrendOverCheckpointsIsNotIncreasing) {
  const auto body = Body::box(2, -1, 1);
  const auto p = schedule_params(40, 0.1, 2);
  const Eigen::VectorXd start = Eigen::Vector2d(0.9, 0.9);
  const auto kl = oracle1d::DivergenceKind::kl();
  const int seeds = 20;
  int increases = 0;
  for (int seed = 0; seed < seeds; ++seed) {
    auto traces = run_chains(300, 1000 + seed, [&](std::uint64_t, Rng& rng) { return run_chain(body, start, p, rng); });
    auto at = [&](std::size_t k) {
      std::vector<Eigen::VectorXd> pts;
      for (const auto& t : traces)
        if (t.iterates.size() > k) pts.push_back(t.iterates[k]);
      return histogram_divergence(stack_samples(pts), body, 6, kl);
    };
    increases += at(40) > at(5) ? 1 : 0;
  }
  const boost::math::binomial_distribution<double> null(seeds, 0.5);
  const double p_value = increases == 0 ? 1.0 : boost::math::cdf(boost::math::complement(null, increases - 1));
  EXPECT_GT(p_value, 0.05) << increases;
}

TEST(Diagnostics, AccumulatorMergeMatchesSummary) {
  const auto body = Body::box(2, -1, 1);
  InOutParams p;
  p.h = 0.3;
  p.N = 3;
  p.m = 20;
  auto traces = run_chains(40, 12, [&](std::uint64_t, Rng& rng) { return run_chain(body, exact_uniform_sample(body, rng), p, rng); });
  const auto all = summarize(traces);
  RunAccumulator a, b, c;
  for (std::size_t i = 0; i < traces.size(); ++i) (i < 13 ? a : i < 30 ? b : c).add(traces[i]);
  RunAccumulator left = a;
  left.merge(b);
  left.merge(c);
  RunAccumulator right = b;
  right.merge(c);
  RunAccumulator outer = a;
  outer.merge(right);
  for (const auto& r : {left.report(), outer.report()}) {
    EXPECT_EQ(r.chains, all.chains);
    EXPECT_EQ(r.proper_steps, all.proper_steps);
    EXPECT_EQ(r.total_queries, all.total_queries);
    EXPECT_NEAR(r.mean_trials.mean, all.mean_trials.mean, 1e-12);
    EXPECT_EQ(r.failure_rate.successes, all.failure_rate.successes);
  }
  EXPECT_GT(all.failure_rate.successes, 0u);
  EXPECT_GE(all.mean_trials.mean, 1.0);
  EXPECT_GE(all.failure_rate.estimate, 0.0);
  EXPECT_LE(all.failure_rate.estimate, 1.0);
}

TEST(Diagnostics, WarmestStartNeedsFewestTrials) {
  const auto body = Body::box(5, -1, 1);
  const auto p = schedule_params(5, 0.1, 5);
  auto mean_trials = [&](bool uniform) {
    auto traces = run_chains(2000, 13, [&](std::uint64_t, Rng& rng) {
      const Eigen::VectorXd x0 = uniform ? exact_uniform_sample(body, rng) : Eigen::VectorXd::Constant(5, 0.999);
      return run_chain(body, x0, p, rng);
    });
    return summarize(traces).mean_trials.mean;
  };
  EXPECT_LT(mean_trials(true), mean_trials(false));
}

TEST(Diagnostics, RejectionScalingSmoke) {
  ScalingConfig cfg;
  cfg.m = 10;
  cfg.chains = 50;
  const std::vector<Eigen::Index> dims{2, 4};
  const auto report = rejection_scaling_report(BodyKind::Box, dims, cfg);
  ASSERT_EQ(report.rows.size(), 2u);
  for (const auto& row : report.rows) {
    EXPECT_GE(row.trials.mean, 1.0);
    EXPECT_NEAR(row.predictor, std::pow(std::log(10.0 / 0.1), 4), 1e-9);
  }
  EXPECT_GE(report.spread, 1.0);
  EXPECT_GT(report.fitted_constant, 0.0);
}
