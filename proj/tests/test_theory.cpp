#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "inout/errors.hpp"
#include "inout/random.hpp"
#include "inout/theory.hpp"

using namespace inout;
using namespace inout::theory;

TEST(Theory, ScheduleGolden) {
  // Reference values from a 50-digit evaluation.
  const auto s = per_iteration_schedule(100, 2.0, 0.1, 10);
  EXPECT_NEAR(s.Z, 18000.0, 1e-9);
  EXPECT_NEAR(s.log_Z, 9.798127036878302, 1e-13);
  EXPECT_NEAR(s.loglog_Z, 2.282191248725135, 1e-13);
  EXPECT_NEAR(s.h, 1.1646058681089753e-3, 1e-17);
  EXPECT_EQ(s.N, 165899383u);
  EXPECT_NEAR(s.t, std::sqrt(8.0) * s.loglog_Z, 1e-14);
  EXPECT_NEAR(s.delta, s.t / 10.0, 1e-15);
  EXPECT_NEAR(s.h, s.c / 100.0, 1e-18);
}

TEST(Theory, ScheduleRejectsBadInputs) {
  EXPECT_THROW(per_iteration_schedule(100, 2.0, 1.5, 10), ParameterError);
  EXPECT_THROW(per_iteration_schedule(100, 2.0, 0.0, 10), ParameterError);
  EXPECT_THROW(per_iteration_schedule(0, 2.0, 0.1, 10), ParameterError);
  EXPECT_THROW(per_iteration_schedule(100, 0.5, 0.1, 10), ParameterError);
}

TEST(Theory, ScheduleMonotonicity) {
  std::uint64_t prev = std::numeric_limits<std::uint64_t>::max();
  for (double eta : {0.01, 0.05, 0.1, 0.2, 0.4}) {
    const auto n = per_iteration_schedule(100, 2.0, eta, 10).N;
    EXPECT_LT(n, prev);
    prev = n;
  }
  const double h10 = per_iteration_schedule(100, 2.0, 0.1, 10).h;
  EXPECT_NEAR(per_iteration_schedule(100, 2.0, 0.1, 20).h, h10 / 4, 1e-18);
}

TEST(Theory, ScheduleTailConsistency) {
  for (std::uint64_t m : {1u, 10u, 100u, 10000u})
    for (double M : {1.0, 2.0, 100.0})
      for (double eta : {1e-6, 0.01, 0.1, 0.45})
        for (std::uint64_t d : {1u, 5u, 100u, 10000u}) {
          const auto s = per_iteration_schedule(m, M, eta, d);
          const double log_tail = -s.t * s.t / (2 * s.c) + s.t;
          EXPECT_LE(log_tail, std::log(eta / (3.0 * m * M)));
          EXPECT_NEAR(log_blowup_tail_bound(s.delta, s.h, d), log_tail, 1e-9 * std::abs(log_tail));
        }
}

TEST(Theory, LogSpaceExtremes) {
  const auto s = per_iteration_schedule(1000, 1.0, 1e-9, 10000);
  EXPECT_TRUE(std::isfinite(s.h));
  EXPECT_GT(s.h, 0.0);
  EXPECT_GT(s.N, 0u);
  const double lb = log_blowup_tail_bound(s.delta, s.h, 10000);
  EXPECT_TRUE(std::isfinite(lb));
  EXPECT_LT(lb, -100.0);
  EXPECT_EQ(blowup_tail_bound(s.delta, s.h, 10000), std::exp(lb));
  EXPECT_TRUE(std::isfinite(point_start_log_warmness(10000, 1e-12, 1e3)));
  EXPECT_THROW(per_iteration_schedule(1000000, 1000.0, 1e-9, 10), ParameterError);  // N overflows 64 bits
}

TEST(Theory, MainStepSize) {
  const double h = main_step_size(100, 2.0, 0.1, 10);
  EXPECT_NEAR(h, 5.103016098057254e-4, 1e-17);
  EXPECT_NEAR(h, 1.0 / (200.0 * std::log(18000.0)), 1e-18);
  const auto s = per_iteration_schedule(100, 2.0, 0.1, 10);
  EXPECT_NEAR(s.h / h, s.loglog_Z, 1e-12);
}

TEST(Theory, DecayLaws) {
  EXPECT_DOUBLE_EQ(renyi_decay_lsi(3.0, 0, 0.1, 1.0, 2.0), 3.0);
  EXPECT_NEAR(renyi_decay_lsi(3.0, 1, 0.5, 0.5, 1.0), 1.5, 1e-15);
  EXPECT_DOUBLE_EQ(chi2_decay_pi(4.0, 0, 0.1, 1.0), 4.0);
  EXPECT_NEAR(chi2_decay_pi(4.0, 1, 0.7, 0.7), 2.0, 1e-15);
  EXPECT_NEAR(chi2_decay_pi(4.0, 3, 0.7, 0.7), 0.5, 1e-15);
}

TEST(Theory, TwoPhaseRenyi) {
  EXPECT_EQ(renyi_two_phase_k0(3.0, std::exp(1.0) - 1.0, 1.0, 2.0), 2u);
  EXPECT_EQ(renyi_two_phase_k0(1.0, 0.1, 1.0, 2.0), 0u);
  EXPECT_EQ(renyi_two_phase_k0(0.5, 0.1, 1.0, 2.0), 0u);
  // R0 < 1: geometric from k = 0.
  EXPECT_NEAR(renyi_decay_pi_two_phase(0.5, 4, 0.1, 1.0, 2.0), 0.5 * std::pow(1.1, -2.0), 1e-15);
  // Linear phase while above 1.
  const double r = renyi_decay_pi_two_phase(3.0, 1, std::exp(1.0) - 1.0, 1.0, 2.0);
  EXPECT_NEAR(r, 2.5, 1e-12);
}

TEST(Theory, FunctionalInequalityConstants) {
  const auto aniso = fi_constants(2.0, 3.0, 10, false);
  const auto iso = fi_constants(2.0, 3.0, 10, true);
  EXPECT_NEAR(aniso.log_sobolev_upper, 9.0, 1e-15);
  EXPECT_NEAR(iso.log_sobolev_upper, 3.0, 1e-15);
  EXPECT_NEAR(aniso.poincare_upper, 2.0 * std::log(10.0), 1e-14);
  EXPECT_NEAR(fi_constants(2.0, 3.0, 2, false).poincare_upper, 2.0, 1e-15);  // log d floored at 1
  EXPECT_LT(fi_constants(1.0, 2.0, 5, false).log_sobolev_upper, fi_constants(1.0, 2.5, 5, false).log_sobolev_upper);
  UniversalConstants c;
  c.poincare = 3.0;
  EXPECT_NEAR(fi_constants(2.0, 3.0, 10, false, c).poincare_upper, 3.0 * aniso.poincare_upper, 1e-13);
}

TEST(Theory, PointStartWarmness) {
  EXPECT_NEAR(point_start_log_warmness(2, 1.0, 1.0), std::log(2.0) + 5.0, 1e-14);
  EXPECT_NEAR(point_start_log_warmness(6, 1e300, 1.0), 3.0 * std::log(2.0), 1e-12);
  EXPECT_LT(point_start_log_warmness(4, 0.1, 1.0), point_start_log_warmness(4, 0.1, 1.5));
}

TEST(Theory, BlowupTailBound) {
  EXPECT_EQ(blowup_tail_bound(0.0, 0.1, 5), 1.0);
  EXPECT_NEAR(blowup_tail_bound(2.0, 0.1, 1), std::exp(-20.0 + 2.0), 1e-20);
  EXPECT_EQ(blowup_tail_bound(0.1, 1.0, 10), 1.0);  // clamped
}

TEST(Theory, ConditioningBias) {
  EXPECT_NEAR(conditioning_bias(2.0, 0.1), 0.21072103131565260, 1e-15);
  EXPECT_NEAR(conditioning_bias(2.0, 1e-12), 0.0, 1e-11);
  EXPECT_NEAR(conditioning_bias(std::numeric_limits<double>::infinity(), 0.1), std::log(10.0 / 9.0), 1e-15);
  EXPECT_GT(conditioning_bias(2.0, 0.1), conditioning_bias(3.0, 0.1));
}

TEST(Theory, IterationCountGolden) {
  const auto m = iteration_count(2.0, 5, 1.0, 1.0, 0.1, 0.1);
  EXPECT_EQ(m, 4810u);
  const double A = 2.0 * 25.0 * std::log(5.0) * std::log(1.0 / 0.01);
  auto rhs = [&](double k) { return A * std::log(9.0 * k / 0.1); };
  EXPECT_GE(static_cast<double>(m), rhs(m));
  EXPECT_LT(static_cast<double>(m - 1), rhs(m - 1));
}

TEST(Theory, IterationCountScaling) {
  const double m2 = static_cast<double>(iteration_count(2.0, 10, 1.0, 1.0, 0.1, 0.1));
  const double m4 = static_cast<double>(iteration_count(4.0, 10, 1.0, 1.0, 0.1, 0.1));
  EXPECT_GT(m4 / m2, 2.0);
  EXPECT_LT(m4 / m2, 2.3);
  EXPECT_GT(iteration_count(2.0, 10, 1.0, 1.0, 0.1, 0.01), iteration_count(2.0, 10, 1.0, 1.0, 0.1, 0.1));
}

TEST(Theory, WarmStartCounts) {
  const auto c = warm_start_iteration_counts(2.0, 0.01, 0.5, 1.0, 100.0, 0.1);
  EXPECT_GT(c.poincare, 0u);
  EXPECT_GT(c.log_sobolev, 0u);
  const auto warmer = warm_start_iteration_counts(2.0, 0.01, 0.5, 1.0, 2.0, 0.1);
  EXPECT_LE(warmer.poincare, c.poincare);
  EXPECT_LE(warmer.log_sobolev, c.log_sobolev);
  // The LSI count must actually reach eps from log M.
  EXPECT_LE(renyi_decay_lsi(std::log(100.0), static_cast<double>(c.log_sobolev), 0.01, 1.0, 2.0), 0.1 + 1e-12);
}

TEST(TheoryProperty, MonotoneOnRandomInputs) {
  Rng rng(17);
  for (int i = 0; i < 2000; ++i) {
    const double h = rng.uniform(1e-4, 1.0), C = rng.uniform(0.1, 5.0), R0 = rng.uniform(0.0, 10.0);
    const double q = rng.uniform(2.0, 8.0), k = std::floor(rng.uniform(0.0, 200.0));
    const double delta = rng.uniform(0.0, 2.0);
    const auto d = static_cast<std::uint64_t>(rng.uniform(1.0, 100.0));
    EXPECT_LE(renyi_decay_lsi(R0, k + 1, h, C, q), renyi_decay_lsi(R0, k, h, C, q));
    EXPECT_LE(renyi_decay_lsi(R0, k, h * 1.5, C, q), renyi_decay_lsi(R0, k, h, C, q));
    EXPECT_LE(chi2_decay_pi(R0, k + 1, h, C), chi2_decay_pi(R0, k, h, C));
    EXPECT_GE(chi2_decay_pi(R0, k, h, C * 1.5), chi2_decay_pi(R0, k, h, C));
    EXPECT_LE(renyi_decay_pi_two_phase(R0, k + 1, h, C, q), renyi_decay_pi_two_phase(R0, k, h, C, q) + 1e-12);
    EXPECT_LE(renyi_decay_pi_two_phase(R0, k, h, C, q), renyi_decay_pi_two_phase(R0 + 0.5, k, h, C, q) + 1e-12);
    EXPECT_GE(log_blowup_tail_bound(delta, h * 1.5, d), log_blowup_tail_bound(delta, h, d));
    const double eta = rng.uniform(1e-6, 0.49);
    EXPECT_LE(conditioning_bias(q, eta), conditioning_bias(q, std::min(0.499, eta * 1.1)));
    EXPECT_GE(conditioning_bias(q, eta), conditioning_bias(q + 1.0, eta));
  }
}
