#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "inout/errors.hpp"
#include "inout/geometry.hpp"
#include "inout/random.hpp"
#include "inout/sampler.hpp"
#include "inout/stats.hpp"

namespace inout {

struct BallWalkParams {
  double delta = 0.0;
  std::uint64_t T = 0;
  std::uint64_t seed = 0;
  /// Safety cap on rejected proposals per speedy step.
  std::uint64_t speedy_cap = 10'000'000;

  void validate() const {
    if (!(delta > 0.0)) throw ParameterError("BallWalkParams: delta must be > 0");
    if (speedy_cap < 1) throw ParameterError("BallWalkParams: speedy_cap must be >= 1");
  }
};

/// Default speedy/ball step 1 / (2 sqrt(d)).
inline double default_ball_step(Eigen::Index d) { return 0.5 / std::sqrt(static_cast<double>(d)); }

/// One ball-walk step: propose Unif(B_delta(x)); stay put if it leaves K. One query.
template <MembershipOracle Oracle, typename Derived>
VectorX<typename Oracle::Scalar> ball_walk_step(const Oracle& oracle, const Eigen::MatrixBase<Derived>& x,
                                                double delta, Rng& rng) {
  using Scalar = typename Oracle::Scalar;
  VectorX<Scalar> y = x + uniform_in_ball<Scalar>(x.size(), static_cast<Scalar>(delta), rng);
  if (oracle.contains(y)) return y;
  return x;
}

template <typename Scalar>
struct SpeedyStep {
  VectorX<Scalar> point;
  std::uint64_t improper = 0;
};

/// One speedy-walk step: Unif(K ∩ B_delta(x)) by repeated ball proposals.
/// Each rejected proposal is an improper step and costs one query.
template <MembershipOracle Oracle, typename Derived>
SpeedyStep<typename Oracle::Scalar> speedy_walk_step(const Oracle& oracle, const Eigen::MatrixBase<Derived>& x,
                                                     double delta, Rng& rng,
                                                     std::uint64_t safety_cap = 10'000'000) {
  using Scalar = typename Oracle::Scalar;
  for (std::uint64_t improper = 0; improper < safety_cap; ++improper) {
    VectorX<Scalar> y = x + uniform_in_ball<Scalar>(x.size(), static_cast<Scalar>(delta), rng);
    if (oracle.contains(y)) return {std::move(y), improper};
  }
  throw DiagnosticsError("speedy_walk_step: safety cap of " + std::to_string(safety_cap) +
                         " improper steps hit; K ∩ B_delta(x) is pathologically thin");
}

/// vol(K ∩ B_delta(x)) / vol(B_delta(x)) by Monte Carlo, Wilson 95% CI.
template <MembershipOracle Oracle, typename Derived>
ProportionEstimate ball_local_conductance_mc(const Oracle& oracle, const Eigen::MatrixBase<Derived>& x,
                                             double delta, std::uint64_t n, Rng& rng) {
  using Scalar = typename Oracle::Scalar;
  if (n < 1) throw ParameterError("ball_local_conductance_mc: n must be >= 1");
  std::uint64_t inside = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const VectorX<Scalar> y = x + uniform_in_ball<Scalar>(x.size(), static_cast<Scalar>(delta), rng);
    inside += oracle.contains(y) ? 1 : 0;
  }
  return wilson_interval(inside, n);
}

/// Average conductance lambda = E_pi[ell]. Each of the n draws pairs an exact uniform
/// point with one ball proposal, so the hit count is Binomial(n, lambda).
template <typename Scalar>
ProportionEstimate average_conductance_mc(const ConvexBody<Scalar>& body, double delta, std::uint64_t n, Rng& rng) {
  if (n < 1) throw ParameterError("average_conductance_mc: n must be >= 1");
  std::uint64_t inside = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const VectorX<Scalar> x = exact_uniform_sample(body, rng);
    inside += body.contains(x + uniform_in_ball<Scalar>(body.dim(), static_cast<Scalar>(delta), rng)) ? 1 : 0;
  }
  return wilson_interval(inside, n);
}

/// TV distance between the speedy law and Unif(K) is at most (1 - lambda) / lambda.
inline double speedy_tv_bias_bound(double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ParameterError("speedy_tv_bias_bound: lambda must lie in (0, 1]");
  return (1.0 - lambda) / lambda;
}

template <typename Scalar>
struct ConversionResult {
  VectorX<Scalar> point;
  std::uint64_t calls = 0;
};

/// Speedy-to-uniform conversion: draw X from the speedy sampler until the point scaled by
/// 2d/(2d-1) about the body center lies in K, and return that scaled point.
template <typename Scalar, typename SpeedySampler>
ConversionResult<Scalar> speedy_to_uniform(const ConvexBody<Scalar>& body, SpeedySampler&& speedy_sampler, Rng& rng,
                                           std::uint64_t safety_cap = 1000) {
  const Scalar d = static_cast<Scalar>(body.dim());
  const Scalar factor = Scalar(2) * d / (Scalar(2) * d - Scalar(1));
  for (std::uint64_t call = 1; call <= safety_cap; ++call) {
    const VectorX<Scalar> x = speedy_sampler(rng);
    VectorX<Scalar> scaled = body.center() + factor * (x - body.center());
    if (body.contains(scaled)) return {std::move(scaled), call};
  }
  throw DiagnosticsError("speedy_to_uniform: no accepted point within " + std::to_string(safety_cap) + " calls");
}

/// Ball walk for T iterations; every iteration costs one query (trials = 1).
template <MembershipOracle Oracle>
ChainTrace<typename Oracle::Scalar> run_ball_walk(const Oracle& oracle, const VectorX<typename Oracle::Scalar>& x0,
                                                  const BallWalkParams& params, Rng& rng, ChainOptions options = {}) {
  params.validate();
  if (!oracle.contains(x0)) throw ParameterError("run_ball_walk: start point is not in K");
  ChainTrace<typename Oracle::Scalar> trace;
  trace.iterates.push_back(x0);
  auto x = x0;
  for (std::uint64_t i = 0; i < params.T; ++i) {
    x = ball_walk_step(oracle, x, params.delta, rng);
    trace.trials_per_iter.push_back(1);
    trace.total_queries += 1;
    if (options.record_iterates) trace.iterates.push_back(x);
  }
  trace.last = std::move(x);
  return trace;
}

/// Speedy walk for T proper steps; trials per step = 1 + improper.
template <MembershipOracle Oracle>
ChainTrace<typename Oracle::Scalar> run_speedy_walk(const Oracle& oracle, const VectorX<typename Oracle::Scalar>& x0,
                                                    const BallWalkParams& params, Rng& rng, ChainOptions options = {}) {
  params.validate();
  if (!oracle.contains(x0)) throw ParameterError("run_speedy_walk: start point is not in K");
  ChainTrace<typename Oracle::Scalar> trace;
  trace.iterates.push_back(x0);
  auto x = x0;
  for (std::uint64_t i = 0; i < params.T; ++i) {
    auto step = speedy_walk_step(oracle, x, params.delta, rng, params.speedy_cap);
    trace.trials_per_iter.push_back(step.improper + 1);
    trace.total_queries += step.improper + 1;
    x = std::move(step.point);
    if (options.record_iterates) trace.iterates.push_back(x);
  }
  trace.last = std::move(x);
  return trace;
}

}  // namespace inout
