#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "inout/errors.hpp"
#include "inout/geometry.hpp"
#include "inout/random.hpp"
#include "inout/stats.hpp"

namespace inout {

/// Parameter bundle for one In-and-Out run. `m` counts completed iterations and the chain
/// outputs the m-th iterate, so m = 0 returns the start point.
struct InOutParams {
  double h = 0.0;
  std::uint64_t N = 1;
  std::uint64_t m = 0;
  double q = 2.0;
  double eps = 0.1;
  double eta = 0.1;
  double warmness = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(h > 0.0)) throw ParameterError("InOutParams: h must be > 0");
    if (N < 1) throw ParameterError("InOutParams: N must be >= 1");
    if (!(q >= 1.0)) throw ParameterError("InOutParams: q must be >= 1");
    if (!(eps > 0.0 && eps < 0.5)) throw ParameterError("InOutParams: eps must lie in (0, 1/2)");
    if (!(eta > 0.0 && eta < 0.5)) throw ParameterError("InOutParams: eta must lie in (0, 1/2)");
    if (!(warmness >= 1.0)) throw ParameterError("InOutParams: warmness M must be >= 1");
  }
};

/// Per-chain record. For a restarted run the arrays describe the successful chain only;
/// `discarded_queries` holds the membership queries spent on failed attempts.
template <typename Scalar>
struct ChainTrace {
  std::vector<VectorX<Scalar>> iterates;
  std::vector<std::uint64_t> trials_per_iter;
  std::uint64_t total_queries = 0;
  std::optional<std::size_t> failed_at;
  std::uint64_t restarts = 0;
  std::uint64_t discarded_queries = 0;
  VectorX<Scalar> last;

  std::size_t proper_steps() const { return failed_at ? *failed_at : trials_per_iter.size(); }
  bool failed() const { return failed_at.has_value(); }
};

struct ChainOptions {
  /// Keep every iterate (otherwise only the start and `last`).
  bool record_iterates = true;
};

/// y = x + sqrt(h) z with z ~ N(0, I).
template <typename Derived>
VectorX<typename Derived::Scalar> forward_step(const Eigen::MatrixBase<Derived>& x, double h, Rng& rng) {
  using Scalar = typename Derived::Scalar;
  if (!(h > 0.0)) throw ParameterError("forward_step: h must be > 0");
  const Scalar sd = static_cast<Scalar>(std::sqrt(h));
  VectorX<Scalar> y = x;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += sd * static_cast<Scalar>(rng.normal());
  return y;
}

template <typename Scalar>
struct BackwardResult {
  std::optional<VectorX<Scalar>> point;
  std::uint64_t trials = 0;

  bool failed() const { return !point.has_value(); }
};

/// Rejection sampling from N(y, hI)|_K with at most N proposals. Failure is returned,
/// not thrown. Each proposal costs exactly one membership query.
template <MembershipOracle Oracle, typename Derived>
BackwardResult<typename Oracle::Scalar> backward_step(const Oracle& oracle, const Eigen::MatrixBase<Derived>& y,
                                                      double h, std::uint64_t N, Rng& rng) {
  using Scalar = typename Oracle::Scalar;
  if (N < 1) throw ParameterError("backward_step: N must be >= 1");
  const Scalar sd = static_cast<Scalar>(std::sqrt(h));
  VectorX<Scalar> x(y.size());
  for (std::uint64_t trial = 1; trial <= N; ++trial) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = y(i) + sd * static_cast<Scalar>(rng.normal());
    if (oracle.contains(x)) return {std::move(x), trial};
  }
  return {std::nullopt, N};
}

/// Runs m In-and-Out iterations from x0, stopping at the first failure.
template <MembershipOracle Oracle>
ChainTrace<typename Oracle::Scalar> run_chain(const Oracle& oracle, const VectorX<typename Oracle::Scalar>& x0,
                                              const InOutParams& params, Rng& rng, ChainOptions options = {}) {
  params.validate();
  if (x0.size() != oracle.dim()) throw ParameterError("run_chain: start point dimension mismatch");
  if (!oracle.contains(x0)) throw ParameterError("run_chain: start point is not in K");

  ChainTrace<typename Oracle::Scalar> trace;
  trace.iterates.push_back(x0);
  trace.trials_per_iter.reserve(params.m);
  auto x = x0;
  for (std::uint64_t i = 0; i < params.m; ++i) {
    const auto y = forward_step(x, params.h, rng);
    auto step = backward_step(oracle, y, params.h, params.N, rng);
    trace.trials_per_iter.push_back(step.trials);
    trace.total_queries += step.trials;
    if (step.failed()) {
      trace.failed_at = static_cast<std::size_t>(i);
      break;
    }
    x = std::move(*step.point);
    if (options.record_iterates) trace.iterates.push_back(x);
  }
  trace.last = std::move(x);
  return trace;
}

/// Maximum restarts tolerated before the run is declared mis-configured.
inline std::uint64_t restart_cap(double eta) { return static_cast<std::uint64_t>(std::ceil(10.0 / (1.0 - eta))); }

/// Re-runs whole chains from fresh warm-start draws until one completes m iterations.
/// `trace.restarts` counts discarded attempts; total attempts are restarts + 1.
template <MembershipOracle Oracle, typename WarmSampler>
ChainTrace<typename Oracle::Scalar> run_with_restart(const Oracle& oracle, WarmSampler&& warm_sampler,
                                                     const InOutParams& params, Rng& rng, ChainOptions options = {}) {
  params.validate();
  const std::uint64_t cap = restart_cap(params.eta);
  std::uint64_t discarded = 0;
  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt > cap)
      throw DiagnosticsError("run_with_restart: exceeded " + std::to_string(cap) +
                             " restarts; the schedule (h, N) is likely mis-set for this body");
    const VectorX<typename Oracle::Scalar> x0 = warm_sampler(rng);
    auto trace = run_chain(oracle, x0, params, rng, options);
    if (!trace.failed()) {
      trace.restarts = attempt;
      trace.discarded_queries = discarded;
      trace.total_queries += discarded;
      return trace;
    }
    discarded += trace.total_queries;
  }
}

/// Monte-Carlo estimate of the Gaussian local conductance N(y, hI)(K), Wilson 95% CI.
template <MembershipOracle Oracle, typename Derived>
ProportionEstimate local_conductance_mc(const Oracle& oracle, const Eigen::MatrixBase<Derived>& y, double h,
                                        std::uint64_t n, Rng& rng) {
  if (n < 1) throw ParameterError("local_conductance_mc: n must be >= 1");
  std::uint64_t inside = 0;
  for (std::uint64_t i = 0; i < n; ++i) inside += oracle.contains(forward_step(y, h, rng)) ? 1 : 0;
  return wilson_interval(inside, n);
}

/// Runs `task(index, rng)` for chain indices [0, chains) with rng = Rng::stream(seed, index),
/// spread over worker threads. Results come back in index order, so output is independent
/// of the thread count.
template <typename Task>
auto run_chains(std::uint64_t chains, std::uint64_t seed, Task&& task, unsigned threads = 0)
    -> std::vector<decltype(task(std::uint64_t{}, std::declval<Rng&>()))> {
  using Result = decltype(task(std::uint64_t{}, std::declval<Rng&>()));
  std::vector<std::optional<Result>> slots(chains);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(chains, 1)));

  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&](unsigned w) {
    for (std::uint64_t i = w; i < chains; i += threads) {
      try {
        Rng rng = Rng::stream(seed, i);
        slots[i].emplace(task(i, rng));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  if (threads <= 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  }
  if (error) std::rethrow_exception(error);
  std::vector<Result> results;
  results.reserve(chains);
  for (auto& slot : slots) results.push_back(std::move(*slot));
  return results;
}

}  // namespace inout
