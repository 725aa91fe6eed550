#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inout/geometry.hpp"
#include "inout/oracle1d.hpp"
#include "inout/random.hpp"
#include "inout/sampler.hpp"
#include "inout/stats.hpp"

namespace inout {

/// Samples are stored column-wise: a d x n matrix holds n points.
using SampleMatrix = Eigen::MatrixXd;

SampleMatrix stack_samples(std::span<const Eigen::VectorXd> points);

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double cov_opnorm = 0.0;
  double cov_trace = 0.0;
  /// E|X - EX|^2 (the covariance trace).
  double second_moment = 0.0;
  int power_iterations = 0;
  bool converged = true;
};

/// Sample mean and (n - 1)-normalized covariance; the operator norm comes from power
/// iteration to relative change 1e-8 or 1000 rounds.
Moments empirical_moments(const SampleMatrix& samples);

struct MarginalKS {
  std::vector<double> statistic;
  std::vector<double> p_value;
  double alpha = 0.01;
  /// Per-coordinate level alpha / d.
  double per_test_alpha = 0.01;
  bool pass = true;
};

/// Two-sided KS test of each coordinate against the exact marginal of Unif(body).
/// Boxes and balls only.
MarginalKS marginal_ks(const SampleMatrix& samples, const ConvexBody<double>& body, double alpha = 0.01);

/// CDF of one coordinate of Unif(ball of radius R centred at c) in dimension d.
double ball_marginal_cdf(double x, double c, double R, Eigen::Index d);

struct BlowupTail {
  ProportionEstimate exceed;
  double bound = 1.0;
  /// Wilson upper limit <= bound.
  bool satisfied = true;
};

/// x ~ Unif(K), y = x + sqrt(h) z; the fraction of y outside the delta-blowup of K.
BlowupTail blowup_tail_mc(const ConvexBody<double>& body, double h, double delta, std::uint64_t n, Rng& rng);

/// Plug-in divergence between binned samples and Unif(body), d <= 3. Bins form a regular
/// grid over the bounding box; bins outside the body are dropped. Every retained bin gets one
/// pseudo-count, so the value is biased upward and only meaningful as a trend.
double histogram_divergence(const SampleMatrix& samples, const ConvexBody<double>& body, int bins,
                            oracle1d::DivergenceKind kind);

/// Reference bin masses of Unif(body) used by histogram_divergence (row-major, first axis fastest).
Eigen::VectorXd reference_bin_masses(const ConvexBody<double>& body, int bins);

struct BoundReport {
  std::string name;
  double predicted = 0.0;
  double empirical = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  bool satisfied = true;
};

struct TestReport {
  std::string name;
  double statistic = 0.0;
  bool pass = true;
};

struct RunReport {
  std::uint64_t chains = 0;
  std::uint64_t proper_steps = 0;
  std::uint64_t total_queries = 0;
  MeanEstimate mean_trials;
  ProportionEstimate failure_rate;
  std::uint64_t restarts = 0;
  std::vector<BoundReport> bounds;
  std::vector<TestReport> tests;
};

/// Associative per-chain accumulator; merge partials in any grouping.
class RunAccumulator {
 public:
  void add(const ChainTrace<double>& trace);
  void merge(const RunAccumulator& other);
  RunReport report() const;

 private:
  std::uint64_t chains_ = 0;
  std::uint64_t failed_ = 0;
  std::uint64_t proper_steps_ = 0;
  std::uint64_t total_queries_ = 0;
  std::uint64_t restarts_ = 0;
  std::uint64_t iterations_ = 0;
  double trials_sum_ = 0.0;
  double trials_sumsq_ = 0.0;
};

RunReport summarize(std::span<const ChainTrace<double>> traces);

struct ScalingConfig {
  std::uint64_t m = 50;
  double warmness = 1.0;
  double eta = 0.1;
  std::uint64_t chains = 200;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct ScalingRow {
  Eigen::Index d = 0;
  double h = 0.0;
  std::uint64_t N = 0;
  MeanEstimate trials;
  double predictor = 0.0;  // M log^4(mM/eta)
  double constant = 0.0;   // trials.mean / predictor
  double residual = 0.0;   // constant / fitted - 1
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  double fitted_constant = 0.0;
  /// max / min of the per-dimension constants.
  double spread = 1.0;
};

/// Mean trials per iteration of In-and-Out chains started from Unif(K), across dimensions,
/// fitted to M log^4(mM/eta) with one least-squares constant.
ScalingReport rejection_scaling_report(BodyKind family, std::span<const Eigen::Index> dims, const ScalingConfig& config);

}  // namespace inout
