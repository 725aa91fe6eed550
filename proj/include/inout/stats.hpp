#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace inout {

/// Two-sided normal quantile for the fixed 95% confidence level used throughout.
inline constexpr double kZ95 = 1.959963984540054;

/// A Monte-Carlo proportion with its Wilson 95% interval.
struct ProportionEstimate {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 1.0;
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
};

/// A sample mean with a normal-approximation 95% interval.
struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::uint64_t count = 0;
};

ProportionEstimate wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = kZ95);
MeanEstimate mean_estimate(std::span<const double> values, double z = kZ95);

double normal_cdf(double x);
/// log P(Z > x) for a standard normal; accurate far into the upper tail.
double log_normal_sf(double x);
/// log(Phi(hi) - Phi(lo)) for lo < hi, stable when both ends sit in one tail.
double log_normal_interval_mass(double lo, double hi);

/// Kolmogorov-Smirnov statistic of `samples` against a continuous CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
/// Asymptotic two-sided KS p-value with Stephens' finite-n correction.
double ks_pvalue(double statistic, std::uint64_t n);

struct ChiSquareTest {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

double chi_squared_sf(double x, double dof);
/// Pearson goodness-of-fit; `expected` are cell probabilities (renormalized internally).
ChiSquareTest pearson_chi_squared(std::span<const std::uint64_t> observed, std::span<const double> expected);

/// Effective sample size from a scalar series (Geyer initial positive sequence).
double effective_sample_size(std::span<const double> series);

}  // namespace inout
