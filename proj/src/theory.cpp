#include "inout/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "inout/errors.hpp"

namespace inout::theory {
namespace {

void check_common(std::uint64_t m, double warmness, double eta, std::uint64_t d) {
  if (m < 1) throw ParameterError("schedule: m must be >= 1");
  if (!(warmness >= 1.0)) throw ParameterError("schedule: warmness M must be >= 1");
  if (!(eta > 0.0 && eta < 1.0)) throw ParameterError("schedule: eta must lie in (0, 1)");
  if (d < 1) throw ParameterError("schedule: d must be >= 1");
}

double floored_log(std::uint64_t d) { return std::max(1.0, std::log(static_cast<double>(d))); }

}  // namespace

Schedule per_iteration_schedule(std::uint64_t m, double warmness, double eta, std::uint64_t d) {
  check_common(m, warmness, eta, d);
  Schedule s;
  s.Z = 9.0 * static_cast<double>(m) * warmness / eta;
  if (!(s.Z > std::numbers::e)) throw ParameterError("schedule: Z = 9mM/eta must exceed e");
  s.log_Z = std::log(s.Z);
  s.loglog_Z = std::log(s.log_Z);
  s.c = s.loglog_Z / (2.0 * s.log_Z);
  s.t = std::sqrt(8.0) * s.loglog_Z;
  const double dd = static_cast<double>(d);
  s.h = s.c / (dd * dd);
  s.delta = s.t / dd;
  const double n = std::ceil(s.Z * std::pow(s.log_Z, 4));
  if (!(n < 1.8e19)) throw ParameterError("schedule: N = Z log^4 Z overflows a 64-bit count");
  s.N = static_cast<std::uint64_t>(n);
  return s;
}

double main_step_size(std::uint64_t m, double warmness, double eta, std::uint64_t d) {
  check_common(m, warmness, eta, d);
  const double dd = static_cast<double>(d);
  return 1.0 / (2.0 * dd * dd * std::log(9.0 * static_cast<double>(m) * warmness / eta));
}

double renyi_decay_lsi(double R0, double k, double h, double C_lsi, double q) {
  if (!(q >= 1.0) || !(C_lsi > 0.0)) throw ParameterError("renyi_decay_lsi: need q >= 1 and C_LSI > 0");
  return R0 * std::pow(1.0 + h / C_lsi, -k / q);
}

double chi2_decay_pi(double X0, double k, double h, double C_pi) {
  if (!(C_pi > 0.0)) throw ParameterError("chi2_decay_pi: need C_PI > 0");
  return X0 * std::pow(1.0 + h / C_pi, -k);
}

std::uint64_t renyi_two_phase_k0(double R0, double h, double C_pi, double q) {
  if (!(q >= 2.0) || !(C_pi > 0.0) || !(h > 0.0) || !(R0 >= 0.0))
    throw ParameterError("renyi_two_phase: need q >= 2, h > 0, C_PI > 0, R0 >= 0");
  if (R0 <= 1.0) return 0;
  return static_cast<std::uint64_t>(std::ceil(q * (R0 - 1.0) / (2.0 * std::log1p(h / C_pi))));
}

double renyi_decay_pi_two_phase(double R0, double k, double h, double C_pi, double q) {
  const std::uint64_t k0 = renyi_two_phase_k0(R0, h, C_pi, q);
  const double rate = std::log1p(h / C_pi);
  if (R0 < 1.0) return R0 * std::exp(-k * rate / q);
  const double threshold = q * (R0 - 1.0) / (2.0 * rate);
  double bound = std::numeric_limits<double>::infinity();
  if (k <= threshold) bound = R0 - k * rate / q;
  if (k >= static_cast<double>(k0)) bound = std::min(bound, std::exp(-(k - static_cast<double>(k0)) * rate / q));
  return bound;
}

FunctionalInequalityConstants fi_constants(double cov_opnorm, double D, std::uint64_t d, bool isotropic,
                                           const UniversalConstants& constants) {
  if (!(cov_opnorm > 0.0) || !(D > 0.0) || d < 1) throw ParameterError("fi_constants: need cov > 0, D > 0, d >= 1");
  return {constants.poincare * cov_opnorm * floored_log(d), constants.log_sobolev * (isotropic ? D : D * D)};
}

double point_start_log_warmness(std::uint64_t d, double h, double D) {
  if (!(h > 0.0)) throw ParameterError("point_start_log_warmness: h must be > 0");
  return 0.5 * static_cast<double>(d) * std::numbers::ln2 + 5.0 * D * D / h;
}

double log_blowup_tail_bound(double delta, double h, std::uint64_t d) {
  if (!(delta >= 0.0) || !(h > 0.0)) throw ParameterError("blowup_tail_bound: need delta >= 0 and h > 0");
  return std::min(0.0, -delta * delta / (2.0 * h) + delta * static_cast<double>(d));
}

double blowup_tail_bound(double delta, double h, std::uint64_t d) { return std::exp(log_blowup_tail_bound(delta, h, d)); }

double conditioning_bias(double q, double eta) {
  if (!(q > 1.0)) throw ParameterError("conditioning_bias: q must be > 1");
  if (!(eta >= 0.0 && eta < 1.0)) throw ParameterError("conditioning_bias: eta must lie in [0, 1)");
  const double base = -std::log1p(-eta);
  if (std::isinf(q)) return base;
  return q / (q - 1.0) * base;
}

std::uint64_t iteration_count(double q, std::uint64_t d, double cov_opnorm, double warmness, double eta, double eps,
                              const UniversalConstants& constants) {
  if (!(q >= 1.0) || d < 1 || !(cov_opnorm > 0.0) || !(warmness >= 1.0) || !(eta > 0.0 && eta < 1.0) ||
      !(eps > 0.0 && eps < 1.0))
    throw ParameterError("iteration_count: invalid inputs");
  const double dd = static_cast<double>(d);
  const double slope = constants.iterations * q * dd * dd * cov_opnorm * floored_log(d) *
                       std::log(warmness / (eta * eps));
  const double scale = 9.0 * warmness / eta;
  // m -> ceil(slope log(scale m)) is increasing and concave; iterating from 1 climbs to
  // the least m with m >= slope log(scale m).
  double m = 1.0;
  for (int round = 0; round < 100; ++round) {
    const double next = std::max(1.0, std::ceil(slope * std::log(scale * m)));
    if (next == m) return static_cast<std::uint64_t>(m);
    m = next;
  }
  throw ParameterError("iteration_count: fixed-point iteration did not converge");
}

WarmStartCounts warm_start_iteration_counts(double q, double h, double C_pi, double C_lsi, double warmness,
                                            double eps) {
  if (!(q >= 2.0) || !(h > 0.0) || !(C_pi > 0.0) || !(C_lsi > 0.0) || !(warmness >= 1.0) || !(eps > 0.0))
    throw ParameterError("warm_start_iteration_counts: invalid inputs");
  const double R0 = std::log(warmness);
  WarmStartCounts counts;
  const double pi_rate = std::log1p(h / C_pi);
  const auto k0 = renyi_two_phase_k0(R0, h, C_pi, q);
  const double tail_start = R0 < 1.0 ? R0 : 1.0;
  const double tail = tail_start > eps ? std::ceil(q * std::log(tail_start / eps) / pi_rate) : 0.0;
  counts.poincare = k0 + static_cast<std::uint64_t>(tail);
  const double lsi_rate = std::log1p(h / C_lsi);
  counts.log_sobolev = R0 > eps ? static_cast<std::uint64_t>(std::ceil(q * std::log(R0 / eps) / lsi_rate)) : 0;
  return counts;
}

}  // namespace inout::theory
