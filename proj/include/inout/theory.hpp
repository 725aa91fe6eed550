#pragma once

#include <cstdint>
#include <limits>

namespace inout::theory {

/// Per-iteration schedule: Z = 9mM/eta, c = loglog Z / (2 log Z), t = sqrt(8) loglog Z,
/// h = c/d^2, delta = t/d, N = ceil(Z log^4 Z).
struct Schedule {
  double Z = 0.0;
  double log_Z = 0.0;
  double loglog_Z = 0.0;
  double c = 0.0;
  double t = 0.0;
  double h = 0.0;
  double delta = 0.0;
  std::uint64_t N = 0;
};

/// Universal constants hidden behind asymptotic notation. The defaults (1.0) are NOT
/// certified values; treat them as fit parameters when comparing against measurements.
struct UniversalConstants {
  double poincare = 1.0;
  double log_sobolev = 1.0;
  double iterations = 1.0;
};

Schedule per_iteration_schedule(std::uint64_t m, double warmness, double eta, std::uint64_t d);

/// h = 1 / (2 d^2 log(9mM/eta)). Differs from the per-iteration schedule's h by the
/// factor loglog Z.
double main_step_size(std::uint64_t m, double warmness, double eta, std::uint64_t d);

/// R0 / (1 + h/C_LSI)^(k/q).
double renyi_decay_lsi(double R0, double k, double h, double C_lsi, double q);

/// X0 / (1 + h/C_PI)^k.
double chi2_decay_pi(double X0, double k, double h, double C_pi);

/// Number of iterations spent in the linear phase of the Poincare-driven Renyi decay:
/// ceil(q (R0 - 1) / (2 log(1 + h/C_PI))), zero when R0 <= 1.
std::uint64_t renyi_two_phase_k0(double R0, double h, double C_pi, double q);

/// Two-phase Renyi bound under a Poincare inequality (q >= 2).
double renyi_decay_pi_two_phase(double R0, double k, double h, double C_pi, double q);

struct FunctionalInequalityConstants {
  double poincare_upper = 0.0;
  double log_sobolev_upper = 0.0;
};

/// C_PI <~ ||cov||_op log d and C_LSI <~ D^2 (C_LSI <~ D when isotropic). log d is
/// floored at 1 so the estimate stays positive for d <= 2.
FunctionalInequalityConstants fi_constants(double cov_opnorm, double D, std::uint64_t d, bool isotropic,
                                           const UniversalConstants& constants = {});

/// log of the warmness after one step from a point start: (d/2) log 2 + 5 D^2 / h.
double point_start_log_warmness(std::uint64_t d, double h, double D);

/// min(1, exp(-delta^2/(2h) + delta d)).
double blowup_tail_bound(double delta, double h, std::uint64_t d);
double log_blowup_tail_bound(double delta, double h, std::uint64_t d);

/// Increase in R_q from conditioning on success: q/(q-1) log(1/(1-eta)); q = +inf gives log(1/(1-eta)).
double conditioning_bias(double q, double eta);

/// Smallest m with m >= C q d^2 ||cov|| log d log(M/(eta eps)) log(9mM/eta).
std::uint64_t iteration_count(double q, std::uint64_t d, double cov_opnorm, double warmness, double eta, double eps,
                              const UniversalConstants& constants = {});

struct WarmStartCounts {
  std::uint64_t poincare = 0;
  std::uint64_t log_sobolev = 0;
};

/// Iterations until R_q <= eps from an M-warm start (R_q(mu_0) <= log M), evaluated from
/// both decay laws. Callers take the minimum of whichever constants they trust.
WarmStartCounts warm_start_iteration_counts(double q, double h, double C_pi, double C_lsi, double warmness,
                                            double eps);

}  // namespace inout::theory
