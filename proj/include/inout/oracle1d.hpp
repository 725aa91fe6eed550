#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace inout::oracle1d {

struct Interval {
  double a = -1.0;
  double b = 1.0;

  double length() const { return b - a; }
};

/// Uniform cell lattice: cell i covers [lo + i dx, lo + (i+1) dx].
struct Lattice {
  double lo = 0.0;
  double dx = 1.0;
  Eigen::Index n = 0;

  double hi() const { return lo + dx * static_cast<double>(n); }
  double center(Eigen::Index i) const { return lo + (static_cast<double>(i) + 0.5) * dx; }
  Eigen::VectorXd centers() const;

  /// n cells covering at least [a - margin, b + margin], with a and b on cell boundaries.
  static Lattice covering(Interval K, double margin, Eigen::Index n);

  /// Cell index range [first, last) lying inside K; K must sit on cell boundaries.
  std::pair<Eigen::Index, Eigen::Index> cells_in(Interval K) const;

  bool same_as(const Lattice& other) const;
};

/// A probability vector on a lattice (per-cell masses summing to one).
class Grid1D {
 public:
  Grid1D(Lattice lattice, Eigen::VectorXd mass);

  const Lattice& lattice() const { return lattice_; }
  const Eigen::VectorXd& mass() const { return mass_; }
  Eigen::Index size() const { return lattice_.n; }
  double dx() const { return lattice_.dx; }
  double lo() const { return lattice_.lo; }
  double hi() const { return lattice_.hi(); }

  double mean() const;
  double variance() const;

  static Grid1D uniform(const Lattice& lattice, Interval K);
  static Grid1D point_mass(const Lattice& lattice, double x);
  /// Masses proportional to density(center_i), normalized.
  static Grid1D from_density(const Lattice& lattice, const std::function<double(double)>& density);
  static Grid1D gaussian(const Lattice& lattice, double mean, double variance);

 private:
  Lattice lattice_;
  Eigen::VectorXd mass_;
};

/// Heat flow for time t: convolution with the N(0, t) density sampled at cell offsets,
/// normalized. Throws ToleranceError if more than `leak_tol` mass leaves the grid.
Grid1D heat_convolve(const Grid1D& g, double t, double leak_tol = 1e-10);

/// Per-trial cap for the backward step; std::nullopt means uncapped.
using Cap = std::optional<std::uint64_t>;

struct KernelStep {
  Grid1D forward;                 // law of y after the Gaussian step
  Grid1D output;                  // law of x after the backward step (conditioned on success)
  double failure_mass = 0.0;      // E_{forward}[(1 - ell)^N]; zero when uncapped
  Eigen::VectorXd log_conductance;  // log ell(y_i) at every cell center
};

/// One exact In-and-Out iteration on the grid. Transitions between cells use Gaussian
/// mass integrated over the target cell, so the conductance ell(y) = Phi((b-y)/s) - Phi((a-y)/s)
/// is exactly the sum of backward weights over K. The capped variant weights each y by
/// 1 - (1 - ell(y))^N and renormalizes by the success probability.
KernelStep inout_step(const Grid1D& mu, Interval K, double h, Cap cap = std::nullopt, double leak_tol = 1e-10);
Grid1D inout_kernel(const Grid1D& mu, Interval K, double h, Cap cap = std::nullopt);

/// Forward half-step only (law of y).
Grid1D inout_forward(const Grid1D& mu, double h, double leak_tol = 1e-10);

/// log ell(y) = log N(y, h)([a, b]), evaluated in log space.
double log_interval_conductance(double y, Interval K, double h);

enum class DivergenceType { TV, KL, ChiQ, RenyiQ };

struct DivergenceKind {
  DivergenceType type = DivergenceType::TV;
  double q = 2.0;

  static DivergenceKind tv() { return {DivergenceType::TV, 1.0}; }
  static DivergenceKind kl() { return {DivergenceType::KL, 1.0}; }
  static DivergenceKind chi(double q) { return {DivergenceType::ChiQ, q}; }
  static DivergenceKind renyi(double q) { return {DivergenceType::RenyiQ, q}; }
};

/// Divergence of mu from nu on a shared lattice. chi(q) is the f-divergence with
/// f(x) = x^q - 1 (q > 1); renyi(q) = log(chi^q + 1)/(q - 1), with q = 1 giving KL and
/// q = +inf giving log max(mu/nu). Returns +inf when mu charges a cell nu does not.
double divergence(const Grid1D& mu, const Grid1D& nu, DivergenceKind kind);
/// Same, on bare probability vectors of equal length.
double divergence(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu, DivergenceKind kind);

/// max_i mu_i / nu_i over cells charged by mu.
double max_density_ratio(const Grid1D& mu, const Grid1D& nu);
double max_density_ratio(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu);

struct DeBruijnResult {
  double lhs = 0.0;            // central difference of chi^q along the simultaneous heat flow
  double rhs = 0.0;            // -(q(q-1)/2) E_nu[r^q |grad log r|^2]
  double rel_err = 0.0;
  double rhs_chi2_form = 0.0;  // -E_nu |grad r|^2, the q = 2 specialization
};

/// Both sides of the de Bruijn identity at time t for mu_t = mu * N(0,t), nu_t = nu * N(0,t).
/// Requires t - dt >= 10 dx^2 so both evolved grids are smooth.
DeBruijnResult debruijn_check(const Grid1D& mu, const Grid1D& nu, double t, double dt, double q);

struct ContractionTrace {
  std::vector<double> after_full;     // D(mu_k || pi^X), k = 0..steps
  std::vector<double> after_forward;  // D(mu_k * N(0,h) || pi^Y), k = 0..steps-1
  std::vector<double> max_ratio;      // max mu_k / pi^X, k = 0..steps
};

ContractionTrace contraction_measured(Interval K, double h, int steps, const Grid1D& start, DivergenceKind kind);

/// Reciprocal smallest nonzero eigenvalue of the n-cell Neumann Laplacian on [a, b];
/// tends to (b - a)^2 / pi^2.
double interval_cpi(double a, double b, Eigen::Index n);

/// Smallest-to-largest search for the cap N whose failure mass is closest to `target`.
std::uint64_t cap_for_failure_mass(const Grid1D& mu, Interval K, double h, double target,
                                   std::uint64_t max_cap = 1u << 30);

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct VerifyOptions {
  Interval K{-1.0, 1.0};
  Eigen::Index n = 4096;
  double h = 0.05;
  int steps = 30;
  /// Multiplies every tolerance; values < 1 tighten the suite.
  double tolerance_scale = 1.0;
};

/// Runs every grid-oracle check (stationarity, pi^Y identity, contraction, DPI,
/// warmness, de Bruijn, capped bias, Poincare constant, semigroup, mass conservation).
std::vector<Check> verify_1d(const VerifyOptions& options = {});

}  // namespace inout::oracle1d
