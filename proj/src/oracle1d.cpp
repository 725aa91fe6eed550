#include "inout/oracle1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "inout/errors.hpp"
#include "inout/stats.hpp"

namespace inout::oracle1d {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Gaussian weights beyond this many standard deviations underflow in double.
constexpr double kKernelSigmas = 38.0;

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

void require_same_lattice(const Grid1D& mu, const Grid1D& nu, const char* who) {
  if (!mu.lattice().same_as(nu.lattice())) throw ParameterError(std::string(who) + ": grids live on different lattices");
}

Eigen::Index kernel_halfwidth(double sigma, double dx, Eigen::Index n) {
  const double cells = std::ceil(kKernelSigmas * sigma / dx) + 1.0;
  return static_cast<Eigen::Index>(std::min(cells, static_cast<double>(n)));
}

// Cell-integrated transition weights: logW[k] = log P(N(0, s^2) in [(k - 1/2) dx, (k + 1/2) dx]).
struct CellKernel {
  Eigen::Index halfwidth = 0;
  Eigen::VectorXd w;
  Eigen::VectorXd log_w;

  CellKernel(double sigma, double dx, Eigen::Index n) : halfwidth(kernel_halfwidth(sigma, dx, n)) {
    w.resize(halfwidth + 1);
    log_w.resize(halfwidth + 1);
    for (Eigen::Index k = 0; k <= halfwidth; ++k) {
      const double lo = (static_cast<double>(k) - 0.5) * dx / sigma;
      const double hi = (static_cast<double>(k) + 0.5) * dx / sigma;
      log_w(k) = log_normal_interval_mass(lo, hi);
      w(k) = std::exp(log_w(k));
    }
  }
};

Eigen::VectorXd convolve(const Eigen::VectorXd& mass, const Eigen::VectorXd& w, Eigen::Index halfwidth) {
  const Eigen::Index n = mass.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = mass(i);
    if (m == 0.0) continue;
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - halfwidth);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + halfwidth);
    for (Eigen::Index j = lo; j <= hi; ++j) out(j) += m * w(std::abs(j - i));
  }
  return out;
}

Grid1D normalized_after_leak(const Lattice& lattice, Eigen::VectorXd out, double leak_tol, const char* who) {
  const double total = out.sum();
  if (1.0 - total > leak_tol)
    throw ToleranceError(std::string(who) + ": " + std::to_string(1.0 - total) +
                         " of the mass left the grid; widen the margin");
  out /= total;
  return Grid1D(lattice, std::move(out));
}

Eigen::VectorXd log_conductances(const Lattice& lattice, Interval K, double h) {
  Eigen::VectorXd out(lattice.n);
  for (Eigen::Index i = 0; i < lattice.n; ++i) out(i) = log_interval_conductance(lattice.center(i), K, h);
  return out;
}

// log(1 - ell(y)): the Gaussian mass outside [a, b].
double log_escape(double y, Interval K, double h) {
  const double s = std::sqrt(h);
  return log_add(log_normal_sf((y - K.a) / s), log_normal_sf((K.b - y) / s));
}

double failure_mass(const Grid1D& forward, Interval K, double h, std::uint64_t N) {
  double fail = 0.0;
  const auto& lat = forward.lattice();
  for (Eigen::Index i = 0; i < lat.n; ++i) {
    const double m = forward.mass()(i);
    if (m == 0.0) continue;
    fail += m * std::exp(static_cast<double>(N) * log_escape(lat.center(i), K, h));
  }
  return fail;
}

}  // namespace

Eigen::VectorXd Lattice::centers() const {
  Eigen::VectorXd c(n);
  for (Eigen::Index i = 0; i < n; ++i) c(i) = center(i);
  return c;
}

Lattice Lattice::covering(Interval K, double margin, Eigen::Index n) {
  if (!(K.b > K.a)) throw ParameterError("Lattice::covering: need a < b");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw ParameterError("Lattice::covering: margin must be >= 0");
  if (n < 16) throw ParameterError("Lattice::covering: need at least 16 cells");
  const double len = K.length();
  // Rounding the core down keeps the padding at least `margin` on both sides.
  Eigen::Index core = static_cast<Eigen::Index>(std::floor(static_cast<double>(n) * len / (len + 2.0 * margin)));
  if ((n - core) % 2 != 0) --core;
  if (core < 1) throw ParameterError("Lattice::covering: too few cells for this margin");
  const double dx = len / static_cast<double>(core);
  const Eigen::Index pad = (n - core) / 2;
  return {K.a - static_cast<double>(pad) * dx, dx, n};
}

std::pair<Eigen::Index, Eigen::Index> Lattice::cells_in(Interval K) const {
  const double f = (K.a - lo) / dx;
  const double l = (K.b - lo) / dx;
  if (std::abs(f - std::round(f)) > 1e-6 || std::abs(l - std::round(l)) > 1e-6)
    throw ParameterError("Lattice::cells_in: interval endpoints are not cell boundaries");
  const auto first = static_cast<Eigen::Index>(std::round(f));
  const auto last = static_cast<Eigen::Index>(std::round(l));
  if (first < 0 || last > n || first >= last) throw ParameterError("Lattice::cells_in: interval not inside the grid");
  return {first, last};
}

bool Lattice::same_as(const Lattice& other) const {
  return n == other.n && std::abs(lo - other.lo) <= 1e-12 * std::max(1.0, std::abs(lo)) &&
         std::abs(dx - other.dx) <= 1e-12 * dx;
}

Grid1D::Grid1D(Lattice lattice, Eigen::VectorXd mass) : lattice_(lattice), mass_(std::move(mass)) {
  if (!(lattice_.dx > 0.0) || lattice_.n < 2) throw ParameterError("Grid1D: invalid lattice");
  if (mass_.size() != lattice_.n) throw ParameterError("Grid1D: mass vector length != cell count");
  if (!mass_.allFinite() || (mass_.array() < 0.0).any()) throw ParameterError("Grid1D: masses must be finite and >= 0");
  const double total = mass_.sum();
  if (std::abs(total - 1.0) > 1e-9) throw ParameterError("Grid1D: masses must sum to one");
  mass_ /= total;
}

double Grid1D::mean() const { return mass_.dot(lattice_.centers()); }

double Grid1D::variance() const {
  const Eigen::VectorXd c = lattice_.centers().array() - mean();
  return mass_.dot(c.cwiseAbs2());
}

Grid1D Grid1D::uniform(const Lattice& lattice, Interval K) {
  if (!(K.b > K.a)) throw ParameterError("Grid1D::uniform: need a < b");
  Eigen::VectorXd m(lattice.n);
  for (Eigen::Index i = 0; i < lattice.n; ++i) {
    const double left = lattice.lo + static_cast<double>(i) * lattice.dx;
    m(i) = std::max(0.0, std::min(K.b, left + lattice.dx) - std::max(K.a, left));
  }
  const double total = m.sum();
  if (!(total > 0.0)) throw ParameterError("Grid1D::uniform: interval misses the grid");
  return Grid1D(lattice, m / total);
}

Grid1D Grid1D::point_mass(const Lattice& lattice, double x) {
  const double f = std::floor((x - lattice.lo) / lattice.dx);
  if (!(f >= 0.0 && f < static_cast<double>(lattice.n))) throw ParameterError("Grid1D::point_mass: x is off the grid");
  Eigen::VectorXd m = Eigen::VectorXd::Zero(lattice.n);
  m(static_cast<Eigen::Index>(f)) = 1.0;
  return Grid1D(lattice, std::move(m));
}

Grid1D Grid1D::from_density(const Lattice& lattice, const std::function<double(double)>& density) {
  Eigen::VectorXd m(lattice.n);
  for (Eigen::Index i = 0; i < lattice.n; ++i) m(i) = density(lattice.center(i));
  const double total = m.sum();
  if (!(total > 0.0) || !std::isfinite(total)) throw ParameterError("Grid1D::from_density: density has no mass on the grid");
  return Grid1D(lattice, m / total);
}

Grid1D Grid1D::gaussian(const Lattice& lattice, double mean, double variance) {
  if (!(variance > 0.0)) throw ParameterError("Grid1D::gaussian: variance must be > 0");
  return from_density(lattice, [=](double x) { return std::exp(-(x - mean) * (x - mean) / (2.0 * variance)); });
}

Grid1D heat_convolve(const Grid1D& g, double t, double leak_tol) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ParameterError("heat_convolve: t must be >= 0");
  if (t == 0.0) return g;
  const double dx = g.dx();
  const double sigma = std::sqrt(t);
  const Eigen::Index halfwidth = kernel_halfwidth(sigma, dx, g.size());

  // Normalizer over the full lattice of offsets, not just those that fit on the grid.
  const double full = std::ceil(kKernelSigmas * sigma / dx);
  double norm = 1.0;
  if (full > 1e7) {
    norm = std::sqrt(2.0 * std::numbers::pi * t) / dx;
  } else {
    for (double k = 1.0; k <= full; ++k) norm += 2.0 * std::exp(-(k * dx) * (k * dx) / (2.0 * t));
  }
  Eigen::VectorXd w(halfwidth + 1);
  for (Eigen::Index k = 0; k <= halfwidth; ++k) {
    const double x = static_cast<double>(k) * dx;
    w(k) = std::exp(-x * x / (2.0 * t)) / norm;
  }
  return normalized_after_leak(g.lattice(), convolve(g.mass(), w, halfwidth), leak_tol, "heat_convolve");
}

double log_interval_conductance(double y, Interval K, double h) {
  if (!(h > 0.0)) throw ParameterError("log_interval_conductance: h must be > 0");
  const double s = std::sqrt(h);
  return log_normal_interval_mass((K.a - y) / s, (K.b - y) / s);
}

Grid1D inout_forward(const Grid1D& mu, double h, double leak_tol) {
  if (!(h > 0.0)) throw ParameterError("inout_forward: h must be > 0");
  const CellKernel kernel(std::sqrt(h), mu.dx(), mu.size());
  return normalized_after_leak(mu.lattice(), convolve(mu.mass(), kernel.w, kernel.halfwidth), leak_tol, "inout_forward");
}

KernelStep inout_step(const Grid1D& mu, Interval K, double h, Cap cap, double leak_tol) {
  if (!(h > 0.0)) throw ParameterError("inout_step: h must be > 0");
  if (cap && *cap < 1) throw ParameterError("inout_step: N must be >= 1");
  const Lattice& lat = mu.lattice();
  const auto [first, last] = lat.cells_in(K);
  const CellKernel kernel(std::sqrt(h), lat.dx, lat.n);

  Grid1D forward = normalized_after_leak(lat, convolve(mu.mass(), kernel.w, kernel.halfwidth), leak_tol, "inout_step");
  Eigen::VectorXd log_ell = log_conductances(lat, K, h);

  double fail = 0.0;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(lat.n);
  for (Eigen::Index i = 0; i < lat.n; ++i) {
    double weight = forward.mass()(i);
    if (weight == 0.0 || log_ell(i) == -kInf) continue;
    if (cap) {
      const double success = -std::expm1(static_cast<double>(*cap) * log_escape(lat.center(i), K, h));
      fail += weight * (1.0 - success);
      weight *= success;
    }
    const Eigen::Index lo = std::max(first, i - kernel.halfwidth);
    const Eigen::Index hi = std::min(last - 1, i + kernel.halfwidth);
    if (log_ell(i) > -700.0) {
      const double coef = weight * std::exp(-log_ell(i));
      for (Eigen::Index k = lo; k <= hi; ++k) out(k) += coef * kernel.w(std::abs(k - i));
    } else {
      for (Eigen::Index k = lo; k <= hi; ++k) out(k) += weight * std::exp(kernel.log_w(std::abs(k - i)) - log_ell(i));
    }
  }
  const double total = out.sum();
  if (!(total > 0.0)) throw ToleranceError("inout_step: backward step carried no mass");
  out /= total;
  return {std::move(forward), Grid1D(lat, std::move(out)), fail, std::move(log_ell)};
}

Grid1D inout_kernel(const Grid1D& mu, Interval K, double h, Cap cap) { return inout_step(mu, K, h, cap).output; }

double divergence(const Grid1D& mu, const Grid1D& nu, DivergenceKind kind) {
  require_same_lattice(mu, nu, "divergence");
  return divergence(mu.mass(), nu.mass(), kind);
}

double divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& r, DivergenceKind kind) {
  if (p.size() != r.size()) throw ParameterError("divergence: length mismatch");
  switch (kind.type) {
    case DivergenceType::TV:
      return 0.5 * (p - r).cwiseAbs().sum();
    case DivergenceType::KL: {
      // Sum of nu (x log x - x + 1) at x = mu/nu: every term is >= 0.
      double sum = 0.0;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (r(i) == 0.0) {
          if (p(i) > 0.0) return kInf;
          continue;
        }
        const double x = p(i) / r(i);
        sum += x > 0.0 ? r(i) * (x * std::log(x) - x + 1.0) : r(i);
      }
      return sum;
    }
    case DivergenceType::ChiQ: {
      const double q = kind.q;
      if (!(q > 1.0) || std::isinf(q)) throw ParameterError("divergence: chi_q needs finite q > 1");
      // nu (x^q - 1 - q (x - 1)) is >= 0 and sums to the same value.
      double sum = 0.0;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (r(i) == 0.0) {
          if (p(i) > 0.0) return kInf;
          continue;
        }
        const double x = p(i) / r(i);
        sum += q == 2.0 ? (p(i) - r(i)) * (p(i) - r(i)) / r(i) : r(i) * (std::pow(x, q) - 1.0 - q * (x - 1.0));
      }
      return sum;
    }
    case DivergenceType::RenyiQ: {
      const double q = kind.q;
      if (!(q >= 1.0)) throw ParameterError("divergence: renyi_q needs q >= 1");
      if (q == 1.0) return divergence(p, r, DivergenceKind::kl());
      if (std::isinf(q)) return std::log(max_density_ratio(p, r));
      return std::log1p(divergence(p, r, DivergenceKind::chi(q))) / (q - 1.0);
    }
  }
  throw ParameterError("divergence: unknown kind");
}

double max_density_ratio(const Grid1D& mu, const Grid1D& nu) {
  require_same_lattice(mu, nu, "max_density_ratio");
  return max_density_ratio(mu.mass(), nu.mass());
}

double max_density_ratio(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu) {
  if (mu.size() != nu.size()) throw ParameterError("max_density_ratio: length mismatch");
  double best = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double p = mu(i);
    if (p == 0.0) continue;
    const double r = nu(i);
    if (r == 0.0) return kInf;
    best = std::max(best, p / r);
  }
  return best;
}

DeBruijnResult debruijn_check(const Grid1D& mu, const Grid1D& nu, double t, double dt, double q) {
  require_same_lattice(mu, nu, "debruijn_check");
  if (!(q > 1.0) || std::isinf(q)) throw ParameterError("debruijn_check: need finite q > 1");
  if (!(dt > 0.0)) throw ParameterError("debruijn_check: dt must be > 0");
  const double dx = mu.dx();
  if (!(t - dt >= 10.0 * dx * dx))
    throw ParameterError("debruijn_check: t - dt must be >= 10 dx^2 so the evolved densities are smooth");

  const auto chi = DivergenceKind::chi(q);
  DeBruijnResult res;
  const double ahead = divergence(heat_convolve(mu, t + dt), heat_convolve(nu, t + dt), chi);
  const double behind = divergence(heat_convolve(mu, t - dt), heat_convolve(nu, t - dt), chi);
  res.lhs = (ahead - behind) / (2.0 * dt);

  const Grid1D mt = heat_convolve(mu, t);
  const Grid1D nt = heat_convolve(nu, t);
  const Eigen::Index n = mt.size();
  Eigen::VectorXd ratio = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (nt.mass()(i) > 0.0) ratio(i) = mt.mass()(i) / nt.mass()(i);

  double fisher = 0.0, chi2_form = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = nt.mass()(i);
    if (w == 0.0 || ratio(i) == 0.0) continue;
    double grad;
    if (i == 0)
      grad = (ratio(1) - ratio(0)) / dx;
    else if (i == n - 1)
      grad = (ratio(n - 1) - ratio(n - 2)) / dx;
    else
      grad = (ratio(i + 1) - ratio(i - 1)) / (2.0 * dx);
    fisher += w * std::pow(ratio(i), q - 2.0) * grad * grad;
    chi2_form += w * grad * grad;
  }
  res.rhs = -0.5 * q * (q - 1.0) * fisher;
  res.rhs_chi2_form = -chi2_form;
  res.rel_err = std::abs(res.lhs - res.rhs) / std::max(std::abs(res.rhs), 1e-12);
  return res;
}

ContractionTrace contraction_measured(Interval K, double h, int steps, const Grid1D& start, DivergenceKind kind) {
  if (steps < 0) throw ParameterError("contraction_measured: steps must be >= 0");
  const Grid1D pi_x = Grid1D::uniform(start.lattice(), K);
  const Grid1D pi_y = inout_forward(pi_x, h);
  ContractionTrace trace;
  trace.after_full.push_back(divergence(start, pi_x, kind));
  trace.max_ratio.push_back(max_density_ratio(start, pi_x));
  Grid1D mu = start;
  for (int k = 0; k < steps; ++k) {
    KernelStep step = inout_step(mu, K, h);
    trace.after_forward.push_back(divergence(step.forward, pi_y, kind));
    mu = std::move(step.output);
    trace.after_full.push_back(divergence(mu, pi_x, kind));
    trace.max_ratio.push_back(max_density_ratio(mu, pi_x));
  }
  return trace;
}

double interval_cpi(double a, double b, Eigen::Index n) {
  if (!(b > a)) throw ParameterError("interval_cpi: need a < b");
  if (n < 2) throw ParameterError("interval_cpi: need n >= 2");
  const double dx = (b - a) / static_cast<double>(n);
  const double inv = 1.0 / (dx * dx);
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, 2.0 * inv);
  diag(0) = diag(n - 1) = inv;
  const Eigen::VectorXd off = Eigen::VectorXd::Constant(n - 1, -inv);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ToleranceError("interval_cpi: eigen solver did not converge");
  return 1.0 / solver.eigenvalues()(1);
}

std::uint64_t cap_for_failure_mass(const Grid1D& mu, Interval K, double h, double target, std::uint64_t max_cap) {
  if (!(target > 0.0 && target < 1.0)) throw ParameterError("cap_for_failure_mass: target must lie in (0, 1)");
  const Grid1D forward = inout_forward(mu, h);
  auto fail = [&](std::uint64_t N) { return failure_mass(forward, K, h, N); };
  if (fail(1) <= target) return 1;
  std::uint64_t lo = 1, hi = 2;
  while (fail(hi) > target) {
    if (hi >= max_cap) throw ToleranceError("cap_for_failure_mass: target not reached below max_cap");
    lo = hi;
    hi = std::min(max_cap, hi * 2);
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    (fail(mid) > target ? lo : hi) = mid;
  }
  return std::abs(fail(lo) - target) < std::abs(fail(hi) - target) ? lo : hi;
}

std::vector<Check> verify_1d(const VerifyOptions& o) {
  if (!(o.tolerance_scale > 0.0)) throw ParameterError("verify_1d: tolerance_scale must be > 0");
  if (o.steps < 1) throw ParameterError("verify_1d: steps must be >= 1");
  const double s = o.tolerance_scale;
  const Interval K = o.K;
  const double len = K.length();
  const Lattice lat = Lattice::covering(K, 8.0 * std::sqrt(o.h), o.n);
  const Grid1D pi_x = Grid1D::uniform(lat, K);
  std::vector<Check> checks;
  auto add = [&](std::string name, double value, double threshold) {
    checks.push_back({std::move(name), value, threshold, value <= threshold});
  };

  const KernelStep at_pi = inout_step(pi_x, K, o.h);
  add("stationarity_l1", (at_pi.output.mass() - pi_x.mass()).cwiseAbs().sum(), 1e-8 * s);

  double identity = 0.0;
  for (Eigen::Index i = 0; i < lat.n; ++i)
    identity = std::max(identity, std::abs(at_pi.forward.mass()(i) / lat.dx - std::exp(at_pi.log_conductance(i)) / len));
  add("pi_y_identity", identity, 1e-8 * s);

  const Grid1D skewed = Grid1D::uniform(lat, {K.a, K.a + 0.25 * len});
  const double cpi = len * len / (std::numbers::pi * std::numbers::pi);
  const ContractionTrace chi2 = contraction_measured(K, o.h, o.steps, skewed, DivergenceKind::chi(2.0));
  double over_bound = -kInf, dpi = -kInf, monotone = -kInf, warm = -kInf;
  for (int k = 0; k <= o.steps; ++k) {
    const double bound = chi2.after_full[0] * std::pow(1.0 + o.h / cpi, -k);
    over_bound = std::max(over_bound, chi2.after_full[k] - bound);
    if (k < o.steps) {
      const double scale = std::max(1.0, chi2.after_full[k]);
      dpi = std::max(dpi, (chi2.after_forward[k] - chi2.after_full[k]) / scale);
      dpi = std::max(dpi, (chi2.after_full[k + 1] - chi2.after_forward[k]) / scale);
      monotone = std::max(monotone, (chi2.after_full[k + 1] - chi2.after_full[k]) / scale);
      warm = std::max(warm, chi2.max_ratio[k + 1] - chi2.max_ratio[k]);
    }
  }
  add("chi2_contraction_vs_bound", over_bound, 1e-6 * s);
  add("data_processing", dpi, 1e-12 * s);
  add("chi2_monotone", monotone, 1e-12 * s);
  add("warmness_nonincreasing", warm, 1e-8 * s);

  const Lattice wide{-12.0, 24.0 / static_cast<double>(o.n), o.n};
  const Lattice fine{-12.0, 12.0 / static_cast<double>(o.n), 2 * o.n};
  const double t = 0.1, dt = 1e-4;
  double q2_err = 0.0, q2_forms = 0.0, coarse_err = 0.0;
  for (const double q : {2.0, 3.0}) {
    const auto res = debruijn_check(Grid1D::gaussian(wide, 0.3, 0.5), Grid1D::gaussian(wide, 0.0, 0.5), t, dt, q);
    add(q == 2.0 ? "debruijn_q2" : "debruijn_q3", res.rel_err, 1e-3 * s);
    if (q == 2.0) {
      q2_err = res.rel_err;
      q2_forms = std::abs(res.rhs - res.rhs_chi2_form) / std::abs(res.rhs);
    }
    coarse_err = std::max(coarse_err, res.rel_err);
  }
  add("debruijn_q2_forms_agree", q2_forms, 1e-6 * s);
  const auto refined = debruijn_check(Grid1D::gaussian(fine, 0.3, 0.5), Grid1D::gaussian(fine, 0.0, 0.5), t, dt, 2.0);
  add("debruijn_refinement_ratio", refined.rel_err / std::max(q2_err, 1e-300), std::min(1.0, 0.5 * s));

  const std::uint64_t N = cap_for_failure_mass(skewed, K, o.h, 0.1);
  const KernelStep capped = inout_step(skewed, K, o.h, N);
  const KernelStep uncapped = inout_step(skewed, K, o.h);
  add("capped_bias_ratio",
      max_density_ratio(capped.output, uncapped.output) - 1.0 / (1.0 - capped.failure_mass), 1e-8 * s);

  const double cpi_grid = interval_cpi(K.a, K.b, o.n);
  add("interval_poincare_rel_err", std::abs(cpi_grid - cpi) / cpi, 1e-3 * s);

  const Grid1D g = Grid1D::gaussian(wide, 0.5, 0.2);
  add("heat_semigroup_l1",
      (heat_convolve(heat_convolve(g, 0.05), 0.07).mass() - heat_convolve(g, 0.12).mass()).cwiseAbs().sum(), 1e-8 * s);

  add("mass_conservation", std::abs(uncapped.output.mass().sum() - 1.0) + std::abs(uncapped.forward.mass().sum() - 1.0),
      1e-12 * s);
  return checks;
}

}  // namespace inout::oracle1d
