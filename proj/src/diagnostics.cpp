#include "inout/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include <boost/math/special_functions/beta.hpp>

#include "inout/errors.hpp"
#include "inout/theory.hpp"

namespace inout {

namespace {

constexpr double kPowerTol = 1e-8;
constexpr int kPowerMaxIter = 1000;
constexpr std::uint64_t kBallReferenceDraws = 4'000'000;

// Bounding box of the histogram grid, and the map into [0, 1]^d.
struct BinFrame {
  Eigen::VectorXd lo, hi;

  static BinFrame of(const ConvexBody<double>& body) {
    switch (body.kind()) {
      case BodyKind::Box: return {body.lower(), body.upper()};
      case BodyKind::Ball:
        return {body.center().array() - body.radius(), body.center().array() + body.radius()};
      default: break;
    }
    throw UnsupportedOperation("histogram_divergence: bin masses are only known for boxes and balls");
  }

  Eigen::Index bin_of(const Eigen::VectorXd& x, int bins) const {
    Eigen::Index index = 0, stride = 1;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double u = (x(i) - lo(i)) / (hi(i) - lo(i));
      const auto b = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(u * bins)), 0, bins - 1);
      index += b * stride;
      stride *= bins;
    }
    return index;
  }
};

Eigen::Index bin_count(Eigen::Index d, int bins) {
  Eigen::Index total = 1;
  for (Eigen::Index i = 0; i < d; ++i) total *= bins;
  return total;
}

// Bin masses of the unit ball in [-1, 1]^d; cached per (d, bins) and drawn from a fixed stream.
const Eigen::VectorXd& unit_ball_bins(Eigen::Index d, int bins) {
  static std::mutex mutex;
  static std::map<std::pair<Eigen::Index, int>, Eigen::VectorXd> cache;
  std::lock_guard lock(mutex);
  auto [it, fresh] = cache.try_emplace({d, bins});
  if (fresh) {
    const BinFrame frame{Eigen::VectorXd::Constant(d, -1.0), Eigen::VectorXd::Constant(d, 1.0)};
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(bin_count(d, bins));
    Rng rng = Rng::stream(0x6a09e667f3bcc909ULL, static_cast<std::uint64_t>(d * 1000 + bins));
    for (std::uint64_t k = 0; k < kBallReferenceDraws; ++k) counts(frame.bin_of(uniform_in_ball<double>(d, 1.0, rng), bins)) += 1.0;
    it->second = counts / counts.sum();
  }
  return it->second;
}

}  // namespace

SampleMatrix stack_samples(std::span<const Eigen::VectorXd> points) {
  if (points.empty()) return SampleMatrix(0, 0);
  SampleMatrix out(points.front().size(), static_cast<Eigen::Index>(points.size()));
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (points[j].size() != out.rows()) throw ParameterError("stack_samples: points differ in dimension");
    out.col(static_cast<Eigen::Index>(j)) = points[j];
  }
  return out;
}

Moments empirical_moments(const SampleMatrix& samples) {
  const Eigen::Index d = samples.rows(), n = samples.cols();
  if (d < 1 || n < 1) throw ParameterError("empirical_moments: need at least one sample");
  Moments m;
  m.mean = samples.rowwise().mean();
  const Eigen::MatrixXd centered = samples.colwise() - m.mean;
  m.cov = n > 1 ? Eigen::MatrixXd(centered * centered.transpose() / static_cast<double>(n - 1))
                : Eigen::MatrixXd::Zero(d, d);
  m.cov_trace = m.cov.trace();
  m.second_moment = m.cov_trace;

  Eigen::VectorXd v = Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  // Break symmetry so v is not orthogonal to the top eigenvector of a structured matrix.
  for (Eigen::Index i = 0; i < d; ++i) v(i) *= 1.0 + 1e-3 * static_cast<double>(i);
  v.normalize();
  double lambda = 0.0;
  m.converged = false;
  for (m.power_iterations = 1; m.power_iterations <= kPowerMaxIter; ++m.power_iterations) {
    Eigen::VectorXd w = m.cov * v;
    const double norm = w.norm();
    if (norm == 0.0) {
      lambda = 0.0;
      m.converged = true;
      break;
    }
    v = w / norm;
    const double next = v.dot(m.cov * v);
    if (std::abs(next - lambda) <= kPowerTol * std::max(1e-300, std::abs(next))) {
      lambda = next;
      m.converged = true;
      break;
    }
    lambda = next;
  }
  m.power_iterations = std::min(m.power_iterations, kPowerMaxIter);
  m.cov_opnorm = lambda;
  return m;
}

double ball_marginal_cdf(double x, double c, double R, Eigen::Index d) {
  const double t = (x - c) / R;
  if (t <= -1.0) return 0.0;
  if (t >= 1.0) return 1.0;
  // One coordinate of Unif(B^d) has density proportional to (1 - t^2)^((d-1)/2).
  const double a = (static_cast<double>(d) + 1.0) / 2.0;
  return boost::math::ibeta(a, a, (1.0 + t) / 2.0);
}

MarginalKS marginal_ks(const SampleMatrix& samples, const ConvexBody<double>& body, double alpha) {
  if (samples.rows() != body.dim()) throw ParameterError("marginal_ks: sample dimension != body dimension");
  if (samples.cols() < 1) throw ParameterError("marginal_ks: need samples");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("marginal_ks: alpha must lie in (0, 1)");
  if (body.kind() != BodyKind::Box && body.kind() != BodyKind::Ball)
    throw UnsupportedOperation("marginal_ks: closed-form marginals exist only for boxes and balls");

  const Eigen::Index d = body.dim();
  MarginalKS out;
  out.alpha = alpha;
  out.per_test_alpha = alpha / static_cast<double>(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    std::vector<double> column(samples.row(i).begin(), samples.row(i).end());
    std::function<double(double)> cdf;
    if (body.kind() == BodyKind::Box) {
      const double lo = body.lower()(i), hi = body.upper()(i);
      cdf = [lo, hi](double x) { return std::clamp((x - lo) / (hi - lo), 0.0, 1.0); };
    } else {
      const double c = body.center()(i), R = body.radius();
      cdf = [c, R, d](double x) { return ball_marginal_cdf(x, c, R, d); };
    }
    const double D = ks_statistic(std::move(column), cdf);
    const double p = ks_pvalue(D, static_cast<std::uint64_t>(samples.cols()));
    out.statistic.push_back(D);
    out.p_value.push_back(p);
    if (p < out.per_test_alpha) out.pass = false;
  }
  return out;
}

BlowupTail blowup_tail_mc(const ConvexBody<double>& body, double h, double delta, std::uint64_t n, Rng& rng) {
  if (!(h > 0.0)) throw ParameterError("blowup_tail_mc: h must be > 0");
  if (!(delta >= 0.0)) throw ParameterError("blowup_tail_mc: delta must be >= 0");
  if (n < 1) throw ParameterError("blowup_tail_mc: n must be >= 1");
  std::uint64_t outside = 0;
  for (std::uint64_t k = 0; k < n; ++k) {
    const Eigen::VectorXd y = forward_step(exact_uniform_sample(body, rng), h, rng);
    if (!blowup_contains(body, y, delta)) ++outside;
  }
  BlowupTail out;
  out.exceed = wilson_interval(outside, n);
  out.bound = theory::blowup_tail_bound(delta, h, static_cast<std::uint64_t>(body.dim()));
  out.satisfied = out.exceed.upper <= out.bound;
  return out;
}

Eigen::VectorXd reference_bin_masses(const ConvexBody<double>& body, int bins) {
  if (body.dim() > 3) throw ParameterError("histogram_divergence: only d <= 3 is supported");
  if (bins < 1) throw ParameterError("histogram_divergence: bins must be >= 1");
  BinFrame::of(body);
  const Eigen::Index total = bin_count(body.dim(), bins);
  if (body.kind() == BodyKind::Box) return Eigen::VectorXd::Constant(total, 1.0 / static_cast<double>(total));
  return unit_ball_bins(body.dim(), bins);
}

double histogram_divergence(const SampleMatrix& samples, const ConvexBody<double>& body, int bins,
                            oracle1d::DivergenceKind kind) {
  if (samples.rows() != body.dim()) throw ParameterError("histogram_divergence: sample dimension != body dimension");
  const Eigen::VectorXd reference = reference_bin_masses(body, bins);
  const BinFrame frame = BinFrame::of(body);

  Eigen::VectorXd counts = Eigen::VectorXd::Zero(reference.size());
  for (Eigen::Index j = 0; j < samples.cols(); ++j) counts(frame.bin_of(samples.col(j), bins)) += 1.0;

  std::vector<Eigen::Index> kept;
  for (Eigen::Index b = 0; b < reference.size(); ++b)
    if (reference(b) > 0.0) kept.push_back(b);
  Eigen::VectorXd p(static_cast<Eigen::Index>(kept.size())), r(p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    p(k) = counts(kept[static_cast<std::size_t>(k)]) + 1.0;
    r(k) = reference(kept[static_cast<std::size_t>(k)]);
  }
  return oracle1d::divergence(Eigen::VectorXd(p / p.sum()), Eigen::VectorXd(r / r.sum()), kind);
}

void RunAccumulator::add(const ChainTrace<double>& trace) {
  ++chains_;
  if (trace.failed()) ++failed_;
  proper_steps_ += trace.proper_steps();
  total_queries_ += trace.total_queries;
  restarts_ += trace.restarts;
  for (const std::uint64_t t : trace.trials_per_iter) {
    const auto x = static_cast<double>(t);
    ++iterations_;
    trials_sum_ += x;
    trials_sumsq_ += x * x;
  }
}

void RunAccumulator::merge(const RunAccumulator& other) {
  chains_ += other.chains_;
  failed_ += other.failed_;
  proper_steps_ += other.proper_steps_;
  total_queries_ += other.total_queries_;
  restarts_ += other.restarts_;
  iterations_ += other.iterations_;
  trials_sum_ += other.trials_sum_;
  trials_sumsq_ += other.trials_sumsq_;
}

RunReport RunAccumulator::report() const {
  RunReport r;
  r.chains = chains_;
  r.proper_steps = proper_steps_;
  r.total_queries = total_queries_;
  r.restarts = restarts_;
  r.failure_rate = wilson_interval(failed_, std::max<std::uint64_t>(chains_, 1));
  if (chains_ == 0) r.failure_rate = {};
  if (iterations_ > 0) {
    const double n = static_cast<double>(iterations_);
    const double mean = trials_sum_ / n;
    const double var = iterations_ > 1 ? std::max(0.0, (trials_sumsq_ - n * mean * mean) / (n - 1.0)) : 0.0;
    const double se = std::sqrt(var / n);
    r.mean_trials = {mean, se, mean - kZ95 * se, mean + kZ95 * se, iterations_};
  }
  return r;
}

RunReport summarize(std::span<const ChainTrace<double>> traces) {
  RunAccumulator acc;
  for (const auto& t : traces) acc.add(t);
  return acc.report();
}

ScalingReport rejection_scaling_report(BodyKind family, std::span<const Eigen::Index> dims, const ScalingConfig& config) {
  if (dims.empty()) throw ParameterError("rejection_scaling_report: empty dimension list");
  if (config.chains < 1) throw ParameterError("rejection_scaling_report: chains must be >= 1");
  if (family != BodyKind::Box && family != BodyKind::Ball)
    throw UnsupportedOperation("rejection_scaling_report: body family must be box or ball");

  ScalingReport report;
  for (const Eigen::Index d : dims) {
    const auto body = family == BodyKind::Box ? ConvexBody<double>::box(d, -1.0, 1.0) : ConvexBody<double>::ball(d, 1.0);
    const auto sched = theory::per_iteration_schedule(config.m, config.warmness, config.eta, static_cast<std::uint64_t>(d));
    InOutParams params;
    params.h = sched.h;
    params.N = sched.N;
    params.m = config.m;
    params.eta = config.eta;
    params.warmness = config.warmness;

    const std::uint64_t seed = config.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(d));
    const auto partials = run_chains(
        config.chains, seed,
        [&](std::uint64_t, Rng& rng) {
          RunAccumulator acc;
          acc.add(run_chain(body, exact_uniform_sample(body, rng), params, rng, {.record_iterates = false}));
          return acc;
        },
        config.threads);
    RunAccumulator total;
    for (const auto& p : partials) total.merge(p);

    ScalingRow row;
    row.d = d;
    row.h = sched.h;
    row.N = sched.N;
    row.trials = total.report().mean_trials;
    row.predictor = config.warmness * std::pow(std::log(static_cast<double>(config.m) * config.warmness / config.eta), 4);
    row.constant = row.trials.mean / row.predictor;
    report.rows.push_back(row);
  }

  double num = 0.0, den = 0.0;
  for (const auto& row : report.rows) {
    num += row.trials.mean * row.predictor;
    den += row.predictor * row.predictor;
  }
  report.fitted_constant = num / den;
  double lo = report.rows.front().constant, hi = lo;
  for (auto& row : report.rows) {
    row.residual = row.constant / report.fitted_constant - 1.0;
    lo = std::min(lo, row.constant);
    hi = std::max(hi, row.constant);
  }
  report.spread = hi / lo;
  return report;
}

}  // namespace inout
