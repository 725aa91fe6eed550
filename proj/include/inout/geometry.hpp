#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "inout/errors.hpp"
#include "inout/random.hpp"

namespace inout {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class BodyKind { Ball, Box, Simplex, Polytope, Ellipsoid };

inline std::string_view to_string(BodyKind kind) {
  switch (kind) {
    case BodyKind::Ball: return "ball";
    case BodyKind::Box: return "box";
    case BodyKind::Simplex: return "simplex";
    case BodyKind::Polytope: return "polytope";
    case BodyKind::Ellipsoid: return "ellipsoid";
  }
  return "unknown";
}

namespace detail {

// Calls visit(indices) for every k-subset of {0, ..., n-1}; stops early if visit returns false.
template <typename Visit>
void for_each_subset(Eigen::Index n, Eigen::Index k, Visit&& visit) {
  if (k > n || k <= 0) return;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    if (!visit(idx)) return;
    Eigen::Index i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

inline double binomial(Eigen::Index n, Eigen::Index k) {
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

}  // namespace detail

/// A convex body K with B_1(center) ⊆ K ⊆ B_D(center), answering membership queries.
///
/// Constructors normalize nothing silently: inputs whose inscribed unit ball around the
/// center does not fit are rejected with ParameterError. Instances are immutable and
/// safe to share read-only across chains.
template <typename Scalar_ = double>
class ConvexBody {
 public:
  using Scalar = Scalar_;
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  static ConvexBody ball(Eigen::Index d, Scalar radius = Scalar(1)) {
    check_dimension(d);
    return ball(Vector::Zero(d), radius);
  }

  static ConvexBody ball(Vector center, Scalar radius) {
    check_dimension(center.size());
    if (!(radius >= Scalar(1))) throw ParameterError("ball: radius must be >= 1 to contain the unit ball");
    ConvexBody body(BodyKind::Ball, std::move(center));
    body.radius_ = radius;
    body.circumradius_ = radius;
    return body;
  }

  static ConvexBody box(Eigen::Index d, Scalar lower, Scalar upper) {
    check_dimension(d);
    return box(Vector::Constant(d, lower), Vector::Constant(d, upper));
  }

  static ConvexBody box(Vector lower, Vector upper) {
    check_dimension(lower.size());
    if (lower.size() != upper.size()) throw ParameterError("box: bound dimensions differ");
    if (((upper - lower).array() < Scalar(2)).any())
      throw ParameterError("box: every side must have length >= 2 to contain the unit ball");
    ConvexBody body(BodyKind::Box, (lower + upper) / Scalar(2));
    body.circumradius_ = (upper - lower).norm() / Scalar(2);
    body.lower_ = std::move(lower);
    body.upper_ = std::move(upper);
    return body;
  }

  /// {x >= 0, sum(x) <= scale}; the inradius is scale / (d + sqrt(d)).
  static ConvexBody simplex(Eigen::Index d) {
    check_dimension(d);
    return simplex(d, static_cast<Scalar>(d) + std::sqrt(static_cast<Scalar>(d)));
  }

  static ConvexBody simplex(Eigen::Index d, Scalar scale) {
    check_dimension(d);
    const Scalar dd = static_cast<Scalar>(d);
    const Scalar inradius = scale / (dd + std::sqrt(dd));
    // Relative slack so the default scale d + sqrt(d) is accepted despite rounding.
    if (!(inradius >= Scalar(1) - Scalar(64) * std::numeric_limits<Scalar>::epsilon()))
      throw ParameterError("simplex: scale must be >= d + sqrt(d) to contain the unit ball");
    ConvexBody body(BodyKind::Simplex, Vector::Constant(d, inradius));
    body.scale_ = scale;
    const Scalar to_origin = inradius * std::sqrt(dd);
    const Scalar to_vertex = std::sqrt((scale - inradius) * (scale - inradius) + (dd - 1) * inradius * inradius);
    body.circumradius_ = std::max(to_origin, to_vertex);
    return body;
  }

  /// {x : normals.row(i) · x <= offsets(i)}. The circumradius is computed by vertex
  /// enumeration unless given; enumeration also certifies boundedness.
  static ConvexBody polytope(Matrix normals, Vector offsets, Vector center,
                             std::optional<Scalar> circumradius = std::nullopt) {
    const Eigen::Index d = normals.cols();
    check_dimension(d);
    if (normals.rows() != offsets.size()) throw ParameterError("polytope: normals/offsets row mismatch");
    if (center.size() != d) throw ParameterError("polytope: center dimension mismatch");
    for (Eigen::Index i = 0; i < normals.rows(); ++i) {
      const Scalar norm = normals.row(i).norm();
      if (!(norm > Scalar(0))) throw ParameterError("polytope: zero normal in row " + std::to_string(i));
      if ((offsets(i) - normals.row(i).dot(center)) / norm < Scalar(1))
        throw ParameterError("polytope: unit ball around the center violates row " + std::to_string(i));
    }
    ConvexBody body(BodyKind::Polytope, std::move(center));
    body.normals_ = std::move(normals);
    body.offsets_ = std::move(offsets);
    if (circumradius) {
      if (!(*circumradius >= Scalar(1))) throw ParameterError("polytope: circumradius must be >= 1");
      body.circumradius_ = *circumradius;
    } else {
      body.circumradius_ = body.enumerate_circumradius();
    }
    return body;
  }

  static ConvexBody polytope(Matrix normals, Vector offsets) {
    const Eigen::Index d = normals.cols();
    return polytope(std::move(normals), std::move(offsets), Vector::Zero(d));
  }

  /// Axis-aligned ellipsoid sum((x_i - c_i) / a_i)^2 <= 1.
  static ConvexBody ellipsoid(Vector semi_axes) {
    const Eigen::Index d = semi_axes.size();
    check_dimension(d);
    return ellipsoid(std::move(semi_axes), Matrix::Identity(d, d), Vector::Zero(d));
  }

  /// Ellipsoid stored by principal axes: x = center + rotation * diag(semi_axes) * u, |u| <= 1.
  static ConvexBody ellipsoid(Vector semi_axes, Matrix rotation, Vector center) {
    const Eigen::Index d = semi_axes.size();
    check_dimension(d);
    if (rotation.rows() != d || rotation.cols() != d || center.size() != d)
      throw ParameterError("ellipsoid: rotation/center dimension mismatch");
    if ((semi_axes.array() < Scalar(1)).any())
      throw ParameterError("ellipsoid: semi-axes must be >= 1 to contain the unit ball");
    if (!(rotation.transpose() * rotation).isIdentity(Scalar(1e-9)))
      throw ParameterError("ellipsoid: rotation must be orthonormal");
    ConvexBody body(BodyKind::Ellipsoid, std::move(center));
    body.circumradius_ = semi_axes.maxCoeff();
    body.semi_axes_ = std::move(semi_axes);
    body.rotation_ = std::move(rotation);
    return body;
  }

  BodyKind kind() const { return kind_; }
  Eigen::Index dim() const { return center_.size(); }
  const Vector& center() const { return center_; }
  Scalar circumradius() const { return circumradius_; }

  Scalar radius() const { return radius_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Scalar scale() const { return scale_; }
  const Matrix& normals() const { return normals_; }
  const Vector& offsets() const { return offsets_; }
  const Vector& semi_axes() const { return semi_axes_; }
  const Matrix& rotation() const { return rotation_; }

  std::optional<Scalar> exact_volume() const {
    const Scalar d = static_cast<Scalar>(dim());
    const Scalar unit_ball = std::exp(d / 2 * std::log(std::numbers::pi_v<Scalar>) - std::lgamma(d / 2 + 1));
    switch (kind_) {
      case BodyKind::Ball: return unit_ball * std::pow(radius_, d);
      case BodyKind::Box: return (upper_ - lower_).prod();
      case BodyKind::Simplex: return std::exp(d * std::log(scale_) - std::lgamma(d + 1));
      case BodyKind::Ellipsoid: return unit_ball * semi_axes_.prod();
      case BodyKind::Polytope: return std::nullopt;
    }
    return std::nullopt;
  }

  /// Operator norm of the covariance of Unif(K), where a closed form exists.
  std::optional<Scalar> exact_cov_opnorm() const {
    const Scalar d = static_cast<Scalar>(dim());
    switch (kind_) {
      case BodyKind::Ball: return radius_ * radius_ / (d + 2);
      case BodyKind::Box: return (upper_ - lower_).array().square().maxCoeff() / Scalar(12);
      case BodyKind::Simplex: return scale_ * scale_ / ((d + 1) * (d + 2));
      case BodyKind::Ellipsoid: return semi_axes_.array().square().maxCoeff() / (d + 2);
      case BodyKind::Polytope: return std::nullopt;
    }
    return std::nullopt;
  }

  /// The membership oracle.
  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& x) const {
    if (x.size() != dim())
      throw ParameterError("contains: point has dimension " + std::to_string(x.size()) + ", body has " +
                           std::to_string(dim()));
    switch (kind_) {
      case BodyKind::Ball: return (x - center_).squaredNorm() <= radius_ * radius_;
      case BodyKind::Box: return (x.array() >= lower_.array()).all() && (x.array() <= upper_.array()).all();
      case BodyKind::Simplex: return (x.array() >= Scalar(0)).all() && x.sum() <= scale_;
      case BodyKind::Polytope: return ((normals_ * x - offsets_).array() <= Scalar(0)).all();
      case BodyKind::Ellipsoid:
        return ((rotation_.transpose() * (x - center_)).array() / semi_axes_.array()).square().sum() <= Scalar(1);
    }
    return false;
  }

  /// Canonical spec string, e.g. "box(3,-1,1)".
  std::string describe() const {
    std::ostringstream out;
    out << to_string(kind_) << '(' << dim();
    switch (kind_) {
      case BodyKind::Ball: out << ',' << radius_; break;
      case BodyKind::Box: out << ',' << lower_(0) << ',' << upper_(0); break;
      case BodyKind::Simplex: out << ',' << scale_; break;
      case BodyKind::Polytope: out << ",rows=" << normals_.rows(); break;
      case BodyKind::Ellipsoid:
        for (Eigen::Index i = 0; i < semi_axes_.size(); ++i) out << ',' << semi_axes_(i);
        break;
    }
    out << ')';
    return out.str();
  }

 private:
  ConvexBody(BodyKind kind, Vector center) : kind_(kind), center_(std::move(center)) {}

  static void check_dimension(Eigen::Index d) {
    if (d < 1) throw ParameterError("body dimension must be >= 1");
  }

  Scalar enumerate_circumradius() const {
    constexpr double kMaxSubsets = 2e6;
    const Eigen::Index d = dim();
    const Eigen::Index rows = normals_.rows();
    if (rows < d + 1) throw ParameterError("polytope: fewer than d+1 constraints cannot be bounded");
    if (detail::binomial(rows, d) > kMaxSubsets)
      throw UnsupportedOperation("polytope: too many constraints to enumerate vertices; pass an explicit circumradius");

    Eigen::FullPivLU<Matrix> full(normals_);
    if (full.rank() < d) throw ParameterError("polytope: constraint normals do not span R^d (unbounded)");

    const Scalar tol = Scalar(1e-9) * (Scalar(1) + offsets_.cwiseAbs().maxCoeff());
    // Unbounded iff some extreme ray u != 0 with A u <= 0 exists; extreme rays have d-1 tight rows.
    if (d > 1) {
      bool unbounded = false;
      detail::for_each_subset(rows, d - 1, [&](const std::vector<Eigen::Index>& idx) {
        Matrix sub(d - 1, d);
        for (Eigen::Index r = 0; r < d - 1; ++r) sub.row(r) = normals_.row(idx[static_cast<std::size_t>(r)]);
        Eigen::FullPivLU<Matrix> lu(sub);
        if (lu.rank() != d - 1) return true;
        const Vector ray = lu.kernel().col(0).normalized();
        const Vector dots = normals_ * ray;
        if ((dots.array() <= tol).all() || (dots.array() >= -tol).all()) {
          unbounded = true;
          return false;
        }
        return true;
      });
      if (unbounded) throw ParameterError("polytope: constraints admit a recession direction (unbounded)");
    }

    Scalar best = 0;
    std::size_t vertices = 0;
    detail::for_each_subset(rows, d, [&](const std::vector<Eigen::Index>& idx) {
      Matrix sub(d, d);
      Vector rhs(d);
      for (Eigen::Index r = 0; r < d; ++r) {
        sub.row(r) = normals_.row(idx[static_cast<std::size_t>(r)]);
        rhs(r) = offsets_(idx[static_cast<std::size_t>(r)]);
      }
      Eigen::FullPivLU<Matrix> lu(sub);
      if (!lu.isInvertible()) return true;
      const Vector v = lu.solve(rhs);
      if (((normals_ * v - offsets_).array() <= tol).all()) {
        ++vertices;
        best = std::max(best, (v - center_).norm());
      }
      return true;
    });
    if (vertices == 0) throw ParameterError("polytope: no vertices found");
    return best;
  }

  BodyKind kind_;
  Vector center_;
  Scalar circumradius_ = Scalar(1);
  Scalar radius_ = Scalar(0);
  Vector lower_, upper_;
  Scalar scale_ = Scalar(0);
  Matrix normals_;
  Vector offsets_;
  Vector semi_axes_;
  Matrix rotation_;
};

template <typename T>
concept MembershipOracle = requires(const T& oracle, const VectorX<typename T::Scalar>& x) {
  typename T::Scalar;
  { oracle.dim() } -> std::convertible_to<Eigen::Index>;
  { oracle.contains(x) } -> std::convertible_to<bool>;
};

/// Per-chain wrapper that counts membership queries; the body itself stays immutable.
template <typename Body>
class CountingOracle {
 public:
  using Scalar = typename Body::Scalar;

  explicit CountingOracle(const Body& body) : body_(&body) {}

  Eigen::Index dim() const { return body_->dim(); }

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& x) const {
    ++queries_;
    return body_->contains(x);
  }

  std::uint64_t queries() const { return queries_; }
  void reset() { queries_ = 0; }
  const Body& body() const { return *body_; }

 private:
  const Body* body_;
  mutable std::uint64_t queries_ = 0;
};

template <typename Scalar, typename Derived>
bool contains(const ConvexBody<Scalar>& body, const Eigen::MatrixBase<Derived>& x) {
  return body.contains(x);
}

namespace detail {

// Euclidean projection onto {y >= 0, sum(y) <= s}.
template <typename Scalar>
VectorX<Scalar> project_capped_simplex(const VectorX<Scalar>& x, Scalar s) {
  VectorX<Scalar> clipped = x.cwiseMax(Scalar(0));
  if (clipped.sum() <= s) return clipped;
  std::vector<Scalar> u(x.data(), x.data() + x.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  Scalar cumulative = 0;
  Scalar theta = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const Scalar candidate = (cumulative - s) / static_cast<Scalar>(j + 1);
    if (u[j] - candidate > Scalar(0)) theta = candidate;
  }
  return (x.array() - theta).cwiseMax(Scalar(0)).matrix();
}

// Dykstra's alternating projection onto the intersection of halfspaces.
template <typename Scalar>
VectorX<Scalar> project_polytope(const MatrixX<Scalar>& normals, const VectorX<Scalar>& offsets,
                                 const VectorX<Scalar>& x, Scalar tol, int max_sweeps) {
  const Eigen::Index rows = normals.rows();
  VectorX<Scalar> current = x;
  MatrixX<Scalar> corrections = MatrixX<Scalar>::Zero(x.size(), rows);
  const VectorX<Scalar> row_norms2 = normals.rowwise().squaredNorm();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const VectorX<Scalar> start = current;
    for (Eigen::Index i = 0; i < rows; ++i) {
      const VectorX<Scalar> z = current + corrections.col(i);
      const Scalar excess = normals.row(i).dot(z) - offsets(i);
      current = excess > Scalar(0) ? VectorX<Scalar>(z - (excess / row_norms2(i)) * normals.row(i).transpose()) : z;
      corrections.col(i) = z - current;
    }
    if ((current - start).norm() <= tol) return current;
  }
  throw ToleranceError("distance_to_body: Dykstra projection did not converge");
}

// Projection onto an axis-aligned ellipsoid in principal coordinates (point assumed outside).
template <typename Scalar>
VectorX<Scalar> project_ellipsoid_principal(const VectorX<Scalar>& axes, const VectorX<Scalar>& p) {
  const auto a2 = axes.array().square();
  auto residual = [&](Scalar t) { return ((axes.array() * p.array()) / (a2 + t)).square().sum() - Scalar(1); };
  Scalar lo = 0;
  Scalar hi = axes.maxCoeff() * p.norm();
  Scalar t = 0;
  for (int it = 0; it < 200; ++it) {
    const Scalar f = residual(t);
    if (f > Scalar(0)) lo = t; else hi = t;
    const Scalar df = Scalar(-2) * ((axes.array() * p.array()).square() / (a2 + t).cube()).sum();
    Scalar next = t - f / df;
    if (!(next > lo && next < hi)) next = (lo + hi) / 2;
    if (std::abs(next - t) <= std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + t) * 4) {
      t = next;
      break;
    }
    t = next;
  }
  return (a2 * p.array() / (a2 + t)).matrix();
}

}  // namespace detail

/// Euclidean distance d(x, K); zero exactly when contains(x).
/// Polytopes use Dykstra projection (tolerance 1e-10, at most 1e4 sweeps).
template <typename Scalar, typename Derived>
Scalar distance_to_body(const ConvexBody<Scalar>& body, const Eigen::MatrixBase<Derived>& x_in) {
  const VectorX<Scalar> x = x_in;
  if (body.contains(x)) return Scalar(0);
  switch (body.kind()) {
    case BodyKind::Ball: return std::max(Scalar(0), (x - body.center()).norm() - body.radius());
    case BodyKind::Box: return (x - x.cwiseMax(body.lower()).cwiseMin(body.upper())).norm();
    case BodyKind::Simplex: return (x - detail::project_capped_simplex(x, body.scale())).norm();
    case BodyKind::Polytope:
      return (x - detail::project_polytope(body.normals(), body.offsets(), x, Scalar(1e-10), 10000)).norm();
    case BodyKind::Ellipsoid: {
      const VectorX<Scalar> p = body.rotation().transpose() * (x - body.center());
      return (p - detail::project_ellipsoid_principal(body.semi_axes(), p)).norm();
    }
  }
  throw UnsupportedOperation("distance_to_body: unsupported body kind");
}

/// Membership in the blowup K_delta = {x : d(x, K) <= delta}.
template <typename Scalar, typename Derived>
bool blowup_contains(const ConvexBody<Scalar>& body, const Eigen::MatrixBase<Derived>& x, Scalar delta) {
  if (!(delta >= Scalar(0))) throw ParameterError("blowup_contains: delta must be >= 0");
  return distance_to_body(body, x) <= delta;
}

/// Uniform direction times radius^(1/d): an exact draw from Unif(B_radius(0)).
template <typename Scalar>
VectorX<Scalar> uniform_in_ball(Eigen::Index d, Scalar radius, Rng& rng) {
  VectorX<Scalar> z(d);
  for (Eigen::Index i = 0; i < d; ++i) z(i) = static_cast<Scalar>(rng.normal());
  const Scalar r = radius * static_cast<Scalar>(std::pow(rng.uniform_open(), 1.0 / static_cast<double>(d)));
  return z * (r / z.norm());
}

/// Exact draw from Unif(K) for ball, box, simplex (exponential spacings) and ellipsoid.
template <typename Scalar>
VectorX<Scalar> exact_uniform_sample(const ConvexBody<Scalar>& body, Rng& rng) {
  const Eigen::Index d = body.dim();
  switch (body.kind()) {
    case BodyKind::Ball: return body.center() + uniform_in_ball<Scalar>(d, body.radius(), rng);
    case BodyKind::Box: {
      VectorX<Scalar> x(d);
      for (Eigen::Index i = 0; i < d; ++i) x(i) = body.lower()(i) + (body.upper()(i) - body.lower()(i)) * static_cast<Scalar>(rng.uniform());
      return x;
    }
    case BodyKind::Simplex: {
      VectorX<Scalar> spacings(d + 1);
      for (Eigen::Index i = 0; i <= d; ++i) spacings(i) = static_cast<Scalar>(rng.exponential());
      return body.scale() * spacings.head(d) / spacings.sum();
    }
    case BodyKind::Ellipsoid: {
      const VectorX<Scalar> u = uniform_in_ball<Scalar>(d, Scalar(1), rng);
      return body.center() + body.rotation() * body.semi_axes().cwiseProduct(u);
    }
    case BodyKind::Polytope: break;
  }
  throw UnsupportedOperation("exact_uniform_sample: no exact sampler for " + std::string(to_string(body.kind())));
}

inline bool has_exact_sampler(BodyKind kind) { return kind != BodyKind::Polytope; }

}  // namespace inout
