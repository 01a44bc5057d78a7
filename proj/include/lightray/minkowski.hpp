#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "lightray/error.hpp"

namespace lightray {

/// Space dimension n is 2 or 3, so every spacetime object fits in fixed
/// maximum storage and never touches the heap.
inline constexpr int kMaxSpaceDim = 3;
inline constexpr int kMaxAxes = kMaxSpaceDim + 1;

template <typename Scalar>
using SpaceVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, kMaxSpaceDim, 1>;
template <typename Scalar>
using SpacetimeVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, kMaxAxes, 1>;
template <typename Scalar>
using SpacetimeMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAxes, kMaxAxes>;

using SpaceVec = SpaceVector<double>;
using SpacetimeVec = SpacetimeVector<double>;
using SpacetimeMat = SpacetimeMatrix<double>;

inline constexpr double kLightLikeTolerance = 1e-12;
inline constexpr double kUnitTolerance = 1e-12;

enum class CausalClass { SpaceLike, TimeLike, LightLike };

constexpr const char* to_string(CausalClass c) {
  switch (c) {
    case CausalClass::SpaceLike: return "SpaceLike";
    case CausalClass::TimeLike: return "TimeLike";
    case CausalClass::LightLike: return "LightLike";
  }
  return "?";
}

inline void require_space_dim(Eigen::Index n) {
  if (n != 2 && n != 3) {
    throw Error(ErrorCode::WrongDimension, "space dimension must be 2 or 3, got " + std::to_string(n));
  }
}

/// A point z = (t, x) of R^{1+n}.
template <typename Scalar>
struct BasicEvent {
  Scalar t{};
  SpaceVector<Scalar> x;

  BasicEvent() = default;
  BasicEvent(Scalar time, SpaceVector<Scalar> space) : t(time), x(std::move(space)) {}

  template <typename Derived>
  static BasicEvent from_coords(const Eigen::MatrixBase<Derived>& z) {
    return BasicEvent(z(0), z.tail(z.size() - 1));
  }

  Eigen::Index dimension() const { return x.size(); }

  SpacetimeVector<Scalar> coords() const {
    SpacetimeVector<Scalar> z(1 + x.size());
    z << t, x;
    return z;
  }
};

/// A frequency covector zeta = (tau, xi).
template <typename Scalar>
struct BasicCovector {
  Scalar tau{};
  SpaceVector<Scalar> xi;

  BasicCovector() = default;
  BasicCovector(Scalar t, SpaceVector<Scalar> space) : tau(t), xi(std::move(space)) {}

  template <typename Derived>
  static BasicCovector from_coords(const Eigen::MatrixBase<Derived>& z) {
    return BasicCovector(z(0), z.tail(z.size() - 1));
  }

  Eigen::Index dimension() const { return xi.size(); }

  SpacetimeVector<Scalar> coords() const {
    SpacetimeVector<Scalar> z(1 + xi.size());
    z << tau, xi;
    return z;
  }
};

/// Future-pointing light-like line s -> (s, x + s theta); x is where it
/// crosses t = 0.
template <typename Scalar>
struct BasicLightRay {
  SpaceVector<Scalar> x;
  SpaceVector<Scalar> theta;

  BasicLightRay() = default;
  BasicLightRay(SpaceVector<Scalar> origin, SpaceVector<Scalar> direction)
      : x(std::move(origin)), theta(std::move(direction)) {
    using std::abs;
    if (x.size() != theta.size()) {
      throw Error(ErrorCode::WrongDimension, "ray origin and direction sizes differ");
    }
    if (abs(theta.norm() - Scalar(1)) > Scalar(kUnitTolerance)) {
      throw Error(ErrorCode::InvalidArgument, "ray direction is not a unit vector");
    }
  }

  Eigen::Index dimension() const { return x.size(); }

  /// (1, theta)
  SpacetimeVector<Scalar> tangent() const {
    SpacetimeVector<Scalar> w(1 + theta.size());
    w << Scalar(1), theta;
    return w;
  }
};

using Event = BasicEvent<double>;
using Covector = BasicCovector<double>;
using LightRay = BasicLightRay<double>;

template <typename Derived>
typename Derived::Scalar minkowski_form(const Eigen::MatrixBase<Derived>& u) {
  return -u(0) * u(0) + u.tail(u.size() - 1).squaredNorm();
}

template <typename Scalar = double>
SpacetimeMatrix<Scalar> minkowski_metric(Eigen::Index n) {
  SpacetimeMatrix<Scalar> eta = SpacetimeMatrix<Scalar>::Identity(n + 1, n + 1);
  eta(0, 0) = Scalar(-1);
  return eta;
}

template <typename Derived>
CausalClass causal_class(const Eigen::MatrixBase<Derived>& u) {
  using std::abs;
  using Scalar = typename Derived::Scalar;
  const Scalar time = abs(u(0));
  const Scalar space = u.tail(u.size() - 1).norm();
  if (abs(time - space) <= Scalar(kLightLikeTolerance)) return CausalClass::LightLike;
  return time < space ? CausalClass::SpaceLike : CausalClass::TimeLike;
}

template <typename Scalar>
CausalClass causal_class(const BasicCovector<Scalar>& zeta) {
  return causal_class(zeta.coords());
}

template <typename Scalar>
BasicEvent<Scalar> ray_point(const BasicLightRay<Scalar>& ray, Scalar s) {
  return BasicEvent<Scalar>(s, ray.x + s * ray.theta);
}

namespace detail {

template <typename Scalar>
void require_spacelike(const BasicCovector<Scalar>& zeta) {
  using std::abs;
  const Scalar space = zeta.xi.norm();
  if (abs(zeta.tau) > space + Scalar(kLightLikeTolerance)) {
    throw Error(ErrorCode::EmptyAdmissibleSet, "|tau| > |xi|: no unit theta solves tau + theta.xi = 0");
  }
  if (causal_class(zeta) != CausalClass::SpaceLike) {
    throw Error(ErrorCode::NotSpaceLike, "covector is light-like");
  }
}

}  // namespace detail

/// The two unit directions with tau + theta.xi = 0 for a space-like covector
/// in R^{1+2}. With r = sqrt(|xi|^2 - tau^2):
///   theta_pm = (-tau xi1 -+ r xi2, -tau xi2 +- r xi1) / |xi|^2.
template <typename Scalar>
std::pair<SpaceVector<Scalar>, SpaceVector<Scalar>> theta_pm(const BasicCovector<Scalar>& zeta) {
  using std::sqrt;
  if (zeta.dimension() != 2) {
    throw Error(ErrorCode::WrongDimension, "theta_pm is defined for n = 2");
  }
  if (causal_class(zeta) != CausalClass::SpaceLike) {
    throw Error(ErrorCode::NotSpaceLike, "theta_pm needs a space-like covector");
  }
  const Scalar xi_sq = zeta.xi.squaredNorm();
  if (sqrt(xi_sq) <= Scalar(1e-12)) {
    throw Error(ErrorCode::DegenerateXi, "|xi| too small");
  }
  const Scalar r = sqrt(xi_sq - zeta.tau * zeta.tau);
  const Scalar x1 = zeta.xi(0);
  const Scalar x2 = zeta.xi(1);
  SpaceVector<Scalar> plus(2), minus(2);
  plus << (-zeta.tau * x1 - r * x2) / xi_sq, (-zeta.tau * x2 + r * x1) / xi_sq;
  minus << (-zeta.tau * x1 + r * x2) / xi_sq, (-zeta.tau * x2 - r * x1) / xi_sq;
  return {plus, minus};
}

/// Spherical coordinates on S^{n-1}. angles[0] is the polar angle measured
/// from e_n, the remaining angles nest inward; for n = 3, (a, b) gives
/// (sin a sin b, sin a cos b, cos a) and for n = 2, a gives (sin a, cos a).
template <typename Derived>
SpaceVector<typename Derived::Scalar> spherical_theta(const Eigen::MatrixBase<Derived>& angles) {
  using std::cos;
  using std::sin;
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = angles.size() + 1;
  require_space_dim(n);
  SpaceVector<Scalar> theta(n);
  Scalar prefix(1);
  // theta^n = cos(a_0), theta^{n-1} = sin(a_0) cos(a_1), ..., theta^1 = prod sin.
  for (Eigen::Index k = 0; k < n - 1; ++k) {
    theta(n - 1 - k) = prefix * cos(angles(k));
    prefix *= sin(angles(k));
  }
  theta(0) = prefix;
  return theta;
}

inline SpaceVec spherical_theta(double a) {
  Eigen::Matrix<double, 1, 1> angles;
  angles << a;
  return spherical_theta(angles);
}

inline SpaceVec spherical_theta(double a, double b) {
  return spherical_theta(Eigen::Vector2d(a, b));
}

/// Unit directions theta with tau + theta.xi = 0. For n = 2 this is exactly
/// {theta_+, theta_-} (count is ignored); for n = 3 it is `count` equispaced
/// points on the admissible circle, starting from the projection of e_1 onto
/// the circle's plane (e_2 when e_1 is parallel to xi).
template <typename Scalar>
std::vector<SpaceVector<Scalar>> direction_set(const BasicCovector<Scalar>& zeta, int count) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Eigen::Index n = zeta.dimension();
  require_space_dim(n);
  detail::require_spacelike(zeta);
  if (n == 2) {
    auto [plus, minus] = theta_pm(zeta);
    return {plus, minus};
  }
  if (count < 3) {
    throw Error(ErrorCode::InvalidArgument, "n = 3 direction sets need at least 3 points");
  }
  const Scalar xi_norm = zeta.xi.norm();
  const Eigen::Matrix<Scalar, 3, 1> axis = zeta.xi / xi_norm;
  const Eigen::Matrix<Scalar, 3, 1> center = (-zeta.tau / (xi_norm * xi_norm)) * zeta.xi;
  const Scalar ratio = zeta.tau / xi_norm;
  const Scalar radius = sqrt(Scalar(1) - ratio * ratio);

  Eigen::Matrix<Scalar, 3, 1> u = Eigen::Matrix<Scalar, 3, 1>::UnitX() - axis(0) * axis;
  if (u.norm() < Scalar(1e-8)) {
    u = Eigen::Matrix<Scalar, 3, 1>::UnitY() - axis(1) * axis;
  }
  u.normalize();
  const Eigen::Matrix<Scalar, 3, 1> w = axis.cross(u);

  std::vector<SpaceVector<Scalar>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const Scalar phi = Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(k) / Scalar(count);
    Eigen::Matrix<Scalar, 3, 1> theta = center + radius * (cos(phi) * u + sin(phi) * w);
    out.emplace_back(theta);
  }
  return out;
}

/// Rows (1, theta_k) for the four perturbed directions
/// theta(a,b), theta(-a,b), theta(a,-b), theta(0,b) on S^2.
template <typename Scalar>
Eigen::Matrix<Scalar, 4, 4> perturbation_rows(Scalar a, Scalar b) {
  Eigen::Matrix<Scalar, 4, 4> rows;
  const std::pair<Scalar, Scalar> params[4] = {{a, b}, {-a, b}, {a, -b}, {Scalar(0), b}};
  for (int k = 0; k < 4; ++k) {
    rows(k, 0) = Scalar(1);
    rows.template block<1, 3>(k, 1) =
        spherical_theta(Eigen::Matrix<Scalar, 2, 1>(params[k].first, params[k].second)).transpose();
  }
  return rows;
}

/// 4 sin^2(a) sin(b) cos(b) (1 - cos(a)). The determinant of
/// perturbation_rows(a, b) in the row order above is the negative of this.
template <typename Scalar>
Scalar perturbation_closed_form(Scalar a, Scalar b) {
  using std::cos;
  using std::sin;
  const Scalar sa = sin(a);
  return Scalar(4) * sa * sa * sin(b) * cos(b) * (Scalar(1) - cos(a));
}

template <typename Scalar>
struct BasicPerturbationSet {
  Scalar a{};
  Scalar b{};
  Eigen::Matrix<Scalar, 4, 4> rows;
  Scalar determinant{};
};

using PerturbationSet = BasicPerturbationSet<double>;

inline constexpr double kSingularPerturbation = 1e-10;

template <typename Scalar>
BasicPerturbationSet<Scalar> perturbation_matrix(Scalar a, Scalar b) {
  using std::abs;
  BasicPerturbationSet<Scalar> set{a, b, perturbation_rows(a, b), Scalar(0)};
  set.determinant = set.rows.determinant();
  if (abs(set.determinant) < Scalar(kSingularPerturbation)) {
    throw Error(ErrorCode::SingularPerturbation, "perturbation directions are linearly dependent");
  }
  return set;
}

/// Coordinate slot (0 = tau) a normalized covector lands on: e^1 for n = 2,
/// e^2 for n = 3 (both are e^{n-1}).
constexpr Eigen::Index boost_axis(Eigen::Index n) { return n - 1; }

/// Lorentz transformation L = B * R taking a space-like zeta to
/// (0, ..., m, ..., 0) with m = sqrt(|xi|^2 - tau^2) in slot boost_axis(n).
/// R rotates xi onto the target axis (identity on t); B is then the pure boost
/// in the (t, axis) plane with velocity tau / |xi|.
template <typename Scalar>
SpacetimeMatrix<Scalar> boost_to_axis(const BasicCovector<Scalar>& zeta) {
  using std::atan2;
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Eigen::Index n = zeta.dimension();
  require_space_dim(n);
  if (causal_class(zeta) != CausalClass::SpaceLike) {
    throw Error(ErrorCode::NotSpaceLike, "boost_to_axis needs a space-like covector");
  }
  const Eigen::Index axis = boost_axis(n);
  const Scalar xi_norm = zeta.xi.norm();

  SpacetimeMatrix<Scalar> rotation = SpacetimeMatrix<Scalar>::Identity(n + 1, n + 1);
  if (n == 2) {
    // Rotate by -angle(xi) so xi lands on e_1.
    const Scalar angle = atan2(zeta.xi(1), zeta.xi(0));
    const Scalar c = cos(angle);
    const Scalar s = sin(angle);
    rotation.template block<2, 2>(1, 1) << c, s, -s, c;
  } else {
    const Eigen::Matrix<Scalar, 3, 1> from = zeta.xi / xi_norm;
    const Eigen::Quaternion<Scalar> q =
        Eigen::Quaternion<Scalar>::FromTwoVectors(from, Eigen::Matrix<Scalar, 3, 1>::Unit(axis - 1));
    rotation.template block<3, 3>(1, 1) = q.toRotationMatrix();
  }

  const Scalar beta = zeta.tau / xi_norm;
  const Scalar gamma = Scalar(1) / sqrt(Scalar(1) - beta * beta);
  SpacetimeMatrix<Scalar> boost = SpacetimeMatrix<Scalar>::Identity(n + 1, n + 1);
  boost(0, 0) = gamma;
  boost(0, axis) = -gamma * beta;
  boost(axis, 0) = -gamma * beta;
  boost(axis, axis) = gamma;
  return boost * rotation;
}

}  // namespace lightray
