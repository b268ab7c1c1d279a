#ifndef SPHEREVORTEX_GEOMETRY_HPP
#define SPHEREVORTEX_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "spherevortex/errors.hpp"

namespace spherevortex {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = std::numbers::pi;

inline Vec3 e1() { return Vec3::UnitX(); }
inline Vec3 e2() { return Vec3::UnitY(); }
inline Vec3 e3() { return Vec3::UnitZ(); }

/**
 * A point of the unit sphere embedded in R^3.
 *
 * Every constructor path renormalizes, so | |x|^2 - 1 | stays at roundoff
 * level; vectors already within a few ulps of unit length are kept bit for
 * bit, which makes construction idempotent. Converts implicitly to the
 * underlying Eigen vector for arithmetic.
 */
class UnitVector3 {
 public:
  UnitVector3() : v_(Vec3::UnitZ()) {}

  /// Normalizes `v`; rejects vectors too short to carry a direction.
  explicit UnitVector3(const Vec3& v) : v_(v) {
    const double n = v.norm();
    if (!(n > 1e-300) || !std::isfinite(n)) {
      throw ValidationError("UnitVector3: cannot normalize vector of norm " + std::to_string(n));
    }
    if (std::abs(n - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) v_ /= n;
  }

  UnitVector3(double x, double y, double z) : UnitVector3(Vec3(x, y, z)) {}

  const Vec3& vec() const noexcept { return v_; }
  operator const Vec3&() const noexcept { return v_; }  // NOLINT(google-explicit-constructor)

  double x() const noexcept { return v_.x(); }
  double y() const noexcept { return v_.y(); }
  double z() const noexcept { return v_.z(); }
  double operator[](int k) const noexcept { return v_[k]; }

  UnitVector3 operator-() const { return UnitVector3(-v_); }

  friend bool operator==(const UnitVector3& a, const UnitVector3& b) { return a.v_ == b.v_; }

 private:
  Vec3 v_;
};

/// A vector of T_x S^2 together with its base point.
struct TangentVector {
  UnitVector3 base;
  Vec3 vec = Vec3::Zero();

  /// |base . vec|, zero up to roundoff for a genuine tangent vector.
  double normal_component() const { return std::abs(base.vec().dot(vec)); }
};

/// Orthonormal basis (b1, b2) of T_x S^2 with (x, b1, b2) direct.
struct TangentBasis {
  UnitVector3 base;
  Vec3 b1 = Vec3::UnitX();
  Vec3 b2 = Vec3::UnitY();

  /// Same plane, basis turned by `angle` (keeps the orientation).
  TangentBasis rotated(double angle) const {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {base, c * b1 + s * b2, -s * b1 + c * b2};
  }

  /// Coordinates of an ambient vector in (b1, b2); the normal part is dropped.
  Eigen::Vector2d coords(const Vec3& v) const { return {b1.dot(v), b2.dot(v)}; }

  Vec3 ambient(const Eigen::Vector2d& c) const { return c[0] * b1 + c[1] * b2; }

  /// Largest deviation from the direct-orthonormal conditions.
  double orthonormality_defect() const {
    const Vec3& x = base.vec();
    double d = std::abs(x.dot(b1));
    d = std::max(d, std::abs(x.dot(b2)));
    d = std::max(d, std::abs(b1.dot(b2)));
    d = std::max(d, std::abs(b1.norm() - 1.0));
    d = std::max(d, std::abs(b2.norm() - 1.0));
    d = std::max(d, std::abs(x.dot(b1.cross(b2)) - 1.0));
    return d;
  }
};

inline double chordal_distance(const Vec3& x, const Vec3& y) { return (x - y).norm(); }

/// Great-circle distance for a given chord, 2 arcsin(r/2).
inline double geodesic_from_chord(double chord) {
  return 2.0 * std::asin(std::clamp(chord / 2.0, 0.0, 1.0));
}

inline double chord_from_geodesic(double angle) { return 2.0 * std::sin(angle / 2.0); }

/// Direct rotation of angle theta about e3.
inline Mat3 rotation_z(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat3 r;
  r << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return r;
}

/// Orthogonal projection onto T_x S^2: v - (x.v) x.
inline Vec3 project_tangent(const Vec3& x, const Vec3& v) { return v - x.dot(v) * x; }

/**
 * Deterministic direct orthonormal basis of T_x S^2.
 *
 * Away from the poles b1 is the unit eastward vector e3 ^ x / |e3 ^ x| and
 * b2 = x ^ b1. Within 1e-9 of the poles b1 is e1 projected onto the tangent
 * plane, which gives exactly (e1, e2) at e3 and (e1, -e2) at -e3.
 */
inline TangentBasis tangent_basis(const UnitVector3& x) {
  const Vec3& v = x.vec();
  if (std::abs(v.z()) >= 1.0 - 1e-9) {
    const Vec3 b1 = project_tangent(v, e1()).normalized();
    return {x, b1, v.cross(b1)};
  }
  const Vec3 b1 = e3().cross(v).normalized();
  const Vec3 b2 = v.cross(b1);
  return {x, b1, b2};
}

/// Area of the chordal cap C(x, r) = { y : |x - y| <= r }.
inline double cap_area(double r) {
  if (!(r >= 0.0 && r <= 2.0)) {
    throw ValidationError("cap_area: chordal radius must lie in [0, 2], got " + std::to_string(r));
  }
  return kPi * r * r;
}

/// Integral over S^2 of |N - y|^(-alpha) d sigma(y), finite iff alpha < 2.
inline double singular_moment_integral(double alpha) {
  if (!(alpha >= 0.0)) {
    throw ValidationError("singular_moment_integral: alpha must be >= 0, got " + std::to_string(alpha));
  }
  if (alpha >= 2.0) {
    throw ValidationError("singular_moment_integral: integral diverges for alpha >= 2, got " +
                          std::to_string(alpha));
  }
  return std::pow(2.0, 3.0 - alpha) * kPi / (2.0 - alpha);
}

/// Uniform point of S^2 from three standard normals.
template <class Rng>
UnitVector3 sample_uniform(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Vec3 g(normal(rng), normal(rng), normal(rng));
    if (g.norm() >= 1e-6) return UnitVector3(g);
  }
}

/// Point at height fraction u in [0,1] of the cap area and azimuth phi, in x's tangent frame.
inline UnitVector3 cap_point(const TangentBasis& frame, double r, double u, double phi) {
  const double z = 1.0 - 0.5 * u * r * r;
  const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
  return UnitVector3(z * frame.base.vec() + rho * (std::cos(phi) * frame.b1 + std::sin(phi) * frame.b2));
}

/// Uniform point of the cap C(x, r) (area measure).
template <class Rng>
UnitVector3 sample_cap(const UnitVector3& x, double r, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const TangentBasis frame = tangent_basis(x);
  const double u = unit(rng);
  const double phi = 2.0 * kPi * unit(rng);
  return cap_point(frame, r, u, phi);
}

}  // namespace spherevortex

#endif
