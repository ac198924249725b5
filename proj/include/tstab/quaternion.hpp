#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "tstab/rng.hpp"

namespace tstab {

// Element of the quaternion algebra H, stored as (w, x, y, z) with w the
// scalar part. All operations are pure functions on values.
struct Quaternion {
  double w = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Quaternion() = default;
  constexpr Quaternion(double w_, double x_, double y_, double z_)
      : w(w_), x(x_), y(y_), z(z_) {}

  static constexpr Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }

  friend constexpr Quaternion operator+(const Quaternion& a, const Quaternion& b) {
    return {a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend constexpr Quaternion operator-(const Quaternion& a, const Quaternion& b) {
    return {a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend constexpr Quaternion operator*(double s, const Quaternion& q) {
    return {s * q.w, s * q.x, s * q.y, s * q.z};
  }

  friend constexpr bool operator==(const Quaternion& a, const Quaternion& b) = default;

  bool finite() const {
    return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

// Hamilton product (non-commutative).
constexpr Quaternion operator*(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

constexpr Quaternion conj(const Quaternion& q) { return {q.w, -q.x, -q.y, -q.z}; }

constexpr double norm_sq(const Quaternion& q) {
  return q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
}

inline double norm(const Quaternion& q) { return std::sqrt(norm_sq(q)); }

// Exact point-to-sphere distance in R^4: | ||q|| - 1 |.
inline double dist_to_s3(const Quaternion& q) { return std::abs(norm(q) - 1.0); }

// Quaternion exponential of a vector quaternion (zero scalar part):
// cos(|v|) + sin(|v|) v/|v|. Below |v| = 1e-8 the first-order series (1, v)
// is used, which is exact to double precision there. Rejects inputs with a
// nonzero scalar part: this is not a general quaternion exponential.
inline Quaternion exp_vector(const Quaternion& v) {
  if (std::abs(v.w) > 1e-12) {
    throw std::invalid_argument("exp_vector: argument must be a vector quaternion, got w = " +
                                std::to_string(v.w));
  }
  const double theta = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
  if (theta < 1e-8) {
    return {1.0, v.x, v.y, v.z};
  }
  const double s = std::sin(theta) / theta;
  return {std::cos(theta), s * v.x, s * v.y, s * v.z};
}

// Uniform draw on S^3: four standard normals, normalized. The all-zero draw
// has measure zero but is resampled anyway.
inline Quaternion random_unit(RngStream& rng) {
  for (;;) {
    Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const double n = norm(q);
    if (n > 0.0) {
      return (1.0 / n) * q;
    }
  }
}

}  // namespace tstab
