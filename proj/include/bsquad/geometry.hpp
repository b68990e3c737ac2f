#pragma once

// Small planar geometry helpers shared across the library.

#include <Eigen/Dense>

namespace bsq {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline double det2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Quarter turn counterclockwise. For a counterclockwise polygon this sends an
// edge direction to the inward normal direction.
inline Vec2 rot90(const Vec2& a) { return Vec2(-a.y(), a.x()); }

// Interior angle at corner b of triangle (a, b, c).
inline double corner_angle(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 u = a - b;
  const Vec2 v = c - b;
  return std::atan2(std::abs(det2(u, v)), u.dot(v));
}

}  // namespace bsq
