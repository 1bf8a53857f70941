#pragma once

#include <cmath>
#include <ostream>

namespace vtube {

/// Planar vector / point, meters (or m/s when used as a velocity).
struct Vec2 {
  double x{0.0};
  double y{0.0};

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator/(const Vec2& a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Vec2& v) {
    return os << '(' << v.x << ", " << v.y << ')';
  }
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
// z-component of the 3-D cross product.
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
constexpr double norm_sq(const Vec2& a) { return dot(a, a); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
// Counter-clockwise quarter turn.
constexpr Vec2 perp(const Vec2& a) { return {-a.y, a.x}; }
inline Vec2 normalized(const Vec2& a) { return a / norm(a); }
inline bool is_finite(const Vec2& a) { return std::isfinite(a.x) && std::isfinite(a.y); }

/// Closest point to p on segment [a, b].
inline Vec2 closest_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len_sq = norm_sq(ab);
  if (len_sq == 0.0) return a;
  double t = dot(p - a, ab) / len_sq;
  t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
  return a + t * ab;
}

inline double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  return distance(p, closest_on_segment(p, a, b));
}

}  // namespace vtube
