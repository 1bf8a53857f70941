#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "vtube/errors.hpp"
#include "vtube/vec2.hpp"

namespace vtube {

/// Legs whose normal makes |t_c . n| below this are treated as parallel to t_c.
inline constexpr double kParallelLegTol = 1e-12;
/// Relative tolerance on the cross product of the two base directions.
inline constexpr double kParallelBaseTol = 1e-9;

/// Trapezoid virtual tube. [p_l0, p_r0] is the entrance, [p_l1, p_r1] the
/// finishing line, [p_l0, p_l1] and [p_r0, p_r1] the left and right legs.
/// Only build_tube() produces valid instances.
struct TrapezoidTube {
  Vec2 p_l0, p_l1, p_r0, p_r1;
  Vec2 t_c, t_l, t_r;  // unit tangents; t_c points from entrance to finishing line
  Vec2 n_c;            // unit, along the finishing line from p_l1 to p_r1
  Vec2 n_l, n_r;       // unit leg normals pointing into the tube
  double k_t{1.0};

  /// Along-tube coordinate: 0 on the entrance, length() on the finishing line.
  [[nodiscard]] double along(const Vec2& x) const { return dot(t_c, x - p_r0); }
  [[nodiscard]] double length() const { return dot(t_c, p_r1 - p_r0); }

  /// Point of the left/right leg line at along-coordinate s.
  [[nodiscard]] Vec2 left_at(double s) const { return p_l0 + (s / dot(t_c, t_l)) * t_l; }
  [[nodiscard]] Vec2 right_at(double s) const { return p_r0 + (s / dot(t_c, t_r)) * t_r; }

  /// Cross-section width measured along n_c.
  [[nodiscard]] double width_at(double s) const { return dot(n_c, right_at(s) - left_at(s)); }
  [[nodiscard]] double entrance_width() const { return dot(n_c, p_r0 - p_l0); }
  [[nodiscard]] double finishing_width() const { return dot(n_c, p_r1 - p_l1); }

  [[nodiscard]] bool left_converging() const { return dot(t_c, n_l) < -kParallelLegTol; }
  [[nodiscard]] bool right_converging() const { return dot(t_c, n_r) < -kParallelLegTol; }

  /// Counter-clockwise or clockwise closed polygon (no repeated vertex).
  [[nodiscard]] std::array<Vec2, 4> polygon() const { return {p_l0, p_l1, p_r1, p_r0}; }
  [[nodiscard]] Vec2 centroid() const { return (p_l0 + p_l1 + p_r0 + p_r1) / 4.0; }

  /// Largest vertex-to-vertex distance.
  [[nodiscard]] double diameter() const {
    const auto poly = polygon();
    double d = 0.0;
    for (const auto& a : poly)
      for (const auto& b : poly) d = std::max(d, distance(a, b));
    return d;
  }
};

enum class TubeRegion { Middle, Left, Right, Outside };

constexpr const char* to_string(TubeRegion r) {
  switch (r) {
    case TubeRegion::Middle: return "Middle";
    case TubeRegion::Left: return "Left";
    case TubeRegion::Right: return "Right";
    case TubeRegion::Outside: return "Outside";
  }
  return "?";
}

/// Disc obstacle.
struct Obstacle {
  Vec2 center;
  double radius{0.0};
};

namespace detail {

inline double polygon_area(const std::array<Vec2, 4>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

[[noreturn]] inline void degenerate(const std::string& why) { throw Error(ErrorCode::DegenerateTube, why); }

inline Vec2 inward_normal(const Vec2& tangent, const Vec2& on_leg, const Vec2& centroid) {
  Vec2 n = perp(tangent);
  const double side = dot(n, centroid - on_leg);
  if (side == 0.0) degenerate("centroid lies on a leg");
  return side > 0.0 ? n : -n;
}

}  // namespace detail

inline TrapezoidTube build_tube(const Vec2& p_l0, const Vec2& p_l1, const Vec2& p_r0, const Vec2& p_r1,
                                double k_t = 1.0) {
  for (const Vec2& p : {p_l0, p_l1, p_r0, p_r1})
    if (!is_finite(p)) detail::degenerate("non-finite vertex");
  if (!(k_t >= 1.0)) detail::degenerate("k_t must be >= 1");

  const Vec2 left = p_l1 - p_l0;
  const Vec2 right = p_r1 - p_r0;
  const Vec2 base0 = p_r0 - p_l0;
  const Vec2 base1 = p_r1 - p_l1;
  if (norm(left) == 0.0) detail::degenerate("zero-length left leg");
  if (norm(right) == 0.0) detail::degenerate("zero-length right leg");
  if (norm(base0) == 0.0) detail::degenerate("zero-length entrance");
  if (norm(base1) == 0.0) detail::degenerate("zero-length finishing line");
  if (std::abs(cross(base0, base1)) > kParallelBaseTol * norm(base0) * norm(base1) || dot(base0, base1) <= 0.0) {
    std::ostringstream os;
    os << "bases not parallel (cross = " << cross(base0, base1) << ")";
    detail::degenerate(os.str());
  }

  TrapezoidTube t;
  t.p_l0 = p_l0;
  t.p_l1 = p_l1;
  t.p_r0 = p_r0;
  t.p_r1 = p_r1;
  t.k_t = k_t;
  t.t_l = normalized(left);
  t.t_r = normalized(right);
  t.n_c = normalized(base1);
  t.t_c = perp(t.n_c);
  if (dot(t.t_c, left) < 0.0) t.t_c = -t.t_c;
  if (!(dot(t.t_l, t.t_c) > 0.0) || !(dot(t.t_r, t.t_c) > 0.0))
    detail::degenerate("legs must both advance from the entrance to the finishing line");

  if (std::abs(detail::polygon_area(t.polygon())) <= 1e-12 * t.diameter() * t.diameter())
    detail::degenerate("zero area");

  const Vec2 g = t.centroid();
  t.n_l = detail::inward_normal(t.t_l, p_l1, g);
  t.n_r = detail::inward_normal(t.t_r, p_r1, g);
  return t;
}

/// Signed distance to the left leg line; non-negative inside the tube.
inline double dist_left(const TrapezoidTube& tube, const Vec2& x) { return dot(tube.n_l, x - tube.p_l1); }
/// Signed distance to the right leg line; non-negative inside the tube.
inline double dist_right(const TrapezoidTube& tube, const Vec2& x) { return dot(tube.n_r, x - tube.p_r1); }

inline bool contains(const TrapezoidTube& tube, const Vec2& x) {
  return dist_left(tube, x) >= 0.0 && dist_right(tube, x) >= 0.0 && -dot(tube.t_c, x - tube.p_r1) >= 0.0 &&
         dot(tube.t_c, x - tube.p_r0) >= 0.0;
}

inline TubeRegion classify(const TrapezoidTube& tube, const Vec2& x, double r_a) {
  if (!contains(tube, x)) return TubeRegion::Outside;
  const double band = tube.k_t * r_a;
  const bool in_left = tube.left_converging() && dist_left(tube, x) < band;
  const bool in_right = tube.right_converging() && dist_right(tube, x) < band;
  if (in_left && in_right) {
    std::ostringstream os;
    os << "point " << x << " lies in both the left and right areas";
    throw Error(ErrorCode::AmbiguousRegion, os.str());
  }
  if (in_left) return TubeRegion::Left;
  if (in_right) return TubeRegion::Right;
  return TubeRegion::Middle;
}

inline bool finishing_reached(const TrapezoidTube& tube, const Vec2& p, double eps_0) {
  return -dot(tube.t_c, p - tube.p_r1) <= eps_0;
}

/// Breakdown of the "long and wide enough" condition.
struct RegionCheck {
  bool left_area_nonempty{false};
  bool right_area_nonempty{false};
  bool left_right_disjoint{true};
  bool middle_nonempty{true};
  bool long_enough{true};
  double required_width{0.0};  // along n_c, for the middle area to exist
  double min_base_width{0.0};
  double max_base_width{0.0};
  double length{0.0};

  [[nodiscard]] bool ok() const { return left_right_disjoint && middle_nonempty && long_enough; }
};

/// Decides emptiness of the middle area and disjointness of the left/right
/// areas from the base widths. Inside a cross-section at distance u from the
/// left leg (along n_c), d_Tl = u (n_l.n_c) and d_Tr = (w - u)(-n_r.n_c), and
/// the width w is affine in the along-coordinate, so extremes sit on the bases.
inline RegionCheck region_check(const TrapezoidTube& tube, double r_a) {
  RegionCheck rc;
  rc.left_area_nonempty = tube.left_converging();
  rc.right_area_nonempty = tube.right_converging();
  const double band = tube.k_t * r_a;
  if (rc.left_area_nonempty) rc.required_width += band / dot(tube.n_l, tube.n_c);
  if (rc.right_area_nonempty) rc.required_width += band / -dot(tube.n_r, tube.n_c);
  rc.min_base_width = std::min(tube.entrance_width(), tube.finishing_width());
  rc.max_base_width = std::max(tube.entrance_width(), tube.finishing_width());
  if (rc.left_area_nonempty || rc.right_area_nonempty) rc.middle_nonempty = rc.max_base_width >= rc.required_width;
  if (rc.left_area_nonempty && rc.right_area_nonempty)
    rc.left_right_disjoint = rc.min_base_width >= rc.required_width;
  rc.length = tube.length();
  rc.long_enough = rc.length > 2.0 * r_a;
  return rc;
}

inline bool assumption3_check(const TrapezoidTube& tube, double r_a) { return region_check(tube, r_a).ok(); }

}  // namespace vtube
