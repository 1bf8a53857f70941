#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "vtube/controller.hpp"
#include "vtube/errors.hpp"
#include "vtube/geometry.hpp"
#include "vtube/io_format.hpp"
#include "vtube/vec2.hpp"

namespace vtube {

/// Isosceles triangle excised around one obstacle. `apex` is upstream on the
/// obstacle's axis (unless re-tilted), `upper`/`lower` close the base, which
/// is perpendicular to t_c. `upper` is on the left-leg side.
struct ObstacleTriangle {
  Vec2 apex;   // p_otl
  Vec2 upper;  // p_otu
  Vec2 lower;  // p_otd
  std::size_t obstacle{0};
  bool retilted{false};
};

enum class SubTubeKind { PassThrough, UpperCorridor, LowerCorridor };

constexpr const char* to_string(SubTubeKind k) {
  switch (k) {
    case SubTubeKind::PassThrough: return "pass";
    case SubTubeKind::UpperCorridor: return "upper";
    case SubTubeKind::LowerCorridor: return "lower";
  }
  return "?";
}

struct SubTubeSlot {
  SubTubeKind kind{SubTubeKind::PassThrough};
  std::optional<TrapezoidTube> tube;  // nullopt = Empty
  std::vector<std::size_t> successors;
};

/// 3P + 1 slots: slot 3k is the pass-through upstream of obstacle k, slots
/// 3k+1 / 3k+2 its upper / lower corridor, slot 3P the final pass-through.
struct TubePartition {
  TrapezoidTube parent;
  std::vector<Obstacle> obstacles;  // sorted upstream to downstream
  std::vector<ObstacleTriangle> triangles;
  std::vector<SubTubeSlot> sub_tubes;
  std::vector<double> band_start;  // along-coordinate of each apex cut
  std::vector<double> band_end;    // along-coordinate of each base cut

  [[nodiscard]] std::size_t obstacle_count() const { return obstacles.size(); }
};

inline constexpr std::size_t kNoSubTube = std::numeric_limits<std::size_t>::max();

/// Indices of `obstacles` sorted upstream first; ties broken by the n_c coordinate.
inline std::vector<std::size_t> sort_obstacles(const TrapezoidTube& tube, const std::vector<Obstacle>& obstacles,
                                               double r_s) {
  for (std::size_t k = 0; k < obstacles.size(); ++k) {
    const auto& o = obstacles[k];
    if (!(o.radius > 0.0)) throw Error(ErrorCode::ObstacleOutsideTube, "obstacle " + std::to_string(k) + " radius must be > 0");
    if (!contains(tube, o.center)) {
      std::ostringstream os;
      os << "obstacle " << k << " centre " << o.center << " is outside the tube";
      throw Error(ErrorCode::ObstacleOutsideTube, os.str());
    }
    const double inflated = o.radius + r_s;
    if (dist_left(tube, o.center) <= inflated || dist_right(tube, o.center) <= inflated) {
      std::ostringstream os;
      os << "obstacle " << k << " inflated disc touches a tube leg";
      throw Error(ErrorCode::ObstacleOnBoundary, os.str());
    }
  }
  std::vector<std::size_t> order(obstacles.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = tube.along(obstacles[a].center);
    const double sb = tube.along(obstacles[b].center);
    if (sa != sb) return sa < sb;
    return dot(tube.n_c, obstacles[a].center) < dot(tube.n_c, obstacles[b].center);
  });
  return order;
}

namespace detail {

inline ObstacleTriangle raw_triangle(const TrapezoidTube& tube, const Obstacle& o, double r_s, double beta) {
  if (!(beta > 0.0 && beta < std::numbers::pi / 2.0))
    throw Error(ErrorCode::InvalidInterval, "triangle half-angle must lie in (0, pi/2)");
  const double R = o.radius + r_s;
  const double apex_back = R / std::sin(beta);
  const double half_base = (apex_back + R) * std::tan(beta);
  const Vec2 base_mid = o.center + R * tube.t_c;
  return {o.center - apex_back * tube.t_c, base_mid - half_base * tube.n_c, base_mid + half_base * tube.n_c, 0, false};
}

// Intersection of the line through a with direction da and the line through b
// with direction db; nullopt when (nearly) parallel.
inline std::optional<Vec2> line_intersection(const Vec2& a, const Vec2& da, const Vec2& b, const Vec2& db) {
  const double den = cross(da, db);
  if (std::abs(den) <= 1e-12 * norm(da) * norm(db)) return std::nullopt;
  const double t = cross(b - a, db) / den;
  return a + t * da;
}

inline bool strictly_inside_triangle(const ObstacleTriangle& tri, const Vec2& p) {
  const double c1 = cross(tri.upper - tri.apex, p - tri.apex);
  const double c2 = cross(tri.lower - tri.upper, p - tri.upper);
  const double c3 = cross(tri.apex - tri.lower, p - tri.lower);
  return (c1 > 0.0 && c2 > 0.0 && c3 > 0.0) || (c1 < 0.0 && c2 < 0.0 && c3 < 0.0);
}

inline std::optional<TrapezoidTube> try_corridor(const Vec2& l0, const Vec2& l1, const Vec2& r0, const Vec2& r1,
                                                 double k_t, double r_a) {
  try {
    auto t = build_tube(l0, l1, r0, r1, k_t);
    if (!assumption3_check(t, r_a)) return std::nullopt;
    return t;
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace detail

inline bool inside_triangle(const ObstacleTriangle& tri, const Vec2& p, double tol = 0.0) {
  const auto edge_side = [](const Vec2& a, const Vec2& b, const Vec2& q) { return cross(b - a, q - a) / norm(b - a); };
  const double orient = cross(tri.upper - tri.apex, tri.lower - tri.apex) > 0.0 ? 1.0 : -1.0;
  return orient * edge_side(tri.apex, tri.upper, p) >= -tol && orient * edge_side(tri.upper, tri.lower, p) >= -tol &&
         orient * edge_side(tri.lower, tri.apex, p) >= -tol;
}

/// Circumscribed triangle for one obstacle; the inflated disc (radius
/// r_o + r_s) is tangent to both legs and to the base.
inline ObstacleTriangle build_triangle(const TrapezoidTube& tube, const Obstacle& obstacle, double r_s,
                                       double beta) {
  auto tri = detail::raw_triangle(tube, obstacle, r_s, beta);
  for (const Vec2& v : {tri.apex, tri.upper, tri.lower}) {
    if (!contains(tube, v)) {
      std::ostringstream os;
      os << "triangle vertex " << v << " lies outside the tube";
      throw Error(ErrorCode::TriangleExceedsTube, os.str());
    }
  }
  return tri;
}

inline TubePartition build_partition(const TrapezoidTube& tube, const std::vector<Obstacle>& obstacles,
                                     const ControlParams& params, double beta) {
  TubePartition part;
  part.parent = tube;
  const auto order = sort_obstacles(tube, obstacles, params.r_s);
  const std::size_t P = order.size();
  const double len = tube.length();
  const double k_t = tube.k_t;

  part.sub_tubes.resize(3 * P + 1);
  for (std::size_t k = 0; k < P; ++k) {
    const std::size_t idx = order[k];
    const Obstacle& o = obstacles[idx];
    part.obstacles.push_back(o);
    auto tri = detail::raw_triangle(tube, o, params.r_s, beta);
    tri.obstacle = idx;
    double s_a = tube.along(tri.apex);
    const double s_b = tube.along(o.center) + o.radius + params.r_s;
    const std::string label = "obstacle " + std::to_string(idx);

    if (!contains(tube, tri.apex) || s_a <= 0.0)
      throw Error(ErrorCode::TriangleExceedsTube, label + ": triangle apex lies outside the tube");
    if (s_b >= len) throw Error(ErrorCode::TriangleExceedsTube, label + ": triangle base reaches the finishing line");

    auto upper = contains(tube, tri.upper) ? detail::try_corridor(tube.left_at(s_a), tube.left_at(s_b), tri.apex,
                                                                  tri.upper, k_t, params.r_a)
                                           : std::nullopt;
    auto lower = contains(tube, tri.lower) ? detail::try_corridor(tri.apex, tri.lower, tube.right_at(s_a),
                                                                  tube.right_at(s_b), k_t, params.r_a)
                                           : std::nullopt;
    if (!upper && !lower) throw Error(ErrorCode::NoFeasibleCorridor, label + ": both corridors are too narrow");

    if (!upper || !lower) {
      // Grow the triangle to the leg on the collapsed side: the surviving edge
      // is extended upstream until it meets that leg, and the other edge then
      // runs along the leg.
      const bool keep_upper = upper.has_value();
      const Vec2 edge_end = keep_upper ? tri.upper : tri.lower;
      const Vec2 leg_point = keep_upper ? tube.p_r0 : tube.p_l0;
      const Vec2 leg_dir = keep_upper ? tube.t_r : tube.t_l;
      const auto new_apex = detail::line_intersection(tri.apex, edge_end - tri.apex, leg_point, leg_dir);
      if (!new_apex) throw Error(ErrorCode::NoFeasibleCorridor, label + ": surviving corridor edge is parallel to the leg");
      tri.apex = *new_apex;
      tri.retilted = true;
      s_a = tube.along(tri.apex);
      if (!(s_a > 0.0)) throw Error(ErrorCode::TriangleExceedsTube, label + ": re-tilted triangle leaves the tube");
      if (keep_upper) {
        tri.lower = tube.right_at(s_b);
        upper = detail::try_corridor(tube.left_at(s_a), tube.left_at(s_b), tri.apex, tri.upper, k_t, params.r_a);
        lower.reset();
      } else {
        tri.upper = tube.left_at(s_b);
        lower = detail::try_corridor(tri.apex, tri.lower, tube.right_at(s_a), tube.right_at(s_b), k_t, params.r_a);
        upper.reset();
      }
      if (!upper && !lower)
        throw Error(ErrorCode::Assumption3PrimeViolation, label + ": corridor after re-tilt is not long/wide enough");
    }

    if (k > 0 && s_a < part.band_end.back()) {
      std::ostringstream os;
      os << label << ": cut band [" << s_a << ", " << s_b << "] overlaps the previous obstacle's band ending at "
         << part.band_end.back();
      throw Error(ErrorCode::OverlappingTriangles, os.str());
    }

    part.triangles.push_back(tri);
    part.band_start.push_back(s_a);
    part.band_end.push_back(s_b);
    part.sub_tubes[3 * k + 1] = {SubTubeKind::UpperCorridor, upper, {3 * k + 3}};
    part.sub_tubes[3 * k + 2] = {SubTubeKind::LowerCorridor, lower, {3 * k + 3}};
  }

  for (std::size_t k = 0; k <= P; ++k) {
    const double s0 = k == 0 ? 0.0 : part.band_end[k - 1];
    const double s1 = k == P ? len : part.band_start[k];
    const Vec2 l0 = k == 0 ? tube.p_l0 : tube.left_at(s0);
    const Vec2 r0 = k == 0 ? tube.p_r0 : tube.right_at(s0);
    const Vec2 l1 = k == P ? tube.p_l1 : tube.left_at(s1);
    const Vec2 r1 = k == P ? tube.p_r1 : tube.right_at(s1);
    std::optional<TrapezoidTube> pass;
    try {
      pass = build_tube(l0, l1, r0, r1, k_t);
    } catch (const Error&) {
    }
    if (!pass || !assumption3_check(*pass, params.r_a)) {
      std::ostringstream os;
      os << "pass-through sub-tube " << 3 * k << " over [" << s0 << ", " << s1 << "] is not long/wide enough";
      throw Error(ErrorCode::Assumption3PrimeViolation, os.str());
    }
    SubTubeSlot slot{SubTubeKind::PassThrough, pass, {}};
    if (k < P) {
      if (part.sub_tubes[3 * k + 1].tube) slot.successors.push_back(3 * k + 1);
      if (part.sub_tubes[3 * k + 2].tube) slot.successors.push_back(3 * k + 2);
    }
    part.sub_tubes[3 * k] = std::move(slot);
  }
  for (auto& slot : part.sub_tubes)
    if (!slot.tube) slot.successors.clear();
  return part;
}

/// Sub-tube holding p. Cut lines belong to the downstream sub-tube. Points
/// strictly inside a triangle, on a triangle vertex, or otherwise not in any
/// sub-tube keep `previous`.
inline std::size_t locate(const TubePartition& part, const Vec2& p, std::size_t previous) {
  if (!contains(part.parent, p)) {
    std::ostringstream os;
    os << "position " << p << " is outside the parent tube";
    throw Error(ErrorCode::OutsideParentTube, os.str());
  }
  const double s = part.parent.along(p);
  for (std::size_t k = part.triangles.size(); k-- > 0;) {
    const auto& tri = part.triangles[k];
    if (p == tri.apex || p == tri.upper || p == tri.lower) return previous;
    if (s >= part.band_end[k]) return 3 * (k + 1);
    if (s < part.band_start[k]) continue;
    if (detail::strictly_inside_triangle(tri, p)) return previous;
    const auto& up = part.sub_tubes[3 * k + 1].tube;
    const auto& lo = part.sub_tubes[3 * k + 2].tube;
    if (up && contains(*up, p)) return 3 * k + 1;
    if (lo && contains(*lo, p)) return 3 * k + 2;
    return previous;
  }
  return 0;
}

/// Feasibility report of one non-empty sub-tube.
struct SubTubeReport {
  std::size_t index{0};
  FeasibilityReport report;
};

inline std::vector<SubTubeReport> validate_partition(const TubePartition& part, const ControlParams& params,
                                                     Variant variant) {
  std::vector<SubTubeReport> out;
  for (std::size_t i = 0; i < part.sub_tubes.size(); ++i) {
    const auto& slot = part.sub_tubes[i];
    if (!slot.tube) continue;
    SubTubeReport r{i, {}};
    r.report.items = tube_checks(*slot.tube, params, variant, &r.report);
    out.push_back(std::move(r));
  }
  return out;
}

/// Per-sub-tube controllers plus the switching rule.
class SwitchedController {
 public:
  /// Panel extension factors are resolved per sub-tube for the Basic variant.
  SwitchedController(TubePartition partition, const ControlParams& params, Variant variant)
      : partition_(std::move(partition)), params_(params), variant_(variant) {
    controllers_.reserve(partition_.sub_tubes.size());
    for (const auto& slot : partition_.sub_tubes) {
      if (!slot.tube) {
        controllers_.emplace_back(std::nullopt);
        continue;
      }
      ControlParams p = params;
      if (variant == Variant::Basic) p.ext_factor = resolve_ext_factor(*slot.tube, params);
      controllers_.emplace_back(TubeController(*slot.tube, p, variant));
    }
  }

  [[nodiscard]] const TubePartition& partition() const { return partition_; }
  [[nodiscard]] const ControlParams& params() const { return params_; }
  [[nodiscard]] Variant variant() const { return variant_; }
  [[nodiscard]] const TubeController& controller(std::size_t sub_tube) const {
    const auto& c = controllers_.at(sub_tube);
    if (!c) throw Error(ErrorCode::OutsideTube, "sub-tube " + std::to_string(sub_tube) + " is empty");
    return *c;
  }

  [[nodiscard]] std::size_t locate(const Vec2& p, std::size_t previous) const {
    return vtube::locate(partition_, p, previous);
  }

  /// Command of agent i evaluated in the given sub-tube.
  [[nodiscard]] Vec2 command(const Snapshot& snap, std::size_t i, std::size_t sub_tube) const {
    return controller(sub_tube).command(snap, i);
  }

 private:
  TubePartition partition_;
  ControlParams params_;
  Variant variant_;
  std::vector<std::optional<TubeController>> controllers_;
};

/// Locate agent i (falling back to `previous`) and evaluate that sub-tube's field.
inline Vec2 switched_command(const SwitchedController& ctrl, const Snapshot& snap, std::size_t i,
                             std::size_t previous = 0) {
  const std::size_t k = ctrl.locate(snap.positions.at(i), previous);
  return ctrl.command(snap, i, k);
}

/// Delimited dump of sub-tube vertices, triangles and topology.
inline void write_partition(std::ostream& os, const TubePartition& part) {
  os << "kind,index,obstacle,x0,y0,x1,y1,x2,y2,x3,y3,successors\n";
  for (std::size_t i = 0; i < part.sub_tubes.size(); ++i) {
    const auto& slot = part.sub_tubes[i];
    std::string succ;
    for (std::size_t j = 0; j < slot.successors.size(); ++j) succ += (j ? ";" : "") + std::to_string(slot.successors[j]);
    const long obstacle = slot.kind == SubTubeKind::PassThrough ? -1 : static_cast<long>(i / 3);
    if (!slot.tube) {
      os << "empty_" << to_string(slot.kind) << ',' << i << ',' << obstacle << ",,,,,,,,," << succ << '\n';
      continue;
    }
    const auto& t = *slot.tube;
    os << to_string(slot.kind) << ',' << i << ',' << obstacle;
    for (const Vec2& v : {t.p_l0, t.p_l1, t.p_r0, t.p_r1}) os << ',' << fmt_num(v.x) << ',' << fmt_num(v.y);
    os << ',' << succ << '\n';
  }
  for (std::size_t k = 0; k < part.triangles.size(); ++k) {
    const auto& tri = part.triangles[k];
    os << (tri.retilted ? "triangle_retilted" : "triangle") << ',' << k << ',' << tri.obstacle;
    for (const Vec2& v : {tri.apex, tri.upper, tri.lower}) os << ',' << fmt_num(v.x) << ',' << fmt_num(v.y);
    os << ",,,\n";
  }
}

}  // namespace vtube
