#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vtube/errors.hpp"
#include "vtube/geometry.hpp"
#include "vtube/potentials.hpp"
#include "vtube/vec2.hpp"

namespace vtube {

/// Which velocity field to use inside a tube.
///  Basic:    piecewise line-approach term + panel-potential boundary terms.
///  Modified: smoothly blended line-approach term + projected barrier terms.
enum class Variant { Basic, Modified };

constexpr const char* to_string(Variant v) { return v == Variant::Basic ? "basic" : "modified"; }

/// Projection applied to the inward leg normal in the projected boundary terms.
///  AlongTangent: P = t_c t_c^T (keeps only the component along the tube axis)
///  AcrossTangent: P = I - t_c t_c^T (drops the component along the tube axis)
enum class WallProjection { AlongTangent, AcrossTangent };

constexpr const char* to_string(WallProjection w) {
  return w == WallProjection::AlongTangent ? "along" : "across";
}

struct ControlParams {
  double v{2.0};            // forward speed, m/s
  double v_max_prime{1.5};  // bound on the repulsive part of the command, m/s
  double v_min{0.5};
  double v_max{3.5};
  double r_s{0.25};  // safety radius, m
  double r_a{0.5};   // avoidance radius, m
  double k_t{2.0};   // left/right area band width in units of r_a
  double k_2{1.0};   // agent-agent barrier gain
  double k_3{1.0};   // boundary barrier gain
  double eps_m{1e-6};
  double eps_t{1e-6};
  double eps_s{1e-6};
  double eps_0{0.01};        // finishing-line tolerance, m
  double ext_factor{10.0};   // extended panel length in units of the leg length
  WallProjection wall_projection{WallProjection::AcrossTangent};
  // Accepted for parameter-list compatibility; not used by any term.
  std::optional<double> k_5;
  std::optional<double> eps_o;

  [[nodiscard]] BarrierParams agent_barrier() const { return {k_2, 2.0 * r_s, r_s + r_a, eps_m, eps_s}; }
  [[nodiscard]] BarrierParams wall_barrier() const { return {k_3, r_s, r_a, eps_t, eps_s}; }

  friend bool operator==(const ControlParams&, const ControlParams&) = default;
};

/// Positions of all active agents at one instant; index-aligned with ids.
struct Snapshot {
  std::vector<Vec2> positions;
  std::vector<std::int64_t> ids;
};

inline std::vector<std::size_t> neighbors(const Snapshot& snap, std::size_t i, double r_a, double r_s) {
  std::vector<std::size_t> out;
  const Vec2& p = snap.positions.at(i);
  const double reach = r_a + r_s;
  for (std::size_t j = 0; j < snap.positions.size(); ++j) {
    if (j == i) continue;
    if (distance(p, snap.positions[j]) <= reach) out.push_back(j);
  }
  return out;
}

namespace detail {

[[noreturn]] inline void outside_tube(const Vec2& p) {
  std::ostringstream os;
  os << "position " << p << " is outside the tube";
  throw Error(ErrorCode::OutsideTube, os.str());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Line-approach terms
// ---------------------------------------------------------------------------

inline Vec2 u1_basic(const TrapezoidTube& tube, const Vec2& p, double v, double r_a) {
  switch (classify(tube, p, r_a)) {
    case TubeRegion::Middle: return v * tube.t_c;
    case TubeRegion::Left: return v * tube.t_l;
    case TubeRegion::Right: return v * tube.t_r;
    case TubeRegion::Outside: break;
  }
  detail::outside_tube(p);
}

namespace detail {

// Blend weight toward the leg tangent. With k_t = 1 the band [r_a, k_t r_a]
// is empty and the side area is d < r_a, where the weight is 1.
inline double blend_weight(double d, double r_a, double k_t) {
  if (!(k_t > 1.0)) return d <= r_a ? 1.0 : 0.0;
  return sigma(d, r_a, k_t * r_a);
}

inline Vec2 blended_direction(double weight, const Vec2& t_side, const Vec2& t_c, double v) {
  const Vec2 blend = weight * (t_side - t_c) + t_c;
  const double n = norm(blend);
  if (!(n > 0.0)) throw Error(ErrorCode::DegenerateBlend, "blend of leg and axis tangents has zero norm");
  return (v / n) * blend;
}

}  // namespace detail

inline Vec2 u1_modified(const TrapezoidTube& tube, const Vec2& p, double v, double r_a) {
  switch (classify(tube, p, r_a)) {
    case TubeRegion::Middle: return v * tube.t_c;
    case TubeRegion::Left:
      return detail::blended_direction(detail::blend_weight(dist_left(tube, p), r_a, tube.k_t), tube.t_l, tube.t_c, v);
    case TubeRegion::Right:
      return detail::blended_direction(detail::blend_weight(dist_right(tube, p), r_a, tube.k_t), tube.t_r, tube.t_c, v);
    case TubeRegion::Outside: break;
  }
  detail::outside_tube(p);
}

// ---------------------------------------------------------------------------
// Agent avoidance
// ---------------------------------------------------------------------------

/// b_ij = -(dV_m/dx)(|p_ij|) / |p_ij|, non-negative.
inline double avoidance_gain(double dist, const ControlParams& params) {
  return -dv_n_dx(dist, params.agent_barrier()) / dist;
}

inline Vec2 u2_avoidance(const Snapshot& snap, std::size_t i, const ControlParams& params) {
  Vec2 u;
  const Vec2& p = snap.positions.at(i);
  for (std::size_t j : neighbors(snap, i, params.r_a, params.r_s)) {
    const Vec2 diff = p - snap.positions[j];
    const double d = norm(diff);
    if (d == 0.0) {
      std::ostringstream os;
      os << "agents " << snap.ids.at(i) << " and " << snap.ids.at(j) << " coincide at " << p;
      throw Error(ErrorCode::CoincidentAgents, os.str());
    }
    u += avoidance_gain(d, params) * diff;
  }
  return u;
}

// ---------------------------------------------------------------------------
// Tube-keeping: panel potentials on the extended legs
// ---------------------------------------------------------------------------

struct BoundaryPanels {
  PanelChain left;
  PanelChain right;
  double ext_factor{0.0};
};

/// Panel length on the leg itself; the upstream extension grows from it.
inline double boundary_panel_length(const ControlParams& params) { return 4.0 * params.r_a; }

/// Extended legs [p_el0, p_l1] and [p_er0, p_r1], with p_el0 = p_l1 - ext |p_l1 - p_l0| t_l.
inline BoundaryPanels make_boundary_panels(const TrapezoidTube& tube, const ControlParams& params) {
  const double left_len = params.ext_factor * distance(tube.p_l1, tube.p_l0);
  const double right_len = params.ext_factor * distance(tube.p_r1, tube.p_r0);
  const double h = boundary_panel_length(params);
  return {graded_chain(tube.p_l1 - left_len * tube.t_l, tube.p_l0, tube.p_l1, params.r_s, h),
          graded_chain(tube.p_r1 - right_len * tube.t_r, tube.p_r0, tube.p_r1, params.r_s, h), params.ext_factor};
}

/// Boundary barrier value used by the panel terms: V = -k_3 * phi. The
/// logarithm grows with distance, so the repulsive barrier is its negative.
inline double panel_barrier(const PanelChain& chain, const Vec2& p, double k_3) { return -k_3 * chain_phi(chain, p); }

/// -grad of the two panel barriers.
struct PanelTerms {
  Vec2 left;
  Vec2 right;
};

inline PanelTerms panel_terms(const BoundaryPanels& panels, const Vec2& p, double k_3) {
  return {k_3 * chain_grad(panels.left, p), k_3 * chain_grad(panels.right, p)};
}

inline Vec2 u34_panel(const TrapezoidTube& tube, const Vec2& p, const ControlParams& params) {
  if (!contains(tube, p)) detail::outside_tube(p);
  const auto t = panel_terms(make_boundary_panels(tube, params), p, params.k_3);
  return t.left + t.right;
}

/// Result of sampling the no-backward-push condition on a 20 x 20 grid.
struct DirL2Result {
  bool ok{true};
  double min_left{INFINITY};   // min over samples of t_c . (-grad V_tl)
  double min_right{INFINITY};  // min over samples of t_c . (-grad V_tr)
  Vec2 worst_point;
  int samples{0};
};

inline constexpr int kDirL2Grid = 20;

/// Cell-centred samples in tube coordinates; samples within r_s of a leg are
/// outside the barrier's operating range and skipped.
inline DirL2Result dirl2_check(const TrapezoidTube& tube, const ControlParams& params) {
  DirL2Result res;
  const auto panels = make_boundary_panels(tube, params);
  const double len = tube.length();
  for (int i = 0; i < kDirL2Grid; ++i) {
    const double s = len * (i + 0.5) / kDirL2Grid;
    const Vec2 a = tube.left_at(s);
    const Vec2 b = tube.right_at(s);
    for (int j = 0; j < kDirL2Grid; ++j) {
      const Vec2 p = a + ((j + 0.5) / kDirL2Grid) * (b - a);
      if (dist_left(tube, p) <= params.r_s + kLogGuard || dist_right(tube, p) <= params.r_s + kLogGuard) continue;
      const auto t = panel_terms(panels, p, params.k_3);
      const double l = dot(t.left, tube.t_c);
      const double r = dot(t.right, tube.t_c);
      ++res.samples;
      if (std::min(l, r) < std::min(res.min_left, res.min_right)) res.worst_point = p;
      res.min_left = std::min(res.min_left, l);
      res.min_right = std::min(res.min_right, r);
    }
  }
  res.ok = res.min_left >= 0.0 && res.min_right >= 0.0;
  return res;
}

inline constexpr int kMaxExtDoublings = 3;

/// Extension factor that passes the grid check, doubling up to three times.
inline double resolve_ext_factor(const TrapezoidTube& tube, ControlParams params) {
  for (int attempt = 0; attempt <= kMaxExtDoublings; ++attempt) {
    if (dirl2_check(tube, params).ok) return params.ext_factor;
    if (attempt < kMaxExtDoublings) params.ext_factor *= 2.0;
  }
  std::ostringstream os;
  os << "boundary panels push backward somewhere in the tube even with ext_factor = " << params.ext_factor;
  throw Error(ErrorCode::DirL2Violation, os.str());
}

// ---------------------------------------------------------------------------
// Tube-keeping: projected barrier terms
// ---------------------------------------------------------------------------

inline Vec2 project(const Vec2& n, const Vec2& t_c, WallProjection mode) {
  const Vec2 along = dot(t_c, n) * t_c;
  return mode == WallProjection::AlongTangent ? along : n - along;
}

struct ProjectedTerms {
  Vec2 left;
  Vec2 right;
};

inline ProjectedTerms projected_terms(const TrapezoidTube& tube, const Vec2& p, const ControlParams& params) {
  if (!contains(tube, p)) detail::outside_tube(p);
  const auto barrier = params.wall_barrier();
  const double gl = -dv_n_dx(dist_left(tube, p), barrier);
  const double gr = -dv_n_dx(dist_right(tube, p), barrier);
  return {gl * project(tube.n_l, tube.t_c, params.wall_projection),
          gr * project(tube.n_r, tube.t_c, params.wall_projection)};
}

inline Vec2 u34_projected(const TrapezoidTube& tube, const Vec2& p, const ControlParams& params) {
  const auto t = projected_terms(tube, p, params);
  return t.left + t.right;
}

// ---------------------------------------------------------------------------
// Composite command
// ---------------------------------------------------------------------------

struct CommandTerms {
  Vec2 u1;
  Vec2 u2;
  Vec2 u34;
  Vec2 command;
};

namespace detail {

// |u1| = v and |sat(.)| <= v'_max put the command norm in [v - v'_max, v + v'_max];
// rounding can overshoot those ends by a few ulps. Only such overshoots are pulled back.
inline Vec2 round_into_envelope(Vec2 c, double lo, double hi) {
  constexpr double kRoundingSlack = 1e-12;
  for (int k = 0; k < 8; ++k) {
    const double n = norm(c);
    if (n > hi && n <= hi * (1.0 + kRoundingSlack))
      c = std::nextafter(hi / n, 0.0) * c;
    else if (n < lo && n > 0.0 && n >= lo * (1.0 - kRoundingSlack))
      c = std::nextafter(lo / n, 2.0) * c;
    else
      break;
  }
  return c;
}

}  // namespace detail

/// Velocity field of one tube with its boundary panels prepared once.
class TubeController {
 public:
  TubeController(TrapezoidTube tube, ControlParams params, Variant variant)
      : tube_(std::move(tube)), params_(params), variant_(variant) {
    if (variant_ == Variant::Basic) panels_ = make_boundary_panels(tube_, params_);
  }

  [[nodiscard]] const TrapezoidTube& tube() const { return tube_; }
  [[nodiscard]] const ControlParams& params() const { return params_; }
  [[nodiscard]] Variant variant() const { return variant_; }
  [[nodiscard]] const std::optional<BoundaryPanels>& panels() const { return panels_; }

  [[nodiscard]] CommandTerms terms(const Snapshot& snap, std::size_t i) const {
    const Vec2& p = snap.positions.at(i);
    CommandTerms t;
    if (variant_ == Variant::Basic) {
      t.u1 = u1_basic(tube_, p, params_.v, params_.r_a);
      if (!contains(tube_, p)) detail::outside_tube(p);
      const auto pt = panel_terms(*panels_, p, params_.k_3);
      t.u34 = pt.left + pt.right;
    } else {
      t.u1 = u1_modified(tube_, p, params_.v, params_.r_a);
      t.u34 = u34_projected(tube_, p, params_);
    }
    t.u2 = u2_avoidance(snap, i, params_);
    t.command = detail::round_into_envelope(t.u1 + sat(t.u2 + t.u34, params_.v_max_prime),
                                            params_.v - params_.v_max_prime, params_.v + params_.v_max_prime);
    return t;
  }

  [[nodiscard]] Vec2 command(const Snapshot& snap, std::size_t i) const { return terms(snap, i).command; }

 private:
  TrapezoidTube tube_;
  ControlParams params_;
  Variant variant_;
  std::optional<BoundaryPanels> panels_;
};

/// u1 + sat(u2 + u3 + u4, v'_max). Feasibility is assumed to be validated.
inline Vec2 velocity_command(const TrapezoidTube& tube, const Snapshot& snap, std::size_t i,
                             const ControlParams& params, Variant variant = Variant::Modified) {
  return TubeController(tube, params, variant).command(snap, i);
}

// ---------------------------------------------------------------------------
// Feasibility report
// ---------------------------------------------------------------------------

struct CheckItem {
  std::string name;
  bool pass{false};
  double lhs{0.0};
  double rhs{0.0};
  std::string detail;
  bool boundary{false};  // failed only because a strict inequality holds with equality
};

/// Passed, or failed only at the equality boundary of a strict inequality.
inline bool admissible(const CheckItem& c) { return c.pass || c.boundary; }

struct FeasibilityReport {
  std::vector<CheckItem> items;
  double theta_l{0.0};      // rad, angle between t_l and t_c
  double theta_r{0.0};      // rad
  double theta_bound{0.0};  // rad, arccos(1 - v'^2 / (2 v^2))
  std::optional<double> ext_factor;  // resolved, panel variant only

  [[nodiscard]] bool ok() const {
    return std::all_of(items.begin(), items.end(), [](const CheckItem& c) { return c.pass; });
  }
  [[nodiscard]] bool admissible() const {
    return std::all_of(items.begin(), items.end(), [](const CheckItem& c) { return vtube::admissible(c); });
  }
  [[nodiscard]] const CheckItem* find(const std::string& name) const {
    for (const auto& c : items)
      if (c.name == name) return &c;
    return nullptr;
  }
};

/// arccos(1 - v'^2 / (2 v^2)); pi when every angle satisfies the bound.
inline double angle_bound(double v, double v_max_prime) {
  const double c = 1.0 - v_max_prime * v_max_prime / (2.0 * v * v);
  return c <= -1.0 ? std::numbers::pi : std::acos(c);
}

inline double angle_between_unit(const Vec2& a, const Vec2& b) { return std::acos(std::clamp(dot(a, b), -1.0, 1.0)); }

/// Speed constraints and parameter relations independent of any tube.
inline std::vector<CheckItem> parameter_checks(const ControlParams& p) {
  std::vector<CheckItem> out;
  const double upper = p.v + p.v_max_prime;
  const double lower = p.v - p.v_max_prime;
  out.push_back({"speed_upper (v + v'_max < v_max)", upper < p.v_max, upper, p.v_max, "", upper == p.v_max});
  out.push_back({"speed_lower (v - v'_max > v_min)", lower > p.v_min, lower, p.v_min, "", lower == p.v_min});
  out.push_back({"radii (r_a > r_s > 0)", p.r_a > p.r_s && p.r_s > 0.0, p.r_a, p.r_s, ""});
  out.push_back({"k_t >= 1", p.k_t >= 1.0, p.k_t, 1.0, ""});
  out.push_back({"gains (v, v'_max, k_2, k_3 > 0)", p.v > 0.0 && p.v_max_prime > 0.0 && p.k_2 > 0.0 && p.k_3 > 0.0,
                 0.0, 0.0, ""});
  out.push_back({"epsilons (eps_m, eps_t, eps_0 > 0; eps_s small)",
                 p.eps_m > 0.0 && p.eps_t > 0.0 && p.eps_0 > 0.0 && p.eps_s > 0.0 && s_breaks(p.eps_s).x1 > 0.0, 0.0,
                 0.0, ""});
  return out;
}

/// Tube-dependent conditions: angle constraints on each non-empty side area,
/// the long/wide-enough condition and, for the panel variant, the grid check.
inline std::vector<CheckItem> tube_checks(const TrapezoidTube& tube, const ControlParams& p, Variant variant,
                                          FeasibilityReport* report = nullptr) {
  std::vector<CheckItem> out;
  const double theta_l = angle_between_unit(tube.t_l, tube.t_c);
  const double theta_r = angle_between_unit(tube.t_r, tube.t_c);
  const double bound = angle_bound(p.v, p.v_max_prime);
  std::ostringstream angles;
  angles << "theta_l=" << theta_l * 180.0 / std::numbers::pi << "deg theta_r=" << theta_r * 180.0 / std::numbers::pi
         << "deg bound=" << bound * 180.0 / std::numbers::pi << "deg";

  if (tube.left_converging()) {
    const double lhs = p.v * norm(tube.t_c - tube.t_l);
    out.push_back({"angle_left (v|t_c - t_l| < v'_max)", lhs < p.v_max_prime, lhs, p.v_max_prime, angles.str()});
  }
  if (tube.right_converging()) {
    const double lhs = p.v * norm(tube.t_c - tube.t_r);
    out.push_back({"angle_right (v|t_c - t_r| < v'_max)", lhs < p.v_max_prime, lhs, p.v_max_prime, angles.str()});
  }

  const auto rc = region_check(tube, p.r_a);
  {
    std::ostringstream os;
    os << "length=" << rc.length << " required_width=" << rc.required_width << " base_widths=[" << rc.min_base_width
       << ", " << rc.max_base_width << "]";
    std::string why;
    if (!rc.long_enough) why += " too short;";
    if (!rc.middle_nonempty) why += " middle area empty;";
    if (!rc.left_right_disjoint) why += " left and right areas overlap;";
    out.push_back({"long_and_wide_enough", rc.ok(), rc.length, 2.0 * p.r_a, os.str() + why});
  }

  std::optional<double> ext;
  if (variant == Variant::Basic) {
    try {
      ext = resolve_ext_factor(tube, p);
      ControlParams resolved = p;
      resolved.ext_factor = *ext;
      const auto r = dirl2_check(tube, resolved);
      std::ostringstream os;
      os << "ext_factor=" << *ext << " samples=" << r.samples;
      out.push_back({"panel_direction (no backward push)", true, std::min(r.min_left, r.min_right), 0.0, os.str()});
    } catch (const Error& e) {
      out.push_back({"panel_direction (no backward push)", false, 0.0, 0.0, e.what()});
    }
  }

  if (report) {
    report->theta_l = theta_l;
    report->theta_r = theta_r;
    report->theta_bound = bound;
    report->ext_factor = ext;
  }
  return out;
}

inline FeasibilityReport validate_feasibility(const TrapezoidTube& tube, const ControlParams& params,
                                              Variant variant = Variant::Modified) {
  FeasibilityReport rep;
  rep.items = parameter_checks(params);
  auto t = tube_checks(tube, params, variant, &rep);
  rep.items.insert(rep.items.end(), t.begin(), t.end());
  return rep;
}

}  // namespace vtube
