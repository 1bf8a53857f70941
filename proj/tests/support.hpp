#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "vtube/controller.hpp"
#include "vtube/geometry.hpp"
#include "vtube/partition.hpp"

namespace vtube::test {

inline std::string scenario_path(const std::string& name) { return std::string(VTUBE_SCENARIO_DIR) + "/" + name; }

/// Speeds and radii of the 120-agent five-obstacle run.
inline ControlParams swarm_params() {
  ControlParams p;
  p.v = 2.0;
  p.v_max_prime = 1.5;
  p.v_min = 0.5;
  p.v_max = 3.5;
  p.r_s = 0.25;
  p.r_a = 0.5;
  p.k_t = 2.0;
  return p;
}

inline TrapezoidTube rect_tube() { return build_tube({0, 1}, {10, 1}, {0, -1}, {10, -1}); }
inline TrapezoidTube converging_tube(double k_t = 1.0) { return build_tube({0, 2}, {10, 1}, {0, -2}, {10, -1}, k_t); }

struct Rigid {
  double angle{0.0};
  Vec2 shift;
  [[nodiscard]] Vec2 operator()(const Vec2& p) const {
    const double c = std::cos(angle), s = std::sin(angle);
    return Vec2{c * p.x - s * p.y, s * p.x + c * p.y} + shift;
  }
  [[nodiscard]] Vec2 rotate(const Vec2& d) const {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * d.x - s * d.y, s * d.x + c * d.y};
  }
};

inline Rigid random_rigid(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi), off(-50.0, 50.0);
  return {ang(rng), {off(rng), off(rng)}};
}

/// Converging, possibly asymmetric tube in a random pose whose leg angles
/// stay below `max_angle` (rad).
inline TrapezoidTube random_tube(std::mt19937_64& rng, double k_t, double max_angle = 0.6, double min_width = 4.0,
                                 double max_width = 10.0, double min_len = 8.0, double max_len = 20.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double w0 = min_width + (max_width - min_width) * u(rng);
  const double len = min_len + (max_len - min_len) * u(rng);
  const double tl = std::tan(max_angle * u(rng));
  const double tr = std::tan(max_angle * u(rng));
  double dl = tl * len, dr = tr * len;
  const double shrink_cap = 0.7 * w0;
  if (dl + dr > shrink_cap) {
    const double f = shrink_cap / (dl + dr);
    dl *= f;
    dr *= f;
  }
  const Rigid g = random_rigid(rng);
  return build_tube(g({0, w0 / 2}), g({len, w0 / 2 - dl}), g({0, -w0 / 2}), g({len, -w0 / 2 + dr}), k_t);
}

/// Uniform sample of the tube by rejection from its bounding box.
inline Vec2 random_point_in(const TrapezoidTube& t, std::mt19937_64& rng) {
  Vec2 lo = t.p_l0, hi = t.p_l0;
  for (const Vec2& v : t.polygon()) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
  }
  std::uniform_real_distribution<double> ux(lo.x, hi.x), uy(lo.y, hi.y);
  for (;;) {
    const Vec2 p{ux(rng), uy(rng)};
    if (contains(t, p)) return p;
  }
}

/// Signed margin of p inside the tube (min over the four half-planes).
inline double tube_margin(const TrapezoidTube& t, const Vec2& p) {
  return std::min({dist_left(t, p), dist_right(t, p), t.along(p), t.length() - t.along(p)});
}

/// Random obstacles in a random tube whose partition builds and whose
/// sub-tubes are all admissible. Returns false when the draw is rejected.
inline bool random_partition_scenario(std::mt19937_64& rng, const ControlParams& params, TrapezoidTube& tube,
                                      std::vector<Obstacle>& obstacles, double& beta) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  tube = random_tube(rng, params.k_t, 0.15, 9.0, 14.0, 14.0, 26.0);
  const int P = 1 + static_cast<int>(u(rng) * 3.0);
  beta = (25.0 + 15.0 * u(rng)) * std::numbers::pi / 180.0;
  obstacles.clear();
  const double len = tube.length();
  const Vec2 mid0 = 0.5 * (tube.p_l0 + tube.p_r0);
  const Vec2 mid1 = 0.5 * (tube.p_l1 + tube.p_r1);
  for (int k = 0; k < P; ++k) {
    const double s = (k + 0.5 + 0.3 * (u(rng) - 0.5)) / P;
    const Vec2 c = mid0 + s * (mid1 - mid0);
    const double w = tube.width_at(s * len);
    const Vec2 center = c + (0.2 * w * (u(rng) - 0.5)) * tube.n_c;
    obstacles.push_back({center, 0.3 + 0.5 * u(rng)});
  }
  try {
    const auto part = build_partition(tube, obstacles, params, beta);
    for (const auto& r : validate_partition(part, params, Variant::Modified))
      if (!r.report.admissible()) return false;
  } catch (const Error&) {
    return false;
  }
  return true;
}

}  // namespace vtube::test

#define EXPECT_VTUBE_ERROR(stmt, expected_code)                                   \
  do {                                                                            \
    try {                                                                         \
      (void)(stmt);                                                               \
      ADD_FAILURE() << "expected " << ::vtube::to_string(expected_code);          \
    } catch (const ::vtube::Error& e_) {                                          \
      EXPECT_EQ(e_.code(), expected_code) << e_.what();                           \
    }                                                                             \
  } while (0)
