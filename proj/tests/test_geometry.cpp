#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "vtube/geometry.hpp"

namespace vtube {
namespace {

using test::converging_tube;
using test::rect_tube;

void expect_vec(const Vec2& a, const Vec2& b, double tol = 1e-12) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
}

TEST(BuildTube, RectangleFrame) {
  const auto t = rect_tube();
  expect_vec(t.t_c, {1, 0});
  expect_vec(t.t_l, {1, 0});
  expect_vec(t.t_r, {1, 0});
  expect_vec(t.n_l, {0, -1});
  expect_vec(t.n_r, {0, 1});
  EXPECT_FALSE(t.left_converging());
  EXPECT_FALSE(t.right_converging());
}

TEST(BuildTube, ConvergingFrame) {
  const auto t = converging_tube();
  expect_vec(t.t_l, Vec2{10, -1} / std::sqrt(101.0));
  EXPECT_NEAR(dot(t.t_c, t.n_l), -1.0 / std::sqrt(101.0), 1e-12);
  EXPECT_TRUE(t.left_converging());
  EXPECT_TRUE(t.right_converging());
}

TEST(BuildTube, RejectsDegenerateInput) {
  EXPECT_VTUBE_ERROR(build_tube({0, 1}, {0, 1}, {0, -1}, {10, -1}), ErrorCode::DegenerateTube);
  EXPECT_VTUBE_ERROR(build_tube({0, 1}, {10, 1}, {0, 1}, {10, -1}), ErrorCode::DegenerateTube);
  EXPECT_VTUBE_ERROR(build_tube({0, 1}, {11, 1}, {0, -1}, {10, -1}), ErrorCode::DegenerateTube);
  EXPECT_VTUBE_ERROR(build_tube({0, 1}, {10, 1}, {0, -1}, {10, -1}, 0.5), ErrorCode::DegenerateTube);
  EXPECT_VTUBE_ERROR(build_tube({0, 1}, {10, 1}, {0, -1}, {10, std::nan("")}), ErrorCode::DegenerateTube);
}

TEST(BuildTube, FrameInvariantsOnRandomTubes) {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 500; ++n) {
    const auto t = test::random_tube(rng, 1.0);
    for (const Vec2& u : {t.t_c, t.t_l, t.t_r, t.n_c, t.n_l, t.n_r}) EXPECT_NEAR(norm(u), 1.0, 1e-12);
    EXPECT_NEAR(dot(t.n_l, t.t_l), 0.0, 1e-12);
    EXPECT_NEAR(dot(t.n_r, t.t_r), 0.0, 1e-12);
    EXPECT_NEAR(dot(t.n_c, t.t_c), 0.0, 1e-12);
    EXPECT_GT(dot(t.t_l, t.t_c), 0.0);
    EXPECT_GT(dot(t.t_r, t.t_c), 0.0);
    // Independent orientation oracle: stepping off the leg midpoints along
    // the normals must land inside the quadrilateral.
    const Vec2 ml = 0.5 * (t.p_l0 + t.p_l1), mr = 0.5 * (t.p_r0 + t.p_r1);
    EXPECT_TRUE(contains(t, ml + 1e-3 * t.n_l));
    EXPECT_FALSE(contains(t, ml - 1e-3 * t.n_l));
    EXPECT_TRUE(contains(t, mr + 1e-3 * t.n_r));
    EXPECT_FALSE(contains(t, mr - 1e-3 * t.n_r));
    const Vec2 g = t.centroid();
    EXPECT_GT(dot(t.n_l, g - t.p_l1), 0.0);
    EXPECT_GT(dot(t.n_r, g - t.p_r1), 0.0);
  }
}

TEST(BuildTube, VertexOrderIndependentOfLegLabelling) {
  // Swapping which leg is called left mirrors the normals but keeps t_c.
  const auto a = build_tube({0, 2}, {10, 1}, {0, -2}, {10, -1});
  const auto b = build_tube({0, -2}, {10, -1}, {0, 2}, {10, 1});
  expect_vec(a.t_c, b.t_c);
  expect_vec(a.n_l, b.n_r);
}

TEST(Distances, Rectangle) {
  const auto t = rect_tube();
  EXPECT_DOUBLE_EQ(dist_left(t, {5, 0}), 1.0);
  EXPECT_DOUBLE_EQ(dist_right(t, {5, 0}), 1.0);
  EXPECT_DOUBLE_EQ(dist_left(t, {5, 1}), 0.0);
  EXPECT_DOUBLE_EQ(dist_left(t, {5, 1.5}), -0.5);  // signed outside
}

TEST(Distances, ConvergingMatchesPointLineOracle) {
  const auto t = converging_tube();
  EXPECT_NEAR(dist_left(t, {5, 0}), 15.0 / std::sqrt(101.0), 1e-12);
  std::mt19937_64 rng(3);
  for (int n = 0; n < 1000; ++n) {
    const Vec2 p = test::random_point_in(t, rng);
    // |cross| / |ab| for the line through the leg vertices.
    const double oracle_l = std::abs(cross(t.p_l1 - t.p_l0, p - t.p_l0)) / norm(t.p_l1 - t.p_l0);
    const double oracle_r = std::abs(cross(t.p_r1 - t.p_r0, p - t.p_r0)) / norm(t.p_r1 - t.p_r0);
    EXPECT_NEAR(dist_left(t, p), oracle_l, 1e-12);
    EXPECT_NEAR(dist_right(t, p), oracle_r, 1e-12);
  }
}

TEST(Contains, Examples) {
  const auto t = rect_tube();
  EXPECT_TRUE(contains(t, {5, 0}));
  EXPECT_FALSE(contains(t, {11, 0}));
  EXPECT_TRUE(contains(t, {5, 1}));
  EXPECT_TRUE(contains(t, {0, 0}));
  EXPECT_TRUE(contains(t, {10, -1}));
  EXPECT_FALSE(contains(t, {-1e-9, 0}));
}

TEST(Contains, InvariantUnderRigidMotion) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (int n = 0; n < 200; ++n) {
    const auto base = test::random_tube(rng, 1.0);
    const auto g = test::random_rigid(rng);
    const auto moved = build_tube(g(base.p_l0), g(base.p_l1), g(base.p_r0), g(base.p_r1));
    for (int m = 0; m < 200; ++m) {
      const Vec2 p = base.centroid() + base.diameter() * Vec2{u(rng), u(rng)};
      if (std::abs(test::tube_margin(base, p)) < 1e-9) continue;
      EXPECT_EQ(contains(base, p), contains(moved, g(p)));
    }
  }
}

TEST(Contains, SampledInteriorHasNonNegativeDistances) {
  std::mt19937_64 rng(7);
  for (int n = 0; n < 10; ++n) {
    const auto t = test::random_tube(rng, 1.0);
    for (int m = 0; m < 10000; ++m) {
      const Vec2 p = test::random_point_in(t, rng);
      ASSERT_GE(dist_left(t, p), 0.0);
      ASSERT_GE(dist_right(t, p), 0.0);
      ASSERT_NE(classify(t, p, 0.1), TubeRegion::Outside);
    }
  }
}

TEST(Contains, LegPointsHaveZeroDistance) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 200; ++n) {
    const auto t = test::random_tube(rng, 1.0);
    const double a = u(rng);
    const Vec2 pl = t.p_l0 + a * (t.p_l1 - t.p_l0);
    const Vec2 pr = t.p_r0 + a * (t.p_r1 - t.p_r0);
    const double scale = std::max(1.0, norm(pl));
    EXPECT_NEAR(dist_left(t, pl), 0.0, 1e-12 * scale);
    EXPECT_NEAR(dist_right(t, pr), 0.0, 1e-12 * scale);
  }
}

TEST(Classify, RectangleIsAllMiddle) {
  const auto t = rect_tube();
  for (double x = 0.0; x <= 10.0; x += 0.5)
    for (double y = -1.0; y <= 1.0; y += 0.25) EXPECT_EQ(classify(t, {x, y}, 0.5), TubeRegion::Middle);
  EXPECT_EQ(classify(t, {12, 0}, 0.5), TubeRegion::Outside);
}

TEST(Classify, ConvergingSideAreas) {
  const auto t = converging_tube(1.0);
  const Vec2 pl = t.left_at(5.0) + 0.2 * t.n_l;
  EXPECT_NEAR(dist_left(t, pl), 0.2, 1e-12);
  EXPECT_EQ(classify(t, pl, 0.5), TubeRegion::Left);
  EXPECT_EQ(classify(t, t.right_at(5.0) + 0.2 * t.n_r, 0.5), TubeRegion::Right);
  EXPECT_EQ(classify(t, {5, 0}, 0.5), TubeRegion::Middle);
}

TEST(Classify, NarrowTubeIsAmbiguous) {
  const auto t = build_tube({0, 0.6}, {10, 0.4}, {0, -0.6}, {10, -0.4}, 1.0);
  EXPECT_VTUBE_ERROR(classify(t, {5, 0}, 0.5), ErrorCode::AmbiguousRegion);
  EXPECT_FALSE(assumption3_check(t, 0.5));
}

TEST(Classify, AreasAreExclusiveWhenTubeIsWideEnough) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int n = 0; n < 100; ++n) {
    const auto t = test::random_tube(rng, 1.0 + u(rng), 0.6, 3.0, 8.0);
    const double r_a = 0.2 + 0.8 * u(rng);
    if (!assumption3_check(t, r_a)) continue;
    ++checked;
    for (int m = 0; m < 1000; ++m) {
      const Vec2 p = test::random_point_in(t, rng);
      const bool l = t.left_converging() && dist_left(t, p) < t.k_t * r_a;
      const bool r = t.right_converging() && dist_right(t, p) < t.k_t * r_a;
      ASSERT_FALSE(l && r);
      const auto region = classify(t, p, r_a);
      EXPECT_EQ(region == TubeRegion::Left, l);
      EXPECT_EQ(region == TubeRegion::Right, r);
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(FinishingLine, Examples) {
  const auto t = rect_tube();
  EXPECT_TRUE(finishing_reached(t, {10, 0}, 0.01));
  EXPECT_TRUE(finishing_reached(t, {9.995, 0}, 0.01));
  EXPECT_FALSE(finishing_reached(t, {5, 0}, 0.01));
  EXPECT_FALSE(finishing_reached(t, {9.98, 0}, 0.01));
}

TEST(LongAndWide, Examples) {
  const auto swarm = build_tube({0, 9.5}, {22.35, 7}, {0, -9.5}, {22.35, -7}, 2.0);
  EXPECT_TRUE(assumption3_check(swarm, 0.5));
  EXPECT_FALSE(assumption3_check(build_tube({0, 1}, {0.9, 1}, {0, -1}, {0.9, -1}), 0.5));
  EXPECT_FALSE(assumption3_check(build_tube({0, 0.2}, {5, 0.15}, {0, -0.2}, {5, -0.15}, 1.0), 0.5));
}

TEST(LongAndWide, AnalyticDecisionMatchesSampling) {
  // Middle area non-empty iff some sampled point is outside both side bands.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 150; ++n) {
    const auto t = test::random_tube(rng, 1.0, 0.6, 0.5, 3.0, 3.0, 6.0);
    const double r_a = 0.1 + 0.5 * u(rng);
    const auto rc = region_check(t, r_a);
    double best_margin = -INFINITY;  // of the middle area
    bool overlap = false;
    for (int m = 0; m < 4000; ++m) {
      const Vec2 p = test::random_point_in(t, rng);
      const double ml = t.left_converging() ? dist_left(t, p) - r_a : INFINITY;
      const double mr = t.right_converging() ? dist_right(t, p) - r_a : INFINITY;
      best_margin = std::max(best_margin, std::min(ml, mr));
      if (ml < -1e-3 && mr < -1e-3) overlap = true;
    }
    if (best_margin > 1e-2) {
      EXPECT_TRUE(rc.middle_nonempty);
    }
    if (overlap) {
      EXPECT_FALSE(rc.left_right_disjoint);
    }
  }
}

}  // namespace
}  // namespace vtube
