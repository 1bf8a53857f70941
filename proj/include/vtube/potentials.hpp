#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "vtube/errors.hpp"
#include "vtube/vec2.hpp"

namespace vtube {

// ---------------------------------------------------------------------------
// Saturation
// ---------------------------------------------------------------------------

/// Scale factor that brings x inside the ball of radius a; in (0, 1].
inline double kappa(const Vec2& x, double a) {
  const double n = norm(x);
  return n <= a ? 1.0 : a / n;
}

inline Vec2 sat(const Vec2& x, double a) {
  const double n = norm(x);
  if (n <= a) return x;
  return (a / n) * x;
}

// ---------------------------------------------------------------------------
// Smooth transition functions
// ---------------------------------------------------------------------------

/// C1 step from 1 (x <= d1) down to 0 (x >= d2). Between the plateaus this is
/// the cubic A x^3 + B x^2 + C x + D with zero slope at both ends, written in
/// the normalized variable t = (x - d1) / (d2 - d1).
inline double sigma(double x, double d1, double d2) {
  if (!(d1 < d2)) throw Error(ErrorCode::InvalidInterval, "sigma requires d1 < d2");
  if (x <= d1) return 1.0;
  if (x >= d2) return 0.0;
  const double t = (x - d1) / (d2 - d1);
  return 1.0 - t * t * (3.0 - 2.0 * t);
}

inline double sigma_prime(double x, double d1, double d2) {
  if (!(d1 < d2)) throw Error(ErrorCode::InvalidInterval, "sigma requires d1 < d2");
  if (x <= d1 || x >= d2) return 0.0;
  const double t = (x - d1) / (d2 - d1);
  return -6.0 * t * (1.0 - t) / (d2 - d1);
}

/// Breakpoints of s(): identity on [0, x1], circular fillet on [x1, x2], 1 after.
struct SBreaks {
  double x1;
  double x2;
};

inline SBreaks s_breaks(double eps_s) {
  // tan(67.5 deg) = 1 + sqrt(2); sin(45 deg) = 1 / sqrt(2)
  const double x2 = 1.0 + eps_s / (1.0 + std::numbers::sqrt2);
  return {x2 - eps_s / std::numbers::sqrt2, x2};
}

inline double s_fun(double x, double eps_s) {
  const auto [x1, x2] = s_breaks(eps_s);
  if (x <= x1) return x;
  if (x >= x2) return 1.0;
  const double dx = x - x2;
  return (1.0 - eps_s) + std::sqrt(std::max(0.0, eps_s * eps_s - dx * dx));
}

/// Derivative of s(); taken as 0 at x2 where the fillet meets the plateau.
inline double s_prime(double x, double eps_s) {
  const auto [x1, x2] = s_breaks(eps_s);
  if (x <= x1) return 1.0;
  if (x >= x2) return 0.0;
  const double dx = x - x2;
  const double root = std::sqrt(std::max(0.0, eps_s * eps_s - dx * dx));
  return root > 0.0 ? -dx / root : 0.0;
}

// ---------------------------------------------------------------------------
// Nominal Lyapunov-like barrier
// ---------------------------------------------------------------------------

struct BarrierParams {
  double k{1.0};
  double d1{0.0};
  double d2{0.0};
  double eps{1e-6};
  double eps_s{1e-6};

  void validate() const {
    std::ostringstream os;
    if (!(k > 0.0)) os << "k must be > 0; ";
    if (!(d1 > 0.0 && d1 < d2)) os << "need 0 < d1 < d2; ";
    if (!(eps > 0.0)) os << "eps must be > 0; ";
    if (!(eps_s > 0.0) || !(s_breaks(eps_s).x1 > 0.0)) os << "eps_s must be > 0 and small enough that x1 > 0; ";
    if (!os.str().empty()) throw Error(ErrorCode::InvalidInterval, os.str());
  }
};

namespace detail {

inline void require_positive(double x) {
  if (!(x > 0.0)) {
    std::ostringstream os;
    os << "barrier argument must be > 0, got " << x;
    throw Error(ErrorCode::NonpositiveInput, os.str());
  }
}

// (1 + eps) x - d1 s(x / d1); bounded below by eps x since s(y) <= y.
inline double barrier_denominator(double x, const BarrierParams& p) {
  return (1.0 + p.eps) * x - p.d1 * s_fun(x / p.d1, p.eps_s);
}

}  // namespace detail

inline double v_n(double x, const BarrierParams& p) {
  detail::require_positive(x);
  if (x >= p.d2) return 0.0;
  return p.k * sigma(x, p.d1, p.d2) / detail::barrier_denominator(x, p);
}

inline double dv_n_dx(double x, const BarrierParams& p) {
  detail::require_positive(x);
  if (x >= p.d2) return 0.0;
  const double num = sigma(x, p.d1, p.d2);
  const double num_d = sigma_prime(x, p.d1, p.d2);
  const double den = detail::barrier_denominator(x, p);
  const double den_d = (1.0 + p.eps) - s_prime(x / p.d1, p.eps_s);
  return p.k * (num_d * den - num * den_d) / (den * den);
}

// ---------------------------------------------------------------------------
// Single-panel logarithmic potential
// ---------------------------------------------------------------------------

/// Minimum clearance (distance minus threshold) for panel evaluation.
inline constexpr double kLogGuard = 1e-6;
inline constexpr unsigned kPanelNodes = 32;

struct Panel {
  Vec2 a;
  Vec2 b;
  double r{0.0};
};

namespace detail {

struct PanelRule {
  std::array<double, kPanelNodes> node{};    // on [-1, 1], ascending
  std::array<double, kPanelNodes> weight{};
};

inline const PanelRule& panel_rule() {
  static const PanelRule rule = [] {
    using G = boost::math::quadrature::gauss<double, kPanelNodes>;
    const auto& xs = G::abscissa();  // non-negative half
    const auto& ws = G::weights();
    PanelRule r;
    const std::size_t half = xs.size();
    for (std::size_t i = 0; i < half; ++i) {
      r.node[half - 1 - i] = -xs[i];
      r.weight[half - 1 - i] = ws[i];
      r.node[half + i] = xs[i];
      r.weight[half + i] = ws[i];
    }
    return r;
  }();
  return rule;
}

inline void check_panel_domain(const Panel& panel, const Vec2& p) {
  const double clearance = distance_to_segment(p, panel.a, panel.b) - panel.r;
  if (!(clearance > kLogGuard)) {
    std::ostringstream os;
    os << "point " << p << " is within " << clearance << " m of the panel threshold";
    throw Error(ErrorCode::LogDomainViolation, os.str());
  }
}

template <class F>
void for_each_panel_node(const Panel& panel, F&& f) {
  const Vec2 ab = panel.b - panel.a;
  const double len = norm(ab);
  const Vec2 dir = ab / len;
  const auto& rule = panel_rule();
  const double half = 0.5 * len;
  for (unsigned k = 0; k < kPanelNodes; ++k) f(panel.a + (half * (1.0 + rule.node[k])) * dir, half * rule.weight[k]);
}

}  // namespace detail

/// Integral over the panel of ln(|p - q| - r), 32-node Gauss-Legendre.
inline double panel_phi(const Panel& panel, const Vec2& p) {
  detail::check_panel_domain(panel, p);
  double sum = 0.0;
  detail::for_each_panel_node(panel, [&](const Vec2& q, double w) { sum += w * std::log(distance(p, q) - panel.r); });
  return sum;
}

/// Gradient of panel_phi with respect to p, same nodes.
inline Vec2 panel_grad(const Panel& panel, const Vec2& p) {
  detail::check_panel_domain(panel, p);
  Vec2 g;
  detail::for_each_panel_node(panel, [&](const Vec2& q, double w) {
    const Vec2 diff = p - q;
    const double d = norm(diff);
    g += (w / (d * (d - panel.r))) * diff;
  });
  return g;
}

// ---------------------------------------------------------------------------
// Chains of panels
// ---------------------------------------------------------------------------

/// Consecutive panels covering one boundary segment; the integral over the
/// segment is the sum over the panels, each with the fixed 32-node rule.
struct PanelChain {
  std::vector<Panel> panels;

  [[nodiscard]] Vec2 start() const { return panels.front().a; }
  [[nodiscard]] Vec2 end() const { return panels.back().b; }
  [[nodiscard]] double length() const {
    double l = 0.0;
    for (const auto& p : panels) l += norm(p.b - p.a);
    return l;
  }
};

/// Chain from `far` to `end` through `near`: [near, end] is cut into equal
/// panels no longer than h, and [far, near] into panels whose lengths double
/// moving away from `near`. The layout depends only on the geometry.
inline PanelChain graded_chain(const Vec2& far, const Vec2& near, const Vec2& end, double r, double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::NonpositiveInput, "panel length must be > 0");
  PanelChain c;
  const double ext = distance(far, near);
  if (ext > 0.0) {
    const Vec2 dir = (near - far) / ext;  // toward near
    std::vector<double> cuts{0.0};        // distances upstream of near
    double step = h;
    while (cuts.back() + step < ext) {
      cuts.push_back(cuts.back() + step);
      step *= 2.0;
    }
    cuts.push_back(ext);
    for (std::size_t k = cuts.size() - 1; k > 0; --k)
      c.panels.push_back({near - cuts[k] * dir, near - cuts[k - 1] * dir, r});
  }
  const double len = distance(near, end);
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(len / h)));
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 a = near + (static_cast<double>(k) / static_cast<double>(n)) * (end - near);
    const Vec2 b = k + 1 == n ? end : near + (static_cast<double>(k + 1) / static_cast<double>(n)) * (end - near);
    c.panels.push_back({a, b, r});
  }
  return c;
}

inline double chain_phi(const PanelChain& chain, const Vec2& p) {
  double sum = 0.0;
  for (const auto& panel : chain.panels) sum += panel_phi(panel, p);
  return sum;
}

inline Vec2 chain_grad(const PanelChain& chain, const Vec2& p) {
  Vec2 g;
  for (const auto& panel : chain.panels) g += panel_grad(panel, p);
  return g;
}

}  // namespace vtube
