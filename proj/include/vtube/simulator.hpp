#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "vtube/controller.hpp"
#include "vtube/errors.hpp"
#include "vtube/geometry.hpp"
#include "vtube/io_format.hpp"
#include "vtube/partition.hpp"
#include "vtube/potentials.hpp"
#include "vtube/vec2.hpp"

namespace vtube {

struct AgentState {
  std::int64_t id{0};
  Vec2 p;
  Vec2 v_c;  // last command
  bool active{true};
  std::size_t sub_tube{0};
  std::optional<double> removed_at;
};

struct SimConfig {
  double dt{0.001};
  double t_end{14.0};
  TrapezoidTube tube;
  std::vector<Obstacle> obstacles;
  std::vector<Vec2> initial;
  ControlParams params;
  double beta{30.0 * std::numbers::pi / 180.0};  // rad
  std::uint64_t seed{1};
  Variant variant{Variant::Modified};
};

struct StepMetrics {
  double t{0.0};
  double min_pair_dist{std::numeric_limits<double>::infinity()};
  double min_obstacle_dist{std::numeric_limits<double>::infinity()};  // centre to centre
  double min_d_tl{std::numeric_limits<double>::infinity()};
  double min_d_tr{std::numeric_limits<double>::infinity()};
  double min_speed{std::numeric_limits<double>::infinity()};
  double max_speed{0.0};
  std::size_t n_active{0};
  double V_total{0.0};
  double dV{0.0};
  // Smallest centre distance minus (r_o,k + r_s); not part of the trace columns.
  double min_obstacle_clearance{std::numeric_limits<double>::infinity()};
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationReport {
  std::vector<CheckItem> items;
  [[nodiscard]] bool ok() const {
    return std::all_of(items.begin(), items.end(), [](const CheckItem& c) { return c.pass; });
  }
};

/// Initial discs of radius r_s inside the tube, pairwise disjoint and clear of all obstacles.
inline ValidationReport validate_initial(const SimConfig& cfg) {
  ValidationReport rep;
  const double r_s = cfg.params.r_s;
  const auto& tube = cfg.tube;
  if (!(cfg.dt > 0.0)) rep.items.push_back({"dt > 0", false, cfg.dt, 0.0, ""});
  if (!(cfg.t_end >= 0.0)) rep.items.push_back({"t_end >= 0", false, cfg.t_end, 0.0, ""});
  for (std::size_t i = 0; i < cfg.initial.size(); ++i) {
    const Vec2& p = cfg.initial[i];
    const double clearance = std::min({dist_left(tube, p), dist_right(tube, p), tube.along(p), tube.length() - tube.along(p)});
    if (!is_finite(p) || !(clearance >= r_s)) {
      std::ostringstream os;
      os << "agent " << i << " at " << p << ": disc leaves the tube (clearance " << clearance << ")";
      rep.items.push_back({"agent_inside_tube", false, clearance, r_s, os.str()});
    }
    for (std::size_t j = i + 1; j < cfg.initial.size(); ++j) {
      const double d = distance(p, cfg.initial[j]);
      if (!(d > 2.0 * r_s)) {
        std::ostringstream os;
        os << "agents " << i << " and " << j << " overlap (distance " << d << ")";
        rep.items.push_back({"agents_disjoint", false, d, 2.0 * r_s, os.str()});
      }
    }
    for (std::size_t k = 0; k < cfg.obstacles.size(); ++k) {
      const auto& o = cfg.obstacles[k];
      const double d = distance(p, o.center);
      if (!(d > o.radius + r_s)) {
        std::ostringstream os;
        os << "agent " << i << " overlaps obstacle " << k << " (distance " << d << ")";
        rep.items.push_back({"agent_clear_of_obstacles", false, d, o.radius + r_s, os.str()});
      }
    }
  }
  if (rep.items.empty()) rep.items.push_back({"initial_positions", true, 0.0, 0.0, ""});
  return rep;
}

/// Everything run() needs: initial positions, the partition and every
/// non-empty sub-tube's feasibility. Never throws for invalid input.
struct ConfigReport {
  ValidationReport initial;
  FeasibilityReport parent;
  std::optional<std::string> partition_error;
  std::vector<SubTubeReport> sub_tubes;
  std::vector<std::string> unlocated_agents;  // start inside an obstacle triangle

  [[nodiscard]] bool ok() const {
    if (!initial.ok() || !parent.admissible() || partition_error || !unlocated_agents.empty()) return false;
    return std::all_of(sub_tubes.begin(), sub_tubes.end(),
                       [](const SubTubeReport& r) { return r.report.admissible(); });
  }
};

inline ConfigReport validate_config(const SimConfig& cfg) {
  ConfigReport rep;
  rep.initial = validate_initial(cfg);
  rep.parent = validate_feasibility(cfg.tube, cfg.params, cfg.variant);
  try {
    const auto part = build_partition(cfg.tube, cfg.obstacles, cfg.params, cfg.beta);
    rep.sub_tubes = validate_partition(part, cfg.params, cfg.variant);
    for (std::size_t i = 0; i < cfg.initial.size(); ++i) {
      const Vec2& p = cfg.initial[i];
      if (!contains(cfg.tube, p)) continue;  // reported by validate_initial
      if (locate(part, p, kNoSubTube) == kNoSubTube) {
        std::ostringstream os;
        os << "agent " << i << " at " << p << " starts inside an obstacle triangle";
        rep.unlocated_agents.push_back(os.str());
      }
    }
  } catch (const Error& e) {
    rep.partition_error = e.what();
  }
  return rep;
}

inline void write_report(std::ostream& os, const std::vector<CheckItem>& items, const std::string& indent = "  ") {
  for (const auto& c : items) {
    os << indent << (c.pass ? "PASS " : c.boundary ? "WARN " : "FAIL ") << c.name << "  lhs=" << fmt_num(c.lhs) << " rhs=" << fmt_num(c.rhs);
    if (!c.detail.empty()) os << "  " << c.detail;
    if (c.boundary) os << "  (holds with equality)";
    os << '\n';
  }
}

inline void write_config_report(std::ostream& os, const ConfigReport& rep) {
  os << "initial positions:\n";
  write_report(os, rep.initial.items);
  os << "parent tube:\n";
  write_report(os, rep.parent.items);
  if (rep.partition_error) os << "partition:\n  FAIL " << *rep.partition_error << '\n';
  for (const auto& s : rep.sub_tubes) {
    os << "sub-tube " << s.index << ":\n";
    write_report(os, s.report.items);
  }
  for (const auto& u : rep.unlocated_agents) os << "  FAIL " << u << '\n';
  os << (rep.ok() ? "feasible\n" : "infeasible\n");
}

// ---------------------------------------------------------------------------
// Lyapunov monitor
// ---------------------------------------------------------------------------

struct LyapunovBreakdown {
  double total{0.0};
  double flow{0.0};       // sum of V_f
  double avoidance{0.0};  // 1/2 sum of V_m over ordered pairs
  double left{0.0};       // sum of V_tl
  double right{0.0};      // sum of V_tr
};

namespace detail {

// Upper bound of chain_phi over the tube: the weights sum to the chain length
// and ln(|p - q| - r) is largest at the farthest pair of end points.
inline double panel_phi_bound(const TrapezoidTube& tube, const PanelChain& chain) {
  double dmax = 0.0;
  for (const Vec2& v : tube.polygon()) dmax = std::max({dmax, distance(v, chain.start()), distance(v, chain.end())});
  return chain.length() * std::log(dmax - chain.panels.front().r);
}

}  // namespace detail

/// V = sum_i (V_f,i + 1/2 sum_j V_m,ij + V_tl,i + V_tr,i) over active agents.
/// Panels and the constant offsets that keep V_tl, V_tr >= 0 are prepared once.
class LyapunovMonitor {
 public:
  explicit LyapunovMonitor(const SimConfig& cfg) : cfg_(cfg) {
    if (cfg.variant != Variant::Basic || !cfg.obstacles.empty())
      throw Error(ErrorCode::UnsupportedVariant, "Lyapunov monitor needs the basic variant in an obstacle-free tube");
    ControlParams params = cfg.params;
    params.ext_factor = resolve_ext_factor(cfg.tube, params);
    panels_ = make_boundary_panels(cfg.tube, params);
    cl_ = detail::panel_phi_bound(cfg.tube, panels_.left);
    cr_ = detail::panel_phi_bound(cfg.tube, panels_.right);
  }

  [[nodiscard]] LyapunovBreakdown operator()(const std::vector<AgentState>& agents, double t) const {
    const auto& tube = cfg_.tube;
    const auto& params = cfg_.params;
    const Vec2 v_star = params.v * tube.t_c;
    const Vec2 p_star = tube.centroid() + t * v_star;
    const double D = tube.diameter();
    const auto bar = params.agent_barrier();

    LyapunovBreakdown out;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const auto& a = agents[i];
      if (!a.active) continue;
      const Vec2 w = u1_basic(tube, a.p, params.v, params.r_a) - v_star;
      const double U = norm(w);
      const double alpha = std::atan2(-w.y, -w.x);
      const Vec2 pt = a.p - p_star;
      out.flow += U * (pt.x * std::cos(alpha) + pt.y * std::sin(alpha)) + (U * D + 1.0);
      out.left += params.k_3 * (cl_ - chain_phi(panels_.left, a.p));
      out.right += params.k_3 * (cr_ - chain_phi(panels_.right, a.p));
      for (std::size_t j = i + 1; j < agents.size(); ++j) {
        if (!agents[j].active) continue;
        const double d = distance(a.p, agents[j].p);
        if (d < bar.d2) out.avoidance += v_n(d, bar);
      }
    }
    out.total = out.flow + out.avoidance + out.left + out.right;
    return out;
  }

 private:
  SimConfig cfg_;
  BoundaryPanels panels_;
  double cl_{0.0};
  double cr_{0.0};
};

inline LyapunovBreakdown lyapunov_monitor(const std::vector<AgentState>& agents, const SimConfig& cfg, double t) {
  return LyapunovMonitor(cfg)(agents, t);
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct TrajectoryRow {
  double t;
  std::int64_t id;
  Vec2 p;
  Vec2 v;
  std::size_t sub_tube;
  bool active;
};

struct SafetySummary {
  bool pair_ok{true};
  bool obstacle_ok{true};
  bool left_ok{true};
  bool right_ok{true};
  bool speed_ok{true};     // [v_min, v_max]
  bool envelope_ok{true};  // [v - v'_max, v + v'_max]
  bool all_removed{false};
  std::optional<double> last_removal;
  double min_pair_dist{std::numeric_limits<double>::infinity()};
  double min_obstacle_dist{std::numeric_limits<double>::infinity()};
  double min_obstacle_clearance{std::numeric_limits<double>::infinity()};
  double min_d_tl{std::numeric_limits<double>::infinity()};
  double min_d_tr{std::numeric_limits<double>::infinity()};
  double min_speed{std::numeric_limits<double>::infinity()};
  double max_speed{0.0};

  // Lyapunov descent, only in the regime where the monitor applies.
  bool lyapunov_applicable{false};
  bool lyapunov_ok{true};
  bool lyapunov_nonnegative{true};
  double tol_V{0.0};
  double max_dV{-std::numeric_limits<double>::infinity()};

  [[nodiscard]] bool safety_ok() const { return pair_ok && obstacle_ok && left_ok && right_ok && speed_ok; }
};

struct Trace {
  std::vector<StepMetrics> metrics;
  std::vector<TrajectoryRow> trajectories;
  std::vector<AgentState> final_agents;
  SafetySummary summary;
};

struct RunOptions {
  std::size_t traj_stride{0};  // 0 = no trajectory rows
  std::function<void(double, const std::vector<AgentState>&)> observer;  // called after every metrics row
};

class Simulation {
 public:
  /// Throws ValidationError listing every violation when the config is infeasible.
  explicit Simulation(SimConfig cfg) : cfg_(std::move(cfg)), ctrl_(make_controller(cfg_)) {
    if (cfg_.variant == Variant::Basic && cfg_.obstacles.empty()) lyapunov_.emplace(cfg_);
    agents_.reserve(cfg_.initial.size());
    for (std::size_t i = 0; i < cfg_.initial.size(); ++i) {
      AgentState a;
      a.id = static_cast<std::int64_t>(i);
      a.p = cfg_.initial[i];
      a.sub_tube = ctrl_.locate(a.p, 0);
      agents_.push_back(a);
    }
    remove_finished();
    evaluate();
  }

  [[nodiscard]] const SimConfig& config() const { return cfg_; }
  [[nodiscard]] const SwitchedController& controller() const { return ctrl_; }
  [[nodiscard]] const std::vector<AgentState>& agents() const { return agents_; }
  [[nodiscard]] double time() const { return t_; }
  [[nodiscard]] std::size_t step_index() const { return k_; }
  [[nodiscard]] const StepMetrics& metrics() const { return metrics_; }
  [[nodiscard]] std::size_t n_active() const { return metrics_.n_active; }

  /// Advance every active agent by dt with the commands of the current
  /// snapshot, relocate, remove finished agents and evaluate the new state.
  void step() {
    ++k_;
    t_ = static_cast<double>(k_) * cfg_.dt;
    for (auto& a : agents_) {
      if (!a.active) continue;
      a.p += cfg_.dt * a.v_c;
      try {
        a.sub_tube = ctrl_.locate(a.p, a.sub_tube);
      } catch (const Error& e) {
        abort(a, e);
      }
    }
    remove_finished();
    evaluate();
  }

 private:
  static SwitchedController make_controller(const SimConfig& cfg) {
    const auto rep = validate_config(cfg);
    if (!rep.ok()) {
      std::ostringstream os;
      write_config_report(os, rep);
      throw Error(ErrorCode::ValidationError, os.str());
    }
    return SwitchedController(build_partition(cfg.tube, cfg.obstacles, cfg.params, cfg.beta), cfg.params, cfg.variant);
  }

  [[noreturn]] void abort(const AgentState& a, const Error& e) const {
    std::ostringstream os;
    os << "agent " << a.id << " at t=" << fmt_num(t_) << ": " << e.what();
    throw Error(e.code(), os.str());
  }

  void remove_finished() {
    for (auto& a : agents_) {
      if (a.active && finishing_reached(cfg_.tube, a.p, cfg_.params.eps_0)) {
        a.active = false;
        a.removed_at = t_;
        a.v_c = Vec2{};
      }
    }
  }

  void evaluate() {
    Snapshot snap;
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      if (!agents_[i].active) continue;
      snap.positions.push_back(agents_[i].p);
      snap.ids.push_back(agents_[i].id);
      index.push_back(i);
    }
    for (std::size_t j = 0; j < index.size(); ++j) {
      auto& a = agents_[index[j]];
      try {
        a.v_c = ctrl_.command(snap, j, a.sub_tube);
      } catch (const Error& e) {
        abort(a, e);
      }
    }

    StepMetrics m;
    m.t = t_;
    m.n_active = index.size();
    const auto& tube = cfg_.tube;
    for (std::size_t j = 0; j < index.size(); ++j) {
      const auto& a = agents_[index[j]];
      for (std::size_t l = j + 1; l < index.size(); ++l)
        m.min_pair_dist = std::min(m.min_pair_dist, distance(a.p, agents_[index[l]].p));
      for (const auto& o : cfg_.obstacles) {
        const double d = distance(a.p, o.center);
        m.min_obstacle_dist = std::min(m.min_obstacle_dist, d);
        m.min_obstacle_clearance = std::min(m.min_obstacle_clearance, d - o.radius - cfg_.params.r_s);
      }
      m.min_d_tl = std::min(m.min_d_tl, dist_left(tube, a.p));
      m.min_d_tr = std::min(m.min_d_tr, dist_right(tube, a.p));
      const double speed = norm(a.v_c);
      m.min_speed = std::min(m.min_speed, speed);
      m.max_speed = std::max(m.max_speed, speed);
    }
    if (lyapunov_) {
      m.V_total = (*lyapunov_)(agents_, t_).total;
      m.dV = k_ == 0 ? 0.0 : m.V_total - metrics_.V_total;
    }
    metrics_ = m;
  }

  SimConfig cfg_;
  SwitchedController ctrl_;
  std::vector<AgentState> agents_;
  StepMetrics metrics_;
  double t_{0.0};
  std::size_t k_{0};
  std::optional<LyapunovMonitor> lyapunov_;
};

namespace detail {

inline void accumulate(SafetySummary& s, const StepMetrics& m, const ControlParams& p) {
  s.min_pair_dist = std::min(s.min_pair_dist, m.min_pair_dist);
  s.min_obstacle_dist = std::min(s.min_obstacle_dist, m.min_obstacle_dist);
  s.min_obstacle_clearance = std::min(s.min_obstacle_clearance, m.min_obstacle_clearance);
  s.min_d_tl = std::min(s.min_d_tl, m.min_d_tl);
  s.min_d_tr = std::min(s.min_d_tr, m.min_d_tr);
  if (m.n_active > 0) {
    s.min_speed = std::min(s.min_speed, m.min_speed);
    s.max_speed = std::max(s.max_speed, m.max_speed);
  }
  s.pair_ok = s.min_pair_dist > 2.0 * p.r_s;
  s.obstacle_ok = s.min_obstacle_clearance > 0.0;
  s.left_ok = s.min_d_tl > p.r_s;
  s.right_ok = s.min_d_tr > p.r_s;
  s.speed_ok = s.min_speed >= p.v_min && s.max_speed <= p.v_max;
  s.envelope_ok = s.min_speed >= p.v - p.v_max_prime && s.max_speed <= p.v + p.v_max_prime;
}

// tol_V = 10 max |second difference of V| over windows without removals.
inline void lyapunov_summary(SafetySummary& s, const std::vector<StepMetrics>& ms) {
  double max_dd = 0.0;
  for (std::size_t k = 1; k + 1 < ms.size(); ++k) {
    if (ms[k - 1].n_active != ms[k].n_active || ms[k].n_active != ms[k + 1].n_active) continue;
    max_dd = std::max(max_dd, std::abs(ms[k + 1].V_total - 2.0 * ms[k].V_total + ms[k - 1].V_total));
  }
  s.tol_V = 10.0 * max_dd;
  s.lyapunov_ok = true;
  s.lyapunov_nonnegative = true;
  for (std::size_t k = 0; k < ms.size(); ++k) {
    if (k > 0) {
      s.max_dV = std::max(s.max_dV, ms[k].dV);
      if (ms[k].dV > s.tol_V) s.lyapunov_ok = false;
    }
    if (ms[k].V_total < 0.0) s.lyapunov_nonnegative = false;
  }
}

inline void record_trajectories(std::vector<TrajectoryRow>& rows, double t, const std::vector<AgentState>& agents) {
  for (const auto& a : agents)
    if (a.active || (a.removed_at && *a.removed_at == t)) rows.push_back({t, a.id, a.p, a.v_c, a.sub_tube, a.active});
}

}  // namespace detail

/// Steps until t_end or until every agent has been removed.
inline Trace run(const SimConfig& cfg, const RunOptions& opts = {}) {
  Simulation sim(cfg);
  Trace tr;
  const auto n_steps = static_cast<std::size_t>(std::llround(cfg.t_end / cfg.dt));
  const auto record = [&] {
    tr.metrics.push_back(sim.metrics());
    detail::accumulate(tr.summary, sim.metrics(), cfg.params);
    if (opts.traj_stride > 0 && sim.step_index() % opts.traj_stride == 0)
      detail::record_trajectories(tr.trajectories, sim.time(), sim.agents());
    if (opts.observer) opts.observer(sim.time(), sim.agents());
  };
  record();
  while (sim.step_index() < n_steps && sim.n_active() > 0) {
    sim.step();
    record();
  }
  tr.final_agents = sim.agents();
  auto& s = tr.summary;
  s.all_removed = std::all_of(tr.final_agents.begin(), tr.final_agents.end(), [](const AgentState& a) { return !a.active; });
  for (const auto& a : tr.final_agents)
    if (a.removed_at) s.last_removal = std::max(s.last_removal.value_or(0.0), *a.removed_at);
  s.lyapunov_applicable = cfg.variant == Variant::Basic && cfg.obstacles.empty();
  if (s.lyapunov_applicable) detail::lyapunov_summary(s, tr.metrics);
  return tr;
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

inline void write_metrics(std::ostream& os, const std::vector<StepMetrics>& ms) {
  os << "t,min_pair_dist,min_obstacle_dist,min_d_tl,min_d_tr,min_speed,max_speed,n_active,V_total,dV\n";
  for (const auto& m : ms) {
    os << fmt_num(m.t) << ',' << fmt_num(m.min_pair_dist) << ',' << fmt_num(m.min_obstacle_dist) << ','
       << fmt_num(m.min_d_tl) << ',' << fmt_num(m.min_d_tr) << ',' << fmt_num(m.min_speed) << ','
       << fmt_num(m.max_speed) << ',' << m.n_active << ',' << fmt_num(m.V_total) << ',' << fmt_num(m.dV) << '\n';
  }
}

inline void write_trajectories(std::ostream& os, const std::vector<TrajectoryRow>& rows) {
  os << "t,id,x,y,vx,vy,sub_tube,active\n";
  for (const auto& r : rows) {
    os << fmt_num(r.t) << ',' << r.id << ',' << fmt_num(r.p.x) << ',' << fmt_num(r.p.y) << ',' << fmt_num(r.v.x)
       << ',' << fmt_num(r.v.y) << ',' << r.sub_tube << ',' << (r.active ? 1 : 0) << '\n';
  }
}

inline void write_summary(std::ostream& os, const SafetySummary& s, const ControlParams& p) {
  const auto line = [&](const char* name, bool ok, double value, const char* op, double bound) {
    os << (ok ? "PASS " : "FAIL ") << name << ": " << fmt_num(value) << ' ' << op << ' ' << fmt_num(bound) << '\n';
  };
  line("min_pair_dist", s.pair_ok, s.min_pair_dist, ">", 2.0 * p.r_s);
  os << (s.obstacle_ok ? "PASS " : "FAIL ") << "min_obstacle_clearance: " << fmt_num(s.min_obstacle_clearance)
     << " > 0 (min_obstacle_dist " << fmt_num(s.min_obstacle_dist) << ")\n";
  line("min_d_tl", s.left_ok, s.min_d_tl, ">", p.r_s);
  line("min_d_tr", s.right_ok, s.min_d_tr, ">", p.r_s);
  os << (s.speed_ok ? "PASS " : "FAIL ") << "speed_bounds: [" << fmt_num(s.min_speed) << ", " << fmt_num(s.max_speed)
     << "] within [" << fmt_num(p.v_min) << ", " << fmt_num(p.v_max) << "]\n";
  os << (s.envelope_ok ? "PASS " : "FAIL ") << "speed_envelope: [" << fmt_num(s.min_speed) << ", "
     << fmt_num(s.max_speed) << "] within [" << fmt_num(p.v - p.v_max_prime) << ", "
     << fmt_num(p.v + p.v_max_prime) << "]\n";
  os << (s.all_removed ? "PASS " : "FAIL ") << "all_removed";
  if (s.last_removal) os << ": last removal at t=" << fmt_num(*s.last_removal);
  os << '\n';
  if (s.lyapunov_applicable) {
    os << (s.lyapunov_ok ? "PASS " : "FAIL ") << "lyapunov_descent: max dV " << fmt_num(s.max_dV)
       << " <= tol_V " << fmt_num(s.tol_V) << '\n';
    os << (s.lyapunov_nonnegative ? "PASS " : "FAIL ") << "lyapunov_nonnegative\n";
  } else {
    os << "SKIP lyapunov_descent: needs the basic variant without obstacles\n";
  }
  os << "safety: " << (s.safety_ok() ? "PASS" : "FAIL") << '\n';
}

}  // namespace vtube
