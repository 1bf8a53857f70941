// Runs the eight acceptance criteria and prints one PASS/FAIL line each.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "support.hpp"
#include "vtube/scenario.hpp"
#include "vtube/simulator.hpp"

namespace vtube {
namespace {

struct Outcome {
  bool pass{false};
  std::string detail;
};

struct Runs {
  SimConfig cfg;
  Trace first, second;
  std::string first_bytes, second_bytes;
  double seconds{0.0};
};

std::string trace_bytes(const Trace& tr) {
  std::ostringstream os;
  write_metrics(os, tr.metrics);
  write_trajectories(os, tr.trajectories);
  return os.str();
}

Runs run_twice(const std::string& scenario) {
  Runs r;
  r.cfg = to_config(parse_scenario(read_file(test::scenario_path(scenario))));
  RunOptions opts;
  opts.traj_stride = 100;
  const auto t0 = std::chrono::steady_clock::now();
  r.first = run(r.cfg, opts);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.second = run(r.cfg, opts);
  r.first_bytes = trace_bytes(r.first);
  r.second_bytes = trace_bytes(r.second);
  return r;
}

std::string fmt(double x) { return fmt_num(x); }

// Thresholds of the two simulation scenarios; all strict.
Outcome check_thresholds(const Runs& r, double pair, double obstacle, double wall) {
  const auto& s = r.first.summary;
  const auto& p = r.cfg.params;
  Outcome o;
  o.pass = s.min_pair_dist > pair && s.min_obstacle_dist > obstacle && s.min_d_tl > wall && s.min_d_tr > wall &&
           s.min_speed >= p.v_min && s.max_speed <= p.v_max;
  o.detail = "pair " + fmt(s.min_pair_dist) + " > " + fmt(pair) + ", obstacle " + fmt(s.min_obstacle_dist) + " > " +
             fmt(obstacle) + ", d_tl " + fmt(s.min_d_tl) + " d_tr " + fmt(s.min_d_tr) + " > " + fmt(wall) +
             ", speed [" + fmt(s.min_speed) + ", " + fmt(s.max_speed) + "] in [" + fmt(p.v_min) + ", " +
             fmt(p.v_max) + "]";
  return o;
}

Outcome criterion1(const Runs& swarm) {
  auto o = check_thresholds(swarm, 0.5, 1.15, 0.25);
  const bool fast = swarm.seconds < 60.0;
  o.pass = o.pass && swarm.cfg.initial.size() == 120 && fast;
  o.detail += ", M " + std::to_string(swarm.cfg.initial.size()) + ", runtime " + fmt(swarm.seconds) + " s < 60 s";
  return o;
}

Outcome criterion2(const Runs& robots) {
  auto o = check_thresholds(robots, 0.15, 0.145, 0.075);
  const auto& s = robots.first.summary;
  const bool removed = s.all_removed && s.last_removal && *s.last_removal <= 50.0;
  o.pass = o.pass && removed && robots.cfg.initial.size() == 7;
  o.detail += ", all removed by " + (s.last_removal ? fmt(*s.last_removal) : std::string("never")) + " s <= 50 s";
  return o;
}

Outcome criterion3(const Runs& swarm, const Runs& robots) {
  Outcome o{true, ""};
  for (const auto* r : {&swarm, &robots}) {
    const auto& a = r->first.summary;
    const auto& b = r->second.summary;
    const bool live = a.all_removed && a.last_removal && *a.last_removal < r->cfg.t_end;
    const bool same = r->first_bytes == r->second_bytes && a.last_removal == b.last_removal;
    o.pass = o.pass && live && same;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += "last removal " + (a.last_removal ? fmt(*a.last_removal) : std::string("none")) + " < " +
                fmt(r->cfg.t_end) + (same ? ", repeat identical" : ", repeat differs");
  }
  return o;
}

Outcome partition_check(const TubePartition& part, const ControlParams& params, std::uint64_t seed, int& bad_subtubes) {
  const auto cov = oracle::partition_coverage(part, 100000, seed, 1e-9);
  const std::size_t expected = 3 * part.triangles.size() + 1;
  for (const auto& r : validate_partition(part, params, Variant::Modified))
    if (!r.report.admissible()) ++bad_subtubes;
  Outcome o;
  o.pass = cov.uncovered == 0 && cov.overlapping == 0 && cov.locate_mismatch == 0 && part.sub_tubes.size() == expected;
  o.detail = std::to_string(cov.uncovered) + "/" + std::to_string(cov.overlapping) + "/" +
             std::to_string(cov.locate_mismatch);
  return o;
}

Outcome criterion4() {
  Outcome o{true, ""};
  int bad = 0;
  const auto cfg = to_config(parse_scenario(read_file(test::scenario_path("swarm-120.json"))));
  const auto swarm = partition_check(build_partition(cfg.tube, cfg.obstacles, cfg.params, cfg.beta), cfg.params, 4001, bad);
  o.pass = swarm.pass;
  o.detail = "uncovered/overlap/locate: scenario " + swarm.detail;
  std::mt19937_64 rng(20240);
  int built = 0, attempts = 0, failed = 0;
  while (built < 20 && attempts < 2000) {
    ++attempts;
    TrapezoidTube tube;
    std::vector<Obstacle> obstacles;
    double beta = 0.0;
    if (!test::random_partition_scenario(rng, test::swarm_params(), tube, obstacles, beta)) continue;
    ++built;
    const auto r = partition_check(build_partition(tube, obstacles, test::swarm_params(), beta), test::swarm_params(),
                                   5000 + static_cast<std::uint64_t>(built), bad);
    if (!r.pass) ++failed;
  }
  o.pass = o.pass && built == 20 && failed == 0 && bad == 0;
  o.detail += ", random " + std::to_string(built) + " built / " + std::to_string(failed) + " failing, " +
              std::to_string(bad) + " inadmissible sub-tubes";
  return o;
}

Outcome criterion5() {
  const auto params = test::swarm_params();
  double worst = 0.0;
  std::uint64_t seed = 71;
  for (const auto& bar : {params.agent_barrier(), params.wall_barrier()})
    worst = std::max(worst, oracle::barrier_derivative(bar, seed++).max_rel_err);
  const double panel = oracle::panel_gradient(seed++).max_rel_err;
  const double avoid = oracle::avoidance_term(params, seed++).max_rel_err;
  Outcome o;
  o.pass = worst < 1e-5 && panel < 1e-5 && avoid < 1e-5;
  o.detail = "max rel err: barrier " + fmt(worst) + ", panel " + fmt(panel) + ", u2 " + fmt(avoid) + " < 1e-5";
  return o;
}

Outcome criterion6() {
  const auto cfg = to_config(parse_scenario(read_file(test::scenario_path("lyapunov-rect.json"))));
  const auto tr = run(cfg);
  const auto& s = tr.summary;
  Outcome o;
  o.pass = cfg.initial.size() == 20 && cfg.variant == Variant::Basic && cfg.obstacles.empty() &&
           s.lyapunov_applicable && s.lyapunov_ok && s.lyapunov_nonnegative;
  o.detail = "max dV " + fmt(s.max_dV) + " <= tol_V " + fmt(s.tol_V) + ", V >= 0 " +
             (s.lyapunov_nonnegative ? "holds" : "violated") + ", " + std::to_string(tr.metrics.size()) + " rows";
  return o;
}

Outcome criterion7() {
  const auto r = oracle::speed_envelope(7007, 10000);
  Outcome o;
  o.pass = r.states == 10000 && r.violations == 0;
  o.detail = std::to_string(r.states) + " states, " + std::to_string(r.commands) + " commands, " +
             std::to_string(r.violations) + " violations, min gap to lower " + fmt(r.min_lo_gap) + ", to upper " +
             fmt(r.min_hi_gap);
  return o;
}

Outcome raster_check(const std::string& scenario, const std::vector<Vec2>& ghosts) {
  const auto cfg = to_config(parse_scenario(read_file(test::scenario_path(scenario))));
  const auto r = compute_field(cfg, 120, 60, ghosts);
  int in = 0, bad = 0;
  double min_n = INFINITY, max_n = 0.0, min_prog = INFINITY;
  for (const auto& c : r.cells) {
    if (!c.in_domain) continue;
    ++in;
    const double n = norm(c.v), prog = dot(c.v, cfg.tube.t_c);
    min_n = std::min(min_n, n);
    max_n = std::max(max_n, n);
    min_prog = std::min(min_prog, prog);
    if (!(n >= cfg.params.v_min && n <= cfg.params.v_max && prog > 0.0)) ++bad;
  }
  Outcome o;
  o.pass = in > 0 && bad == 0;
  o.detail = std::to_string(in) + " cells, norm [" + fmt(min_n) + ", " + fmt(max_n) + "], min t_c component " +
             fmt(min_prog) + ", " + std::to_string(bad) + " bad";
  return o;
}

Outcome criterion8() {
  const auto a = raster_check("field-tube.json", {{6.0, 0.0}});
  const auto b = raster_check("field-obstacle.json", {});
  return {a.pass && b.pass, "single tube: " + a.detail + "; obstacle: " + b.detail};
}

}  // namespace
}  // namespace vtube

int main() {
  using namespace vtube;
  int failures = 0;
  const auto report = [&](int k, const char* name, const Outcome& o) {
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", k, name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };
  const auto guarded = [&](int k, const char* name, const auto& f) {
    try {
      report(k, name, f());
    } catch (const std::exception& e) {
      report(k, name, Outcome{false, std::string("exception: ") + e.what()});
    }
  };

  Runs swarm, robots;
  bool sims_ok = true;
  std::string sim_error;
  try {
    swarm = run_twice("swarm-120.json");
    robots = run_twice("robots-7.json");
  } catch (const std::exception& e) {
    sims_ok = false;
    sim_error = e.what();
  }
  const Outcome sim_failed{false, "exception: " + sim_error};
  report(1, "five-obstacle swarm", sims_ok ? criterion1(swarm) : sim_failed);
  report(2, "seven-agent small-scale run", sims_ok ? criterion2(robots) : sim_failed);
  report(3, "liveness and determinism", sims_ok ? criterion3(swarm, robots) : sim_failed);
  guarded(4, "partition coverage", criterion4);
  guarded(5, "derivatives vs finite differences", criterion5);
  guarded(6, "Lyapunov descent", criterion6);
  guarded(7, "speed envelope", criterion7);
  guarded(8, "field rasters", criterion8);
  std::printf("%d/8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
