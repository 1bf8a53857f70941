#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vtube/errors.hpp"
#include "vtube/partition.hpp"
#include "vtube/scenario.hpp"
#include "vtube/simulator.hpp"

namespace vtube::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kInvalid = 3, kRuntime = 4 };

struct Overrides {
  std::optional<std::string> variant;
  std::optional<std::uint64_t> seed;
};

namespace detail {

inline int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::SyntaxError:
    case ErrorCode::SchemaError:
    case ErrorCode::ValidationError:
    case ErrorCode::DegenerateTube:
    case ErrorCode::ObstacleOutsideTube:
    case ErrorCode::ObstacleOnBoundary:
    case ErrorCode::TriangleExceedsTube:
    case ErrorCode::OverlappingTriangles:
    case ErrorCode::NoFeasibleCorridor:
    case ErrorCode::Assumption3PrimeViolation:
    case ErrorCode::DirL2Violation:
    case ErrorCode::InvalidInterval:
      return kInvalid;
    default:
      return kRuntime;
  }
}

inline ScenarioFile load_schema(const std::string& path, const Overrides& ov) {
  auto f = parse_scenario_schema(read_file(path));
  if (ov.variant) {
    auto v = parse_variant(*ov.variant);
    if (!v) throw Error(ErrorCode::SchemaError, "--variant must be basic or modified");
    f.variant = *v;
  }
  if (ov.seed) f.seed = *ov.seed;
  return f;
}

inline ScenarioFile load_valid(const std::string& path, const Overrides& ov) {
  auto f = load_schema(path, ov);
  const auto v = scenario_violations(f);
  if (!v.empty()) throw error_list(ErrorCode::ValidationError, v);
  return f;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + p.string());
  return out;
}

template <class F>
int guarded(std::ostream& err, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_for(e);
  } catch (const std::ios_base::failure& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  }
}

}  // namespace detail

/// Writes metrics.csv, trajectories.csv and summary.txt; 0 iff every safety invariant holds.
inline int cmd_simulate(const std::string& scenario, const std::string& out_dir, const Overrides& ov,
                        std::size_t traj_stride, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto f = detail::load_valid(scenario, ov);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    auto metrics = detail::open_out(dir / "metrics.csv");
    auto traj = detail::open_out(dir / "trajectories.csv");
    auto summary = detail::open_out(dir / "summary.txt");
    const auto cfg = to_config(f);
    RunOptions opts;
    opts.traj_stride = traj_stride;
    const auto tr = run(cfg, opts);
    write_metrics(metrics, tr.metrics);
    write_trajectories(traj, tr.trajectories);
    summary << "agents: " << cfg.initial.size() << "\nsteps: " << tr.metrics.size() - 1 << '\n';
    write_summary(summary, tr.summary, cfg.params);
    write_summary(out, tr.summary, cfg.params);
    if (!metrics || !traj || !summary) throw std::ios_base::failure("write failed in " + out_dir);
    return tr.summary.safety_ok() ? kOk : kRuntime;
  });
}

inline int cmd_field(const std::string& scenario, int nx, int ny, const std::vector<Vec2>& ghosts,
                     const std::string& out_file, const Overrides& ov, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto f = detail::load_valid(scenario, ov);
    const auto raster = compute_field(to_config(f), nx, ny, ghosts);
    auto os = detail::open_out(out_file);
    write_field(os, raster);
    return kOk;
  });
}

inline int cmd_partition(const std::string& scenario, const std::string& out_file, const Overrides& ov,
                         std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto f = detail::load_schema(scenario, ov);
    if (f.obstacles.empty()) throw Error(ErrorCode::ValidationError, "/obstacles: partition needs at least one obstacle");
    const auto cfg = to_config(f);
    const auto part = build_partition(cfg.tube, cfg.obstacles, cfg.params, cfg.beta);
    auto os = detail::open_out(out_file);
    write_partition(os, part);
    return kOk;
  });
}

/// Prints the full feasibility report; 0 iff everything passes.
inline int cmd_validate(const std::string& scenario, const Overrides& ov, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const auto f = detail::load_schema(scenario, ov);
    const auto v = scenario_violations(f);
    SimConfig cfg;
    bool built = true;
    try {
      cfg = to_config(f);
    } catch (const Error& e) {
      out << "tube:\n  FAIL " << e.what() << '\n';
      built = false;
    }
    if (built) {
      const auto rep = validate_config(cfg);
      write_config_report(out, rep);
      const auto& p = rep.parent;
      out << "angles: theta_l=" << fmt_num(p.theta_l * 180.0 / std::numbers::pi)
          << "deg theta_r=" << fmt_num(p.theta_r * 180.0 / std::numbers::pi)
          << "deg bound=" << fmt_num(p.theta_bound * 180.0 / std::numbers::pi) << "deg\n";
    }
    for (const auto& w : scenario_warnings(f)) out << "warning: " << w << '\n';
    if (!v.empty()) {
      out << "violations:\n";
      for (const auto& s : v) out << "  " << s << '\n';
    }
    return v.empty() ? kOk : kInvalid;
  });
}

inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Trapezoid virtual tube swarm simulator"};
  app.require_subcommand(1);
  Overrides ov;
  std::string variant;
  std::uint64_t seed = 0;
  app.add_option("--variant", variant, "Controller variant (basic|modified)")
      ->check(CLI::IsMember({"basic", "modified"}));
  app.add_option("--seed", seed, "Seed for sampling-based validation");

  std::string scenario, out_path, out_pos;
  std::size_t traj_stride = 10;
  auto* sim = app.add_subcommand("simulate", "Run a scenario and write metrics, trajectories and a summary");
  sim->add_option("scenario", scenario, "Scenario file")->required();
  sim->add_option("out_dir", out_pos, "Output directory");
  sim->add_option("--out", out_path, "Output directory");
  sim->add_option("--traj-stride", traj_stride, "Write trajectories every N steps (0 disables)");

  std::vector<int> grid{40, 20};
  std::vector<double> ghost_xy;
  auto* field = app.add_subcommand("field", "Write the command field on a grid");
  field->add_option("scenario", scenario, "Scenario file")->required();
  field->add_option("--grid", grid, "Cells in x and y")->expected(2);
  field->add_option("--ghost", ghost_xy, "Fixed neighbour position X Y (repeatable)")
      ->expected(2)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  field->add_option("--out", out_path, "Output file")->required();

  auto* part = app.add_subcommand("partition", "Write the obstacle partition");
  part->add_option("scenario", scenario, "Scenario file")->required();
  part->add_option("--out", out_path, "Output file")->required();

  auto* val = app.add_subcommand("validate", "Print the feasibility report");
  val->add_option("scenario", scenario, "Scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }
  if (!variant.empty()) ov.variant = variant;
  if (app.count("--seed") > 0) ov.seed = seed;

  if (*sim) {
    const std::string dir = !out_path.empty() ? out_path : out_pos;
    if (dir.empty()) {
      err << "error: simulate needs an output directory\n";
      return kUsage;
    }
    return cmd_simulate(scenario, dir, ov, traj_stride, out, err);
  }
  if (*field) {
    std::vector<Vec2> ghosts;
    for (std::size_t i = 0; i + 1 < ghost_xy.size(); i += 2) ghosts.push_back({ghost_xy[i], ghost_xy[i + 1]});
    return cmd_field(scenario, grid[0], grid[1], ghosts, out_path, ov, err);
  }
  if (*part) return cmd_partition(scenario, out_path, ov, err);
  return cmd_validate(scenario, ov, out, err);
}

}  // namespace vtube::cli
