#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vtube/controller.hpp"
#include "vtube/errors.hpp"
#include "vtube/geometry.hpp"
#include "vtube/io_format.hpp"
#include "vtube/partition.hpp"
#include "vtube/simulator.hpp"
#include "vtube/vec2.hpp"

namespace vtube {

/// Agent (r, c) starts at origin + (c * spacing, r * spacing).
struct GridSpec {
  int rows{0};
  int cols{0};
  double spacing{0.0};
  Vec2 origin;
  bool operator==(const GridSpec&) const = default;
};

inline std::vector<Vec2> generate_grid(const GridSpec& g) {
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(std::max(0, g.rows * g.cols)));
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) out.push_back(g.origin + Vec2{c * g.spacing, r * g.spacing});
  return out;
}

struct ScenarioFile {
  Vec2 p_l0, p_l1, p_r0, p_r1;
  std::vector<Obstacle> obstacles;
  std::variant<std::vector<Vec2>, GridSpec> agents;
  ControlParams control;
  double dt{0.001};
  double t_end{14.0};
  double beta_deg{30.0};
  Variant variant{Variant::Modified};
  std::uint64_t seed{1};

  [[nodiscard]] std::vector<Vec2> initial_positions() const {
    if (const auto* g = std::get_if<GridSpec>(&agents)) return generate_grid(*g);
    return std::get<std::vector<Vec2>>(agents);
  }
};

inline bool operator==(const Obstacle& a, const Obstacle& b) { return a.center == b.center && a.radius == b.radius; }

inline bool operator==(const ScenarioFile& a, const ScenarioFile& b) {
  return a.p_l0 == b.p_l0 && a.p_l1 == b.p_l1 && a.p_r0 == b.p_r0 && a.p_r1 == b.p_r1 && a.obstacles == b.obstacles &&
         a.agents == b.agents && a.control == b.control && a.dt == b.dt && a.t_end == b.t_end &&
         a.beta_deg == b.beta_deg && a.variant == b.variant && a.seed == b.seed;
}

/// Builds the tube; throws DegenerateTube.
inline SimConfig to_config(const ScenarioFile& f) {
  SimConfig c;
  c.dt = f.dt;
  c.t_end = f.t_end;
  c.tube = build_tube(f.p_l0, f.p_l1, f.p_r0, f.p_r1, f.control.k_t);
  c.obstacles = f.obstacles;
  c.initial = f.initial_positions();
  c.params = f.control;
  c.beta = f.beta_deg * std::numbers::pi / 180.0;
  c.seed = f.seed;
  c.variant = f.variant;
  return c;
}

/// Error whose message lists one problem per line, each prefixed by a JSON pointer.
inline Error error_list(ErrorCode code, const std::vector<std::string>& problems) {
  std::ostringstream os;
  os << problems.size() << " problem(s)";
  for (const auto& p : problems) os << "\n  " << p;
  return Error(code, os.str());
}

namespace detail {

using nlohmann::json;

class SchemaReader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }

  const json* member(const json& obj, const std::string& key, const std::string& path, bool required) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) fail(path + "/" + key, "missing required field");
      return nullptr;
    }
    return &*it;
  }

  void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) return;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) fail(path + "/" + it.key(), "unknown field");
    }
  }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    fail(path, "expected an object");
    return false;
  }

  void number(const json& obj, const std::string& key, const std::string& path, double& out, bool required) {
    const json* j = member(obj, key, path, required);
    if (!j) return;
    if (!j->is_number() || !std::isfinite(j->get<double>())) {
      fail(path + "/" + key, "expected a finite number");
      return;
    }
    out = j->get<double>();
  }

  void optional_number(const json& obj, const std::string& key, const std::string& path, std::optional<double>& out) {
    double v = 0.0;
    const std::size_t before = errors.size();
    if (!member(obj, key, path, false)) return;
    number(obj, key, path, v, true);
    if (errors.size() == before) out = v;
  }

  bool vec2(const json& j, const std::string& path, Vec2& out) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
      fail(path, "expected [x, y]");
      return false;
    }
    out = {j[0].get<double>(), j[1].get<double>()};
    if (!is_finite(out)) {
      fail(path, "coordinates must be finite");
      return false;
    }
    return true;
  }

  void vec2_member(const json& obj, const std::string& key, const std::string& path, Vec2& out) {
    if (const json* j = member(obj, key, path, true)) vec2(*j, path + "/" + key, out);
  }

  template <class Int>
  void integer(const json& obj, const std::string& key, const std::string& path, Int& out, bool required) {
    const json* j = member(obj, key, path, required);
    if (!j) return;
    if (!j->is_number_integer() || (std::is_unsigned_v<Int> && j->is_number_integer() && !j->is_number_unsigned() &&
                                    j->get<std::int64_t>() < 0)) {
      fail(path + "/" + key, std::is_unsigned_v<Int> ? "expected a non-negative integer" : "expected an integer");
      return;
    }
    out = j->get<Int>();
  }

  void string(const json& obj, const std::string& key, const std::string& path, std::string& out, bool required) {
    const json* j = member(obj, key, path, required);
    if (!j) return;
    if (!j->is_string()) {
      fail(path + "/" + key, "expected a string");
      return;
    }
    out = j->get<std::string>();
  }
};

inline json vec_json(const Vec2& v) { return json::array({v.x, v.y}); }

}  // namespace detail

inline std::optional<Variant> parse_variant(const std::string& s) {
  if (s == "basic") return Variant::Basic;
  if (s == "modified") return Variant::Modified;
  return std::nullopt;
}

inline const char* variant_key(Variant v) { return v == Variant::Basic ? "basic" : "modified"; }

inline std::optional<WallProjection> parse_wall_projection(const std::string& s) {
  if (s == "across") return WallProjection::AcrossTangent;
  if (s == "along") return WallProjection::AlongTangent;
  return std::nullopt;
}

inline const char* wall_projection_key(WallProjection w) {
  return w == WallProjection::AlongTangent ? "along" : "across";
}

/// Schema-level parse. Throws SyntaxError for malformed JSON and SchemaError
/// listing every missing, mistyped or unknown field.
inline ScenarioFile parse_scenario_schema(const std::string& text) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SyntaxError, e.what());
  }

  detail::SchemaReader rd;
  ScenarioFile f;
  if (!rd.object(root, "")) throw error_list(ErrorCode::SchemaError, rd.errors);
  rd.only_keys(root, "", {"tube", "obstacles", "agents", "control", "sim"});

  if (const json* t = rd.member(root, "tube", "", true); t && rd.object(*t, "/tube")) {
    rd.only_keys(*t, "/tube", {"p_l0", "p_l1", "p_r0", "p_r1"});
    rd.vec2_member(*t, "p_l0", "/tube", f.p_l0);
    rd.vec2_member(*t, "p_l1", "/tube", f.p_l1);
    rd.vec2_member(*t, "p_r0", "/tube", f.p_r0);
    rd.vec2_member(*t, "p_r1", "/tube", f.p_r1);
  }

  if (const json* obs = rd.member(root, "obstacles", "", false)) {
    if (!obs->is_array()) {
      rd.fail("/obstacles", "expected an array");
    } else {
      for (std::size_t k = 0; k < obs->size(); ++k) {
        const std::string path = "/obstacles/" + std::to_string(k);
        const json& o = (*obs)[k];
        if (!rd.object(o, path)) continue;
        rd.only_keys(o, path, {"center", "radius"});
        Obstacle ob;
        rd.vec2_member(o, "center", path, ob.center);
        rd.number(o, "radius", path, ob.radius, true);
        f.obstacles.push_back(ob);
      }
    }
  }

  if (const json* a = rd.member(root, "agents", "", true); a && rd.object(*a, "/agents")) {
    rd.only_keys(*a, "/agents", {"positions", "grid"});
    const bool has_pos = a->contains("positions");
    const bool has_grid = a->contains("grid");
    if (has_pos == has_grid) rd.fail("/agents", "give exactly one of \"positions\" or \"grid\"");
    if (has_pos) {
      const json& ps = (*a)["positions"];
      std::vector<Vec2> pts;
      if (!ps.is_array()) {
        rd.fail("/agents/positions", "expected an array");
      } else {
        for (std::size_t i = 0; i < ps.size(); ++i) {
          Vec2 p;
          if (rd.vec2(ps[i], "/agents/positions/" + std::to_string(i), p)) pts.push_back(p);
        }
      }
      f.agents = pts;
    } else if (has_grid) {
      const json& g = (*a)["grid"];
      GridSpec gs;
      if (rd.object(g, "/agents/grid")) {
        rd.only_keys(g, "/agents/grid", {"rows", "cols", "spacing", "origin"});
        rd.integer(g, "rows", "/agents/grid", gs.rows, true);
        rd.integer(g, "cols", "/agents/grid", gs.cols, true);
        rd.number(g, "spacing", "/agents/grid", gs.spacing, true);
        rd.vec2_member(g, "origin", "/agents/grid", gs.origin);
        if (gs.rows < 0) rd.fail("/agents/grid/rows", "must be >= 0");
        if (gs.cols < 0) rd.fail("/agents/grid/cols", "must be >= 0");
      }
      f.agents = gs;
    }
  }

  if (const json* c = rd.member(root, "control", "", true); c && rd.object(*c, "/control")) {
    rd.only_keys(*c, "/control",
                 {"v", "v_max_prime", "v_min", "v_max", "r_s", "r_a", "k_t", "k_2", "k_3", "eps_m", "eps_t", "eps_s",
                  "eps_0", "ext_factor", "k_5", "eps_o", "wall_projection"});
    auto& p = f.control;
    rd.number(*c, "v", "/control", p.v, true);
    rd.number(*c, "v_max_prime", "/control", p.v_max_prime, true);
    rd.number(*c, "v_min", "/control", p.v_min, true);
    rd.number(*c, "v_max", "/control", p.v_max, true);
    rd.number(*c, "r_s", "/control", p.r_s, true);
    rd.number(*c, "r_a", "/control", p.r_a, true);
    rd.number(*c, "k_t", "/control", p.k_t, false);
    rd.number(*c, "k_2", "/control", p.k_2, false);
    rd.number(*c, "k_3", "/control", p.k_3, false);
    rd.number(*c, "eps_m", "/control", p.eps_m, false);
    rd.number(*c, "eps_t", "/control", p.eps_t, false);
    rd.number(*c, "eps_s", "/control", p.eps_s, false);
    rd.number(*c, "eps_0", "/control", p.eps_0, false);
    rd.number(*c, "ext_factor", "/control", p.ext_factor, false);
    rd.optional_number(*c, "k_5", "/control", p.k_5);
    rd.optional_number(*c, "eps_o", "/control", p.eps_o);
    std::string wp = wall_projection_key(p.wall_projection);
    rd.string(*c, "wall_projection", "/control", wp, false);
    if (auto w = parse_wall_projection(wp))
      p.wall_projection = *w;
    else
      rd.fail("/control/wall_projection", "expected \"across\" or \"along\"");
  }

  if (const json* s = rd.member(root, "sim", "", true); s && rd.object(*s, "/sim")) {
    rd.only_keys(*s, "/sim", {"dt", "t_end", "beta_deg", "variant", "seed"});
    rd.number(*s, "dt", "/sim", f.dt, true);
    rd.number(*s, "t_end", "/sim", f.t_end, true);
    rd.number(*s, "beta_deg", "/sim", f.beta_deg, false);
    rd.integer(*s, "seed", "/sim", f.seed, false);
    std::string var = variant_key(f.variant);
    rd.string(*s, "variant", "/sim", var, false);
    if (auto v = parse_variant(var))
      f.variant = *v;
    else
      rd.fail("/sim/variant", "expected \"basic\" or \"modified\"");
  }

  if (!rd.errors.empty()) throw error_list(ErrorCode::SchemaError, rd.errors);
  return f;
}

/// Every semantic violation of a schema-valid scenario, each with a JSON
/// pointer. Empty when the scenario is runnable.
inline std::vector<std::string> scenario_violations(const ScenarioFile& f) {
  std::vector<std::string> out;
  if (!(f.dt > 0.0)) out.push_back("/sim/dt: must be > 0");
  if (!(f.t_end >= 0.0)) out.push_back("/sim/t_end: must be >= 0");
  if (!(f.beta_deg > 0.0 && f.beta_deg < 90.0)) out.push_back("/sim/beta_deg: must lie in (0, 90)");
  SimConfig cfg;
  try {
    cfg = to_config(f);
  } catch (const Error& e) {
    out.push_back(std::string("/tube: ") + e.what());
    for (const auto& c : parameter_checks(f.control))
      if (!admissible(c)) out.push_back("/control: " + c.name + " fails (" + fmt_num(c.lhs) + " vs " + fmt_num(c.rhs) + ")");
    return out;
  }
  if (!out.empty()) return out;
  const auto rep = validate_config(cfg);
  for (const auto& c : rep.initial.items)
    if (!c.pass) out.push_back("/agents: " + c.detail);
  for (const auto& c : parameter_checks(f.control))
    if (!admissible(c)) out.push_back("/control: " + c.name + " fails (" + fmt_num(c.lhs) + " vs " + fmt_num(c.rhs) + ")");
  for (const auto& c : tube_checks(cfg.tube, cfg.params, cfg.variant))
    if (!c.pass)
      out.push_back("/tube: " + c.name + " fails (" + fmt_num(c.lhs) + " vs " + fmt_num(c.rhs) + ") " + c.detail);
  if (rep.partition_error) out.push_back("/obstacles: " + *rep.partition_error);
  for (const auto& s : rep.sub_tubes)
    for (const auto& c : s.report.items)
      if (!c.pass)
        out.push_back("/obstacles: sub-tube " + std::to_string(s.index) + " " + c.name + " fails (" + fmt_num(c.lhs) +
                      " vs " + fmt_num(c.rhs) + ") " + c.detail);
  for (const auto& u : rep.unlocated_agents) out.push_back("/agents: " + u);
  return out;
}

/// Strict speed relations that hold only with equality. Commands then still
/// satisfy v_min <= |v_c| <= v_max, so these do not block a run.
inline std::vector<std::string> scenario_warnings(const ScenarioFile& f) {
  std::vector<std::string> out;
  for (const auto& c : parameter_checks(f.control))
    if (!c.pass && c.boundary)
      out.push_back("/control: " + c.name + " holds only with equality (" + fmt_num(c.lhs) + " = " + fmt_num(c.rhs) + ")");
  return out;
}

/// Schema parse followed by full validation; throws ValidationError listing
/// every violation.
inline ScenarioFile parse_scenario(const std::string& text) {
  auto f = parse_scenario_schema(text);
  const auto v = scenario_violations(f);
  if (!v.empty()) throw error_list(ErrorCode::ValidationError, v);
  return f;
}

inline std::string serialize_scenario(const ScenarioFile& f) {
  using nlohmann::json;
  json root;
  root["tube"] = {{"p_l0", detail::vec_json(f.p_l0)},
                  {"p_l1", detail::vec_json(f.p_l1)},
                  {"p_r0", detail::vec_json(f.p_r0)},
                  {"p_r1", detail::vec_json(f.p_r1)}};
  root["obstacles"] = json::array();
  for (const auto& o : f.obstacles)
    root["obstacles"].push_back({{"center", detail::vec_json(o.center)}, {"radius", o.radius}});
  if (const auto* g = std::get_if<GridSpec>(&f.agents)) {
    root["agents"]["grid"] = {
        {"rows", g->rows}, {"cols", g->cols}, {"spacing", g->spacing}, {"origin", detail::vec_json(g->origin)}};
  } else {
    json pts = json::array();
    for (const auto& p : std::get<std::vector<Vec2>>(f.agents)) pts.push_back(detail::vec_json(p));
    root["agents"]["positions"] = pts;
  }
  const auto& p = f.control;
  json c = {{"v", p.v},         {"v_max_prime", p.v_max_prime}, {"v_min", p.v_min},     {"v_max", p.v_max},
            {"r_s", p.r_s},     {"r_a", p.r_a},                 {"k_t", p.k_t},         {"k_2", p.k_2},
            {"k_3", p.k_3},     {"eps_m", p.eps_m},             {"eps_t", p.eps_t},     {"eps_s", p.eps_s},
            {"eps_0", p.eps_0}, {"ext_factor", p.ext_factor},   {"wall_projection", wall_projection_key(p.wall_projection)}};
  if (p.k_5) c["k_5"] = *p.k_5;
  if (p.eps_o) c["eps_o"] = *p.eps_o;
  root["control"] = c;
  root["sim"] = {{"dt", f.dt},
                 {"t_end", f.t_end},
                 {"beta_deg", f.beta_deg},
                 {"variant", variant_key(f.variant)},
                 {"seed", f.seed}};
  return root.dump(2) + "\n";
}

/// Reads a whole file; throws std::ios_base::failure when unreadable.
inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Vector-field raster
// ---------------------------------------------------------------------------

struct FieldCell {
  Vec2 p;
  Vec2 v;
  bool in_domain{false};
};

struct FieldRaster {
  Vec2 lo, hi;
  int nx{0}, ny{0};
  std::vector<FieldCell> cells;  // row-major, x fastest
};

/// Command field at cell centres over the tube's bounding box, with `ghosts`
/// as fixed neighbours. Cells outside the tube, inside an obstacle triangle
/// or where the command is undefined are marked out of domain.
inline FieldRaster compute_field(const SimConfig& cfg, int nx, int ny, const std::vector<Vec2>& ghosts) {
  if (nx <= 0 || ny <= 0) throw Error(ErrorCode::NonpositiveInput, "grid dimensions must be positive");
  SwitchedController ctrl(build_partition(cfg.tube, cfg.obstacles, cfg.params, cfg.beta), cfg.params, cfg.variant);
  FieldRaster r;
  r.nx = nx;
  r.ny = ny;
  r.lo = r.hi = cfg.tube.p_l0;
  for (const Vec2& v : cfg.tube.polygon()) {
    r.lo = {std::min(r.lo.x, v.x), std::min(r.lo.y, v.y)};
    r.hi = {std::max(r.hi.x, v.x), std::max(r.hi.y, v.y)};
  }
  Snapshot snap;
  snap.positions = ghosts;
  for (std::size_t g = 0; g < ghosts.size(); ++g) snap.ids.push_back(static_cast<std::int64_t>(g) + 1);
  snap.positions.push_back({});
  snap.ids.push_back(0);
  const std::size_t probe = ghosts.size();
  r.cells.reserve(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      FieldCell cell;
      cell.p = {r.lo.x + (i + 0.5) * (r.hi.x - r.lo.x) / nx, r.lo.y + (j + 0.5) * (r.hi.y - r.lo.y) / ny};
      if (contains(cfg.tube, cell.p)) {
        const std::size_t k = ctrl.locate(cell.p, kNoSubTube);
        if (k != kNoSubTube) {
          snap.positions[probe] = cell.p;
          try {
            cell.v = ctrl.command(snap, probe, k);
            cell.in_domain = is_finite(cell.v);
          } catch (const Error&) {
            cell.in_domain = false;
          }
        }
      }
      if (!cell.in_domain) cell.v = {};
      r.cells.push_back(cell);
    }
  }
  return r;
}

inline void write_field(std::ostream& os, const FieldRaster& r) {
  os << "x,y,vx,vy,domain\n";
  for (const auto& c : r.cells)
    os << fmt_num(c.p.x) << ',' << fmt_num(c.p.y) << ',' << fmt_num(c.v.x) << ',' << fmt_num(c.v.y) << ','
       << (c.in_domain ? "in" : "out") << '\n';
}

}  // namespace vtube
