#include "mcflab/cli_io.hpp"

#include "mcflab/acceptance.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>
#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#ifndef MCFLAB_VERSION
#define MCFLAB_VERSION "0.0.0"
#endif

namespace mcflab {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// YAML reading helpers

namespace {

std::string where(const std::string& origin, const YAML::Mark& m) {
  if (m.is_null()) return origin;
  return origin + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
}

// Error text without the kind prefix.
std::string bare(const Error& e) {
  const std::string msg = e.what();
  const std::string prefix = std::string(to_string(e.kind())) + ": ";
  return msg.rfind(prefix, 0) == 0 ? msg.substr(prefix.size()) : msg;
}

[[noreturn]] void invalid(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::validation_error, key + ": " + what);
}

class Reader {
 public:
  Reader(std::string origin) : origin_(std::move(origin)) {}

  void require_map(const YAML::Node& n, const std::string& key) const {
    if (!n.IsMap()) parse_fail(n, key, "expected a mapping");
  }

  void check_keys(const YAML::Node& n, const std::string& path, std::initializer_list<const char*> allowed) const {
    require_map(n, path.empty() ? "<root>" : path);
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = n.begin(); it != n.end(); ++it) {
      const std::string k = it->first.as<std::string>();
      if (!ok.count(k)) invalid(join(path, k), "unknown key (" + where(origin_, it->first.Mark()) + ")");
    }
  }

  double number(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) parse_fail(n, key, "expected a number");
    const std::string s = n.Scalar();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      if (s == ".inf" || s == "inf") return kInf;
      parse_fail(n, key, "expected a number, got '" + s + "'");
    }
    return v;
  }

  long integer(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) parse_fail(n, key, "expected an integer");
    const std::string s = n.Scalar();
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) parse_fail(n, key, "expected an integer, got '" + s + "'");
    return v;
  }

  std::string text(const YAML::Node& n, const std::string& key) const {
    if (!n.IsScalar()) parse_fail(n, key, "expected a string");
    return n.Scalar();
  }

  bool boolean(const YAML::Node& n, const std::string& key) const {
    const std::string s = text(n, key);
    if (s == "true" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "no" || s == "off") return false;
    parse_fail(n, key, "expected true or false");
  }

  Vec3 vec3(const YAML::Node& n, const std::string& key) const {
    if (!n.IsSequence() || n.size() != 3) parse_fail(n, key, "expected a list of three numbers");
    return Vec3(number(n[0], key), number(n[1], key), number(n[2], key));
  }

  std::vector<double> numbers(const YAML::Node& n, const std::string& key) const {
    if (!n.IsSequence()) parse_fail(n, key, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < n.size(); ++k) out.push_back(number(n[k], key));
    return out;
  }

  [[noreturn]] void parse_fail(const YAML::Node& n, const std::string& key, const std::string& what) const {
    throw Error(ErrorKind::parse_error, where(origin_, n.Mark()) + ": " + key + ": " + what);
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::string origin_;
};

YAML::Node load_yaml(const std::string& text, const std::string& origin) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorKind::parse_error, where(origin, e.mark) + ": " + e.msg);
  }
}

template <class E>
E pick(const std::string& key, const std::string& value, std::initializer_list<std::pair<const char*, E>> options) {
  std::string names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names += names.empty() ? name : std::string(", ") + name;
  }
  invalid(key, "unknown value '" + value + "' (expected one of " + names + ")");
}

AnalyticKind family_kind(const std::string& v) {
  return pick<AnalyticKind>("initial.family", v,
                            {{"plane", AnalyticKind::plane},
                             {"half_plane", AnalyticKind::half_plane},
                             {"sphere", AnalyticKind::sphere},
                             {"hemisphere", AnalyticKind::hemisphere}});
}

const char* initial_name(InitialKind k) {
  switch (k) {
    case InitialKind::zero: return "zero";
    case InitialKind::constant: return "constant";
    case InitialKind::exact: return "exact";
    case InitialKind::height_field: return "height_field";
  }
  return "?";
}

const char* query_name(QueryType t) {
  switch (t) {
    case QueryType::interior: return "interior";
    case QueryType::boundary: return "boundary";
    case QueryType::scan: return "scan";
  }
  return "?";
}

MonitorQuery read_query(const Reader& rd, const YAML::Node& n, const std::string& path, std::size_t index) {
  rd.check_keys(n, path,
                {"name", "type", "point", "terminal_time", "r", "kappa", "require_clearance", "sample_times",
                 "epsilon", "radii"});
  MonitorQuery q;
  q.name = n["name"] ? rd.text(n["name"], path + ".name") : "q" + std::to_string(index);
  if (!n["type"]) invalid(path + ".type", "missing");
  q.type = pick<QueryType>(path + ".type", rd.text(n["type"], path + ".type"),
                           {{"interior", QueryType::interior},
                            {"boundary", QueryType::boundary},
                            {"scan", QueryType::scan}});
  if (n["point"]) q.point = rd.vec3(n["point"], path + ".point");
  if (n["terminal_time"]) q.terminal_time = rd.number(n["terminal_time"], path + ".terminal_time");
  if (n["r"]) q.r = rd.number(n["r"], path + ".r");
  if (n["kappa"]) q.kappa = rd.number(n["kappa"], path + ".kappa");
  if (n["require_clearance"]) q.require_clearance = rd.boolean(n["require_clearance"], path + ".require_clearance");
  if (n["sample_times"]) q.sample_times = rd.numbers(n["sample_times"], path + ".sample_times");
  if (n["epsilon"]) q.epsilon = rd.number(n["epsilon"], path + ".epsilon");
  if (n["radii"]) q.radii = rd.numbers(n["radii"], path + ".radii");
  if (q.type == QueryType::scan) {
    if (!(q.epsilon > 0.0)) invalid(path + ".epsilon", "must be > 0");
    if (q.radii.empty()) invalid(path + ".radii", "must list at least one radius");
    for (double r : q.radii)
      if (!(r > 0.0)) invalid(path + ".radii", "radii must be > 0");
  } else {
    if (!(q.r > 0.0)) invalid(path + ".r", "must be > 0");
    if (q.kappa < 0.0) invalid(path + ".kappa", "must be >= 0");
    if (!n["terminal_time"]) invalid(path + ".terminal_time", "missing");
  }
  return q;
}

std::vector<MonitorQuery> read_queries(const Reader& rd, const YAML::Node& n, const std::string& path) {
  if (!n.IsSequence()) rd.parse_fail(n, path, "expected a list of queries");
  std::vector<MonitorQuery> out;
  std::set<std::string> names;
  for (std::size_t k = 0; k < n.size(); ++k) {
    out.push_back(read_query(rd, n[k], path + "[" + std::to_string(k) + "]", k));
    if (!names.insert(out.back().name).second) invalid(path, "duplicate query name '" + out.back().name + "'");
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenario

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  const YAML::Node root = load_yaml(text, origin);
  const Reader rd(origin);
  Scenario s;
  if (root.IsNull()) return s;
  rd.check_keys(root, "", {"patch", "initial", "grid", "flow", "monitors", "output", "derived"});

  if (const YAML::Node p = root["patch"]) {
    rd.check_keys(p, "patch", {"kind", "phi", "kappa", "chart_radius", "lattice_spacing"});
    if (p["kind"])
      s.patch.kind = pick<PatchKind>("patch.kind", rd.text(p["kind"], "patch.kind"),
                                     {{"flat", PatchKind::flat},
                                      {"analytic-quadric", PatchKind::analytic_quadric},
                                      {"analytic_quadric", PatchKind::analytic_quadric},
                                      {"sampled", PatchKind::sampled}});
    if (p["phi"]) s.patch.phi = rd.text(p["phi"], "patch.phi");
    if (p["kappa"]) s.patch.kappa = rd.number(p["kappa"], "patch.kappa");
    if (p["chart_radius"]) s.patch.chart_radius = rd.number(p["chart_radius"], "patch.chart_radius");
    if (p["lattice_spacing"]) s.patch.lattice_spacing = rd.number(p["lattice_spacing"], "patch.lattice_spacing");
  }
  if (s.patch.kappa < 0.0 || !std::isfinite(s.patch.kappa)) invalid("patch.kappa", "must be a finite number >= 0");
  if (s.patch.chart_radius && !(*s.patch.chart_radius > 0.0)) invalid("patch.chart_radius", "must be > 0");
  if (s.patch.lattice_spacing && !(*s.patch.lattice_spacing > 0.0)) invalid("patch.lattice_spacing", "must be > 0");

  if (const YAML::Node i = root["initial"]) {
    rd.check_keys(i, "initial", {"kind", "value", "family", "radius", "center", "normal", "file", "topology"});
    if (i["kind"])
      s.initial.kind = pick<InitialKind>("initial.kind", rd.text(i["kind"], "initial.kind"),
                                         {{"zero", InitialKind::zero},
                                          {"constant", InitialKind::constant},
                                          {"exact", InitialKind::exact},
                                          {"height_field", InitialKind::height_field}});
    if (i["value"]) s.initial.value = rd.number(i["value"], "initial.value");
    if (i["family"]) s.initial.family.kind = family_kind(rd.text(i["family"], "initial.family"));
    if (i["radius"]) s.initial.family.R0 = rd.number(i["radius"], "initial.radius");
    if (i["center"]) s.initial.family.center = rd.vec3(i["center"], "initial.center");
    if (i["normal"]) s.initial.family.normal = rd.vec3(i["normal"], "initial.normal");
    if (i["file"]) s.initial.file = rd.text(i["file"], "initial.file");
    if (i["topology"])
      s.initial.topology = pick<Topology>("initial.topology", rd.text(i["topology"], "initial.topology"),
                                          {{"untagged", Topology::untagged},
                                           {"disk", Topology::disk},
                                           {"sphere", Topology::sphere}});
  }
  if (s.initial.kind == InitialKind::exact) {
    const auto k = s.initial.family.kind;
    if ((k == AnalyticKind::sphere || k == AnalyticKind::hemisphere) && !(s.initial.family.R0 > 0.0))
      invalid("initial.radius", "must be > 0");
    if ((k == AnalyticKind::plane || k == AnalyticKind::half_plane) && !(s.initial.family.normal.norm() > 0.0))
      invalid("initial.normal", "must be non-zero");
    s.initial.family.normal.normalize();
  }
  if (s.initial.kind == InitialKind::height_field && s.initial.file.empty()) invalid("initial.file", "missing");

  if (const YAML::Node g = root["grid"]) {
    rd.check_keys(g, "grid", {"shape", "h", "r_dom"});
    if (g["shape"])
      s.grid.shape = pick<DomainShape>("grid.shape", rd.text(g["shape"], "grid.shape"),
                                       {{"half_disk", DomainShape::half_disk},
                                        {"disk", DomainShape::disk},
                                        {"half_strip", DomainShape::half_strip}});
    if (g["h"]) s.grid.h = rd.number(g["h"], "grid.h");
    if (g["r_dom"]) s.grid.r_dom = rd.number(g["r_dom"], "grid.r_dom");
  }
  try {
    Grid(s.grid.shape, s.grid.h, s.grid.r_dom);
  } catch (const Error& e) {
    invalid("grid", bare(e));
  }

  if (const YAML::Node f = root["flow"]) {
    rd.check_keys(f, "flow",
                  {"cfl", "t_end", "scheme", "outer_bc", "snapshot_stride", "blowup_threshold", "max_steps",
                   "implicit_dt_factor", "jacobi_iterations", "chart_bound"});
    FlowConfig& c = s.flow;
    if (f["cfl"]) c.cfl = rd.number(f["cfl"], "flow.cfl");
    if (f["t_end"]) c.t_end = rd.number(f["t_end"], "flow.t_end");
    if (f["scheme"])
      c.scheme = pick<Scheme>("flow.scheme", rd.text(f["scheme"], "flow.scheme"),
                              {{"explicit", Scheme::explicit_euler},
                               {"explicit-euler", Scheme::explicit_euler},
                               {"semi-implicit", Scheme::semi_implicit},
                               {"semi-implicit-linearized", Scheme::semi_implicit}});
    if (f["outer_bc"])
      c.outer_bc = pick<OuterBC>("flow.outer_bc", rd.text(f["outer_bc"], "flow.outer_bc"),
                                 {{"frozen", OuterBC::frozen},
                                  {"dirichlet-exact", OuterBC::dirichlet_exact},
                                  {"periodic-strip", OuterBC::periodic_strip}});
    if (f["snapshot_stride"]) c.snapshot_stride = static_cast<int>(rd.integer(f["snapshot_stride"], "flow.snapshot_stride"));
    if (f["blowup_threshold"]) c.blowup_threshold = rd.number(f["blowup_threshold"], "flow.blowup_threshold");
    if (f["max_steps"]) {
      const long m = rd.integer(f["max_steps"], "flow.max_steps");
      if (m < 1) invalid("flow.max_steps", "must be >= 1");
      c.max_steps = static_cast<std::size_t>(m);
    }
    if (f["implicit_dt_factor"]) c.implicit_dt_factor = rd.number(f["implicit_dt_factor"], "flow.implicit_dt_factor");
    if (f["jacobi_iterations"])
      c.jacobi_iterations = static_cast<int>(rd.integer(f["jacobi_iterations"], "flow.jacobi_iterations"));
    if (f["chart_bound"]) c.chart_bound = rd.number(f["chart_bound"], "flow.chart_bound");
  }
  if (s.initial.kind == InitialKind::exact) s.flow.exact = s.initial.family;
  try {
    s.flow.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::validation_error, "flow." + bare(e));
  }

  if (const YAML::Node m = root["monitors"]) s.monitors = read_queries(rd, m, "monitors");
  if (const YAML::Node o = root["output"]) {
    rd.check_keys(o, "output", {"directory"});
    if (o["directory"]) s.output = rd.text(o["directory"], "output.directory");
  }

  // Catalog and geometric consistency of the patch.
  try {
    const PatchPtr patch = make_patch(s.patch);
    if (s.initial.kind == InitialKind::exact && !patch->is_flat())
      invalid("initial.family", "exact families need a flat support");
  } catch (const Error& e) {
    if (bare(e).rfind("initial.", 0) == 0) throw;
    invalid("patch", bare(e));
  }
  return s;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot read scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  Scenario s = parse_scenario(ss.str(), path.string());
  s.base_dir = path.parent_path();
  return s;
}

std::vector<MonitorQuery> parse_queries(const std::string& text, const std::string& origin) {
  const YAML::Node root = load_yaml(text, origin);
  const Reader rd(origin);
  rd.check_keys(root, "", {"queries"});
  if (!root["queries"]) invalid("queries", "missing");
  return read_queries(rd, root["queries"], "queries");
}

PatchPtr make_patch(const PatchSpec& spec) {
  if (spec.kind == PatchKind::flat) {
    if (spec.phi != "flat") invalid("patch.phi", "a flat patch uses phi = flat");
    return std::make_shared<SupportPatch>(SupportPatch::flat(spec.chart_radius));
  }
  return std::make_shared<SupportPatch>(
      SupportPatch::from_catalog(spec.kind, spec.phi, spec.kappa, spec.chart_radius, spec.lattice_spacing));
}

GraphSurface make_initial(const Scenario& s, PatchPtr patch) {
  const Grid grid(s.grid.shape, s.grid.h, s.grid.r_dom);
  GraphSurface g;
  switch (s.initial.kind) {
    case InitialKind::zero:
    case InitialKind::constant: {
      g = GraphSurface(patch, grid, 0.0);
      const double v = s.initial.kind == InitialKind::zero ? 0.0 : s.initial.value;
      g.fill([v](double, double) { return v; });
      g.apply_ghosts();
      g.topology = Topology::disk;
      break;
    }
    case InitialKind::exact:
      g = exact_graph(s.initial.family, patch, grid, 0.0);
      break;
    case InitialKind::height_field: {
      const fs::path p = fs::path(s.initial.file).is_absolute() ? fs::path(s.initial.file) : s.base_dir / s.initial.file;
      std::ifstream in(p);
      if (!in) throw Error(ErrorKind::io_error, "cannot read height field " + p.string());
      g = read_height_field(in, patch);
      if (g.grid.shape() != grid.shape() || std::abs(g.grid.h() - grid.h()) > 1e-12 ||
          std::abs(g.grid.r_dom() - grid.r_dom()) > 1e-12)
        invalid("initial.file", "height field grid differs from the grid section");
      break;
    }
  }
  if (s.initial.topology) g.topology = *s.initial.topology;
  return g;
}

// ---------------------------------------------------------------------------
// Echo

namespace {

ojson vec_json(const Vec3& v) { return ojson::array({v.x(), v.y(), v.z()}); }

ojson scenario_object(const Scenario& s) {
  ojson j;
  ojson p;
  p["kind"] = to_string(s.patch.kind);
  p["phi"] = s.patch.phi;
  p["kappa"] = s.patch.kappa;
  if (s.patch.chart_radius) p["chart_radius"] = *s.patch.chart_radius;
  if (s.patch.lattice_spacing) p["lattice_spacing"] = *s.patch.lattice_spacing;
  j["patch"] = p;

  ojson i;
  i["kind"] = initial_name(s.initial.kind);
  if (s.initial.kind == InitialKind::constant) i["value"] = s.initial.value;
  if (s.initial.kind == InitialKind::exact) {
    i["family"] = to_string(s.initial.family.kind);
    i["radius"] = s.initial.family.R0;
    i["center"] = vec_json(s.initial.family.center);
    i["normal"] = vec_json(s.initial.family.normal);
  }
  if (s.initial.kind == InitialKind::height_field) i["file"] = s.initial.file;
  if (s.initial.topology) i["topology"] = to_string(*s.initial.topology);
  j["initial"] = i;

  j["grid"] = ojson{{"shape", to_string(s.grid.shape)}, {"h", s.grid.h}, {"r_dom", s.grid.r_dom}};

  const FlowConfig& c = s.flow;
  ojson f;
  f["cfl"] = c.cfl;
  f["t_end"] = c.t_end;
  f["scheme"] = to_string(c.scheme);
  f["outer_bc"] = to_string(c.outer_bc);
  f["snapshot_stride"] = c.snapshot_stride;
  f["blowup_threshold"] = c.blowup_threshold;
  f["max_steps"] = c.max_steps;
  f["implicit_dt_factor"] = c.implicit_dt_factor;
  f["jacobi_iterations"] = c.jacobi_iterations;
  if (c.chart_bound) f["chart_bound"] = *c.chart_bound;
  j["flow"] = f;

  if (!s.monitors.empty()) {
    ojson m = ojson::array();
    for (const auto& q : s.monitors) {
      ojson e;
      e["name"] = q.name;
      e["type"] = query_name(q.type);
      if (q.type == QueryType::scan) {
        e["epsilon"] = q.epsilon;
        e["radii"] = q.radii;
      } else {
        e["point"] = vec_json(q.point);
        e["terminal_time"] = q.terminal_time;
        if (q.type == QueryType::interior) {
          e["r"] = q.r;
          e["require_clearance"] = q.require_clearance;
        } else {
          e["kappa"] = q.kappa;
        }
        if (!q.sample_times.empty()) e["sample_times"] = q.sample_times;
      }
      m.push_back(e);
    }
    j["monitors"] = m;
  }
  j["output"] = ojson{{"directory", s.output}};

  ojson d;
  if (s.initial.kind == InitialKind::exact &&
      (s.initial.family.kind == AnalyticKind::sphere || s.initial.family.kind == AnalyticKind::hemisphere))
    d["singular_time"] = s.initial.family.singular_time();
  d["stable_dt_initial_bound"] = s.flow.cfl * s.grid.h * s.grid.h;
  j["derived"] = d;
  return j;
}

void emit_yaml(YAML::Emitter& e, const ojson& j) {
  if (j.is_object()) {
    e << YAML::BeginMap;
    for (const auto& [k, v] : j.items()) {
      e << YAML::Key << k << YAML::Value;
      emit_yaml(e, v);
    }
    e << YAML::EndMap;
  } else if (j.is_array()) {
    const bool flow = std::all_of(j.begin(), j.end(), [](const ojson& x) { return x.is_primitive(); });
    if (flow) e << YAML::Flow;
    e << YAML::BeginSeq;
    for (const auto& v : j) emit_yaml(e, v);
    e << YAML::EndSeq;
  } else if (j.is_number_float()) {
    e << format_number(j.get<double>());
  } else if (j.is_number()) {
    e << j.dump();
  } else if (j.is_boolean()) {
    e << (j.get<bool>() ? "true" : "false");
  } else if (j.is_string()) {
    e << j.get<std::string>();
  } else {
    e << YAML::Null;
  }
}

}  // namespace

std::string scenario_yaml(const Scenario& s) {
  YAML::Emitter e;
  emit_yaml(e, scenario_object(s));
  return std::string(e.c_str()) + "\n";
}

std::string scenario_json(const Scenario& s) { return scenario_object(s).dump(2); }

// ---------------------------------------------------------------------------
// Persistence

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  if (std::isnan(v)) return ".nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

void write_height_field(std::ostream& out, const GraphSurface& s, std::size_t step) {
  out << "mcflab-height-field 1\n";
  out << "shape " << to_string(s.grid.shape()) << '\n';
  out << "h " << format_number(s.grid.h()) << '\n';
  out << "r_dom " << format_number(s.grid.r_dom()) << '\n';
  out << "t " << format_number(s.t) << '\n';
  out << "step " << step << '\n';
  out << "topology " << to_string(s.topology) << '\n';
  out << "values " << s.u.size() << '\n';
  for (double v : s.u) out << format_number(v) << '\n';
}

namespace {

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    if (s == ".inf") return kInf;
    if (s == "-.inf") return -kInf;
    if (s == ".nan") return std::nan("");
    throw Error(ErrorKind::parse_error, "height field: bad number for " + what + ": '" + s + "'");
  }
  return v;
}

std::string expect(std::istream& in, const std::string& key) {
  std::string k, v;
  if (!(in >> k >> v) || k != key) throw Error(ErrorKind::parse_error, "height field: expected '" + key + "'");
  return v;
}

}  // namespace

GraphSurface read_height_field(std::istream& in, PatchPtr patch, std::size_t* step) {
  if (expect(in, "mcflab-height-field") != "1") throw Error(ErrorKind::parse_error, "height field: unknown version");
  const std::string shape = expect(in, "shape");
  const DomainShape ds = pick<DomainShape>("shape", shape,
                                           {{"half_disk", DomainShape::half_disk},
                                            {"disk", DomainShape::disk},
                                            {"half_strip", DomainShape::half_strip}});
  const double h = parse_double(expect(in, "h"), "h");
  const double r = parse_double(expect(in, "r_dom"), "r_dom");
  const double t = parse_double(expect(in, "t"), "t");
  const std::size_t st = std::stoul(expect(in, "step"));
  const Topology topo = pick<Topology>("topology", expect(in, "topology"),
                                       {{"untagged", Topology::untagged},
                                        {"disk", Topology::disk},
                                        {"sphere", Topology::sphere}});
  const std::size_t n = std::stoul(expect(in, "values"));
  GraphSurface g(std::move(patch), Grid(ds, h, r), t);
  if (n != g.u.size()) throw Error(ErrorKind::parse_error, "height field: value count does not match the grid");
  std::string tok;
  for (std::size_t k = 0; k < n; ++k) {
    if (!(in >> tok)) throw Error(ErrorKind::parse_error, "height field: truncated values");
    g.u[k] = parse_double(tok, "value");
  }
  g.topology = topo;
  if (step) *step = st;
  return g;
}

void write_monitor_csv(std::ostream& out, const std::vector<MonitorRow>& rows) {
  out << "t,area,perimeter,energy,max_H,max_A\n";
  for (const auto& r : rows)
    out << format_number(r.t) << ',' << format_number(r.area) << ',' << format_number(r.perimeter) << ','
        << format_number(r.energy) << ',' << format_number(r.max_H) << ',' << format_number(r.max_A) << '\n';
}

void write_density_csv(std::ostream& out, const DensityReport& rep) {
  out << "t,value,violation\n";
  for (std::size_t k = 0; k < rep.values.size(); ++k)
    out << format_number(rep.times[k]) << ',' << format_number(rep.values[k]) << ','
        << format_number(rep.violation[k]) << '\n';
}

void write_scan_csv(std::ostream& out, const SingularScan& scan) {
  out << "px,py,pz,r,mass,flagged\n";
  for (const auto& c : scan.candidates)
    for (std::size_t j = 0; j < scan.r_grid.size(); ++j)
      out << format_number(c.P.x()) << ',' << format_number(c.P.y()) << ',' << format_number(c.P.z()) << ','
          << format_number(scan.r_grid[j]) << ',' << format_number(c.mass[j]) << ','
          << (c.mass[j] >= scan.epsilon ? 1 : 0) << '\n';
}

void write_planarity_csv(std::ostream& out, const PlanarityReport& rep) {
  out << "deviation,sheets,fit_nx,fit_ny,fit_nz\n";
  out << format_number(rep.deviation) << ',' << rep.sheets << ',' << format_number(rep.normal.x()) << ','
      << format_number(rep.normal.y()) << ',' << format_number(rep.normal.z()) << '\n';
}

std::uint32_t file_crc32(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_error, "cannot read " + path.string());
  uLong crc = crc32(0L, Z_NULL, 0);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = in.gcount();
    if (got > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(got));
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io_error, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorKind::io_error, "write failed for " + path.string());
}

template <class F>
void write_with(const fs::path& path, F&& f) {
  std::ostringstream ss;
  f(ss);
  write_file(path, ss.str());
}

ojson read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) return ojson::object();
  try {
    return ojson::parse(in);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::parse_error, "manifest.json: " + std::string(e.what()));
  }
}

void write_manifest(const fs::path& dir, ojson m) {
  ojson files = ojson::array();
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths)
    files.push_back(ojson{{"name", p.filename().string()},
                          {"bytes", static_cast<std::uint64_t>(fs::file_size(p))},
                          {"crc32", hex32(file_crc32(p))}});
  m["files"] = files;
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace

void save_trajectory(const fs::path& dir, const Scenario& s, const Trajectory& traj, double wall_seconds) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io_error, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& snap : traj.snapshots) {
    const GraphSurface* g = snap.graph();
    if (!g) continue;
    const std::string stem = "snap_" + std::to_string(snap.step);
    write_with(dir / (stem + ".obj"), [&](std::ostream& o) { write_mesh(o, *g); });
    write_with(dir / (stem + ".hf"), [&](std::ostream& o) { write_height_field(o, *g, snap.step); });
  }
  write_with(dir / "monitors.csv", [&](std::ostream& o) { write_monitor_csv(o, traj.monitors); });
  const std::string echo = scenario_yaml(s);
  write_file(dir / "scenario.yaml", echo);

  ojson m;
  m["tool"] = "mcflab";
  m["version"] = MCFLAB_VERSION;
  m["scenario_hash"] = hex32(static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(echo.data()), static_cast<uInt>(echo.size()))));
  m["scenario"] = scenario_object(s);
  m["stop_reason"] = to_string(traj.stop_reason);
  m["stop_message"] = traj.stop_message;
  m["steps"] = traj.steps;
  m["snapshots"] = traj.snapshots.size();
  m["final_time"] = traj.snapshots.empty() ? 0.0 : traj.snapshots.back().t;
  m["wall_time_seconds"] = wall_seconds;
  write_manifest(dir, m);
}

void refresh_manifest(const fs::path& dir) { write_manifest(dir, read_manifest(dir)); }

StoredTrajectory load_trajectory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::io_error, dir.string() + " is not a directory");
  if (!fs::exists(dir / "scenario.yaml"))
    throw Error(ErrorKind::io_error, dir.string() + " holds no stored trajectory (scenario.yaml missing)");
  StoredTrajectory st;
  st.scenario = load_scenario(dir / "scenario.yaml");
  const PatchPtr patch = make_patch(st.scenario.patch);
  std::vector<std::pair<std::size_t, GraphSurface>> snaps;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (!e.is_regular_file() || name.rfind("snap_", 0) != 0 || e.path().extension() != ".hf") continue;
    std::ifstream in(e.path());
    std::size_t step = 0;
    GraphSurface g = read_height_field(in, patch, &step);
    snaps.emplace_back(step, std::move(g));
  }
  if (snaps.empty()) throw Error(ErrorKind::insufficient_snapshots, dir.string() + " holds no snapshots");
  std::sort(snaps.begin(), snaps.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  st.trajectory.patch = patch;
  for (auto& [step, g] : snaps) {
    const double t = g.t;
    st.trajectory.snapshots.push_back(Snapshot{t, step, std::move(g)});
  }
  const ojson m = read_manifest(dir);
  if (m.contains("steps")) st.trajectory.steps = m["steps"].get<std::size_t>();
  if (m.contains("stop_message")) st.trajectory.stop_message = m["stop_message"].get<std::string>();
  if (m.contains("stop_reason")) {
    const std::string r = m["stop_reason"].get<std::string>();
    for (StopReason s : {StopReason::completed, StopReason::blowup, StopReason::cfl_violation, StopReason::chart_exit,
                         StopReason::non_finite, StopReason::past_singularity})
      if (r == to_string(s)) st.trajectory.stop_reason = s;
  }
  return st;
}

// ---------------------------------------------------------------------------
// Commands

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::cfl_violation:
    case ErrorKind::chart_exit:
    case ErrorKind::non_finite:
    case ErrorKind::past_singularity:
    case ErrorKind::no_convergence:
    case ErrorKind::singular_metric:
    case ErrorKind::reflection_condition_violated:
      return exit_numerical;
    default:
      return exit_validation;
  }
}

namespace {

template <class F>
int guarded(std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return exit_validation;
  }
}

void run_queries(const fs::path& dir, const Trajectory& traj, const std::vector<MonitorQuery>& queries,
                 std::ostream& log) {
  for (const auto& q : queries) {
    if (q.type == QueryType::scan) {
      const auto scan = singular_set_scan(traj, q.epsilon, q.radii);
      write_with(dir / ("scan_" + q.name + ".csv"), [&](std::ostream& o) { write_scan_csv(o, scan); });
      log << "scan " << q.name << ": t = " << format_number(scan.t) << ", energy "
          << format_number(scan.total_energy) << ", clusters " << scan.clusters.size() << '\n';
      continue;
    }
    DensityQuery dq;
    dq.P = q.point;
    dq.T = q.terminal_time;
    dq.location = q.type == QueryType::interior ? DensityLocation::interior : DensityLocation::boundary;
    dq.r = q.r;
    dq.kappa = q.kappa;
    dq.options.require_clearance = q.require_clearance;
    dq.sample_times = q.sample_times;
    if (dq.sample_times.empty())
      for (const auto& s : traj.snapshots)
        if (s.t < dq.T) dq.sample_times.push_back(s.t);
    const auto rep = monotonicity_report(traj, dq);
    write_with(dir / ("density_" + q.name + ".csv"), [&](std::ostream& o) { write_density_csv(o, rep); });
    log << "density " << q.name << ": " << rep.values.size() << " samples, last "
        << format_number(rep.values.back()) << ", max upward violation " << format_number(rep.max_upward_violation)
        << '\n';
  }
}

}  // namespace

int command_run(const fs::path& scenario, std::ostream& log) {
  return guarded(log, [&] {
    const Scenario s = load_scenario(scenario);
    const PatchPtr patch = make_patch(s.patch);
    const GraphSurface init = make_initial(s, patch);
    const auto t0 = std::chrono::steady_clock::now();
    Trajectory traj = run(init, s.flow);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const fs::path dir = s.output;
    save_trajectory(dir, s, traj, wall);
    log << "run: " << traj.steps << " steps, t = " << format_number(traj.snapshots.back().t) << ", stop "
        << to_string(traj.stop_reason);
    if (!traj.stop_message.empty()) log << " (" << traj.stop_message << ")";
    log << "\n";
    if (!s.monitors.empty()) {
      run_queries(dir, traj, s.monitors, log);
      refresh_manifest(dir);
    }
    log << "wrote " << dir.string() << '\n';
    return traj.stop_reason == StopReason::completed ? exit_ok : exit_numerical;
  });
}

int command_monitor(const fs::path& dir, const fs::path& queries, std::ostream& log) {
  return guarded(log, [&] {
    const StoredTrajectory st = load_trajectory(dir);
    std::ifstream in(queries);
    if (!in) throw Error(ErrorKind::io_error, "cannot read query file " + queries.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const auto qs = parse_queries(ss.str(), queries.string());
    run_queries(dir, st.trajectory, qs, log);
    refresh_manifest(dir);
    return exit_ok;
  });
}

int command_rescale(const fs::path& dir, const RescaleOptions& o, std::ostream& log) {
  return guarded(log, [&] {
    if (o.lambda.has_value() == o.s.has_value()) invalid("rescale", "give exactly one of --lambda and --s");
    const StoredTrajectory st = load_trajectory(dir);
    const RescalingFrame f = o.lambda ? parabolic_rescale(st.trajectory, o.point, o.terminal_time, *o.lambda, o.tau)
                                      : normalized_frame(st.trajectory, o.point, o.terminal_time, *o.s);
    const std::string stem = "frame_" + std::to_string(f.snapshot.step);
    if (const auto* g = f.snapshot.graph())
      write_with(dir / (stem + ".obj"), [&](std::ostream& out) { write_mesh(out, *g); });
    const PlanarityReport rep = planarity_multiplicity(f, o.region_radius);
    write_with(dir / "planarity.csv", [&](std::ostream& out) { write_planarity_csv(out, rep); });
    refresh_manifest(dir);
    log << "rescale (" << to_string(f.mode) << "): lambda " << format_number(f.lambda) << ", source t "
        << format_number(f.source_time) << " (offset " << format_number(f.time_offset) << "), deviation "
        << format_number(rep.deviation) << ", sheets " << rep.sheets << '\n';
    return exit_ok;
  });
}

int command_verify(bool fast, std::ostream& log) {
  return guarded(log, [&] {
    int failed = 0;
    for (const auto& r : run_acceptance(fast)) {
      log << format_result(r) << '\n';
      if (!r.pass) ++failed;
    }
    log << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
    return failed == 0 ? exit_ok : exit_verify_failed;
  });
}

}  // namespace mcflab
