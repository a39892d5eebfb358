#include "doctest.h"

#include "mcflab/cli_io.hpp"

#include <fstream>
#include <sstream>

using namespace mcflab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mcflab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void put(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_text(const std::string& yaml) {
  try {
    parse_scenario(yaml, "case.yaml");
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("scenario defaults") {
  const Scenario s = parse_scenario("");
  CHECK(s.flow.cfl == 0.2);
  CHECK(s.flow.scheme == Scheme::explicit_euler);
  CHECK(s.flow.outer_bc == OuterBC::frozen);
  CHECK(s.patch.kind == PatchKind::flat);
  CHECK(s.grid.shape == DomainShape::half_disk);
  const std::string echo = scenario_yaml(s);
  CHECK(echo.find("cfl: 0.2") != std::string::npos);
  CHECK(echo.find("scheme: explicit-euler") != std::string::npos);
  // The echo parses back to the same scenario.
  CHECK(scenario_yaml(parse_scenario(echo)) == echo);
}

TEST_CASE("validation names the offending key") {
  const std::string msg = error_text("patch:\n  kind: analytic-quadric\n  phi: sphere_cap(2)\n  kappa: -1\n");
  CHECK(msg.find("validation-error") != std::string::npos);
  CHECK(msg.find("patch.kappa") != std::string::npos);
  CHECK(error_text("flow:\n  cfl: 0.5\n").find("flow.cfl") != std::string::npos);
  CHECK(error_text("flow:\n  scheme: leapfrog\n").find("flow.scheme") != std::string::npos);
  CHECK(error_text("grid:\n  h: 0.3\n  r_dom: 0.5\n").find("grid") != std::string::npos);
  CHECK(error_text("flow:\n  outer_bc: dirichlet-exact\n").find("flow.outer_bc") != std::string::npos);
}

TEST_CASE("unknown keys and malformed values carry positions") {
  const std::string unknown = error_text("grid:\n  h: 0.03125\n  spacing: 2\n");
  CHECK(unknown.find("grid.spacing") != std::string::npos);
  CHECK(unknown.find("case.yaml:3:3") != std::string::npos);
  const std::string bad = error_text("flow:\n  t_end: soon\n");
  CHECK(bad.find("parse-error") != std::string::npos);
  CHECK(bad.find("case.yaml:2:10") != std::string::npos);
  const std::string broken = error_text("flow: [1, 2\n");
  CHECK(broken.find("parse-error") != std::string::npos);
  CHECK(broken.find("case.yaml:") != std::string::npos);
}

TEST_CASE("hemisphere echo reports the singular time") {
  const Scenario s = parse_scenario(
      "initial:\n  kind: exact\n  family: hemisphere\n  radius: 1\n"
      "flow:\n  outer_bc: dirichlet-exact\n  t_end: 0.01\n");
  REQUIRE(s.flow.exact);
  CHECK(s.flow.exact->singular_time() == 0.25);
  CHECK(scenario_yaml(s).find("singular_time: 0.25") != std::string::npos);
  CHECK(scenario_json(s).find("\"singular_time\": 0.25") != std::string::npos);
}

TEST_CASE("height fields round-trip exactly") {
  auto patch = std::make_shared<SupportPatch>(SupportPatch::flat());
  GraphSurface g(patch, Grid(DomainShape::half_disk, 1.0 / 16, 0.5), 0.1 / 3.0);
  g.fill([](double y1, double y2) { return std::sin(3.0 * y1) * std::exp(y2) / 7.0; });
  g.apply_ghosts();
  g.topology = Topology::disk;
  std::stringstream ss;
  write_height_field(ss, g, 42);
  std::size_t step = 0;
  const GraphSurface r = read_height_field(ss, patch, &step);
  CHECK(step == 42);
  CHECK(r.t == g.t);
  CHECK(r.topology == Topology::disk);
  REQUIRE(r.u.size() == g.u.size());
  bool same = true;
  for (std::size_t k = 0; k < g.u.size(); ++k) same = same && r.u[k] == g.u[k];
  CHECK(same);
  CHECK(format_number(0.1) == "0.1");
}

TEST_CASE("run, monitor and rescale on disk") {
  const fs::path dir = scratch("run");
  put(dir / "s.yaml",
      "initial:\n  kind: exact\n  family: hemisphere\n  radius: 1\n"
      "grid:\n  h: 0.0625\n  r_dom: 0.5\n"
      "flow:\n  outer_bc: dirichlet-exact\n  t_end: 0.02\n  snapshot_stride: 20\n"
      "output:\n  directory: " + (dir / "out").string() + "\n");
  std::ostringstream log;
  REQUIRE(command_run(dir / "s.yaml", log) == exit_ok);
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK(fs::exists(dir / "out" / "snap_0.obj"));
  CHECK(fs::exists(dir / "out" / "snap_0.hf"));
  const std::string monitors = slurp(dir / "out" / "monitors.csv");
  CHECK(monitors.rfind("t,area,perimeter,energy,max_H,max_A\n", 0) == 0);

  // A second identical run writes identical CSV bytes.
  const std::string first = slurp(dir / "out" / "monitors.csv");
  std::ostringstream log2;
  REQUIRE(command_run(dir / "s.yaml", log2) == exit_ok);
  CHECK(slurp(dir / "out" / "monitors.csv") == first);

  const StoredTrajectory st = load_trajectory(dir / "out");
  CHECK(st.trajectory.snapshots.size() >= 2);
  CHECK(st.trajectory.stop_reason == StopReason::completed);
  CHECK(st.trajectory.snapshots.front().t == 0.0);

  put(dir / "q.yaml",
      "queries:\n  - name: top\n    type: interior\n    point: [0, 0, 0]\n    terminal_time: 0.25\n"
      "    r: 1\n    require_clearance: false\n");
  std::ostringstream mlog;
  CHECK(command_monitor(dir / "out", dir / "q.yaml", mlog) == exit_ok);
  const std::string density = slurp(dir / "out" / "density_top.csv");
  CHECK(density.rfind("t,value,violation\n", 0) == 0);
  const std::string manifest = slurp(dir / "out" / "manifest.json");
  CHECK(manifest.find("density_top.csv") != std::string::npos);
  CHECK(manifest.find("\"crc32\"") != std::string::npos);

  RescaleOptions ro;
  ro.terminal_time = 0.25;
  ro.lambda = 0.5;
  ro.tau = -0.92;  // t = T + λ²τ = 0.02
  ro.region_radius = 3.0;  // the frame sphere has radius √(4·0.92)
  std::ostringstream rlog;
  CHECK(command_rescale(dir / "out", ro, rlog) == exit_ok);
  CHECK(slurp(dir / "out" / "planarity.csv").rfind("deviation,sheets,fit_nx,fit_ny,fit_nz\n", 0) == 0);
  ro.s = 1.0;
  CHECK(command_rescale(dir / "out", ro, rlog) == exit_validation);
}

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  put(dir / "late.yaml",
      "initial:\n  kind: exact\n  family: hemisphere\n  radius: 0.75\n"
      "grid:\n  h: 0.0625\n  r_dom: 0.5\n"
      "flow:\n  outer_bc: dirichlet-exact\n  t_end: 0.2\n"
      "output:\n  directory: " + (dir / "late").string() + "\n");
  std::ostringstream log;
  CHECK(command_run(dir / "late.yaml", log) == exit_numerical);
  const StoredTrajectory st = load_trajectory(dir / "late");
  CHECK(st.trajectory.stop_reason != StopReason::completed);
  CHECK(slurp(dir / "late" / "manifest.json").find("\"stop_reason\"") != std::string::npos);

  fs::create_directories(dir / "empty");
  put(dir / "q.yaml", "queries: []\n");
  std::ostringstream mlog;
  CHECK(command_monitor(dir / "empty", dir / "q.yaml", mlog) == exit_validation);
  CHECK(mlog.str().find("error:") != std::string::npos);

  put(dir / "bad.yaml", "patch:\n  kappa: -1\n");
  std::ostringstream blog;
  CHECK(command_run(dir / "bad.yaml", blog) == exit_validation);
  CHECK(blog.str().find("patch.kappa") != std::string::npos);
}
