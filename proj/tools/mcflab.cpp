// Command-line front end: run, monitor, rescale, verify.

#include "mcflab/cli_io.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

mcflab::Vec3 to_vec(const std::vector<double>& v) { return mcflab::Vec3(v[0], v[1], v[2]); }

}  // namespace

int main(int argc, char** argv) {
  using namespace mcflab;
  CLI::App app{"mcflab: mean curvature flow with a free boundary on a support surface"};
  app.require_subcommand(1);

  std::string scenario;
  auto* run_cmd = app.add_subcommand("run", "integrate a scenario and store the trajectory");
  run_cmd->add_option("scenario", scenario, "scenario YAML file")->required();

  std::string dir, queries;
  auto* mon_cmd = app.add_subcommand("monitor", "evaluate density and scan queries on a stored run");
  mon_cmd->add_option("dir", dir, "trajectory directory")->required();
  mon_cmd->add_option("queries", queries, "query YAML file")->required();

  std::string rdir;
  std::vector<double> point;
  double T = 0.0, lambda = 0.0, s = 0.0;
  RescaleOptions ro;
  auto* res_cmd = app.add_subcommand("rescale", "build a rescaled frame and report its planarity");
  res_cmd->add_option("dir", rdir, "trajectory directory")->required();
  res_cmd->add_option("--point", point, "space-time centre P")->expected(3)->required();
  res_cmd->add_option("--terminal-time", T, "terminal time T")->required();
  auto* lam_opt = res_cmd->add_option("--lambda", lambda, "parabolic scale");
  auto* s_opt = res_cmd->add_option("--s", s, "normalized-flow time");
  lam_opt->excludes(s_opt);
  res_cmd->add_option("--tau", ro.tau, "frame time (parabolic mode)");
  res_cmd->add_option("--region", ro.region_radius, "planarity region radius");

  bool fast = false;
  auto* ver_cmd = app.add_subcommand("verify", "run the acceptance checks");
  ver_cmd->add_flag("--fast", fast, "reduced resolutions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_validation;
  }

  if (*run_cmd) return command_run(scenario, std::cout);
  if (*mon_cmd) return command_monitor(dir, queries, std::cout);
  if (*res_cmd) {
    ro.point = to_vec(point);
    ro.terminal_time = T;
    if (*lam_opt) ro.lambda = lambda;
    if (*s_opt) ro.s = s;
    return command_rescale(rdir, ro, std::cout);
  }
  return command_verify(fast, std::cout);
}
