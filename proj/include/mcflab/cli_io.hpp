#pragma once

// Scenario files, trajectory persistence and the command implementations
// behind the mcflab tool.

#include "mcflab/rescaling.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mcflab {

struct PatchSpec {
  PatchKind kind = PatchKind::flat;
  std::string phi = "flat";
  double kappa = 0.0;
  std::optional<double> chart_radius;
  std::optional<double> lattice_spacing;
};

enum class InitialKind { zero, constant, exact, height_field };

struct InitialSpec {
  InitialKind kind = InitialKind::zero;
  double value = 0.0;           // constant
  ExactFamily family;           // exact
  std::string file;             // height_field, relative to the scenario file
  std::optional<Topology> topology;
};

struct GridSpec {
  DomainShape shape = DomainShape::half_disk;
  double h = 1.0 / 32;
  double r_dom = 0.5;
};

enum class QueryType { interior, boundary, scan };

struct MonitorQuery {
  std::string name;
  QueryType type = QueryType::interior;
  Vec3 point = Vec3::Zero();
  double terminal_time = 0.0;
  double r = 1.0;
  double kappa = 0.0;
  bool require_clearance = true;
  std::vector<double> sample_times;  // empty: every stored snapshot before T
  double epsilon = 1.0;
  std::vector<double> radii;
};

struct Scenario {
  PatchSpec patch;
  InitialSpec initial;
  GridSpec grid;
  FlowConfig flow;
  std::vector<MonitorQuery> monitors;
  std::string output = "out";
  std::filesystem::path base_dir;  // directory of the scenario file
};

/// Parses the YAML scenario format. Unknown keys and malformed values are
/// errors; parse errors carry "<origin>:<line>:<column>".
Scenario parse_scenario(const std::string& text, const std::string& origin = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

/// Query files hold a top-level `queries:` list in the scenario monitor format.
std::vector<MonitorQuery> parse_queries(const std::string& text, const std::string& origin = "<queries>");

/// Every field with defaults filled, plus derived values such as the singular time.
std::string scenario_yaml(const Scenario& s);
std::string scenario_json(const Scenario& s);

PatchPtr make_patch(const PatchSpec& spec);
GraphSurface make_initial(const Scenario& s, PatchPtr patch);

// --- persistence ------------------------------------------------------------

/// Shortest round-trip decimal form.
std::string format_number(double v);

void write_height_field(std::ostream& out, const GraphSurface& s, std::size_t step);
GraphSurface read_height_field(std::istream& in, PatchPtr patch, std::size_t* step = nullptr);

void write_monitor_csv(std::ostream& out, const std::vector<MonitorRow>& rows);
void write_density_csv(std::ostream& out, const DensityReport& rep);
void write_scan_csv(std::ostream& out, const SingularScan& scan);
void write_planarity_csv(std::ostream& out, const PlanarityReport& rep);

std::uint32_t file_crc32(const std::filesystem::path& path);

struct StoredTrajectory {
  Scenario scenario;
  Trajectory trajectory;
};

/// Writes snapshots, monitors, the echoed scenario and manifest.json into dir.
void save_trajectory(const std::filesystem::path& dir, const Scenario& s, const Trajectory& traj, double wall_seconds);
StoredTrajectory load_trajectory(const std::filesystem::path& dir);

/// Re-lists every regular file of dir with its checksum in manifest.json.
void refresh_manifest(const std::filesystem::path& dir);

// --- commands (return process exit codes) -----------------------------------

enum ExitCode : int { exit_ok = 0, exit_verify_failed = 1, exit_validation = 2, exit_numerical = 3 };

int exit_code_for(ErrorKind kind) noexcept;

int command_run(const std::filesystem::path& scenario, std::ostream& log);
int command_monitor(const std::filesystem::path& dir, const std::filesystem::path& queries, std::ostream& log);

struct RescaleOptions {
  Vec3 point = Vec3::Zero();
  double terminal_time = 0.0;
  std::optional<double> lambda;
  std::optional<double> s;
  double tau = -1.0;
  double region_radius = 1.0;
};

int command_rescale(const std::filesystem::path& dir, const RescaleOptions& options, std::ostream& log);
int command_verify(bool fast, std::ostream& log);

}  // namespace mcflab
