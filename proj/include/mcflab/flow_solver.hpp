#pragma once

// Graph mean curvature flow u_t = g^{ij}(y,u,∇u)∂²_ij u + f(y,u,∇u) on a
// chart-plane grid, with the free boundary y2 = 0 handled by even reflection.

#include "mcflab/analytic_surface.hpp"
#include "mcflab/discrete_surface.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mcflab {

enum class OuterBC { dirichlet_exact, frozen, periodic_strip };
enum class Scheme { explicit_euler, semi_implicit };
enum class StopReason { completed, blowup, cfl_violation, chart_exit, non_finite, past_singularity };

const char* to_string(OuterBC bc) noexcept;
const char* to_string(Scheme s) noexcept;
const char* to_string(StopReason r) noexcept;

/// Exact self-similar or static solutions over the flat support.
/// Spheres shrink as R(t) = √(R0² − 4t).
struct ExactFamily {
  AnalyticKind kind = AnalyticKind::plane;
  double R0 = 1.0;
  Vec3 center = Vec3::Zero();   // sphere centre, or plane point
  Vec3 normal = Vec3::UnitZ();  // plane normal

  double singular_time() const noexcept;
  /// Throws past_singularity for t ≥ singular time.
  double radius(double t) const;
  AnalyticSurface surface(double t) const;
  /// Graph height x3 = u(y1, y2, t) of the upper sheet over the flat chart.
  double height(double y1, double y2, double t) const;
  double height_rate(double y1, double y2, double t) const;
};

AnalyticSurface exact_surface(const ExactFamily& family, double t);
/// Graph form: samples the height function on the grid.
GraphSurface exact_graph(const ExactFamily& family, PatchPtr patch, const Grid& grid, double t);

struct FlowConfig {
  double cfl = 0.2;
  double t_end = 0.0;
  int snapshot_stride = 10;
  OuterBC outer_bc = OuterBC::frozen;
  Scheme scheme = Scheme::explicit_euler;
  double blowup_threshold = 0.5;
  std::optional<ExactFamily> exact;   // required for dirichlet_exact
  std::optional<double> chart_bound;  // max |Y| allowed; defaults to the patch chart radius
  double implicit_dt_factor = 4.0;    // semi-implicit step relative to the explicit bound
  int jacobi_iterations = 200;
  std::size_t max_steps = 10'000'000;
  bool record_monitors = true;

  void validate() const;
};

struct MonitorRow {
  double t = 0.0;
  double area = 0.0;
  double perimeter = 0.0;
  double energy = 0.0;
  double max_H = 0.0;
  double max_A = 0.0;
  double h2_integral = 0.0;
  double rim_flux = 0.0;
  double neumann_residual = 0.0;
};

/// Disjoint union of a grid sheet and an analytic remainder.
struct CompositeSurface {
  GraphSurface graph;
  AnalyticSurface exterior;
};

struct Snapshot {
  double t = 0.0;
  std::size_t step = 0;
  std::variant<GraphSurface, AnalyticSurface, CompositeSurface> surface;

  const GraphSurface* graph() const { return std::get_if<GraphSurface>(&surface); }
  const AnalyticSurface* analytic() const { return std::get_if<AnalyticSurface>(&surface); }
  const CompositeSurface* composite() const { return std::get_if<CompositeSurface>(&surface); }
};

struct Trajectory {
  PatchPtr patch;
  std::vector<Snapshot> snapshots;
  std::vector<MonitorRow> monitors;
  StopReason stop_reason = StopReason::completed;
  std::string stop_message;
  std::size_t steps = 0;

  /// Index of the snapshot nearest to t.
  std::size_t nearest(double t) const;
};

struct StepResult {
  GraphSurface surface;
  double dt = 0.0;
  double max_rate = 0.0;
};

/// Largest stable explicit step for the current state.
double stable_dt(const GraphSurface& s, double cfl);

/// Refreshes rim values for the configured boundary condition, then ghosts.
void apply_boundary(GraphSurface& s, const FlowConfig& config, const GraphSurface* initial = nullptr);

/// One time step. Throws cfl_violation, chart_exit, non_finite or past_singularity.
GraphSurface step(const GraphSurface& s, double dt, const FlowConfig& config,
                  const GraphSurface* initial = nullptr);

/// Per-step monitors, including the boundary flux term of the area law.
MonitorRow measure(const GraphSurface& s, const FlowConfig& config);

Trajectory run(const GraphSurface& initial, const FlowConfig& config);

/// Exact trajectory sampled at the given times (analytic snapshots).
Trajectory run_exact(const ExactFamily& family, const std::vector<double>& times, PatchPtr patch);

struct ExtendedField {
  GraphSurface full;                // disk grid carrying ū
  std::vector<Mat2> a;              // ā^{ij} per node of the full grid
  std::vector<double> f;            // f̄ per node
  std::vector<char> valid;
  double max_edge_a12 = 0.0;        // max |a^{12}(y1, 0)|
};

/// Even extension across y2 = 0 with reflected coefficients
/// ā^{ij}(y1, −y2) = (−1)^{i+j} a^{ij}(y1, y2) and f̄ even.
/// Throws reflection_condition_violated if |a^{12}(y1, 0)| > 10 h².
ExtendedField even_extension(const GraphSurface& half);

/// ā^{ij}D_ij ū + f̄ on the extended grid.
std::vector<double> extended_residual(const ExtendedField& e);

/// sup |∇u(x,t) − ∇u(x,t′)| / |t − t′|^{1/2} over snapshot pairs in [t0, t1].
double temporal_regularity_probe(const Trajectory& traj, int i, int j, double t0, double t1);

/// Grid cap doubled across Γ plus the analytic sphere outside the cap.
/// The cap is assumed to be centred on the polar axis e3 of the sphere.
CompositeSurface doubled_sphere_composite(const GraphSurface& cap, const Vec3& center, double R);

}  // namespace mcflab
