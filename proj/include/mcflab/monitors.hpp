#pragma once

// Density and energy functionals evaluated on snapshots and trajectories.

#include "mcflab/flow_solver.hpp"

#include <vector>

namespace mcflab {

struct SnapshotIntegral {
  double value = 0.0;
  double error = 0.0;  // quadrature change under refinement (analytic parts)
};

/// ∫ f dH² over a snapshot: node sums on grids, converged tensor quadrature
/// on analytic pieces.
SnapshotIntegral integrate_snapshot(const Snapshot& snap, const PointIntegrand& f,
                                    const QuadratureHint& hint = {});
/// Weighted samples of a snapshot at a fixed analytic resolution level.
SurfaceSamples snapshot_samples(const Snapshot& snap, const QuadratureHint& hint = {}, int level = 3);

struct DensityOptions {
  /// Enforce 0 < r < d_Γ(P)/(2√5). Closed or doubled surfaces do not see Γ
  /// and may switch this off; r = ∞ (no cutoff) is then admitted too.
  bool require_clearance = true;
};

struct DensityValue {
  double value = 0.0;
  double error = 0.0;
  double kernel_mass = 0.0;  // ∫Ψ over the cutoff support, for auditing
};

/// ∫ ψ_{r;P,T} Ψ_{P,T} dH² at the snapshot time.
DensityValue interior_density(const Snapshot& snap, const SupportPatch& patch, const Vec3& P, double T,
                              double r, const DensityOptions& options = {});

/// e^{85q} ∫ η_{Γ;P,T} Ψ_{Γ;P,T} dH² with q = (κ²(T−t))^{2/5}; κ = 0 is the
/// limit η = 1, q = 0.
DensityValue boundary_density(const Snapshot& snap, const SupportPatch& patch, const Vec3& P, double T,
                              double kappa);

double interior_density_value(const Snapshot& snap, const SupportPatch& patch, const Vec3& P, double T,
                              double r, const DensityOptions& options = {});
double boundary_density_value(const Snapshot& snap, const SupportPatch& patch, const Vec3& P, double T,
                              double kappa);

/// Largest admissible T − t for the boundary formula: ½(3/320)⁵κ⁻².
double boundary_time_window(double kappa);

enum class DensityLocation { interior, boundary };

struct DensityQuery {
  Vec3 P = Vec3::Zero();
  double T = 0.0;
  DensityLocation location = DensityLocation::interior;
  double r = 1.0;      // interior cutoff radius
  double kappa = 0.0;  // boundary graph constant
  std::vector<double> sample_times;
  DensityOptions options;
};

struct DensityReport {
  std::vector<double> times;   // actual snapshot times used
  std::vector<double> values;
  std::vector<double> errors;
  std::vector<double> kernel_mass;
  std::vector<double> violation;  // (value_k − value_{k−1})₊, 0 for the first
  double max_upward_violation = 0.0;
  double limit_estimate = 0.0;
  bool flat_tail = false;  // |slope| of the last three samples < 1e-3
  double max_time_offset = 0.0;
};

DensityReport monotonicity_report(const Trajectory& traj, const DensityQuery& query);

/// ∫ (H + (X−P)·N / (2(T−t)))² Ψ_{P,T} dH²; the boundary variant uses Ψ_Γ and
/// the boundary drift term with variance factor 1 + 16q.
double self_shrinker_residual(const Snapshot& snap, const SupportPatch& patch, const Vec3& P, double T,
                              bool boundary = false, double kappa = 0.0);

double energy(const Snapshot& snap);

/// sup r|A(P)| over snapshot samples and dyadic radii r = R 2^{-k} with
/// B_r(P) ⊂ B_R(center) and (t0 − r², t0 + r²) ⊂ (−ρ, ρ).
double interior_curvature_norm(const Trajectory& traj, const Vec3& center, double R, double rho);

struct ScanCandidate {
  Vec3 P;
  std::vector<double> mass;  // ω_t(B_r(P)) per radius
  bool flagged = false;
};

struct ScanCluster {
  Vec3 location;
  double mass = 0.0;  // largest member mass at the smallest radius
  std::size_t members = 0;
};

struct SingularScan {
  double epsilon = 0.0;
  std::vector<double> r_grid;
  double t = 0.0;
  double total_energy = 0.0;
  std::vector<ScanCandidate> candidates;
  std::vector<ScanCluster> clusters;
  bool within_count_bound = true;  // clusters ≤ total_energy/ε + 1
};

SingularScan singular_set_scan(const Trajectory& traj, double epsilon, const std::vector<double>& r_grid);

}  // namespace mcflab
