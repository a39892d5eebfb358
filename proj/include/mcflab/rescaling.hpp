#pragma once

// Parabolic zooms of stored trajectories around a spacetime point (P, T),
// and planarity / sheet-count diagnostics of the zoomed surfaces.

#include "mcflab/monitors.hpp"

#include <vector>

namespace mcflab {

enum class FrameMode { parabolic, normalized };

const char* to_string(FrameMode mode) noexcept;

struct RescalingFrame {
  Vec3 P = Vec3::Zero();
  double T = 0.0;
  FrameMode mode = FrameMode::parabolic;
  double lambda = 1.0;
  double tau = -1.0;          // requested frame time
  double s = 0.0;             // normalized mode only
  double source_time = 0.0;   // time of the snapshot actually used
  double time_offset = 0.0;   // |source_time − (T + λ²τ)|
  std::size_t source_index = 0;
  Snapshot snapshot;          // (Σ − P)/λ at frame time (source_time − T)/λ²
  PatchPtr patch;             // Γ rescaled the same way, κ ↦ λκ
};

/// (Σ_{T+λ²τ} − P)/λ using the stored snapshot nearest to T + λ²τ.
RescalingFrame parabolic_rescale(const Trajectory& traj, const Vec3& P, double T, double lambda, double tau);

/// e^{s/2}(Σ_{T−e^{−s}} − P), the parabolic frame at τ = −1 with λ = e^{−s/2}.
RescalingFrame normalized_frame(const Trajectory& traj, const Vec3& P, double T, double s);

/// Applies X ↦ (X − P)/λ to a snapshot; times are mapped to (t − T)/λ².
Snapshot rescale_snapshot(const Snapshot& snap, const Vec3& P, double T, double lambda);

struct ExclusionBall {
  Vec3 center;
  double radius = 0.0;
};

struct PlanarityReport {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  bool boundary_mode = false;   // fit constrained to meet Γ orthogonally
  double deviation = 0.0;       // spread of signed distances to the fit plane
  int sheets = 0;
  double spacing = 0.0;         // sample spacing used for line hits and clustering
  std::size_t region_samples = 0;
  std::vector<Vec3> exclusion_centers;
};

/// Plane fit and normal-line sheet count over the samples within
/// region_radius of center. The support patch, when given, switches on the
/// constrained fit as soon as boundary samples fall inside the region.
PlanarityReport planarity_multiplicity(const SurfaceSamples& samples, double spacing, const SupportPatch* patch,
                                       const Vec3& center, double region_radius,
                                       const std::vector<ExclusionBall>& exclusion = {});

PlanarityReport planarity_multiplicity(const RescalingFrame& frame, double region_radius,
                                       const std::vector<ExclusionBall>& exclusion = {},
                                       const Vec3& center = Vec3::Zero());

/// Samples of an analytic or composite snapshot refined until the median
/// sample spacing inside the region is at most region_radius/40.
SurfaceSamples region_samples(const Snapshot& snap, const Vec3& center, double region_radius, double* spacing);

}  // namespace mcflab
