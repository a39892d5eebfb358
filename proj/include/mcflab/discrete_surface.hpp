#pragma once

// Discrete geometry of a surface written as a height function u(y1, y2)
// over a chart-plane grid, X(y) = Φ(y1, y2, u(y1, y2)).

#include "mcflab/common.hpp"
#include "mcflab/grid.hpp"
#include "mcflab/support_surface.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mcflab {

enum class Topology { untagged, disk, sphere };

const char* to_string(Topology t) noexcept;
/// Euler characteristic; throws topology_untagged.
int euler_characteristic(Topology t);

using PatchPtr = std::shared_ptr<const SupportPatch>;

struct GraphSurface {
  PatchPtr patch;
  Grid grid;
  std::vector<double> u;  // one value per grid node, ghosts included
  double t = 0.0;
  Topology topology = Topology::untagged;

  GraphSurface() = default;
  GraphSurface(PatchPtr p, Grid g, double time = 0.0);

  double& at(int i, int j) { return u[grid.index(i, j)]; }
  double at(int i, int j) const { return u[grid.index(i, j)]; }

  /// Fills every non-outside node from f(y1, y2).
  void fill(const std::function<double(double, double)>& f);
  /// Copies mirror and periodic ghosts from their sources.
  void apply_ghosts();
  /// Bilinear interpolation of u at a chart-plane point.
  double interpolate(double y1, double y2) const;
  Vec3 position(int i, int j) const;
};

/// Pointwise geometry of the graph at one chart-plane point.
struct NodeGeometry {
  Vec3 X = Vec3::Zero();
  Vec3 N = Vec3::Zero();
  std::array<Vec3, 2> tangent{};
  Mat2 g = Mat2::Identity();
  Mat2 g_inv = Mat2::Identity();
  Mat2 A = Mat2::Zero();
  double H = 0.0;
  double A2 = 0.0;
  double sqrt_g = 1.0;
  double f = 0.0;    // g^{ij}(Γ³_ij + Q_ij)
  double rhs = 0.0;  // g^{ij}∂²_ij u + f
  Vec3 d3phi = Vec3::UnitZ();  // ∂3Φ, for converting u_t into a velocity
};

/// Geometry from the graph formula A_ij = (∂3Φ·N)(Γ³_ij + ∂²_ij u + Q_ij).
/// N is oriented with N·∂3Φ < 0, so that a graph over its own convex side
/// (a sphere cap seen from its centre) has H > 0 and N points inward.
NodeGeometry graph_geometry(const SupportPatch& patch, double y1, double y2, double u,
                            const Vec2& du, const Mat2& ddu);

/// Same quantities computed from the second derivatives of the embedding
/// directly (A_ij = ∂_i∂_jX·N); an independent route used for checking.
NodeGeometry embedding_geometry(const SupportPatch& patch, double y1, double y2, double u,
                                const Vec2& du, const Mat2& ddu);

/// Central-difference derivatives of u at a node.
void node_derivatives(const GraphSurface& s, int i, int j, Vec2& du, Mat2& ddu);

struct SurfaceGeometry {
  std::vector<NodeGeometry> nodes;  // indexed like the grid
  std::vector<char> valid;          // geometry computed
  std::vector<double> weight;       // √det g · area(cell ∩ domain)
};

/// Geometry at every node that carries a full stencil. Throws singular_metric.
SurfaceGeometry fundamental_forms(const GraphSurface& s);

/// Σ field·dA over nodes whose cell meets the domain.
double integrate(const GraphSurface& s, const SurfaceGeometry& geo, const std::vector<double>& field);
double integrate(const GraphSurface& s, const SurfaceGeometry& geo,
                 const std::function<double(const NodeGeometry&)>& field);

/// Length of the free-boundary curve X(y1, 0), extended to the rim by
/// linear interpolation.
double perimeter(const GraphSurface& s);

/// One-sided second-order ∂2u at y2 = 0, maximised over edge nodes.
double neumann_residual(const GraphSurface& s);

// ---------------------------------------------------------------------------
// Weighted samples: the common currency for integrals over any surface type.

struct SurfacePoint {
  Vec3 X;
  Vec3 N;
  double H = 0.0;
  double A2 = 0.0;
  double w = 0.0;
};

struct CurvePoint {
  Vec3 X;
  Vec3 T;
  double ds = 0.0;
};

struct SurfaceSamples {
  std::vector<SurfacePoint> points;
  std::vector<CurvePoint> boundary;
  double spacing = 0.0;  // characteristic sample spacing
};

SurfaceSamples samples(const GraphSurface& s, const SurfaceGeometry& geo);
SurfaceSamples samples(const GraphSurface& s);

// ---------------------------------------------------------------------------

struct AreaRatio {
  double ratio = 0.0;
  double area = 0.0;             // H²((Σ∩B_r(P))_P)
  double complementary = 0.0;    // H²((Σ∩B_r(P))_P ∩ B̃_r(P))
  bool partial = false;          // ball leaves the grid footprint
};

/// Modified area ratio. Disk-shaped grids have no reflection term. With
/// strict set, a partial ball throws ball_exceeds_grid.
AreaRatio modified_area_ratio(const GraphSurface& s, const SurfaceGeometry& geo, const Vec3& P,
                              double r, bool strict = false);

struct AreaRatioProfile {
  std::vector<double> radii;
  std::vector<double> values;  // e^{C(Λ+κ)r}·ratio
  double max_downward_violation = 0.0;
  bool partial = false;
};

AreaRatioProfile area_ratio_profile(const GraphSurface& s, const SurfaceGeometry& geo, const Vec3& P,
                                    const std::vector<double>& radii, double C, double Lambda,
                                    double kappa);

struct GaussBonnet {
  double lhs = 0.0;       // ∫|A|²
  double h2 = 0.0;        // ∫H²
  double boundary = 0.0;  // ∮A_Γ(T,T)
  int chi = 0;
  double rhs = 0.0;
  double residual = 0.0;
};

/// ∫|A|² against ∫H² + 2∮A_Γ(T_γ,T_γ) − 4πχ for a sample set.
GaussBonnet gauss_bonnet_identity(const SurfaceSamples& samples, const SupportPatch& patch,
                                  Topology topology);
GaussBonnet gauss_bonnet_identity(const GraphSurface& s);

/// ASCII mesh dump: `v x y z` per active node, `f i j k` per triangle.
void write_mesh(std::ostream& out, const GraphSurface& s);

}  // namespace mcflab
