#pragma once

// Closed-form test surfaces with exact normals and curvatures, sampled by
// tensor-product quadrature whose resolution doubles until integrals settle.
// Half-planes and hemispheres sit on the flat support {x2 = 0} with U = {x2 > 0}.

#include "mcflab/discrete_surface.hpp"

#include <functional>
#include <vector>

namespace mcflab {

enum class AnalyticKind { plane, half_plane, sphere, hemisphere };

const char* to_string(AnalyticKind kind) noexcept;

struct AnalyticSurface {
  AnalyticKind kind = AnalyticKind::plane;
  Vec3 point = Vec3::Zero();   // plane point, or sphere centre
  Vec3 normal = Vec3::UnitZ(); // plane normal
  double radius = 0.0;
  Vec3 axis = Vec3::UnitZ();   // polar axis of the sphere parametrisation
  double polar_min = 0.0;      // drop the polar cap θ < polar_min around +axis
  double t = 0.0;

  static AnalyticSurface plane(const Vec3& P, const Vec3& N);
  /// Half of the plane through P ∈ Γ with normal N ⊥ e2, on the side x2 ≥ 0.
  static AnalyticSurface half_plane(const Vec3& P, const Vec3& N);
  static AnalyticSurface sphere(const Vec3& C, double R);
  /// Sphere ∩ {x2 ≥ C2}; C must lie on Γ.
  static AnalyticSurface hemisphere(const Vec3& C, double R);

  bool has_free_boundary() const noexcept {
    return kind == AnalyticKind::half_plane || kind == AnalyticKind::hemisphere;
  }
  Topology topology() const noexcept;
  /// Image under X ↦ (X − P)/λ.
  AnalyticSurface rescaled(const Vec3& P, double lambda) const;
  /// Mean curvature with the inward normal (2/R for spheres, 0 for planes).
  double mean_curvature() const noexcept;
  double curvature_norm2() const noexcept;
};

/// Where the integrand lives: planes are sampled in polar coordinates around
/// the foot point of `focus` out to `extent`, with radial panel breaks at the
/// listed distances from the focus.
struct QuadratureHint {
  Vec3 focus = Vec3::Zero();
  double extent = kInf;
  std::vector<double> breaks;
};

SurfaceSamples sample(const AnalyticSurface& s, const QuadratureHint& hint, int level);

struct ConvergedIntegral {
  double value = 0.0;
  double error = 0.0;  // last change under node doubling
  int level = 0;
  bool converged = false;
};

using PointIntegrand = std::function<double(const SurfacePoint&)>;

ConvergedIntegral integrate_converged(const AnalyticSurface& s, const PointIntegrand& f,
                                      const QuadratureHint& hint = {}, double rel_tol = 1e-8,
                                      int max_level = 7);

/// Total length of the free-boundary curve (exact).
double analytic_perimeter(const AnalyticSurface& s);

/// Gauss–Legendre nodes and weights on [a, b] (tables cached per order).
void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w);

}  // namespace mcflab
