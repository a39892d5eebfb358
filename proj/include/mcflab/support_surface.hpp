#pragma once

// Support surface Γ = ∂U written as a graph x2 = φ(x1, x3) over its tangent
// plane at a base point O, together with the tubular-neighbourhood chart
//
//   Φ(y1, y2, y3) = (y1, φ(y1, y3), y3) + y2 ν(y1, y3),
//
// which flattens Γ to {y2 = 0} and makes y2 the signed distance to Γ.

#include "mcflab/common.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace mcflab {

/// Height function derivatives in the tangent coordinates (y1, y3).
/// Index 0 refers to y1 and index 1 to y3 throughout.
struct HeightDerivatives {
  double value = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
  /// third[a](b, c) = ∂_a ∂_b ∂_c φ.
  std::array<Mat2, 2> third{Mat2::Zero(), Mat2::Zero()};
};

class HeightFunction {
 public:
  virtual ~HeightFunction() = default;
  virtual HeightDerivatives eval(double y1, double y3) const = 0;
  virtual std::string name() const = 0;
  virtual bool is_flat() const { return false; }
};

using HeightPtr = std::shared_ptr<const HeightFunction>;

HeightPtr flat_height();
/// φ = a·y1²/2 (a parabolic cylinder; constant curvature a along y1).
HeightPtr parabolic_height(double a);
/// Lower cap of the sphere of radius R centred at (0, R, 0): φ = R − √(R² − |y|²).
HeightPtr sphere_cap_height(double radius);
/// φ^λ(y) = φ(λy)/λ, the height function of Γ/λ.
HeightPtr scaled_height(HeightPtr base, double lambda);
/// φ sampled on a uniform lattice covering [−half_width, half_width]², with
/// derivatives from fourth-order central differences and cubic interpolation
/// between lattice nodes.
HeightPtr sampled_height(const HeightFunction& source, double half_width, double spacing);
/// Catalog lookup: "flat", "paraboloid:a", "sphere_cap:R".
HeightPtr height_from_catalog(std::string_view expression);

enum class PatchKind { flat, analytic_quadric, sampled };

const char* to_string(PatchKind kind) noexcept;

/// Φ and its first two derivatives at a chart point, in the patch frame.
struct ChartJet {
  Vec3 phi = Vec3::Zero();
  std::array<Vec3, 3> d{};
  std::array<std::array<Vec3, 3>, 3> dd{};
};

struct MetricConnection {
  Mat3 h = Mat3::Identity();
  Mat3 h_inv = Mat3::Identity();
  /// gamma[k](i, j) = Γ^k_ij.
  std::array<Mat3, 3> gamma{Mat3::Zero(), Mat3::Zero(), Mat3::Zero()};
  /// max|h_ij − δ_ij| / (κ|Y|); zero when κ|Y| vanishes.
  double deviation_constant = 0.0;
};

struct Projection {
  Vec3 point;     // X̊, the foot point on Γ
  double distance = 0.0;
  Vec3 gradient;  // ∇d_Γ(X) = ν(X̊)
  Vec3 chart;     // Φ⁻¹(X)
};

struct KappaReport {
  double max_hessian = 0.0;
  double max_third = 0.0;
  double lipschitz_third = 0.0;
  double min_mean_curvature = kInf;
  double spacing = 0.0;
  std::size_t samples = 0;
  bool pass = false;
};

class SupportPatch {
 public:
  /// chart_radius defaults to 1/κ (∞ for a flat patch) and is clipped to 1/κ.
  SupportPatch(PatchKind kind, HeightPtr height, double kappa,
               std::optional<double> chart_bound = std::nullopt,
               const Vec3& origin = Vec3::Zero(), const Mat3& frame = Mat3::Identity());

  static SupportPatch flat(std::optional<double> chart_bound = std::nullopt);
  static SupportPatch from_catalog(PatchKind kind, std::string_view phi, double kappa,
                                   std::optional<double> chart_bound = std::nullopt,
                                   std::optional<double> lattice_spacing = std::nullopt);

  PatchKind kind() const noexcept { return kind_; }
  bool is_flat() const noexcept { return flat_; }
  double kappa() const noexcept { return kappa_; }
  double chart_radius() const noexcept { return chart_radius_; }
  const Vec3& origin() const noexcept { return origin_; }
  const Mat3& frame() const noexcept { return frame_; }
  const HeightFunction& height_function() const noexcept { return *height_; }
  std::string phi_name() const { return height_->name(); }

  HeightDerivatives height(double y1, double y3) const { return height_->eval(y1, y3); }

  Vec3 to_world(const Vec3& local) const { return origin_ + frame_ * local; }
  Vec3 to_local(const Vec3& world) const { return frame_.transpose() * (world - origin_); }
  Vec3 direction_to_world(const Vec3& v) const { return frame_ * v; }

  /// Φ and derivatives in the patch frame; no range check.
  ChartJet chart_jet(const Vec3& Y) const;

  /// Φ(Y) in world coordinates. Throws chart_out_of_range when |Y| ≥ chart radius.
  Vec3 tubular_map(const Vec3& Y) const;

  /// Φ⁻¹(X) by Newton iteration seeded at X (patch frame).
  Vec3 chart_coordinates(const Vec3& X) const;

  Projection project_and_distance(const Vec3& X) const;
  Vec3 reflect(const Vec3& X) const;

  /// X ∈ U and X̃ ∈ B_r(P) \ U.
  bool in_complementary_ball(const Vec3& P, double r, const Vec3& X) const;

  MetricConnection pullback_metric_connection(const Vec3& Y) const;
  /// Metric and connection from an already evaluated jet; no range check.
  MetricConnection metric_connection(const ChartJet& jet, const Vec3& Y) const;

  /// Inward unit normal ν of Γ at tangent coordinates (y1, y3), world frame.
  Vec3 normal(double y1, double y3) const;
  /// H_Γ = −div_Γ ν; non-negative for a mean-convex support.
  double mean_curvature(double y1, double y3) const;
  /// A_Γ(T, T) = −T·D_Tν for a point X on Γ and a unit tangent T.
  double second_fundamental_form(const Vec3& X, const Vec3& tangent) const;

  /// (Γ − P)/λ: the κ-graph constant becomes λκ and the chart radius r/λ.
  SupportPatch rescaled(const Vec3& P, double lambda) const;

  KappaReport verify_kappa_condition() const;

 private:
  void check_range(const Vec3& Y) const;
  double newton_tolerance(const Vec3& X) const;

  PatchKind kind_;
  HeightPtr height_;
  bool flat_;
  double kappa_;
  double chart_radius_;
  Vec3 origin_;
  Mat3 frame_;
};

}  // namespace mcflab
