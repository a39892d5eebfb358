#include "doctest.h"

#include "mcflab/support_surface.hpp"

#include <cmath>

using namespace mcflab;

namespace {

SupportPatch parabola(double kappa = 1.0) {
  return SupportPatch(PatchKind::analytic_quadric, parabolic_height(1.0), kappa);
}

SupportPatch cap2(std::optional<double> bound = std::nullopt) {
  return SupportPatch(PatchKind::analytic_quadric, sphere_cap_height(2.0), 1.0, bound);
}

}  // namespace

TEST_CASE("flat chart is the identity") {
  auto p = SupportPatch::flat();
  Vec3 X = p.tubular_map(Vec3(0.3, 0.2, -0.1));
  CHECK((X - Vec3(0.3, 0.2, -0.1)).norm() == doctest::Approx(0.0));
  auto pr = p.project_and_distance(Vec3(1, 0.7, 2));
  CHECK((pr.point - Vec3(1, 0, 2)).norm() < 1e-15);
  CHECK(pr.distance == doctest::Approx(0.7));
  CHECK((pr.gradient - Vec3(0, 1, 0)).norm() < 1e-15);
  CHECK((p.reflect(Vec3(1, 0.7, 2)) - Vec3(1, -0.7, 2)).norm() < 1e-15);
  auto mc = p.pullback_metric_connection(Vec3(0.1, 0.2, 0.3));
  CHECK((mc.h - Mat3::Identity()).norm() < 1e-15);
  for (const auto& g : mc.gamma) CHECK(g.norm() < 1e-15);
}

TEST_CASE("parabolic chart values") {
  auto p = parabola();
  // Edge of the chart: the unchecked jet gives the display formula value.
  CHECK((p.chart_jet(Vec3(1, 0, 0)).phi - Vec3(1, 0.5, 0)).norm() < 1e-15);
  CHECK_THROWS_AS(p.tubular_map(Vec3(1, 0, 0)), Error);
  CHECK((p.tubular_map(Vec3(0.6, 0, 0)) - Vec3(0.6, 0.18, 0)).norm() < 1e-15);
  CHECK((p.tubular_map(Vec3(0, 0.5, 0)) - Vec3(0, 0.5, 0)).norm() < 1e-15);
  auto mc = p.pullback_metric_connection(Vec3(0.2, 0, 0));
  CHECK(mc.h(0, 0) == doctest::Approx(1.04).epsilon(1e-14));
}

TEST_CASE("jacobian at the base point is the identity") {
  auto p = cap2();
  auto c = p.chart_jet(Vec3::Zero());
  Mat3 J;
  for (int i = 0; i < 3; ++i) J.col(i) = c.d[i];
  CHECK((J - Mat3::Identity()).norm() < 1e-14);
  CHECK(p.tubular_map(Vec3::Zero()).norm() < 1e-15);
}

TEST_CASE("projection and reflection on a curved support") {
  auto p = parabola();
  Vec3 X = p.tubular_map(Vec3(0.4, 0.3, 0));
  auto pr = p.project_and_distance(X);
  CHECK(std::abs(pr.distance - 0.3) < 1e-10);
  CHECK((pr.point - p.tubular_map(Vec3(0.4, 0, 0))).norm() < 1e-10);
  CHECK((p.reflect(X) - p.tubular_map(Vec3(0.4, -0.3, 0))).norm() < 1e-9);
  Vec3 G = p.tubular_map(Vec3(0.3, 0, -0.2));
  CHECK((p.project_and_distance(G).point - G).norm() < 1e-12);
  CHECK((p.reflect(G) - G).norm() < 1e-12);
}

TEST_CASE("reflection is an involution commuting with the chart") {
  auto p = cap2();
  for (double y1 : {-0.4, 0.0, 0.3})
    for (double y2 : {-0.2, 0.05, 0.25})
      for (double y3 : {-0.3, 0.1}) {
        Vec3 X = p.tubular_map(Vec3(y1, y2, y3));
        CHECK((p.reflect(p.reflect(X)) - X).norm() <= 1e-9 * p.chart_radius());
        CHECK((p.tubular_map(Vec3(y1, -y2, y3)) - p.reflect(X)).norm() <= 1e-9 * p.chart_radius());
      }
}

TEST_CASE("complementary ball membership") {
  auto p = SupportPatch::flat();
  CHECK_FALSE(p.in_complementary_ball(Vec3(0, 0.5, 0), 0.3, Vec3(0, 0.6, 0)));
  CHECK(p.in_complementary_ball(Vec3(0, 0.2, 0), 0.5, Vec3(0, 0.1, 0)));
  CHECK_FALSE(p.in_complementary_ball(Vec3(0, 0.2, 0), 0.5, Vec3(0, -0.1, 0)));
  CHECK_FALSE(p.in_complementary_ball(Vec3(0, 0.2, 0), 0.5, Vec3(0, 0.45, 0)));
}

TEST_CASE("metric normalisation and boundary orthogonality") {
  auto p = cap2();
  for (Vec3 Y : {Vec3(0.3, 0.0, -0.2), Vec3(-0.5, 0.0, 0.4), Vec3(0.1, 0.2, 0.6)}) {
    auto mc = p.pullback_metric_connection(Y);
    CHECK(std::abs(mc.h(1, 1) - 1.0) < 1e-14);
    if (Y[1] == 0.0) {
      CHECK(std::abs(mc.h(0, 1)) < 1e-9);
      CHECK(std::abs(mc.h(2, 1)) < 1e-9);
    }
    CHECK(mc.deviation_constant >= 0.0);
  }
}

TEST_CASE("connection matches finite differences of the metric") {
  auto p = cap2();
  const Vec3 Y(0.25, 0.1, -0.3);
  const double e = 1e-4;
  auto metric = [&](const Vec3& Z) { return p.pullback_metric_connection(Z).h; };
  std::array<Mat3, 3> dh;
  for (int l = 0; l < 3; ++l) {
    Vec3 d = Vec3::Zero();
    d[l] = e;
    dh[l] = (metric(Y + d) - metric(Y - d)) / (2 * e);
  }
  auto mc = p.pullback_metric_connection(Y);
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double g = 0.0;
        for (int l = 0; l < 3; ++l) g += 0.5 * mc.h_inv(k, l) * (dh[i](j, l) + dh[j](i, l) - dh[l](i, j));
        CHECK(std::abs(g - mc.gamma[k](i, j)) < 1e-7);
      }
}

TEST_CASE("kappa condition") {
  CHECK(SupportPatch::flat().verify_kappa_condition().pass);
  auto bad = parabola(0.5).verify_kappa_condition();
  CHECK_FALSE(bad.pass);
  CHECK(bad.max_hessian == doctest::Approx(1.0));

  // Ball of radius 2: second and third derivative bounds hold over the unit
  // chart, but the lattice Lipschitz constant of the third derivative near
  // the chart edge exceeds 1.
  auto full = cap2().verify_kappa_condition();
  CHECK(full.max_hessian == doctest::Approx(0.962).epsilon(2e-3));
  CHECK(full.max_hessian <= 1.0);
  CHECK(full.max_third <= 1.0);
  CHECK(full.lipschitz_third > 1.0);
  CHECK(full.min_mean_curvature > 0.0);
  CHECK_FALSE(full.pass);

  auto inner = cap2(0.5).verify_kappa_condition();
  CHECK(inner.pass);
  CHECK(inner.min_mean_curvature == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mean curvature of the sphere cap") {
  auto p = cap2();
  CHECK(p.mean_curvature(0, 0) == doctest::Approx(1.0));
  CHECK(p.mean_curvature(0.3, -0.5) == doctest::Approx(1.0).epsilon(1e-12));
  Vec3 X = p.tubular_map(Vec3(0.3, 0, 0.2));
  Vec3 nu = p.normal(0.3, 0.2);
  Vec3 T = nu.cross(Vec3(0, 0, 1)).normalized();
  CHECK(p.second_fundamental_form(X, T) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("scaling covariance of the chart") {
  auto p = cap2();
  const Vec3 P(0.1, 0.05, -0.1);
  for (double lambda : {0.25, 3.0}) {
    auto q = p.rescaled(P, lambda);
    CHECK(q.kappa() == doctest::Approx(lambda));
    CHECK(q.chart_radius() == doctest::Approx(1.0 / lambda));
    Vec3 Y(0.2, 0.1, -0.15);
    Vec3 X = p.tubular_map(Y);
    CHECK((q.tubular_map(Y / lambda) - (X - P) / lambda).norm() < 1e-9);
  }
}

TEST_CASE("sampled patch reproduces the analytic chart") {
  auto a = cap2(0.8);
  auto s = SupportPatch::from_catalog(PatchKind::sampled, "sphere_cap:2", 1.0, 0.8);
  for (Vec3 Y : {Vec3(0.3, 0.1, -0.2), Vec3(-0.5, -0.05, 0.1)}) {
    CHECK((a.tubular_map(Y) - s.tubular_map(Y)).norm() < 1e-8);
    auto ha = a.height(Y[0], Y[2]);
    auto hs = s.height(Y[0], Y[2]);
    CHECK((ha.hess - hs.hess).norm() < 1e-5);
    CHECK((ha.third[0] - hs.third[0]).norm() < 1e-3);
  }
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(SupportPatch(PatchKind::analytic_quadric, parabolic_height(1.0), -1.0), Error);
  CHECK_THROWS_AS(SupportPatch(PatchKind::analytic_quadric, parabolic_height(1.0), 0.0), Error);
  CHECK_THROWS_AS(height_from_catalog("torus:1"), Error);
  CHECK(height_from_catalog("paraboloid:0.5")->eval(2, 0).value == doctest::Approx(1.0));
}
