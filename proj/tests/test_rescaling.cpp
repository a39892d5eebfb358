#include "doctest.h"

#include "mcflab/rescaling.hpp"

#include <cmath>

using namespace mcflab;

namespace {

PatchPtr flat_patch() { return std::make_shared<SupportPatch>(SupportPatch::flat()); }

ExactFamily hemisphere_family() {
  ExactFamily f;
  f.kind = AnalyticKind::hemisphere;
  return f;
}

double max_position_gap(const GraphSurface& a, const GraphSurface& b) {
  double gap = 0.0;
  for (std::size_t k = 0; k < a.grid.size(); ++k) {
    if (a.grid.role(k) != NodeRole::active) continue;
    gap = std::max(gap, (a.position(a.grid.i_of(k), a.grid.j_of(k)) - b.position(b.grid.i_of(k), b.grid.j_of(k))).norm());
  }
  return gap;
}

}  // namespace

TEST_CASE("identity frame") {
  auto traj = run_exact(hemisphere_family(), {0.0, 0.1, 0.2}, flat_patch());
  const auto f = parabolic_rescale(traj, Vec3::Zero(), 1.0, 1.0, 0.1 - 1.0);
  REQUIRE(f.snapshot.analytic());
  CHECK(f.source_index == 1);
  CHECK(f.time_offset == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(f.snapshot.analytic()->radius == traj.snapshots[1].analytic()->radius);
  CHECK(f.snapshot.analytic()->point == traj.snapshots[1].analytic()->point);
}

TEST_CASE("hemisphere frames at tau = -1 are the radius-2 hemisphere") {
  const double T = 0.25;
  const double l1 = std::exp(-1.0), l2 = std::exp(-2.0);
  auto traj = run_exact(hemisphere_family(), {0.0, T - l1 * l1, T - l2 * l2}, flat_patch());
  const auto f1 = parabolic_rescale(traj, Vec3::Zero(), T, l1, -1.0);
  const auto f2 = parabolic_rescale(traj, Vec3::Zero(), T, l2, -1.0);
  CHECK(f1.snapshot.analytic()->radius == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(f1.snapshot.analytic()->radius - f2.snapshot.analytic()->radius) <= 1e-6);
  CHECK(f1.patch->kappa() == 0.0);
  const auto n = normalized_frame(traj, Vec3::Zero(), T, 2.0);
  CHECK(n.mode == FrameMode::normalized);
  CHECK(std::abs(n.snapshot.analytic()->radius - f1.snapshot.analytic()->radius) <= 1e-10);
  CHECK((n.snapshot.analytic()->point - f1.snapshot.analytic()->point).norm() <= 1e-10);
  CHECK_THROWS_AS(parabolic_rescale(traj, Vec3::Zero(), T, 1.0, -1.0), Error);
  CHECK_THROWS_AS(parabolic_rescale(traj, Vec3::Zero(), T, 0.5, 0.5), Error);
}

TEST_CASE("scale algebra on graph snapshots") {
  auto patch = std::make_shared<SupportPatch>(PatchKind::analytic_quadric, sphere_cap_height(2.0), 0.5, 0.5);
  GraphSurface g(patch, Grid(DomainShape::half_disk, 1.0 / 32, 0.25), 0.05);
  g.fill([](double y1, double y2) { return 0.2 + 0.3 * y1 * y1 - 0.1 * y2 * y2; });
  g.apply_ghosts();
  const Snapshot snap{g.t, 0, g};
  const Vec3 P(0.01, 0.02, 0.1);
  const double T = 0.3, lam = 0.7, mu = 0.4;
  const auto twice = rescale_snapshot(rescale_snapshot(snap, P, T, lam), Vec3::Zero(), 0.0, mu);
  const auto once = rescale_snapshot(snap, P, T, lam * mu);
  CHECK(max_position_gap(*twice.graph(), *once.graph()) <= 1e-12);
  CHECK(twice.t == doctest::Approx(once.t).epsilon(1e-14));

  SUBCASE("curvature covariance") {
    const auto src = fundamental_forms(g);
    const auto dst = fundamental_forms(*once.graph());
    const double l = lam * mu;
    double worst = 0.0;
    for (std::size_t k = 0; k < g.grid.size(); ++k) {
      if (!src.valid[k] || g.grid.role(k) != NodeRole::active) continue;
      const double a = std::sqrt(src.nodes[k].A2), b = std::sqrt(dst.nodes[k].A2);
      worst = std::max(worst, std::abs(b - l * a) / std::max(1.0, l * a));
      CHECK(dst.nodes[k].H == doctest::Approx(l * src.nodes[k].H).epsilon(1e-8));
    }
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("density is invariant under the parabolic zoom") {
  auto patch = flat_patch();
  auto g = exact_graph(hemisphere_family(), patch, Grid(DomainShape::half_disk, 1.0 / 32, 0.5), 0.0);
  Trajectory traj;
  traj.patch = patch;
  traj.snapshots = {Snapshot{0.0, 0, g}, Snapshot{0.01, 1, g}};
  traj.snapshots[1].t = 0.01;
  const Vec3 P(0.05, 0.3, 0.95);
  const double T = 0.05, r = 0.06, lam = 0.5;
  const double src = interior_density_value(traj.snapshots[0], *patch, P, T, r);
  const auto f = parabolic_rescale(traj, P, T, lam, -T / (lam * lam));
  const double dst = interior_density_value(f.snapshot, *f.patch, Vec3::Zero(), 0.0, r / lam);
  CHECK(src > 0.1);
  CHECK(dst == doctest::Approx(src).epsilon(1e-10));
}

TEST_CASE("planarity of a static half-plane frame") {
  ExactFamily hp;
  hp.kind = AnalyticKind::half_plane;
  hp.center = Vec3(0.2, 0.0, 0.1);
  hp.normal = Vec3(0.6, 0.0, 0.8);
  auto traj = run_exact(hp, {0.0, 0.5, 1.0}, flat_patch());
  const auto f = parabolic_rescale(traj, Vec3(0.2, 0.0, 0.1), 2.0, 0.3, -1.0 / 0.09);
  const auto rep = planarity_multiplicity(f, 1.0);
  CHECK(rep.boundary_mode);
  CHECK(rep.sheets == 1);
  CHECK(rep.deviation <= 1e-10);
  CHECK(std::abs(rep.normal.dot(Vec3(0.6, 0.0, 0.8))) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("planarity of a hemisphere cap is its sagitta") {
  const double T = 0.25, lam = std::exp(-1.0);
  auto traj = run_exact(hemisphere_family(), {0.0, T - lam * lam}, flat_patch());
  const auto f = parabolic_rescale(traj, Vec3::Zero(), T, lam, -1.0);
  const double rho = 0.5;
  const auto rep = planarity_multiplicity(f, rho, {}, Vec3(0.0, 2.0, 0.0));
  CHECK_FALSE(rep.boundary_mode);
  CHECK(rep.sheets == 1);
  // The ball of radius ρ about a point of the radius-2 sphere cuts a cap of
  // chord radius a with a² = ρ²(1 − ρ²/16).
  const double a2 = rho * rho * (1.0 - rho * rho / 16.0);
  const double sagitta = 2.0 - std::sqrt(4.0 - a2);
  CHECK(rep.deviation == doctest::Approx(sagitta).epsilon(0.02));
  CHECK(std::abs(rep.normal.dot(Vec3::UnitY())) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("two parallel sheets") {
  QuadratureHint hint;
  hint.extent = 1.2;
  auto a = sample(AnalyticSurface::plane(Vec3::Zero(), Vec3::UnitZ()), hint, 4);
  hint.focus = Vec3(0, 0, 0.1);
  auto b = sample(AnalyticSurface::plane(Vec3(0, 0, 0.1), Vec3::UnitZ()), hint, 4);
  a.points.insert(a.points.end(), b.points.begin(), b.points.end());
  const auto rep = planarity_multiplicity(a, 0.02, nullptr, Vec3(0, 0, 0.05), 1.0);
  CHECK(rep.sheets == 2);
  CHECK(rep.deviation == doctest::Approx(0.1).epsilon(1e-9));
  const auto one = planarity_multiplicity(b, 0.02, nullptr, Vec3(0, 0, 0.05), 1.0);
  CHECK(one.sheets == 1);
  CHECK_THROWS_AS(planarity_multiplicity(b, 0.02, nullptr, Vec3(5, 0, 0), 1.0), Error);
}
