#include "doctest.h"

#include "mcflab/flow_solver.hpp"

#include <cmath>

using namespace mcflab;

namespace {

PatchPtr flat_patch() { return std::make_shared<SupportPatch>(SupportPatch::flat()); }

ExactFamily hemisphere(double R0 = 1.0) {
  ExactFamily f;
  f.kind = AnalyticKind::hemisphere;
  f.R0 = R0;
  return f;
}

FlowConfig sphere_config(double t_end) {
  FlowConfig c;
  c.t_end = t_end;
  c.outer_bc = OuterBC::dirichlet_exact;
  c.exact = hemisphere();
  c.snapshot_stride = 50;
  return c;
}

double sphere_error(double h, double t_end) {
  const auto fam = hemisphere();
  auto init = exact_graph(fam, flat_patch(), Grid(DomainShape::half_disk, h, 0.5), 0.0);
  auto traj = run(init, sphere_config(t_end));
  REQUIRE(traj.stop_reason == StopReason::completed);
  const GraphSurface& s = *traj.snapshots.back().graph();
  CHECK(s.t == doctest::Approx(t_end));
  double err = 0.0;
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    if (s.grid.role(k) != NodeRole::active) continue;
    err = std::max(err, std::abs(s.u[k] - fam.height(s.grid.y1(s.grid.i_of(k)), s.grid.y2(s.grid.j_of(k)), s.t)));
  }
  return err;
}

}  // namespace

TEST_CASE("exact families") {
  auto f = hemisphere();
  CHECK(f.radius(0.0) == 1.0);
  CHECK(f.radius(0.1875) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(f.radius(0.25), Error);
  CHECK(exact_surface(f, 0.1875).radius == doctest::Approx(0.5));
  ExactFamily hp;
  hp.kind = AnalyticKind::half_plane;
  hp.normal = Vec3(1, 0, 0);
  auto a = exact_surface(hp, 0.0), b = exact_surface(hp, 7.0);
  CHECK((a.point - b.point).norm() == 0.0);
  CHECK((a.normal - b.normal).norm() == 0.0);
}

TEST_CASE("the minimal half-plane is an exact fixed point") {
  GraphSurface s(flat_patch(), Grid(DomainShape::half_disk, 1.0 / 64, 1.0));
  FlowConfig c;
  const double dt = stable_dt(s, c.cfl);
  for (int n = 0; n < 500; ++n) s = step(s, dt, c, nullptr);
  double m = 0.0;
  for (double v : s.u) m = std::max(m, std::abs(v));
  CHECK(m <= 1e-12);

  FlowConfig r;
  r.t_end = 0.1;
  auto traj = run(GraphSurface(flat_patch(), Grid(DomainShape::half_disk, 1.0 / 16, 1.0)), r);
  CHECK(traj.stop_reason == StopReason::completed);
  for (const auto& row : traj.monitors) CHECK(row.area == doctest::Approx(traj.monitors.front().area));
}

TEST_CASE("one step on a curved support reproduces dt*f") {
  auto cyl = std::make_shared<SupportPatch>(PatchKind::analytic_quadric, parabolic_height(0.5), 0.5);
  GraphSurface zero(cyl, Grid(DomainShape::half_disk, 1.0 / 16, 0.5));
  FlowConfig c;
  const double dt = stable_dt(zero, c.cfl);
  auto one = step(zero, dt, c, &zero);
  // The plane y3 = 0 is orthogonal to a cylinder over y1, hence minimal.
  for (std::size_t k = 0; k < one.u.size(); ++k) CHECK(std::abs(one.u[k]) < 1e-15);

  auto cap = std::make_shared<SupportPatch>(PatchKind::analytic_quadric, sphere_cap_height(2.0), 1.0);
  GraphSurface lifted(cap, Grid(DomainShape::half_disk, 1.0 / 16, 0.5));
  lifted.fill([](double, double) { return 0.2; });
  auto next = step(lifted, dt, c, &lifted);
  const Grid& g = lifted.grid;
  int checked = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.role(k) != NodeRole::active) continue;
    const auto ref = embedding_geometry(*cap, g.y1(g.i_of(k)), g.y2(g.j_of(k)), 0.2, Vec2::Zero(), Mat2::Zero());
    CHECK(std::abs(next.u[k] - (0.2 + dt * ref.rhs)) < 1e-14);
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("cfl and validation errors") {
  GraphSurface s(flat_patch(), Grid(DomainShape::half_disk, 1.0 / 16, 1.0));
  FlowConfig c;
  CHECK_THROWS_AS(step(s, 10.0, c, nullptr), Error);
  c.cfl = 0.3;
  CHECK_THROWS_AS(c.validate(), Error);
  FlowConfig d;
  d.outer_bc = OuterBC::dirichlet_exact;
  CHECK_THROWS_AS(d.validate(), Error);
}

TEST_CASE("shrinking sphere converges at second order") {
  const double e1 = sphere_error(1.0 / 32, 0.01);
  const double e2 = sphere_error(1.0 / 64, 0.01);
  MESSAGE("sphere errors " << e1 << " " << e2 << " C=" << e2 * 64 * 64);
  CHECK(e1 / e2 >= 3.0);
  CHECK(e1 / e2 <= 5.0);
}

TEST_CASE("area law with the rim flux") {
  auto init = exact_graph(hemisphere(), flat_patch(), Grid(DomainShape::half_disk, 1.0 / 32, 0.5), 0.0);
  auto traj = run(init, sphere_config(0.02));
  REQUIRE(traj.monitors.size() > 10);
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < traj.monitors.size(); ++k) {
    const auto& a = traj.monitors[k];
    const auto& b = traj.monitors[k + 1];
    const double rate = (b.area - a.area) / (b.t - a.t);
    const double law = -0.5 * (a.h2_integral + b.h2_integral) + 0.5 * (a.rim_flux + b.rim_flux);
    acc += std::abs(rate - law) / (0.5 * (a.h2_integral + b.h2_integral));
  }
  acc /= static_cast<double>(traj.monitors.size() - 1);
  MESSAGE("mean relative area-law defect " << acc);
  CHECK(acc <= 0.02);
}

TEST_CASE("frozen rim run decreases area and keeps the Neumann condition") {
  auto init = exact_graph(hemisphere(), flat_patch(), Grid(DomainShape::half_disk, 1.0 / 32, 0.5), 0.0);
  FlowConfig c;
  c.t_end = 0.01;
  c.snapshot_stride = 20;
  auto traj = run(init, c);
  CHECK(traj.stop_reason == StopReason::completed);
  const double h = 1.0 / 32;
  for (std::size_t k = 0; k + 1 < traj.monitors.size(); ++k) {
    const double dt = traj.monitors[k + 1].t - traj.monitors[k].t;
    CHECK(traj.monitors[k + 1].area <= traj.monitors[k].area + 10 * h * h * dt);
  }
  for (const auto& snap : traj.snapshots) CHECK(neumann_residual(*snap.graph()) <= 10 * h * h);
}

TEST_CASE("symmetry in y1 is preserved") {
  auto init = exact_graph(hemisphere(), flat_patch(), Grid(DomainShape::half_disk, 1.0 / 32, 0.5), 0.0);
  init.fill([](double a, double b) { return 1.0 + 0.1 * std::cos(3 * a) * std::cos(2 * b); });
  FlowConfig c;
  c.t_end = 0.005;
  auto traj = run(init, c);
  const GraphSurface& s = *traj.snapshots.back().graph();
  double worst = 0.0;
  for (int i = 0; i <= s.grid.hi(); ++i)
    for (int j = 0; j <= s.grid.hi(); ++j)
      if (s.grid.role(i, j) == NodeRole::active) worst = std::max(worst, std::abs(s.at(i, j) - s.at(-i, j)));
  CHECK(worst <= 1e-10);
}

TEST_CASE("semi-implicit scheme tracks the explicit solution") {
  const auto fam = hemisphere();
  auto init = exact_graph(fam, flat_patch(), Grid(DomainShape::half_disk, 1.0 / 32, 0.5), 0.0);
  auto c = sphere_config(0.01);
  c.scheme = Scheme::semi_implicit;
  auto traj = run(init, c);
  REQUIRE(traj.stop_reason == StopReason::completed);
  const GraphSurface& s = *traj.snapshots.back().graph();
  double err = 0.0;
  for (std::size_t k = 0; k < s.grid.size(); ++k)
    if (s.grid.role(k) == NodeRole::active)
      err = std::max(err, std::abs(s.u[k] - fam.height(s.grid.y1(s.grid.i_of(k)), s.grid.y2(s.grid.j_of(k)), s.t)));
  CHECK(err < 20.0 / (32.0 * 32.0));
}

TEST_CASE("blow-up detection on the shrinking sphere graph") {
  const double h = 1.0 / 32;
  auto init = exact_graph(hemisphere(), flat_patch(), Grid(DomainShape::half_disk, h, 0.5), 0.0);
  // With the default threshold the exact rim data leaves the footprint
  // (R(t) < r_dom + 3h) while h*max|A| is still far below 0.5.
  auto c = sphere_config(0.25);
  auto traj = run(init, c);
  CHECK(traj.stop_reason == StopReason::chart_exit);
  CHECK(h * traj.monitors.back().max_A < 0.5);

  // A threshold reachable before that point stops the run as a blow-up.
  c.blowup_threshold = 0.07;
  auto early = run(init, c);
  CHECK(early.stop_reason == StopReason::blowup);
  CHECK(h * early.monitors.back().max_A >= 0.07);
  CHECK(early.snapshots.back().t < 0.2);
}

TEST_CASE("past-singularity rim data stops the run") {
  auto init = exact_graph(hemisphere(), flat_patch(), Grid(DomainShape::half_disk, 1.0 / 16, 0.25), 0.0);
  auto c = sphere_config(0.3);
  c.blowup_threshold = 1e9;
  auto traj = run(init, c);
  CHECK(traj.stop_reason != StopReason::completed);
  CHECK(traj.stop_reason != StopReason::blowup);
}

TEST_CASE("even extension") {
  GraphSurface zero(flat_patch(), Grid(DomainShape::half_disk, 1.0 / 16, 0.5));
  auto ez = even_extension(zero);
  for (std::size_t k = 0; k < ez.full.u.size(); ++k) {
    CHECK(ez.full.u[k] == 0.0);
    if (ez.valid[k]) CHECK((ez.a[k] - Mat2::Identity()).norm() == 0.0);
  }

  const double h = 1.0 / 32;
  auto s = exact_graph(hemisphere(), flat_patch(), Grid(DomainShape::half_disk, h, 0.5), 0.0);
  auto e = even_extension(s);
  const Grid& g = e.full.grid;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.role(k) == NodeRole::outside) continue;
    const double y1 = g.y1(g.i_of(k)), y2 = g.y2(g.j_of(k));
    CHECK(std::abs(e.full.u[k] - std::sqrt(1 - y1 * y1 - y2 * y2)) <= 1e-12);
  }
  CHECK(e.max_edge_a12 <= h * h);
  auto r = extended_residual(e);
  auto geo = fundamental_forms(s);
  double sym = 0.0, same = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!e.valid[k]) continue;
    const int i = g.i_of(k), j = g.j_of(k);
    sym = std::max(sym, std::abs(r[k] - r[g.index(i, -j)]));
    if (j >= 0) same = std::max(same, std::abs(r[k] - geo.nodes[s.grid.index(i, j)].rhs));
  }
  CHECK(sym <= 1e-12);
  CHECK(same <= 1e-12);
}

TEST_CASE("reflection-area identity on a flat support") {
  const double h = 1.0 / 64;
  auto s = exact_graph(hemisphere(), flat_patch(), Grid(DomainShape::half_disk, h, 0.5), 0.0);
  auto geo = fundamental_forms(s);
  auto full = even_extension(s).full;
  auto fgeo = fundamental_forms(full);
  const Vec3 P(0.1, 0.05, std::sqrt(1 - 0.01 - 0.0025));
  for (double r : {0.1, 0.2}) {
    auto half = modified_area_ratio(s, geo, P, r);
    auto both = modified_area_ratio(full, fgeo, P, r);
    const double reflected = both.area - half.area;  // H²(Σ̃ ∩ B_r(P))
    CHECK(std::abs(half.complementary - reflected) <= 3 * h * r);
  }
}

TEST_CASE("temporal regularity probe") {
  FlowConfig c;
  c.t_end = 0.01;
  c.snapshot_stride = 5;
  auto flat = run(GraphSurface(flat_patch(), Grid(DomainShape::half_disk, 1.0 / 16, 1.0)), c);
  CHECK(temporal_regularity_probe(flat, 2, 2, 0.0, 1.0) == 0.0);
  CHECK_THROWS_AS(temporal_regularity_probe(flat, 2, 2, 0.0, 0.0), Error);

  auto quotient = [](double h) {
    auto init = exact_graph(hemisphere(), flat_patch(), Grid(DomainShape::half_disk, h, 0.5), 0.0);
    auto cfg = sphere_config(0.01);
    cfg.snapshot_stride = 1;
    auto traj = run(init, cfg);
    const int i = static_cast<int>(std::lround(0.125 / h)), j = static_cast<int>(std::lround(0.125 / h));
    return temporal_regularity_probe(traj, i, j, 0.0, 0.01);
  };
  const double q1 = quotient(1.0 / 16), q2 = quotient(1.0 / 32);
  MESSAGE("regularity quotients " << q1 << " " << q2);
  CHECK(std::abs(q1 - q2) <= 0.2 * q2);
}
