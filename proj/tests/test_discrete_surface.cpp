#include "doctest.h"

#include "mcflab/analytic_surface.hpp"
#include "mcflab/discrete_surface.hpp"

#include <cmath>
#include <sstream>

using namespace mcflab;

namespace {

PatchPtr flat_patch() { return std::make_shared<SupportPatch>(SupportPatch::flat()); }

GraphSurface sphere_graph(double h, double r_dom, double R = 1.0) {
  GraphSurface s(flat_patch(), Grid(DomainShape::half_disk, h, r_dom));
  s.fill([R](double a, double b) { return std::sqrt(R * R - a * a - b * b); });
  s.apply_ghosts();
  return s;
}

double max_h_error(double h) {
  auto s = sphere_graph(h, 0.5);
  auto geo = fundamental_forms(s);
  double err = 0.0;
  for (std::size_t k = 0; k < s.grid.size(); ++k)
    if (s.grid.role(k) == NodeRole::active) err = std::max(err, std::abs(geo.nodes[k].H - 2.0));
  return err;
}

}  // namespace

TEST_CASE("minimal half-plane has trivial geometry") {
  GraphSurface s(flat_patch(), Grid(DomainShape::half_disk, 1.0 / 16, 1.0));
  auto geo = fundamental_forms(s);
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    if (!geo.valid[k]) continue;
    CHECK((geo.nodes[k].g - Mat2::Identity()).norm() == 0.0);
    CHECK(geo.nodes[k].A.norm() == 0.0);
    CHECK(geo.nodes[k].H == 0.0);
  }
  CHECK(integrate(s, geo, [](const NodeGeometry&) { return 0.0; }) == 0.0);
}

TEST_CASE("sphere graph mean curvature converges at second order") {
  const double e1 = max_h_error(1.0 / 32), e2 = max_h_error(1.0 / 64);
  CHECK(e1 < 4.0 * (1.0 / 32) * (1.0 / 32) * 10);
  const double ratio = e1 / e2;
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.0);
}

TEST_CASE("pointwise invariants on the sphere graph") {
  auto s = sphere_graph(1.0 / 32, 0.5);
  auto geo = fundamental_forms(s);
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    if (!geo.valid[k]) continue;
    const auto& n = geo.nodes[k];
    CHECK(n.A2 >= 0.5 * n.H * n.H - 1e-12);
    CHECK(std::abs(n.N.norm() - 1.0) < 1e-10);
    CHECK(n.g.determinant() > 0.0);
    // Inward normal of the unit sphere.
    CHECK((n.N + n.X).norm() < 0.05);
  }
}

TEST_CASE("graph formula agrees with the embedding route on a curved support") {
  auto patch = SupportPatch(PatchKind::analytic_quadric, sphere_cap_height(2.0), 1.0);
  const Vec2 du(0.3, -0.2);
  Mat2 ddu;
  ddu << 0.7, 0.1, 0.1, -0.4;
  for (Vec3 Y : {Vec3(0.1, 0.2, 0.05), Vec3(-0.3, 0.0, 0.2), Vec3(0.2, 0.15, -0.1)}) {
    auto a = graph_geometry(patch, Y[0], Y[1], Y[2], du, ddu);
    auto b = embedding_geometry(patch, Y[0], Y[1], Y[2], du, ddu);
    CHECK((a.g - b.g).norm() < 1e-12);
    CHECK((a.A - b.A).norm() < 1e-12);
    CHECK(std::abs(a.rhs - b.rhs) < 1e-12);
    CHECK((a.N - b.N).norm() < 1e-12);
  }
}

TEST_CASE("quadrature") {
  const double h = 1.0 / 32;
  GraphSurface s(flat_patch(), Grid(DomainShape::half_disk, h, 1.0));
  auto geo = fundamental_forms(s);
  const double area = integrate(s, geo, [](const NodeGeometry&) { return 1.0; });
  CHECK(std::abs(area - kPi / 2) < 2 * h);
  CHECK(std::abs(area - kPi / 2) < 1e-12);

  auto cap = sphere_graph(1.0 / 64, 0.5);
  auto cg = fundamental_forms(cap);
  const double h2 = integrate(cap, cg, [](const NodeGeometry& n) { return n.H * n.H; });
  const double exact = 4.0 * kPi * (1.0 - std::sqrt(0.75));
  CHECK(std::abs(h2 - exact) < 0.01 * exact);
}

TEST_CASE("quadrature order on the sphere graph") {
  const double exact = kPi * (1.0 - std::sqrt(0.75));
  auto err = [&](double h) {
    auto s = sphere_graph(h, 0.5);
    auto g = fundamental_forms(s);
    return std::abs(integrate(s, g, [](const NodeGeometry&) { return 1.0; }) - exact);
  };
  const double ratio = err(1.0 / 32) / err(1.0 / 64);
  MESSAGE("area quadrature ratio " << ratio);
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.0);
}

TEST_CASE("perimeter") {
  const double h = 1.0 / 16;
  GraphSurface s(flat_patch(), Grid(DomainShape::half_disk, h, 1.0));
  CHECK(std::abs(perimeter(s) - 2.0) < 2 * h);

  auto a = sphere_graph(1.0 / 32, 0.5);
  const double lambda = 3.0;
  GraphSurface b(flat_patch(), Grid(DomainShape::half_disk, lambda / 32, 1.5));
  b.fill([&](double y1, double y2) {
    const double x = y1 / lambda, y = y2 / lambda;
    return lambda * std::sqrt(1.0 - x * x - y * y);
  });
  CHECK(std::abs(perimeter(b) - lambda * perimeter(a)) < 1e-9);

  CHECK(analytic_perimeter(AnalyticSurface::hemisphere(Vec3::Zero(), 1.0)) == doctest::Approx(2 * kPi));
  auto hs = sample(AnalyticSurface::hemisphere(Vec3::Zero(), 1.0), {}, 2);
  double len = 0.0;
  for (const auto& c : hs.boundary) len += c.ds;
  CHECK(std::abs(len - 2 * kPi) < 1e-6);
}

TEST_CASE("neumann residual of an even graph") {
  auto s = sphere_graph(1.0 / 32, 0.5);
  CHECK(neumann_residual(s) <= (1.0 / 32) * (1.0 / 32));
}

TEST_CASE("modified area ratio") {
  const double h = 1.0 / 64;
  GraphSurface flat(flat_patch(), Grid(DomainShape::half_disk, h, 1.0));
  auto geo = fundamental_forms(flat);
  for (double r : {0.2, 0.4, 0.6}) {
    auto a = modified_area_ratio(flat, geo, Vec3(0.1, 0.0, 0.0), r);
    CHECK(std::abs(a.ratio - 1.0) <= 3 * h / r);
    CHECK_FALSE(a.partial);
  }
  auto out = modified_area_ratio(flat, geo, Vec3(0.8, 0.0, 0.0), 0.5);
  CHECK(out.partial);
  CHECK_THROWS_AS(modified_area_ratio(flat, geo, Vec3(0.8, 0.0, 0.0), 0.5, true), Error);

  GraphSurface disk(flat_patch(), Grid(DomainShape::disk, h, 1.0));
  auto dg = fundamental_forms(disk);
  auto d = modified_area_ratio(disk, dg, Vec3(0.1, 0.2, 0.0), 0.5);
  CHECK(std::abs(d.ratio - 1.0) <= 3 * h / 0.5);
  CHECK(d.complementary == 0.0);

  const double delta = 0.2;
  GraphSurface tilt(flat_patch(), Grid(DomainShape::half_disk, h, 1.0));
  tilt.fill([&](double y1, double) { return delta * y1; });
  auto tg = fundamental_forms(tilt);
  for (double r : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    auto a = modified_area_ratio(tilt, tg, Vec3::Zero(), r);
    CHECK(a.ratio <= std::sqrt(1 + delta * delta) + 3 * h / r);
  }

  auto prof = area_ratio_profile(flat, geo, Vec3::Zero(), {0.1, 0.2, 0.3, 0.4}, 10.0, 0.0, 0.0);
  for (double v : prof.values) CHECK(std::abs(v - 1.0) <= 3 * h / 0.1);
  CHECK(prof.max_downward_violation <= 3 * h / 0.1);
  auto single = area_ratio_profile(flat, geo, Vec3::Zero(), {0.3}, 10.0, 0.0, 0.0);
  CHECK(single.values.size() == 1);
  CHECK(single.max_downward_violation == 0.0);
}

TEST_CASE("area ratio profile on the sphere graph") {
  auto s = sphere_graph(1.0 / 64, 0.75);
  auto geo = fundamental_forms(s);
  const Vec3 P(0.0, 0.0, 1.0);
  auto prof = area_ratio_profile(s, geo, P, {0.1, 0.2, 0.3, 0.4}, 10.0, 2.0, 0.0);
  CHECK(prof.max_downward_violation <= 3 * (1.0 / 64) / 0.1);
}

TEST_CASE("Gauss-Bonnet on analytic surfaces") {
  auto flat = SupportPatch::flat();
  auto hemi = AnalyticSurface::hemisphere(Vec3::Zero(), 1.0);
  auto gb = gauss_bonnet_identity(sample(hemi, {}, 2), flat, hemi.topology());
  CHECK(gb.lhs == doctest::Approx(4 * kPi).epsilon(1e-10));
  CHECK(std::abs(gb.residual) <= 0.01 * 4 * kPi);
  CHECK(gb.chi == 1);

  auto sph = AnalyticSurface::sphere(Vec3(0.3, 1.0, -0.2), 2.0);
  auto gs = gauss_bonnet_identity(sample(sph, {}, 2), flat, sph.topology());
  CHECK(gs.lhs == doctest::Approx(8 * kPi).epsilon(1e-10));
  CHECK(std::abs(gs.residual) <= 0.01 * 8 * kPi);

  auto big = hemi.rescaled(Vec3::Zero(), 0.2);
  auto gbig = gauss_bonnet_identity(sample(big, {}, 2), flat, big.topology());
  CHECK(std::abs(gbig.lhs - gb.lhs) <= 1e-9 * gb.lhs);
  CHECK(std::abs(gbig.h2 - gb.h2) <= 1e-9 * gb.h2);

  CHECK_THROWS_AS(gauss_bonnet_identity(sample(hemi, {}, 0), flat, Topology::untagged), Error);
}

TEST_CASE("mesh dump") {
  GraphSurface s(flat_patch(), Grid(DomainShape::half_disk, 0.5, 1.0));
  std::ostringstream os;
  write_mesh(os, s);
  const std::string text = os.str();
  CHECK(text.rfind("v ", 0) == 0);
  CHECK(text.find("\nf ") != std::string::npos);
}
