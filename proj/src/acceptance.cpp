#include "mcflab/acceptance.hpp"

#include "mcflab/rescaling.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace mcflab {

namespace {

PatchPtr flat_patch() { return std::make_shared<SupportPatch>(SupportPatch::flat()); }

ExactFamily hemisphere_family() {
  ExactFamily f;
  f.kind = AnalyticKind::hemisphere;
  return f;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

FlowConfig exact_rim(double t_end, int stride) {
  FlowConfig c;
  c.t_end = t_end;
  c.outer_bc = OuterBC::dirichlet_exact;
  c.exact = hemisphere_family();
  c.snapshot_stride = stride;
  return c;
}

// Max nodal error against the exact hemisphere at the end of the run.
double sphere_error(double h, double t_end) {
  const auto fam = hemisphere_family();
  auto init = exact_graph(fam, flat_patch(), Grid(DomainShape::half_disk, h, 0.5), 0.0);
  auto traj = run(init, exact_rim(t_end, 1 << 20));
  if (traj.stop_reason != StopReason::completed) throw Error(ErrorKind::precondition, traj.stop_message);
  const GraphSurface& s = *traj.snapshots.back().graph();
  double err = 0.0;
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    if (s.grid.role(k) != NodeRole::active) continue;
    err = std::max(err, std::abs(s.u[k] - fam.height(s.grid.y1(s.grid.i_of(k)), s.grid.y2(s.grid.j_of(k)), s.t)));
  }
  return err;
}

// Mean over monitor intervals of |dA/dt + ∫H² − flux| / ∫H².
double area_law_defect(const Trajectory& traj, bool with_flux) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < traj.monitors.size(); ++k) {
    const auto& a = traj.monitors[k];
    const auto& b = traj.monitors[k + 1];
    const double rate = (b.area - a.area) / (b.t - a.t);
    const double h2 = 0.5 * (a.h2_integral + b.h2_integral);
    const double flux = with_flux ? 0.5 * (a.rim_flux + b.rim_flux) : 0.0;
    acc += std::abs(rate + h2 - flux) / h2;
  }
  return acc / static_cast<double>(traj.monitors.size() - 1);
}

CriterionResult c1_fixed_point() {
  CriterionResult r{1, "stationary half-plane fixed point", false, "", 0.0};
  GraphSurface s(flat_patch(), Grid(DomainShape::half_disk, 1.0 / 64, 1.0));
  FlowConfig c;
  const double dt = stable_dt(s, c.cfl);
  const auto t0 = std::chrono::steady_clock::now();
  for (int n = 0; n < 500; ++n) s = step(s, dt, c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double m = 0.0;
  for (double v : s.u) m = std::max(m, std::abs(v));
  r.pass = m <= 1e-12 && secs < 1.0;
  r.detail = "max|u| = " + num(m) + ", 500 steps in " + num(secs) + " s";
  return r;
}

CriterionResult c2_sphere_convergence() {
  CriterionResult r{2, "shrinking sphere second-order convergence", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const double e1 = sphere_error(1.0 / 64, 0.01);
  const double e2 = sphere_error(1.0 / 128, 0.01);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double ratio = e1 / e2;
  r.pass = ratio >= 3.0 && ratio <= 5.0 && secs < 30.0;
  r.detail = "error(1/64) = " + num(e1) + ", error(1/128) = " + num(e2) + ", ratio " + num(ratio);
  return r;
}

CriterionResult c3_area_law(bool fast) {
  CriterionResult r{3, "area law", false, "", 0.0};
  const double h = fast ? 1.0 / 32 : 1.0 / 64;
  auto init = exact_graph(hemisphere_family(), flat_patch(), Grid(DomainShape::half_disk, h, 0.5), 0.0);
  const auto traj = run(init, exact_rim(0.02, 1 << 20));
  // The grid footprint is fixed while the surface moves normally; the rim
  // flux converts the footprint area rate into the rate of the normally
  // transported region, which is what −∫H² governs.
  const double transported = area_law_defect(traj, true);
  const double footprint = area_law_defect(traj, false);
  r.pass = traj.stop_reason == StopReason::completed && transported <= 0.02;
  r.detail = "mean relative defect " + num(transported) + " over " + std::to_string(traj.monitors.size() - 1) +
             " steps (fixed-footprint rate without the rim flux: " + num(footprint) + ")";
  return r;
}

CriterionResult c4_density_ground_truth() {
  CriterionResult r{4, "Huisken density ground truth", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const auto patch = flat_patch();
  // Static plane far from Γ; r is inside the clearance d/(2√5).
  const Vec3 P(0.3, 10.0, -0.2);
  const Snapshot plane{0.0, 0, AnalyticSurface::plane(P, Vec3::UnitY())};
  const double interior = interior_density_value(plane, *patch, P, 1e-3, 2.0);
  const Vec3 Q(0.1, 0.0, 0.4);
  const Snapshot half{0.0, 0, AnalyticSurface::half_plane(Q, Vec3(0.6, 0.0, 0.8))};
  const double boundary = boundary_density_value(half, *patch, Q, 1e-2, 0.0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = std::abs(interior - 1.0) <= 1e-3 && std::abs(boundary - 0.5) <= 1e-3 && secs < 5.0;
  r.detail = "plane " + num(interior) + ", half-plane " + num(boundary);
  return r;
}

CriterionResult c5_consistency() {
  CriterionResult r{5, "boundary/interior kernel consistency", false, "", 0.0};
  const auto patch = flat_patch();
  const Snapshot sphere{0.0, 0, AnalyticSurface::sphere(Vec3::Zero(), 1.0)};
  const Snapshot hemi{0.0, 0, AnalyticSurface::hemisphere(Vec3::Zero(), 1.0)};
  DensityOptions o;
  o.require_clearance = false;
  double worst = 0.0;
  for (const Vec3& P : {Vec3(0.0, 0.0, 0.0), Vec3(0.3, 0.0, 0.2), Vec3(-0.5, 0.0, 0.9), Vec3(1.2, 0.0, 0.0)})
    for (double tau : {0.05, 0.25, 0.6}) {
      const double b = boundary_density_value(hemi, *patch, P, tau, 0.0);
      const double i = interior_density_value(sphere, *patch, P, tau, kInf, o);
      worst = std::max(worst, std::abs(b - 0.5 * i));
    }
  r.pass = worst <= 1e-6;
  r.detail = "max |boundary − interior/2| = " + num(worst);
  return r;
}

CriterionResult c6_monotonicity(bool fast) {
  CriterionResult r{6, "density monotonicity on the hemisphere flow", false, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const double h = fast ? 1.0 / 32 : 1.0 / 64;
  const auto fam = hemisphere_family();
  const double T = fam.singular_time();
  auto patch = flat_patch();
  auto init = exact_graph(fam, patch, Grid(DomainShape::half_disk, h, 0.3125), 0.0);
  FlowConfig c = exact_rim(0.8 * T, fast ? 100 : 400);
  const auto traj = run(init, c);
  // The density at the singular centre sees the whole doubled sphere: the
  // evolved cap, its mirror image and the exact remainder.
  Trajectory doubled;
  doubled.patch = patch;
  for (const auto& snap : traj.snapshots) {
    const GraphSurface& g = *snap.graph();
    doubled.snapshots.push_back(Snapshot{snap.t, snap.step, doubled_sphere_composite(g, fam.center, fam.radius(g.t))});
  }
  DensityQuery q;
  q.T = T;
  q.r = 1.0;
  q.options.require_clearance = false;
  for (const auto& s : doubled.snapshots) q.sample_times.push_back(s.t);
  const auto rep = monotonicity_report(doubled, q);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = traj.stop_reason == StopReason::completed && rep.max_upward_violation <= 1e-3 && secs < 60.0;
  r.detail = std::to_string(rep.values.size()) + " samples to t = " + num(rep.times.back()) + ", first " +
             num(rep.values.front()) + ", last " + num(rep.values.back()) + ", max upward violation " +
             num(rep.max_upward_violation);
  return r;
}

CriterionResult c7_gauss_bonnet() {
  CriterionResult r{7, "Gauss-Bonnet energy identity", false, "", 0.0};
  const auto flat = SupportPatch::flat();
  const auto hemi = AnalyticSurface::hemisphere(Vec3::Zero(), 1.0);
  const auto gh = gauss_bonnet_identity(sample(hemi, {}, 3), flat, hemi.topology());
  const auto sph = AnalyticSurface::sphere(Vec3(0.2, 0.4, -0.1), 0.8);
  const auto gs = gauss_bonnet_identity(sample(sph, {}, 3), flat, sph.topology());
  r.pass = std::abs(gh.residual) <= 0.01 * 4 * kPi && std::abs(gs.residual) <= 0.01 * 4 * kPi &&
           std::abs(gh.lhs - 4 * kPi) <= 1e-9 * 4 * kPi && std::abs(gs.lhs - 8 * kPi) <= 1e-9 * 8 * kPi;
  r.detail = "hemisphere lhs " + num(gh.lhs) + " residual " + num(gh.residual) + "; sphere lhs " + num(gs.lhs) +
             " residual " + num(gs.residual);
  return r;
}

CriterionResult c8_shrinker() {
  CriterionResult r{8, "self-shrinker residual", false, "", 0.0};
  const auto patch = flat_patch();
  const Snapshot sphere{0.0, 0, AnalyticSurface::sphere(Vec3::Zero(), 1.0)};
  const double analytic = self_shrinker_residual(sphere, *patch, Vec3::Zero(), 0.25);
  double res[2];
  const double hs[2] = {1.0 / 64, 1.0 / 128};
  for (int k = 0; k < 2; ++k) {
    auto g = exact_graph(hemisphere_family(), patch, Grid(DomainShape::half_disk, hs[k], 0.5), 0.0);
    res[k] = self_shrinker_residual(Snapshot{0.0, 0, g}, *patch, Vec3::Zero(), 0.25);
  }
  // The residual is quadratic in the curvature error, so its square root is
  // the O(h²) quantity.
  const double ratio = std::sqrt(res[0] / res[1]);
  r.pass = analytic <= 1e-8 && ratio >= 3.0 && ratio <= 5.0;
  r.detail = "analytic " + num(analytic) + "; grid sqrt(residual) " + num(std::sqrt(res[0])) + " -> " +
             num(std::sqrt(res[1])) + ", ratio " + num(ratio) + ", C = " + num(std::sqrt(res[1]) / (hs[1] * hs[1]));
  return r;
}

CriterionResult c9_area_ratio() {
  CriterionResult r{9, "modified area ratio of a tilted half-plane", false, "", 0.0};
  const double h = 1.0 / 64, delta = 0.2;
  GraphSurface tilt(flat_patch(), Grid(DomainShape::half_disk, h, 1.0));
  tilt.fill([&](double y1, double) { return delta * y1; });
  tilt.apply_ghosts();
  const auto geo = fundamental_forms(tilt);
  bool ok = true;
  std::ostringstream d;
  for (double rad : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    const auto a = modified_area_ratio(tilt, geo, Vec3::Zero(), rad);
    const double bound = std::sqrt(1 + delta * delta) + 3 * h / rad;
    ok = ok && a.ratio <= bound;
    d << "r=" << rad << ": " << num(a.ratio) << " <= " << num(bound) << "; ";
  }
  r.pass = ok;
  r.detail = d.str();
  return r;
}

CriterionResult c10_reflection(bool fast) {
  CriterionResult r{10, "reflection principle", false, "", 0.0};
  const double h = fast ? 1.0 / 32 : 1.0 / 64;
  auto init = exact_graph(hemisphere_family(), flat_patch(), Grid(DomainShape::half_disk, h, 0.5), 0.0);
  const auto traj = run(init, exact_rim(0.01, 1 << 20));
  const GraphSurface& s = *traj.snapshots.back().graph();
  const auto e = even_extension(s);
  const auto res = extended_residual(e);
  const Grid& g = e.full.grid;
  double sym = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!e.valid[k]) continue;
    sym = std::max(sym, std::abs(res[k] - res[g.index(g.i_of(k), -g.j_of(k))]));
  }
  r.pass = sym <= 1e-12 && e.max_edge_a12 <= h * h;
  r.detail = "snapshot t = " + num(s.t) + ", reflection asymmetry " + num(sym) + ", max|a12(y1,0)| " +
             num(e.max_edge_a12) + " (tol " + num(h * h) + ")";
  return r;
}

CriterionResult c11_rescaling() {
  CriterionResult r{11, "rescaling self-similarity", false, "", 0.0};
  const double T = 0.25;
  const double l1 = std::exp(-1.0), l2 = std::exp(-2.0);
  const auto traj = run_exact(hemisphere_family(), {0.0, T - l1 * l1, T - l2 * l2}, flat_patch());
  const auto f1 = parabolic_rescale(traj, Vec3::Zero(), T, l1, -1.0);
  const auto f2 = parabolic_rescale(traj, Vec3::Zero(), T, l2, -1.0);
  const auto s1 = snapshot_samples(f1.snapshot), s2 = snapshot_samples(f2.snapshot);
  double gap = s1.points.size() == s2.points.size() ? 0.0 : kInf;
  for (std::size_t k = 0; k < s1.points.size() && k < s2.points.size(); ++k)
    gap = std::max(gap, (s1.points[k].X - s2.points[k].X).norm());

  ExactFamily hp;
  hp.kind = AnalyticKind::half_plane;
  hp.normal = Vec3(0.6, 0.0, 0.8);
  const auto flat = run_exact(hp, {0.0, 0.5, 1.0}, flat_patch());
  const auto frame = parabolic_rescale(flat, Vec3::Zero(), 2.0, 0.3, -1.0 / 0.09);
  const auto rep = planarity_multiplicity(frame, 1.0);
  r.pass = gap <= 1e-6 && rep.sheets == 1 && rep.deviation <= 1e-10;
  r.detail = "frame gap " + num(gap) + ", half-plane sheets " + std::to_string(rep.sheets) + ", deviation " +
             num(rep.deviation);
  return r;
}

CriterionResult c12_scan() {
  CriterionResult r{12, "singular-set scan", false, "", 0.0};
  const double h = 1.0 / 64;
  const auto fam = hemisphere_family();
  const double T = fam.singular_time();
  // Geometric approach to T until h|A| reaches the blow-up threshold 0.5.
  std::vector<double> times{0.0};
  for (int k = 1; k < 60; ++k) {
    const double t = T * (1.0 - std::ldexp(1.0, -k));
    times.push_back(t);
    if (h * std::sqrt(2.0) / fam.radius(t) >= 0.5) break;
  }
  const auto traj = run_exact(fam, times, flat_patch());
  const std::vector<double> radii{4 * h, 8 * h, 16 * h};
  const auto scan = singular_set_scan(traj, 1.0, radii);
  const double dist = scan.clusters.size() == 1 ? (scan.clusters[0].location - fam.center).norm() : kInf;

  GraphSurface still(flat_patch(), Grid(DomainShape::half_disk, h, 0.5));
  FlowConfig c;
  c.t_end = 0.01;
  c.snapshot_stride = 50;
  const auto flat = run(still, c);
  const auto none = singular_set_scan(flat, 1.0, radii);
  r.pass = scan.clusters.size() == 1 && dist <= 3 * h && none.clusters.empty();
  r.detail = "stopped at t = " + num(scan.t) + " (R = " + num(fam.radius(scan.t)) + "), clusters " +
             std::to_string(scan.clusters.size()) + " at distance " + num(dist) + " (3h = " + num(3 * h) +
             "); flat run clusters " + std::to_string(none.clusters.size());
  return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(bool fast) {
  const std::vector<std::function<CriterionResult()>> checks{
      c1_fixed_point,
      c2_sphere_convergence,
      [fast] { return c3_area_law(fast); },
      c4_density_ground_truth,
      c5_consistency,
      [fast] { return c6_monotonicity(fast); },
      c7_gauss_bonnet,
      c8_shrinker,
      c9_area_ratio,
      [fast] { return c10_reflection(fast); },
      c11_rescaling,
      c12_scan,
  };
  std::vector<CriterionResult> out;
  for (std::size_t k = 0; k < checks.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = checks[k]();
    } catch (const std::exception& e) {
      r.id = static_cast<int>(k + 1);
      r.name = "criterion " + std::to_string(k + 1);
      r.pass = false;
      r.detail = std::string("threw ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(r);
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream s;
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.2f", r.seconds);
  s << (r.pass ? "PASS" : "FAIL") << ' ' << r.id << ' ' << r.name << " (" << secs << "s) " << r.detail;
  return s.str();
}

}  // namespace mcflab
