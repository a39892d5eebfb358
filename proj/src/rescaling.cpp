#include "mcflab/rescaling.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>

namespace mcflab {

const char* to_string(FrameMode mode) noexcept {
  return mode == FrameMode::parabolic ? "parabolic" : "normalized";
}

namespace {

GraphSurface rescale_graph(const GraphSurface& g, const Vec3& P, double T, double lambda) {
  auto patch = std::make_shared<SupportPatch>(g.patch->rescaled(P, lambda));
  GraphSurface out(patch, Grid(g.grid.shape(), g.grid.h() / lambda, g.grid.r_dom() / lambda),
                   (g.t - T) / (lambda * lambda));
  for (std::size_t k = 0; k < g.u.size(); ++k) out.u[k] = g.u[k] / lambda;
  out.topology = g.topology;
  return out;
}

AnalyticSurface rescale_analytic(const AnalyticSurface& a, const Vec3& P, double T, double lambda) {
  AnalyticSurface out = a.rescaled(P, lambda);
  out.t = (a.t - T) / (lambda * lambda);
  return out;
}

// Orientation convention: the largest normal component is positive.
Vec3 canonical(Vec3 n) {
  int k = 0;
  n.cwiseAbs().maxCoeff(&k);
  return n[k] < 0.0 ? Vec3(-n) : n;
}

void plane_basis(const Vec3& n, Vec3& a, Vec3& b) {
  const Vec3 seed = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  a = (seed - seed.dot(n) * n).normalized();
  b = n.cross(a);
}

}  // namespace

Snapshot rescale_snapshot(const Snapshot& snap, const Vec3& P, double T, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::validation_error, "rescaling factor must be > 0");
  Snapshot out;
  out.t = (snap.t - T) / (lambda * lambda);
  out.step = snap.step;
  if (const auto* g = snap.graph()) {
    out.surface = rescale_graph(*g, P, T, lambda);
  } else if (const auto* a = snap.analytic()) {
    out.surface = rescale_analytic(*a, P, T, lambda);
  } else {
    const auto& c = *snap.composite();
    out.surface = CompositeSurface{rescale_graph(c.graph, P, T, lambda), rescale_analytic(c.exterior, P, T, lambda)};
  }
  return out;
}

RescalingFrame parabolic_rescale(const Trajectory& traj, const Vec3& P, double T, double lambda, double tau) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::validation_error, "rescaling factor must be > 0");
  if (!(tau < 0.0)) throw Error(ErrorKind::out_of_range, "frame time must be negative");
  if (traj.snapshots.empty()) throw Error(ErrorKind::insufficient_snapshots, "trajectory has no snapshots");
  if (!traj.patch) throw Error(ErrorKind::precondition, "trajectory has no support patch");
  const double t = T + lambda * lambda * tau;
  const double slack = 1e-12 * std::max(1.0, std::abs(T));
  if (t < traj.snapshots.front().t - slack || t > traj.snapshots.back().t + slack)
    throw Error(ErrorKind::out_of_range, "requested time lies outside the stored snapshots");
  RescalingFrame f;
  f.P = P;
  f.T = T;
  f.lambda = lambda;
  f.tau = tau;
  f.source_index = traj.nearest(t);
  const Snapshot& src = traj.snapshots[f.source_index];
  f.source_time = src.t;
  f.time_offset = std::abs(src.t - t);
  f.snapshot = rescale_snapshot(src, P, T, lambda);
  f.patch = std::make_shared<SupportPatch>(traj.patch->rescaled(P, lambda));
  return f;
}

RescalingFrame normalized_frame(const Trajectory& traj, const Vec3& P, double T, double s) {
  RescalingFrame f = parabolic_rescale(traj, P, T, std::exp(-0.5 * s), -1.0);
  f.mode = FrameMode::normalized;
  f.s = s;
  return f;
}

SurfaceSamples region_samples(const Snapshot& snap, const Vec3& center, double region_radius, double* spacing) {
  if (!(region_radius > 0.0)) throw Error(ErrorKind::precondition, "region radius must be > 0");
  if (const auto* g = snap.graph()) {
    if (spacing) *spacing = g->grid.h();
    return samples(*g);
  }
  QuadratureHint hint;
  hint.focus = center;
  hint.extent = region_radius;
  const double target = region_radius / 40.0;
  SurfaceSamples out;
  double med = kInf;
  for (int level = 3; level <= 6; ++level) {
    out = snapshot_samples(snap, hint, level);
    std::vector<double> sp;
    for (const auto& p : out.points)
      if ((p.X - center).norm() < region_radius && p.w > 0.0) sp.push_back(std::sqrt(p.w));
    if (sp.empty()) {
      med = kInf;
      continue;
    }
    std::nth_element(sp.begin(), sp.begin() + sp.size() / 2, sp.end());
    med = sp[sp.size() / 2];
    if (med <= target) break;
  }
  if (const auto* c = snap.composite()) med = std::max(med, c->graph.grid.h());
  if (spacing) *spacing = med;
  return out;
}

PlanarityReport planarity_multiplicity(const SurfaceSamples& samples, double spacing, const SupportPatch* patch,
                                       const Vec3& center, double region_radius,
                                       const std::vector<ExclusionBall>& exclusion) {
  if (!(region_radius > 0.0) || !(spacing > 0.0) || !std::isfinite(spacing))
    throw Error(ErrorKind::precondition, "planarity needs a positive region radius and spacing");
  std::vector<const SurfacePoint*> region;
  for (const auto& p : samples.points)
    if ((p.X - center).norm() < region_radius && p.w > 0.0) region.push_back(&p);
  if (region.empty()) throw Error(ErrorKind::empty_region, "no surface samples inside the region");

  PlanarityReport rep;
  rep.spacing = spacing;
  rep.region_samples = region.size();
  for (const auto& e : exclusion) rep.exclusion_centers.push_back(e.center);

  Vec3 bc = Vec3::Zero();
  double bl = 0.0;
  if (patch) {
    for (const auto& c : samples.boundary)
      if ((c.X - center).norm() < region_radius && c.ds > 0.0) {
        bc += c.ds * c.X;
        bl += c.ds;
      }
  }
  rep.boundary_mode = bl > 0.0;
  if (rep.boundary_mode) {
    const Projection pr = patch->project_and_distance(bc / bl);
    const Vec3 nu = pr.gradient.normalized();
    Vec3 ea, eb;
    plane_basis(nu, ea, eb);
    Mat2 B = Mat2::Zero();
    for (const auto* p : region) {
      const Vec3 x = p->X - pr.point;
      const Vec2 z(x.dot(ea), x.dot(eb));
      B += p->w * z * z.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat2> es(B);
    const Vec2 v = es.eigenvectors().col(0);
    rep.point = pr.point;
    rep.normal = (v[0] * ea + v[1] * eb).normalized();
  } else {
    Vec3 m = Vec3::Zero();
    double wsum = 0.0;
    for (const auto* p : region) {
      m += p->w * p->X;
      wsum += p->w;
    }
    m /= wsum;
    Mat3 C = Mat3::Zero();
    for (const auto* p : region) C += p->w * (p->X - m) * (p->X - m).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> es(C);
    rep.point = m;
    rep.normal = es.eigenvectors().col(0).normalized();
  }
  rep.normal = canonical(rep.normal);

  double lo = kInf, hi = -kInf;
  for (const auto* p : region) {
    const double d = (p->X - rep.point).dot(rep.normal);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  rep.deviation = hi - lo;

  // Plane coordinates of every region sample, bucketed by the largest hit radius.
  Vec3 ea, eb;
  plane_basis(rep.normal, ea, eb);
  const Vec3 c0 = center - (center - rep.point).dot(rep.normal) * rep.normal;
  struct Hit {
    double a, b, height, reach;
  };
  std::vector<Hit> hits;
  double reach_max = 0.0;
  for (const auto* p : region) {
    const Vec3 x = p->X - c0;
    const double reach = 0.75 * std::max(std::sqrt(p->w), spacing);
    hits.push_back({x.dot(ea), x.dot(eb), x.dot(rep.normal), reach});
    reach_max = std::max(reach_max, reach);
  }
  std::map<std::pair<long, long>, std::vector<std::size_t>> buckets;
  auto cell = [&](double v) { return static_cast<long>(std::floor(v / reach_max)); };
  for (std::size_t k = 0; k < hits.size(); ++k) buckets[{cell(hits[k].a), cell(hits[k].b)}].push_back(k);

  const int nb = static_cast<int>(std::ceil(region_radius / spacing));
  std::vector<double> heights;
  for (int i = -nb; i <= nb; ++i)
    for (int j = -nb; j <= nb; ++j) {
      const double a = i * spacing, b = j * spacing;
      if (a * a + b * b >= region_radius * region_radius) continue;
      const Vec3 base = c0 + a * ea + b * eb;
      bool excluded = false;
      for (const auto& e : exclusion) excluded = excluded || (base - e.center).norm() < e.radius;
      if (excluded) continue;
      heights.clear();
      const long ca = cell(a), cb = cell(b);
      for (long da = -1; da <= 1; ++da)
        for (long db = -1; db <= 1; ++db) {
          auto it = buckets.find({ca + da, cb + db});
          if (it == buckets.end()) continue;
          for (std::size_t k : it->second) {
            const Hit& h = hits[k];
            if (std::hypot(h.a - a, h.b - b) < h.reach) heights.push_back(h.height);
          }
        }
      if (heights.empty()) continue;
      std::sort(heights.begin(), heights.end());
      int sheets = 1;
      for (std::size_t k = 1; k < heights.size(); ++k)
        if (heights[k] - heights[k - 1] > 3.0 * spacing) ++sheets;
      rep.sheets = std::max(rep.sheets, sheets);
    }
  return rep;
}

PlanarityReport planarity_multiplicity(const RescalingFrame& frame, double region_radius,
                                       const std::vector<ExclusionBall>& exclusion, const Vec3& center) {
  double spacing = 0.0;
  const SurfaceSamples s = region_samples(frame.snapshot, center, region_radius, &spacing);
  const bool free_boundary = frame.snapshot.graph() ? frame.snapshot.graph()->grid.has_free_boundary()
                             : frame.snapshot.analytic() ? frame.snapshot.analytic()->has_free_boundary()
                                                          : false;
  return planarity_multiplicity(s, spacing, free_boundary ? frame.patch.get() : nullptr, center, region_radius,
                                exclusion);
}

}  // namespace mcflab
