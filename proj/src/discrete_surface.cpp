#include "mcflab/discrete_surface.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>

namespace mcflab {

const char* to_string(Topology t) noexcept {
  switch (t) {
    case Topology::untagged: return "untagged";
    case Topology::disk: return "disk";
    case Topology::sphere: return "sphere";
  }
  return "?";
}

int euler_characteristic(Topology t) {
  switch (t) {
    case Topology::disk: return 1;
    case Topology::sphere: return 2;
    case Topology::untagged: break;
  }
  throw Error(ErrorKind::topology_untagged, "surface topology must be declared to evaluate χ");
}

GraphSurface::GraphSurface(PatchPtr p, Grid g, double time)
    : patch(std::move(p)), grid(std::move(g)), u(grid.size(), 0.0), t(time) {}

void GraphSurface::fill(const std::function<double(double, double)>& f) {
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (grid.role(k) == NodeRole::outside) continue;
    u[k] = f(grid.y1(grid.i_of(k)), grid.y2(grid.j_of(k)));
  }
}

void GraphSurface::apply_ghosts() {
  // Periodic columns first, then mirrors, so mirrored corners see wrapped values.
  for (NodeRole pass : {NodeRole::periodic, NodeRole::mirror}) {
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (grid.role(k) != pass) continue;
      int si, sj;
      grid.ghost_source(grid.i_of(k), grid.j_of(k), si, sj);
      u[k] = u[grid.index(si, sj)];
    }
  }
}

double GraphSurface::interpolate(double y1, double y2) const {
  const double h = grid.h();
  const double a = y1 / h, b = y2 / h;
  int i0 = static_cast<int>(std::floor(a)), j0 = static_cast<int>(std::floor(b));
  const double s = a - i0, t2 = b - j0;
  auto val = [&](int i, int j) {
    if (grid.role(i, j) == NodeRole::outside) {
      throw Error(ErrorKind::out_of_range, "interpolation point outside the grid footprint");
    }
    return at(i, j);
  };
  return (1 - s) * (1 - t2) * val(i0, j0) + s * (1 - t2) * val(i0 + 1, j0) +
         (1 - s) * t2 * val(i0, j0 + 1) + s * t2 * val(i0 + 1, j0 + 1);
}

Vec3 GraphSurface::position(int i, int j) const {
  const Vec3 Y(grid.y1(i), grid.y2(j), at(i, j));
  return patch->to_world(patch->chart_jet(Y).phi);
}

namespace {

void finish(NodeGeometry& ng) {
  const double det = ng.g.determinant();
  if (!(det > 0.0)) throw Error(ErrorKind::singular_metric, "induced metric is not positive definite");
  ng.sqrt_g = std::sqrt(det);
  ng.g_inv = ng.g.inverse();
  ng.H = (ng.g_inv.cwiseProduct(ng.A)).sum();
  const Mat2 S = ng.g_inv * ng.A;
  ng.A2 = (S * S).trace();
}

}  // namespace

NodeGeometry graph_geometry(const SupportPatch& patch, double y1, double y2, double u, const Vec2& du,
                            const Mat2& ddu) {
  NodeGeometry ng;
  if (patch.is_flat()) {
    const double w = std::sqrt(1.0 + du.squaredNorm());
    ng.X = patch.to_world(Vec3(y1, y2, u));
    ng.N = patch.direction_to_world(Vec3(du[0], du[1], -1.0) / w);
    ng.tangent[0] = patch.direction_to_world(Vec3(1.0, 0.0, du[0]));
    ng.tangent[1] = patch.direction_to_world(Vec3(0.0, 1.0, du[1]));
    ng.g = Mat2::Identity() + du * du.transpose();
    ng.A = -ddu / w;
    ng.d3phi = patch.direction_to_world(Vec3::UnitZ());
    finish(ng);
    ng.f = 0.0;
    ng.rhs = (ng.g_inv.cwiseProduct(ddu)).sum();
    return ng;
  }
  const Vec3 Y(y1, y2, u);
  const ChartJet c = patch.chart_jet(Y);
  const MetricConnection m = patch.metric_connection(c, Y);
  const auto& G = m.gamma;
  const Mat3& h = m.h;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      ng.g(i, j) = h(i, j) + h(i, 2) * du[j] + h(j, 2) * du[i] + h(2, 2) * du[i] * du[j];

  Mat2 Q;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double q = G[2](i, 2) * du[j] + G[2](j, 2) * du[i] + G[2](2, 2) * du[i] * du[j];
      for (int k = 0; k < 2; ++k) {
        q -= G[k](i, j) * du[k];
        q -= G[k](i, 2) * du[j] * du[k];
        q -= G[k](j, 2) * du[i] * du[k];
        q -= G[k](2, 2) * du[i] * du[j] * du[k];
      }
      Q(i, j) = q;
    }
  const Vec3 t0 = c.d[0] + du[0] * c.d[2];
  const Vec3 t1 = c.d[1] + du[1] * c.d[2];
  Vec3 N = t0.cross(t1).normalized();
  if (N.dot(c.d[2]) > 0.0) N = -N;
  const double c3 = c.d[2].dot(N);
  Mat2 G3;
  G3 << G[2](0, 0), G[2](0, 1), G[2](1, 0), G[2](1, 1);
  ng.A = c3 * (G3 + ddu + Q);
  ng.X = patch.to_world(c.phi);
  ng.N = patch.direction_to_world(N);
  ng.tangent[0] = patch.direction_to_world(t0);
  ng.tangent[1] = patch.direction_to_world(t1);
  ng.d3phi = patch.direction_to_world(c.d[2]);
  finish(ng);
  ng.f = (ng.g_inv.cwiseProduct(G3 + Q)).sum();
  ng.rhs = (ng.g_inv.cwiseProduct(ddu)).sum() + ng.f;
  return ng;
}

NodeGeometry embedding_geometry(const SupportPatch& patch, double y1, double y2, double u,
                                const Vec2& du, const Mat2& ddu) {
  NodeGeometry ng;
  const ChartJet c = patch.chart_jet(Vec3(y1, y2, u));
  const Vec3 t[2] = {c.d[0] + du[0] * c.d[2], c.d[1] + du[1] * c.d[2]};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) ng.g(i, j) = t[i].dot(t[j]);
  Vec3 N = t[0].cross(t[1]).normalized();
  if (N.dot(c.d[2]) > 0.0) N = -N;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const Vec3 xij = c.dd[i][j] + du[j] * c.dd[i][2] + du[i] * c.dd[j][2] +
                       du[i] * du[j] * c.dd[2][2] + ddu(i, j) * c.d[2];
      ng.A(i, j) = xij.dot(N);
    }
  ng.X = patch.to_world(c.phi);
  ng.N = patch.direction_to_world(N);
  ng.tangent[0] = patch.direction_to_world(t[0]);
  ng.tangent[1] = patch.direction_to_world(t[1]);
  ng.d3phi = patch.direction_to_world(c.d[2]);
  finish(ng);
  // Normal speed H over the normal component of ∂3Φ gives the graph velocity.
  ng.rhs = ng.H / c.d[2].dot(N);
  ng.f = ng.rhs - (ng.g_inv.cwiseProduct(ddu)).sum();
  return ng;
}

void node_derivatives(const GraphSurface& s, int i, int j, Vec2& du, Mat2& ddu) {
  const double h = s.grid.h();
  const double c = s.at(i, j);
  du[0] = (s.at(i + 1, j) - s.at(i - 1, j)) / (2 * h);
  du[1] = (s.at(i, j + 1) - s.at(i, j - 1)) / (2 * h);
  ddu(0, 0) = (s.at(i + 1, j) - 2 * c + s.at(i - 1, j)) / (h * h);
  ddu(1, 1) = (s.at(i, j + 1) - 2 * c + s.at(i, j - 1)) / (h * h);
  ddu(0, 1) = ddu(1, 0) =
      (s.at(i + 1, j + 1) - s.at(i + 1, j - 1) - s.at(i - 1, j + 1) + s.at(i - 1, j - 1)) / (4 * h * h);
}

SurfaceGeometry fundamental_forms(const GraphSurface& s) {
  const Grid& g = s.grid;
  SurfaceGeometry geo;
  geo.nodes.resize(g.size());
  geo.valid.assign(g.size(), 0);
  geo.weight.assign(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const NodeRole r = g.role(k);
    if (r != NodeRole::active && r != NodeRole::rim) continue;
    const int i = g.i_of(k), j = g.j_of(k);
    if (!g.has_stencil(i, j)) continue;
    Vec2 du;
    Mat2 ddu;
    node_derivatives(s, i, j, du, ddu);
    geo.nodes[k] = graph_geometry(*s.patch, g.y1(i), g.y2(j), s.u[k], du, ddu);
    geo.valid[k] = 1;
    geo.weight[k] = geo.nodes[k].sqrt_g * g.cell_area(k);
  }
  return geo;
}

double integrate(const GraphSurface& s, const SurfaceGeometry& geo, const std::vector<double>& field) {
  double sum = 0.0;
  for (std::size_t k = 0; k < s.grid.size(); ++k)
    if (geo.valid[k] && geo.weight[k] > 0.0) sum += field[k] * geo.weight[k];
  return sum;
}

double integrate(const GraphSurface& s, const SurfaceGeometry& geo,
                 const std::function<double(const NodeGeometry&)>& field) {
  double sum = 0.0;
  for (std::size_t k = 0; k < s.grid.size(); ++k)
    if (geo.valid[k] && geo.weight[k] > 0.0) sum += field(geo.nodes[k]) * geo.weight[k];
  return sum;
}

namespace {

// Polyline of the free-boundary curve, ends extended to the rim.
std::vector<Vec3> edge_polyline(const GraphSurface& s) {
  const Grid& g = s.grid;
  std::vector<Vec3> pts;
  if (!g.has_free_boundary()) return pts;
  const int n = g.n();
  if (g.shape() == DomainShape::half_strip) {
    for (int i = -n; i <= n; ++i) pts.push_back(s.position(i, 0));
    return pts;
  }
  int m = 0;
  while (g.role(m + 1, 0) == NodeRole::active) ++m;
  auto rim_point = [&](int sign) {
    const double y1 = sign * g.r_dom();
    const double a = (g.r_dom() - m * g.h()) / g.h();
    const double u = (1 - a) * s.at(sign * m, 0) + a * s.at(sign * (m + 1), 0);
    return s.patch->to_world(s.patch->chart_jet(Vec3(y1, 0.0, u)).phi);
  };
  const bool extend = m * g.h() < g.r_dom();
  if (extend) pts.push_back(rim_point(-1));
  for (int i = -m; i <= m; ++i) pts.push_back(s.position(i, 0));
  if (extend) pts.push_back(rim_point(1));
  return pts;
}

}  // namespace

double perimeter(const GraphSurface& s) {
  const auto pts = edge_polyline(s);
  double len = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) len += (pts[k] - pts[k - 1]).norm();
  return len;
}

double neumann_residual(const GraphSurface& s) {
  const Grid& g = s.grid;
  if (!g.has_free_boundary()) return 0.0;
  double worst = 0.0;
  for (int i = g.lo(); i <= g.hi(); ++i) {
    if (g.role(i, 0) != NodeRole::active) continue;
    if (g.role(i, 2) == NodeRole::outside) continue;
    const double d = (-3.0 * s.at(i, 0) + 4.0 * s.at(i, 1) - s.at(i, 2)) / (2.0 * g.h());
    worst = std::max(worst, std::abs(d));
  }
  return worst;
}

SurfaceSamples samples(const GraphSurface& s, const SurfaceGeometry& geo) {
  SurfaceSamples out;
  out.spacing = s.grid.h();
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    if (!geo.valid[k] || !(geo.weight[k] > 0.0)) continue;
    const NodeGeometry& n = geo.nodes[k];
    out.points.push_back({n.X, n.N, n.H, n.A2, geo.weight[k]});
  }
  const auto pts = edge_polyline(s);
  const std::size_t m = pts.size();
  for (std::size_t k = 0; k < m; ++k) {
    const Vec3& a = pts[k == 0 ? 0 : k - 1];
    const Vec3& b = pts[k + 1 == m ? k : k + 1];
    double ds = 0.0;
    if (k > 0) ds += 0.5 * (pts[k] - pts[k - 1]).norm();
    if (k + 1 < m) ds += 0.5 * (pts[k + 1] - pts[k]).norm();
    out.boundary.push_back({pts[k], (b - a).normalized(), ds});
  }
  return out;
}

SurfaceSamples samples(const GraphSurface& s) { return samples(s, fundamental_forms(s)); }

AreaRatio modified_area_ratio(const GraphSurface& s, const SurfaceGeometry& geo, const Vec3& P,
                              double r, bool strict) {
  if (!(r > 0.0)) throw Error(ErrorKind::precondition, "area ratio radius must be > 0");
  const Grid& g = s.grid;
  const SupportPatch& patch = *s.patch;
  const double h = g.h();
  AreaRatio out;

  bool reflect = g.has_free_boundary();
  if (reflect) {
    const Projection pp = patch.project_and_distance(P);
    if (pp.distance < 0.0) throw Error(ErrorKind::precondition, "ball center must lie in U");
    if (pp.distance >= r) reflect = false;
  }

  constexpr int kSub = 4;
  std::vector<double> in_area(g.size(), 0.0), comp_area(g.size(), 0.0);
  std::vector<char> member(g.size(), 0);
  std::size_t start = g.size();
  double best = kInf;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!geo.valid[k] || !(geo.weight[k] > 0.0)) continue;
    const NodeGeometry& ng = geo.nodes[k];
    const double reach = h * (1.0 + ng.tangent[0].norm() + ng.tangent[1].norm());
    const double dist = (ng.X - P).norm();
    if (dist > r + reach) continue;
    const double y1 = g.y1(g.i_of(k)), y2 = g.y2(g.j_of(k));
    int total = 0, inside = 0, comp = 0;
    for (int a = 0; a < kSub; ++a)
      for (int b = 0; b < kSub; ++b) {
        const double z1 = y1 + ((a + 0.5) / kSub - 0.5) * h;
        const double z2 = y2 + ((b + 0.5) / kSub - 0.5) * h;
        if (!g.in_domain(z1, z2)) continue;
        ++total;
        const double uz = s.interpolate(z1, z2);
        const Vec3 X = patch.to_world(patch.chart_jet(Vec3(z1, z2, uz)).phi);
        if ((X - P).norm() >= r) continue;
        ++inside;
        if (reflect && z2 > 0.0) {
          const Vec3 Xr = patch.to_world(patch.chart_jet(Vec3(z1, -z2, uz)).phi);
          if ((Xr - P).norm() < r) ++comp;
        }
      }
    if (total == 0 || inside == 0) continue;
    member[k] = 1;
    in_area[k] = geo.weight[k] * inside / total;
    comp_area[k] = geo.weight[k] * comp / total;
    if (dist < best) {
      best = dist;
      start = k;
    }
  }
  if (start == g.size()) throw Error(ErrorKind::empty_region, "ball does not meet the surface");

  std::vector<char> seen(g.size(), 0);
  std::deque<std::size_t> queue{start};
  seen[start] = 1;
  while (!queue.empty()) {
    const std::size_t k = queue.front();
    queue.pop_front();
    out.area += in_area[k];
    out.complementary += comp_area[k];
    const int i = g.i_of(k), j = g.j_of(k);
    const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const auto& o : nb) {
      int a = i + o[0], b = j + o[1];
      if (!g.contains(a, b)) continue;
      if (g.shape() == DomainShape::half_strip) {
        if (a < -g.n()) a += 2 * g.n();
        if (a >= g.n()) a -= 2 * g.n();
      }
      const std::size_t q = g.index(a, b);
      if (member[q] && !seen[q]) {
        seen[q] = 1;
        queue.push_back(q);
      }
    }
  }
  out.ratio = (out.area + out.complementary) / (kPi * r * r);

  // Footprint coverage: the ball must not reach the outer rim curve.
  const double R = g.r_dom();
  auto rim_hits = [&](double z1, double z2) {
    const double uz = s.interpolate(z1, z2);
    return (patch.to_world(patch.chart_jet(Vec3(z1, z2, uz)).phi) - P).norm() < r;
  };
  if (g.shape() == DomainShape::half_strip) {
    for (double z1 = -R; z1 < R && !out.partial; z1 += 0.5 * h) out.partial = rim_hits(z1, R);
  } else {
    const double top = g.shape() == DomainShape::disk ? 2.0 * kPi : kPi;
    const int steps = static_cast<int>(std::ceil(top * R / (0.5 * h)));
    for (int k = 0; k <= steps && !out.partial; ++k) {
      const double th = top * k / steps;
      out.partial = rim_hits(R * std::cos(th), R * std::sin(th));
    }
  }
  if (out.partial && strict) {
    throw Error(ErrorKind::ball_exceeds_grid, "ball is not covered by the grid footprint");
  }
  return out;
}

AreaRatioProfile area_ratio_profile(const GraphSurface& s, const SurfaceGeometry& geo, const Vec3& P,
                                    const std::vector<double>& radii, double C, double Lambda,
                                    double kappa) {
  for (std::size_t k = 1; k < radii.size(); ++k)
    if (!(radii[k] > radii[k - 1])) throw Error(ErrorKind::precondition, "radii must increase");
  AreaRatioProfile p;
  p.radii = radii;
  for (double r : radii) {
    const AreaRatio a = modified_area_ratio(s, geo, P, r);
    p.partial = p.partial || a.partial;
    p.values.push_back(std::exp(C * (Lambda + kappa) * r) * a.ratio);
  }
  for (std::size_t k = 1; k < p.values.size(); ++k)
    p.max_downward_violation = std::max(p.max_downward_violation, p.values[k - 1] - p.values[k]);
  return p;
}

GaussBonnet gauss_bonnet_identity(const SurfaceSamples& smp, const SupportPatch& patch, Topology topology) {
  GaussBonnet gb;
  gb.chi = euler_characteristic(topology);
  for (const auto& p : smp.points) {
    gb.lhs += p.A2 * p.w;
    gb.h2 += p.H * p.H * p.w;
  }
  if (!patch.is_flat())
    for (const auto& c : smp.boundary) gb.boundary += patch.second_fundamental_form(c.X, c.T) * c.ds;
  gb.rhs = gb.h2 + 2.0 * gb.boundary - 4.0 * kPi * gb.chi;
  gb.residual = gb.lhs - gb.rhs;
  return gb;
}

GaussBonnet gauss_bonnet_identity(const GraphSurface& s) {
  euler_characteristic(s.topology);
  return gauss_bonnet_identity(samples(s), *s.patch, s.topology);
}

void write_mesh(std::ostream& out, const GraphSurface& s) {
  const Grid& g = s.grid;
  std::vector<long> id(g.size(), 0);
  long next = 1;
  char buf[32];
  auto put = [&](double x) {
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    out.write(buf, res.ptr - buf);
  };
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!(g.cell_area(k) > 0.0)) continue;
    id[k] = next++;
    const Vec3 X = s.position(g.i_of(k), g.j_of(k));
    out << "v ";
    put(X[0]);
    out << ' ';
    put(X[1]);
    out << ' ';
    put(X[2]);
    out << '\n';
  }
  for (int i = g.lo(); i < g.hi(); ++i)
    for (int j = g.lo(); j < g.hi(); ++j) {
      const long a = id[g.index(i, j)], b = id[g.index(i + 1, j)];
      const long c = id[g.index(i + 1, j + 1)], d = id[g.index(i, j + 1)];
      if (!a || !b || !c || !d) continue;
      out << "f " << a << ' ' << b << ' ' << c << '\n';
      out << "f " << a << ' ' << c << ' ' << d << '\n';
    }
}

}  // namespace mcflab
