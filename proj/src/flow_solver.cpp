#include "mcflab/flow_solver.hpp"

#include <algorithm>
#include <cmath>

namespace mcflab {

const char* to_string(OuterBC bc) noexcept {
  switch (bc) {
    case OuterBC::dirichlet_exact: return "dirichlet-exact";
    case OuterBC::frozen: return "frozen";
    case OuterBC::periodic_strip: return "periodic-strip";
  }
  return "?";
}

const char* to_string(Scheme s) noexcept {
  switch (s) {
    case Scheme::explicit_euler: return "explicit-euler";
    case Scheme::semi_implicit: return "semi-implicit-linearized";
  }
  return "?";
}

const char* to_string(StopReason r) noexcept {
  switch (r) {
    case StopReason::completed: return "completed";
    case StopReason::blowup: return "blowup";
    case StopReason::cfl_violation: return "cfl-violation";
    case StopReason::chart_exit: return "chart-exit";
    case StopReason::non_finite: return "non-finite";
    case StopReason::past_singularity: return "past-singularity";
  }
  return "?";
}

// ---------------------------------------------------------------------------

double ExactFamily::singular_time() const noexcept {
  return (kind == AnalyticKind::sphere || kind == AnalyticKind::hemisphere) ? 0.25 * R0 * R0 : kInf;
}

double ExactFamily::radius(double t) const {
  if (kind != AnalyticKind::sphere && kind != AnalyticKind::hemisphere) return 0.0;
  if (!(t < singular_time())) {
    throw Error(ErrorKind::past_singularity, "requested time is at or past the singular time R0^2/4");
  }
  return std::sqrt(R0 * R0 - 4.0 * t);
}

AnalyticSurface ExactFamily::surface(double t) const {
  AnalyticSurface s;
  switch (kind) {
    case AnalyticKind::plane: s = AnalyticSurface::plane(center, normal); break;
    case AnalyticKind::half_plane: s = AnalyticSurface::half_plane(center, normal); break;
    case AnalyticKind::sphere: s = AnalyticSurface::sphere(center, radius(t)); break;
    case AnalyticKind::hemisphere: s = AnalyticSurface::hemisphere(center, radius(t)); break;
  }
  s.t = t;
  return s;
}

double ExactFamily::height(double y1, double y2, double t) const {
  switch (kind) {
    case AnalyticKind::plane:
    case AnalyticKind::half_plane: {
      const Vec3 n = normal.normalized();
      return center[2] - (n[0] * (y1 - center[0]) + n[1] * (y2 - center[1])) / n[2];
    }
    case AnalyticKind::sphere:
    case AnalyticKind::hemisphere: {
      const double R = radius(t);
      const double a = y1 - center[0], b = y2 - center[1];
      return center[2] + std::sqrt(R * R - a * a - b * b);
    }
  }
  return 0.0;
}

double ExactFamily::height_rate(double y1, double y2, double t) const {
  if (kind != AnalyticKind::sphere && kind != AnalyticKind::hemisphere) return 0.0;
  const double R = radius(t);
  const double a = y1 - center[0], b = y2 - center[1];
  return -2.0 / std::sqrt(R * R - a * a - b * b);
}

AnalyticSurface exact_surface(const ExactFamily& family, double t) { return family.surface(t); }

GraphSurface exact_graph(const ExactFamily& family, PatchPtr patch, const Grid& grid, double t) {
  if (!patch->is_flat()) {
    throw Error(ErrorKind::validation_error, "exact graph families are defined over a flat support");
  }
  GraphSurface s(std::move(patch), grid, t);
  s.fill([&](double a, double b) { return family.height(a, b, t); });
  s.apply_ghosts();
  if (family.kind == AnalyticKind::hemisphere || family.kind == AnalyticKind::half_plane) {
    s.topology = Topology::disk;
  }
  return s;
}

// ---------------------------------------------------------------------------

void FlowConfig::validate() const {
  if (!(cfl > 0.0 && cfl <= 0.25)) throw Error(ErrorKind::validation_error, "cfl: must lie in (0, 0.25]");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw Error(ErrorKind::validation_error, "t_end: must be >= 0");
  if (snapshot_stride < 1) throw Error(ErrorKind::validation_error, "snapshot_stride: must be >= 1");
  if (!(blowup_threshold > 0.0)) throw Error(ErrorKind::validation_error, "blowup_threshold: must be > 0");
  if (outer_bc == OuterBC::dirichlet_exact && !exact) {
    throw Error(ErrorKind::validation_error, "outer_bc: dirichlet-exact needs an exact family");
  }
  if (!(implicit_dt_factor >= 1.0)) throw Error(ErrorKind::validation_error, "implicit_dt_factor: must be >= 1");
  if (jacobi_iterations < 1) throw Error(ErrorKind::validation_error, "jacobi_iterations: must be >= 1");
}

std::size_t Trajectory::nearest(double t) const {
  if (snapshots.empty()) throw Error(ErrorKind::out_of_range, "trajectory has no snapshots");
  std::size_t best = 0;
  for (std::size_t k = 1; k < snapshots.size(); ++k)
    if (std::abs(snapshots[k].t - t) < std::abs(snapshots[best].t - t)) best = k;
  return best;
}

namespace {

bool is_rim(NodeRole r) { return r == NodeRole::rim; }

}  // namespace

void apply_boundary(GraphSurface& s, const FlowConfig& config, const GraphSurface* initial) {
  const Grid& g = s.grid;
  if (config.outer_bc == OuterBC::dirichlet_exact) {
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!is_rim(g.role(k))) continue;
      const double v = config.exact->height(g.y1(g.i_of(k)), g.y2(g.j_of(k)), s.t);
      // The exact surface no longer projects onto the whole footprint.
      if (!std::isfinite(v)) throw Error(ErrorKind::chart_exit, "exact rim data left the grid footprint");
      s.u[k] = v;
    }
  } else if (initial) {
    for (std::size_t k = 0; k < g.size(); ++k)
      if (is_rim(g.role(k))) s.u[k] = initial->u[k];
  }
  s.apply_ghosts();
}

double stable_dt(const GraphSurface& s, double cfl) {
  const Grid& g = s.grid;
  double worst = 1.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.role(k) != NodeRole::active) continue;
    Vec2 du;
    Mat2 ddu;
    node_derivatives(s, g.i_of(k), g.j_of(k), du, ddu);
    const NodeGeometry ng = graph_geometry(*s.patch, g.y1(g.i_of(k)), g.y2(g.j_of(k)), s.u[k], du, ddu);
    worst = std::max(worst, ng.g_inv.cwiseAbs().sum());
  }
  return cfl * g.h() * g.h() / worst;
}

namespace {

struct Coefficients {
  std::vector<Mat2> a;
  std::vector<double> f, rhs;
  double spectral = 0.0;
};

Coefficients coefficients(const GraphSurface& s) {
  const Grid& g = s.grid;
  Coefficients c;
  c.a.assign(g.size(), Mat2::Zero());
  c.f.assign(g.size(), 0.0);
  c.rhs.assign(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.role(k) != NodeRole::active) continue;
    const int i = g.i_of(k), j = g.j_of(k);
    Vec2 du;
    Mat2 ddu;
    node_derivatives(s, i, j, du, ddu);
    NodeGeometry ng;
    try {
      ng = graph_geometry(*s.patch, g.y1(i), g.y2(j), s.u[k], du, ddu);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::singular_metric) throw Error(ErrorKind::non_finite, e.what());
      throw;
    }
    c.a[k] = ng.g_inv;
    c.f[k] = ng.f;
    c.rhs[k] = ng.rhs;
    // Largest eigenvalue of the symmetric 2x2 g^{-1}.
    const double tr = ng.g_inv.trace(), det = ng.g_inv.determinant();
    c.spectral = std::max(c.spectral, 0.5 * tr + std::sqrt(std::max(0.0, 0.25 * tr * tr - det)));
  }
  return c;
}

void check_state(const GraphSurface& s, double bound) {
  const Grid& g = s.grid;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const NodeRole r = g.role(k);
    if (r == NodeRole::outside) continue;
    if (!std::isfinite(s.u[k])) throw Error(ErrorKind::non_finite, "non-finite height value");
    if (r != NodeRole::active) continue;
    const Vec3 Y(g.y1(g.i_of(k)), g.y2(g.j_of(k)), s.u[k]);
    if (!(Y.norm() < bound)) throw Error(ErrorKind::chart_exit, "surface left the chart");
  }
}

}  // namespace

GraphSurface step(const GraphSurface& s, double dt, const FlowConfig& config, const GraphSurface* initial) {
  const Grid& g = s.grid;
  const double h = g.h();
  const Coefficients c = coefficients(s);
  if (config.scheme == Scheme::explicit_euler && c.spectral > 0.0 &&
      dt > config.cfl * h * h / c.spectral * (1.0 + 1e-12)) {
    throw Error(ErrorKind::cfl_violation, "time step exceeds cfl*h^2/max spectral bound of g^{-1}");
  }
  GraphSurface out = s;
  out.t = s.t + dt;
  if (config.scheme == Scheme::explicit_euler) {
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g.role(k) == NodeRole::active) out.u[k] = s.u[k] + dt * c.rhs[k];
    apply_boundary(out, config, initial);
  } else {
    // Lagged coefficients, (I − dt a^{ij}D_ij) v = u + dt f, damped Jacobi.
    apply_boundary(out, config, initial);
    const double omega = 2.0 / 3.0;
    std::vector<double> next(out.u);
    for (int it = 0; it < config.jacobi_iterations; ++it) {
      double change = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (g.role(k) != NodeRole::active) continue;
        const int i = g.i_of(k), j = g.j_of(k);
        const Mat2& a = c.a[k];
        auto v = [&](int di, int dj) { return out.at(i + di, j + dj); };
        const double off = a(0, 0) * (v(1, 0) + v(-1, 0)) / (h * h) + a(1, 1) * (v(0, 1) + v(0, -1)) / (h * h) +
                           2.0 * a(0, 1) * (v(1, 1) - v(1, -1) - v(-1, 1) + v(-1, -1)) / (4.0 * h * h);
        const double diag = 1.0 + dt * 2.0 * (a(0, 0) + a(1, 1)) / (h * h);
        const double jac = (s.u[k] + dt * c.f[k] + dt * off) / diag;
        next[k] = (1.0 - omega) * out.u[k] + omega * jac;
        change = std::max(change, std::abs(next[k] - out.u[k]));
      }
      for (std::size_t k = 0; k < g.size(); ++k)
        if (g.role(k) == NodeRole::active) out.u[k] = next[k];
      out.apply_ghosts();
      if (change < 1e-15) break;
    }
  }
  const double bound = config.chart_bound.value_or(s.patch->chart_radius());
  check_state(out, bound);
  return out;
}

MonitorRow measure(const GraphSurface& s, const FlowConfig& config) {
  const Grid& g = s.grid;
  const SurfaceGeometry geo = fundamental_forms(s);
  MonitorRow m;
  m.t = s.t;
  std::vector<Vec2> flux(g.size(), Vec2::Zero());
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!geo.valid[k]) continue;
    const NodeGeometry& n = geo.nodes[k];
    const double w = geo.weight[k];
    m.area += w;
    m.energy += n.A2 * w;
    m.h2_integral += n.H * n.H * w;
    const NodeRole role = g.role(k);
    if (role == NodeRole::active) {
      m.max_H = std::max(m.max_H, std::abs(n.H));
      m.max_A = std::max(m.max_A, std::sqrt(n.A2));
    }
    double rate = 0.0;
    if (role == NodeRole::active) {
      rate = n.rhs;
    } else if (config.outer_bc == OuterBC::dirichlet_exact) {
      rate = config.exact->height_rate(g.y1(g.i_of(k)), g.y2(g.j_of(k)), s.t);
    }
    const Vec3 V = rate * n.d3phi;
    const Vec2 vt(V.dot(n.tangent[0]), V.dot(n.tangent[1]));
    flux[k] = n.sqrt_g * (n.g_inv * vt);
  }
  m.perimeter = perimeter(s);
  m.neumann_residual = neumann_residual(s);

  // Boundary term ∮ √g g^{ij}(V·∂_jX) m_i ds over the outer rim.
  const double h = g.h(), R = g.r_dom();
  auto interp = [&](double y1, double y2) -> Vec2 {
    const int i0 = static_cast<int>(std::floor(y1 / h)), j0 = static_cast<int>(std::floor(y2 / h));
    const double a = y1 / h - i0, b = y2 / h - j0;
    auto at = [&](int i, int j) -> Vec2 {
      int si = i, sj = j;
      if (g.role(i, j) == NodeRole::mirror || g.role(i, j) == NodeRole::periodic) {
        g.ghost_source(i, j, si, sj);
        Vec2 v = flux[g.index(si, sj)];
        if (sj != j) v[1] = -v[1];
        return v;
      }
      return flux[g.index(i, j)];
    };
    return (1 - a) * (1 - b) * at(i0, j0) + a * (1 - b) * at(i0 + 1, j0) + (1 - a) * b * at(i0, j0 + 1) +
           a * b * at(i0 + 1, j0 + 1);
  };
  if (g.shape() == DomainShape::half_strip) {
    const int n = 2 * g.n();
    for (int k = 0; k < n; ++k) m.rim_flux += interp(-R + (k + 0.5) * (2 * R / n), R)[1] * (2 * R / n);
  } else {
    const double span = g.shape() == DomainShape::disk ? 2 * kPi : kPi;
    const int n = std::max(8, static_cast<int>(std::ceil(span * R / (0.5 * h))));
    for (int k = 0; k <= n; ++k) {
      const double th = span * k / n;
      const double wt = (g.shape() == DomainShape::half_disk && (k == 0 || k == n)) ? 0.5 : 1.0;
      if (g.shape() == DomainShape::disk && k == n) continue;
      const Vec2 mvec(std::cos(th), std::sin(th));
      m.rim_flux += wt * interp(R * mvec[0], R * mvec[1]).dot(mvec) * R * span / n;
    }
  }
  return m;
}

Trajectory run(const GraphSurface& initial, const FlowConfig& config) {
  config.validate();
  Trajectory traj;
  traj.patch = initial.patch;
  GraphSurface s = initial;
  apply_boundary(s, config, &initial);
  const double h = s.grid.h();

  auto snapshot = [&](std::size_t stepno) {
    if (!traj.snapshots.empty() && traj.snapshots.back().step == stepno) return;
    traj.snapshots.push_back({s.t, stepno, s});
  };
  MonitorRow row = measure(s, config);
  if (config.record_monitors) traj.monitors.push_back(row);
  snapshot(0);

  std::size_t n = 0;
  const double tol = 1e-13 * std::max(1.0, config.t_end);
  while (s.t < config.t_end - tol && n < config.max_steps) {
    double dt = stable_dt(s, config.cfl);
    if (config.scheme == Scheme::semi_implicit) dt *= config.implicit_dt_factor;
    dt = std::min(dt, config.t_end - s.t);
    try {
      s = step(s, dt, config, &initial);
    } catch (const Error& e) {
      traj.stop_message = e.what();
      switch (e.kind()) {
        case ErrorKind::cfl_violation: traj.stop_reason = StopReason::cfl_violation; break;
        case ErrorKind::chart_exit:
        case ErrorKind::chart_out_of_range: traj.stop_reason = StopReason::chart_exit; break;
        case ErrorKind::past_singularity: traj.stop_reason = StopReason::past_singularity; break;
        default: traj.stop_reason = StopReason::non_finite; break;
      }
      break;
    }
    ++n;
    try {
      row = measure(s, config);
    } catch (const Error& e) {
      traj.stop_reason = StopReason::non_finite;
      traj.stop_message = e.what();
      snapshot(n);
      break;
    }
    if (config.record_monitors) traj.monitors.push_back(row);
    if (h * row.max_A >= config.blowup_threshold) {
      traj.stop_reason = StopReason::blowup;
      traj.stop_message = "h*max|A| reached the blow-up threshold";
      snapshot(n);
      break;
    }
    if (n % static_cast<std::size_t>(config.snapshot_stride) == 0) snapshot(n);
  }
  snapshot(n);
  traj.steps = n;
  return traj;
}

Trajectory run_exact(const ExactFamily& family, const std::vector<double>& times, PatchPtr patch) {
  Trajectory traj;
  traj.patch = std::move(patch);
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0 && !(times[k] > times[k - 1])) throw Error(ErrorKind::precondition, "times must increase");
    AnalyticSurface s = family.surface(times[k]);
    MonitorRow m;
    m.t = times[k];
    if (family.kind == AnalyticKind::sphere || family.kind == AnalyticKind::hemisphere) {
      const double R = s.radius;
      const double frac = family.kind == AnalyticKind::sphere ? 1.0 : 0.5;
      m.area = frac * 4 * kPi * R * R;
      m.perimeter = family.kind == AnalyticKind::hemisphere ? 2 * kPi * R : 0.0;
      m.energy = frac * 8 * kPi;
      m.h2_integral = frac * 16 * kPi;
      m.max_H = 2.0 / R;
      m.max_A = std::sqrt(2.0) / R;
    }
    traj.monitors.push_back(m);
    traj.snapshots.push_back({times[k], k, s});
  }
  traj.steps = times.empty() ? 0 : times.size() - 1;
  return traj;
}

ExtendedField even_extension(const GraphSurface& half) {
  if (half.grid.shape() != DomainShape::half_disk) {
    throw Error(ErrorKind::precondition, "even extension needs a half-disk surface");
  }
  const Grid& hg = half.grid;
  ExtendedField e;
  e.full = GraphSurface(half.patch, Grid(DomainShape::disk, hg.h(), hg.r_dom()), half.t);
  e.full.topology = half.topology == Topology::disk ? Topology::sphere : Topology::untagged;
  const Grid& fg = e.full.grid;
  for (std::size_t k = 0; k < fg.size(); ++k) {
    if (fg.role(k) == NodeRole::outside) continue;
    const int i = fg.i_of(k), j = fg.j_of(k);
    e.full.u[k] = half.at(i, std::abs(j));
  }
  const SurfaceGeometry geo = fundamental_forms(half);
  e.a.assign(fg.size(), Mat2::Zero());
  e.f.assign(fg.size(), 0.0);
  e.valid.assign(fg.size(), 0);
  for (std::size_t k = 0; k < fg.size(); ++k) {
    const int i = fg.i_of(k), j = fg.j_of(k);
    if (fg.role(k) != NodeRole::active) continue;
    const std::size_t src = hg.index(i, std::abs(j));
    if (!geo.valid[src]) continue;
    Mat2 a = geo.nodes[src].g_inv;
    if (j < 0) {
      a(0, 1) = -a(0, 1);
      a(1, 0) = -a(1, 0);
    }
    e.a[k] = a;
    e.f[k] = geo.nodes[src].f;
    e.valid[k] = 1;
    if (j == 0) e.max_edge_a12 = std::max(e.max_edge_a12, std::abs(geo.nodes[src].g_inv(0, 1)));
  }
  const double tol_n = hg.h() * hg.h();
  if (e.max_edge_a12 > 10.0 * tol_n) {
    throw Error(ErrorKind::reflection_condition_violated, "g^{12} does not vanish on the free boundary");
  }
  return e;
}

std::vector<double> extended_residual(const ExtendedField& e) {
  const Grid& g = e.full.grid;
  std::vector<double> r(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!e.valid[k]) continue;
    Vec2 du;
    Mat2 ddu;
    node_derivatives(e.full, g.i_of(k), g.j_of(k), du, ddu);
    r[k] = (e.a[k].cwiseProduct(ddu)).sum() + e.f[k];
  }
  return r;
}

double temporal_regularity_probe(const Trajectory& traj, int i, int j, double t0, double t1) {
  std::vector<std::pair<double, Vec2>> grads;
  for (const auto& snap : traj.snapshots) {
    if (snap.t < t0 || snap.t > t1) continue;
    const GraphSurface* s = snap.graph();
    if (!s) continue;
    const Grid& g = s->grid;
    if (g.role(i, j) != NodeRole::active) throw Error(ErrorKind::precondition, "probe node must be active");
    if (g.r_dom() - std::hypot(g.y1(i), g.y2(j)) < 0.25 * g.r_dom() && g.shape() != DomainShape::half_strip) {
      throw Error(ErrorKind::precondition, "probe node must stay r_dom/4 away from the rim");
    }
    Vec2 du;
    Mat2 ddu;
    node_derivatives(*s, i, j, du, ddu);
    grads.emplace_back(snap.t, du);
  }
  if (grads.size() < 3) throw Error(ErrorKind::insufficient_snapshots, "probe window needs >= 3 snapshots");
  double sup = 0.0;
  for (std::size_t a = 0; a < grads.size(); ++a)
    for (std::size_t b = a + 1; b < grads.size(); ++b) {
      const double dt = std::abs(grads[b].first - grads[a].first);
      if (dt > 0.0) sup = std::max(sup, (grads[b].second - grads[a].second).norm() / std::sqrt(dt));
    }
  return sup;
}

CompositeSurface doubled_sphere_composite(const GraphSurface& cap, const Vec3& center, double R) {
  CompositeSurface c{even_extension(cap).full, AnalyticSurface::sphere(center, R)};
  const double r = cap.grid.r_dom();
  if (!(r < R)) throw Error(ErrorKind::precondition, "cap footprint exceeds the sphere");
  c.exterior.axis = Vec3::UnitZ();
  c.exterior.polar_min = std::asin(r / R);
  c.exterior.t = cap.t;
  return c;
}

}  // namespace mcflab
