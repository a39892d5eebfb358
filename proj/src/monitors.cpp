#include "mcflab/monitors.hpp"

#include "mcflab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace mcflab {

namespace {

// Gaussian tails below e^{-46} ≈ 1e-20 are dropped from the analytic support.
constexpr double kTailExponent = 46.0;

double tau_of(const Snapshot& snap, double T) {
  const double tau = T - snap.t;
  if (!(tau > 0.0)) throw Error(ErrorKind::precondition, "density needs t < T");
  return tau;
}

double q_of(double kappa, double tau) { return kappa > 0.0 ? std::pow(kappa * kappa * tau, 0.4) : 0.0; }

void require_on_support(const SupportPatch& patch, const Vec3& P) {
  const double d = patch.project_and_distance(P).distance;
  if (std::abs(d) > 1e-9 * std::max(1.0, P.norm()))
    throw Error(ErrorKind::precondition, "boundary density needs P on the support surface");
}

}  // namespace

SnapshotIntegral integrate_snapshot(const Snapshot& snap, const PointIntegrand& f, const QuadratureHint& hint) {
  SnapshotIntegral out;
  auto grid_sum = [&](const GraphSurface& g) {
    double acc = 0.0;
    for (const auto& p : samples(g).points) acc += f(p) * p.w;
    return acc;
  };
  auto analytic_sum = [&](const AnalyticSurface& a) {
    const ConvergedIntegral c = integrate_converged(a, f, hint);
    out.error += c.error;
    return c.value;
  };
  if (const auto* g = snap.graph()) {
    out.value = grid_sum(*g);
  } else if (const auto* a = snap.analytic()) {
    out.value = analytic_sum(*a);
  } else {
    const auto& c = *snap.composite();
    out.value = grid_sum(c.graph) + analytic_sum(c.exterior);
  }
  return out;
}

SurfaceSamples snapshot_samples(const Snapshot& snap, const QuadratureHint& hint, int level) {
  if (const auto* g = snap.graph()) return samples(*g);
  if (const auto* a = snap.analytic()) return sample(*a, hint, level);
  const auto& c = *snap.composite();
  SurfaceSamples out = samples(c.graph);
  SurfaceSamples ext = sample(c.exterior, hint, level);
  out.points.insert(out.points.end(), ext.points.begin(), ext.points.end());
  out.boundary.insert(out.boundary.end(), ext.boundary.begin(), ext.boundary.end());
  out.spacing = std::max(out.spacing, ext.spacing);
  return out;
}

double boundary_time_window(double kappa) {
  if (!(kappa > 0.0)) return kInf;
  return 0.5 * std::pow(3.0 / 320.0, 5) / (kappa * kappa);
}

DensityValue interior_density(const Snapshot& snap, const SupportPatch& patch, const Vec3& P, double T, double r,
                              const DensityOptions& options) {
  const double tau = tau_of(snap, T);
  if (!(r > 0.0)) throw Error(ErrorKind::precondition, "cutoff radius must be > 0");
  if (options.require_clearance) {
    if (!std::isfinite(r)) throw Error(ErrorKind::precondition, "cutoff radius must be finite");
    const double d = patch.project_and_distance(P).distance;
    if (!(r < d / (2.0 * std::sqrt(5.0))))
      throw Error(ErrorKind::precondition, "cutoff radius violates the clearance from the support surface");
  }
  const double r2 = r * r;
  const bool cut = std::isfinite(r);
  QuadratureHint hint;
  hint.focus = P;
  hint.extent = cut ? std::sqrt(r2 + 4.0 * tau) : std::sqrt(4.0 * tau * kTailExponent);
  auto kernel = [&](const SurfacePoint& p) {
    const double s = (p.X - P).squaredNorm();
    double psi = 1.0;
    if (cut) {
      const double c = 1.0 - (s - 4.0 * tau) / r2;
      if (c <= 0.0) return 0.0;
      psi = c * c * c;
    }
    const double Psi = std::exp(-s / (4.0 * tau)) / (4.0 * kPi * tau);
    return psi * Psi;
  };
  const SnapshotIntegral v = integrate_snapshot(snap, kernel, hint);
  const SnapshotIntegral m = integrate_snapshot(
      snap,
      [&](const SurfacePoint& p) {
        const double s = (p.X - P).squaredNorm();
        if (cut && s >= r2 + 4.0 * tau) return 0.0;
        return std::exp(-s / (4.0 * tau)) / (4.0 * kPi * tau);
      },
      hint);
  return {v.value, v.error, m.value};
}

DensityValue boundary_density(const Snapshot& snap, const SupportPatch& patch, const Vec3& P, double T,
                              double kappa) {
  const double tau = tau_of(snap, T);
  if (kappa < 0.0) throw Error(ErrorKind::precondition, "kappa must be >= 0");
  if (tau > boundary_time_window(kappa))
    throw Error(ErrorKind::time_window, "T - t exceeds the boundary monotonicity window");
  require_on_support(patch, P);
  const double q = q_of(kappa, tau);
  const double var = 1.0 + 16.0 * q;
  const double ball = kappa > 0.0 ? 0.5 * q / kappa : kInf;
  const double ball2 = ball * ball;
  QuadratureHint hint;
  hint.focus = P;
  hint.extent = std::sqrt(4.0 * var * tau * kTailExponent);
  if (kappa > 0.0) {
    hint.extent = std::min(hint.extent, std::sqrt(80.0 * tau + ball2));
    hint.breaks.push_back(std::sqrt(0.5 * (80.0 * tau + ball2)));
  }
  const double pre = std::exp(85.0 * q);
  const bool flat = patch.kind() == PatchKind::flat;
  auto reflected = [&](const Vec3& X) -> Vec3 {
    if (!flat) return patch.reflect(X);
    const Vec3 n = patch.direction_to_world(Vec3::UnitY());
    return X - 2.0 * (X - patch.origin()).dot(n) * n;
  };
  auto weight = [&](const SurfacePoint& p) {
    const double a = (p.X - P).squaredNorm();
    const double b = (reflected(p.X) - P).squaredNorm();
    return std::exp(-0.5 * (a + b) / (4.0 * var * tau)) / (4.0 * kPi * tau);
  };
  auto kernel = [&](const SurfacePoint& p) {
    const double a = (p.X - P).squaredNorm();
    const double b = (reflected(p.X) - P).squaredNorm();
    double eta = 1.0;
    if (kappa > 0.0) {
      const double c = 1.0 - (a + b - 80.0 * tau) / ball2;
      if (c <= 0.0) return 0.0;
      eta = c * c * c * c;
    }
    return eta * std::exp(-0.5 * (a + b) / (4.0 * var * tau)) / (4.0 * kPi * tau);
  };
  const SnapshotIntegral v = integrate_snapshot(snap, kernel, hint);
  const SnapshotIntegral m = integrate_snapshot(snap, weight, hint);
  return {pre * v.value, pre * v.error, m.value};
}

double interior_density_value(const Snapshot& snap, const SupportPatch& patch, const Vec3& P, double T, double r,
                              const DensityOptions& options) {
  return interior_density(snap, patch, P, T, r, options).value;
}

double boundary_density_value(const Snapshot& snap, const SupportPatch& patch, const Vec3& P, double T,
                              double kappa) {
  return boundary_density(snap, patch, P, T, kappa).value;
}

DensityReport monotonicity_report(const Trajectory& traj, const DensityQuery& query) {
  if (!traj.patch) throw Error(ErrorKind::precondition, "trajectory has no support patch");
  if (traj.snapshots.empty()) throw Error(ErrorKind::insufficient_snapshots, "trajectory has no snapshots");
  if (query.sample_times.empty()) throw Error(ErrorKind::precondition, "no sample times");
  DensityReport rep;
  for (double ts : query.sample_times) {
    const Snapshot& snap = traj.snapshots[traj.nearest(ts)];
    rep.max_time_offset = std::max(rep.max_time_offset, std::abs(snap.t - ts));
    const DensityValue d = query.location == DensityLocation::interior
                               ? interior_density(snap, *traj.patch, query.P, query.T, query.r, query.options)
                               : boundary_density(snap, *traj.patch, query.P, query.T, query.kappa);
    const double up = rep.values.empty() ? 0.0 : std::max(0.0, d.value - rep.values.back());
    rep.times.push_back(snap.t);
    rep.values.push_back(d.value);
    rep.errors.push_back(d.error);
    rep.kernel_mass.push_back(d.kernel_mass);
    rep.violation.push_back(up);
    rep.max_upward_violation = std::max(rep.max_upward_violation, up);
  }
  rep.limit_estimate = rep.values.back();
  const std::size_t n = rep.values.size();
  if (n >= 3) {
    double tm = 0.0, vm = 0.0;
    for (std::size_t k = n - 3; k < n; ++k) {
      tm += rep.times[k] / 3.0;
      vm += rep.values[k] / 3.0;
    }
    double num = 0.0, den = 0.0;
    for (std::size_t k = n - 3; k < n; ++k) {
      num += (rep.times[k] - tm) * (rep.values[k] - vm);
      den += (rep.times[k] - tm) * (rep.times[k] - tm);
    }
    rep.flat_tail = den > 0.0 && std::abs(num / den) < 1e-3;
  }
  return rep;
}

double self_shrinker_residual(const Snapshot& snap, const SupportPatch& patch, const Vec3& P, double T, bool boundary,
                              double kappa) {
  const double tau = tau_of(snap, T);
  QuadratureHint hint;
  hint.focus = P;
  if (!boundary) {
    hint.extent = std::sqrt(4.0 * tau * kTailExponent);
    return integrate_snapshot(
               snap,
               [&](const SurfacePoint& p) {
                 const Vec3 x = p.X - P;
                 const double s = p.H + x.dot(p.N) / (2.0 * tau);
                 return s * s * std::exp(-x.squaredNorm() / (4.0 * tau)) / (4.0 * kPi * tau);
               },
               hint)
        .value;
  }
  if (kappa < 0.0) throw Error(ErrorKind::precondition, "kappa must be >= 0");
  require_on_support(patch, P);
  const double q = q_of(kappa, tau);
  const double var = 1.0 + 16.0 * q;
  hint.extent = std::sqrt(4.0 * var * tau * kTailExponent);
  const bool flat = patch.kind() == PatchKind::flat;
  const double eps = 1e-5;
  return integrate_snapshot(
             snap,
             [&](const SurfacePoint& p) {
               const Projection pr = patch.project_and_distance(p.X);
               const double d = pr.distance;
               const Vec3& gd = pr.gradient;
               const Vec3 x = p.X - P;
               double hess = 0.0;
               if (!flat) {
                 Mat3 D;
                 for (int k = 0; k < 3; ++k) {
                   const Vec3 e = eps * Vec3::Unit(k);
                   D.col(k) = (patch.project_and_distance(p.X + e).gradient -
                               patch.project_and_distance(p.X - e).gradient) /
                              (2.0 * eps);
                 }
                 hess = x.dot(0.5 * (D + D.transpose()) * p.N);
               }
               const double drift = x.dot(p.N) - (x.dot(gd) - d) * gd.dot(p.N) - d * hess;
               const double s = p.H + drift / (2.0 * var * tau);
               const Vec3 xr = 2.0 * pr.point - p.X;
               const double w = std::exp(-0.5 * (x.squaredNorm() + (xr - P).squaredNorm()) / (4.0 * var * tau)) /
                                (4.0 * kPi * tau);
               return s * s * w;
             },
             hint)
      .value;
}

double energy(const Snapshot& snap) {
  return integrate_snapshot(snap, [](const SurfacePoint& p) { return p.A2; }).value;
}

double interior_curvature_norm(const Trajectory& traj, const Vec3& center, double R, double rho) {
  if (!(R > 0.0) || !(rho > 0.0)) throw Error(ErrorKind::precondition, "curvature norm needs R, rho > 0");
  double best = -1.0;
  for (const Snapshot& snap : traj.snapshots) {
    const double slack = rho - std::abs(snap.t);
    if (!(slack > 0.0)) continue;
    QuadratureHint hint;
    hint.focus = center;
    hint.extent = R;
    for (const auto& p : snapshot_samples(snap, hint).points) {
      const double rmax = std::min(R - (p.X - center).norm(), std::sqrt(slack));
      if (!(rmax > 0.0)) continue;
      // Largest dyadic fraction of R that fits.
      const int k = std::max(0, static_cast<int>(std::ceil(std::log2(R / rmax) - 1e-12)));
      const double r = std::ldexp(R, -k);
      if (r > rmax) continue;
      best = std::max(best, r * std::sqrt(std::max(0.0, p.A2)));
    }
  }
  if (best < 0.0) throw Error(ErrorKind::empty_window, "no snapshot sample lies in the parabolic window");
  return best;
}

namespace {

struct Key {
  long x, y, z;
  bool operator<(const Key& o) const { return std::tie(x, y, z) < std::tie(o.x, o.y, o.z); }
};

Key key_of(const Vec3& X, double a) {
  return {std::lround(X.x() / a), std::lround(X.y() / a), std::lround(X.z() / a)};
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

}  // namespace

SingularScan singular_set_scan(const Trajectory& traj, double epsilon, const std::vector<double>& r_grid) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::precondition, "epsilon must be > 0");
  if (r_grid.empty()) throw Error(ErrorKind::precondition, "radius grid is empty");
  if (traj.snapshots.size() < 2) throw Error(ErrorKind::insufficient_snapshots, "scan needs at least two snapshots");
  SingularScan out;
  out.epsilon = epsilon;
  out.r_grid = r_grid;
  std::sort(out.r_grid.begin(), out.r_grid.end());
  if (!(out.r_grid.front() > 0.0)) throw Error(ErrorKind::precondition, "radii must be > 0");
  const double rmin = out.r_grid.front(), rmax = out.r_grid.back();
  const Snapshot& snap = traj.snapshots.back();
  out.t = snap.t;
  const SurfaceSamples s = snapshot_samples(snap);
  for (const auto& p : s.points) out.total_energy += p.A2 * p.w;

  // Spatial buckets of size rmax for the ball sums.
  std::map<Key, std::vector<std::size_t>> buckets;
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    const Vec3& X = s.points[k].X;
    buckets[{static_cast<long>(std::floor(X.x() / rmax)), static_cast<long>(std::floor(X.y() / rmax)),
             static_cast<long>(std::floor(X.z() / rmax))}]
        .push_back(k);
  }
  const double a = 0.5 * rmin;
  std::map<Key, bool> lattice;
  for (const auto& p : s.points) lattice[key_of(p.X, a)] = true;
  for (const auto& c : s.boundary) lattice[key_of(c.X, a)] = true;

  std::vector<Key> keys;
  for (const auto& kv : lattice) keys.push_back(kv.first);
  out.candidates.resize(keys.size());
  parallel_for(keys.size(), [&](std::size_t idx) {
    const Key& key = keys[idx];
    ScanCandidate& c = out.candidates[idx];
    c.P = Vec3(key.x * a, key.y * a, key.z * a);
    c.mass.assign(out.r_grid.size(), 0.0);
    const long bx = static_cast<long>(std::floor(c.P.x() / rmax));
    const long by = static_cast<long>(std::floor(c.P.y() / rmax));
    const long bz = static_cast<long>(std::floor(c.P.z() / rmax));
    for (long dx = -1; dx <= 1; ++dx)
      for (long dy = -1; dy <= 1; ++dy)
        for (long dz = -1; dz <= 1; ++dz) {
          auto it = buckets.find({bx + dx, by + dy, bz + dz});
          if (it == buckets.end()) continue;
          for (std::size_t k : it->second) {
            const auto& p = s.points[k];
            const double dist = (p.X - c.P).norm();
            for (std::size_t j = 0; j < out.r_grid.size(); ++j)
              if (dist < out.r_grid[j]) c.mass[j] += p.A2 * p.w;
          }
        }
    c.flagged = *std::max_element(c.mass.begin(), c.mass.end()) >= epsilon;
  });

  std::vector<std::size_t> flagged;
  for (std::size_t k = 0; k < out.candidates.size(); ++k)
    if (out.candidates[k].flagged) flagged.push_back(k);
  std::vector<std::size_t> parent(flagged.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i < flagged.size(); ++i)
    for (std::size_t j = i + 1; j < flagged.size(); ++j)
      if ((out.candidates[flagged[i]].P - out.candidates[flagged[j]].P).norm() <= 2.0 * rmin)
        parent[find_root(parent, i)] = find_root(parent, j);
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < flagged.size(); ++i) groups[find_root(parent, i)].push_back(flagged[i]);
  for (const auto& g : groups) {
    ScanCluster cl;
    Vec3 acc = Vec3::Zero();
    double wsum = 0.0;
    for (std::size_t k : g.second) {
      const auto& c = out.candidates[k];
      const double m = c.mass.front();
      acc += m * c.P;
      wsum += m;
      cl.mass = std::max(cl.mass, m);
    }
    cl.location = wsum > 0.0 ? Vec3(acc / wsum) : out.candidates[g.second.front()].P;
    cl.members = g.second.size();
    out.clusters.push_back(cl);
  }
  out.within_count_bound = static_cast<double>(out.clusters.size()) <= out.total_energy / epsilon + 1.0;
  return out;
}

}  // namespace mcflab
