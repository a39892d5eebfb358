#include "mcflab/analytic_surface.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace mcflab {

const char* to_string(AnalyticKind kind) noexcept {
  switch (kind) {
    case AnalyticKind::plane: return "plane";
    case AnalyticKind::half_plane: return "half_plane";
    case AnalyticKind::sphere: return "sphere";
    case AnalyticKind::hemisphere: return "hemisphere";
  }
  return "?";
}

void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  struct Free {
    void operator()(gsl_integration_glfixed_table* t) const { gsl_integration_glfixed_table_free(t); }
  };
  static std::mutex mu;
  static std::map<int, std::unique_ptr<gsl_integration_glfixed_table, Free>> cache;
  gsl_integration_glfixed_table* table;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) slot.reset(gsl_integration_glfixed_table_alloc(static_cast<size_t>(n)));
    table = slot.get();
  }
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) gsl_integration_glfixed_point(a, b, static_cast<size_t>(i), &x[i], &w[i], table);
}

namespace {

void orthonormal_pair(const Vec3& n, Vec3& a, Vec3& b) {
  const Vec3 seed = std::abs(n[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  a = (seed - seed.dot(n) * n).normalized();
  b = n.cross(a);
}

void check_on_gamma(const Vec3& P, const char* what) {
  if (std::abs(P[1]) > 1e-12 * std::max(1.0, P.norm())) {
    throw Error(ErrorKind::precondition, std::string(what) + " must be anchored on the support x2 = 0");
  }
}

// Radial panels [0, extent] split at the requested breaks.
std::vector<double> panels(double extent, const std::vector<double>& breaks, double shift) {
  std::vector<double> cuts{0.0, extent};
  for (double d : breaks) {
    const double rho = std::sqrt(std::max(0.0, d * d - shift * shift));
    if (rho > 0.0 && rho < extent) cuts.push_back(rho);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

}  // namespace

AnalyticSurface AnalyticSurface::plane(const Vec3& P, const Vec3& N) {
  AnalyticSurface s;
  s.kind = AnalyticKind::plane;
  s.point = P;
  s.normal = N.normalized();
  return s;
}

AnalyticSurface AnalyticSurface::half_plane(const Vec3& P, const Vec3& N) {
  check_on_gamma(P, "half-plane");
  if (std::abs(N.normalized()[1]) > 1e-12) {
    throw Error(ErrorKind::precondition, "half-plane must meet the support orthogonally");
  }
  AnalyticSurface s = plane(P, N);
  s.kind = AnalyticKind::half_plane;
  return s;
}

AnalyticSurface AnalyticSurface::sphere(const Vec3& C, double R) {
  if (!(R > 0.0)) throw Error(ErrorKind::precondition, "sphere radius must be > 0");
  AnalyticSurface s;
  s.kind = AnalyticKind::sphere;
  s.point = C;
  s.radius = R;
  return s;
}

AnalyticSurface AnalyticSurface::hemisphere(const Vec3& C, double R) {
  check_on_gamma(C, "hemisphere centre");
  AnalyticSurface s = sphere(C, R);
  s.kind = AnalyticKind::hemisphere;
  return s;
}

Topology AnalyticSurface::topology() const noexcept {
  switch (kind) {
    case AnalyticKind::sphere: return Topology::sphere;
    case AnalyticKind::hemisphere: return Topology::disk;
    default: return Topology::untagged;
  }
}

AnalyticSurface AnalyticSurface::rescaled(const Vec3& P, double lambda) const {
  AnalyticSurface s = *this;
  s.point = (point - P) / lambda;
  s.radius = radius / lambda;
  return s;
}

double AnalyticSurface::mean_curvature() const noexcept {
  return (kind == AnalyticKind::sphere || kind == AnalyticKind::hemisphere) ? 2.0 / radius : 0.0;
}

double AnalyticSurface::curvature_norm2() const noexcept {
  return (kind == AnalyticKind::sphere || kind == AnalyticKind::hemisphere) ? 2.0 / (radius * radius) : 0.0;
}

SurfaceSamples sample(const AnalyticSurface& s, const QuadratureHint& hint, int level) {
  SurfaceSamples out;
  const int scale = 1 << level;
  std::vector<double> xr, wr, xa, wa;
  const double H = s.mean_curvature(), A2 = s.curvature_norm2();

  if (s.kind == AnalyticKind::plane || s.kind == AnalyticKind::half_plane) {
    if (!std::isfinite(hint.extent) || !(hint.extent > 0.0)) {
      throw Error(ErrorKind::precondition, "planar samples need a finite extent");
    }
    const Vec3& N = s.normal;
    Vec3 ea, eb;
    Vec3 F = hint.focus - (hint.focus - s.point).dot(N) * N;
    bool half = s.kind == AnalyticKind::half_plane;
    if (half) {
      ea = Vec3::UnitY().cross(N).normalized();
      eb = Vec3::UnitY();
      F = s.point + (hint.focus - s.point).dot(ea) * ea;
    } else {
      orthonormal_pair(N, ea, eb);
    }
    const double shift = (hint.focus - F).norm();
    const auto cuts = panels(hint.extent, hint.breaks, shift);
    const int nr = 8 * scale;
    const int na = 16 * scale;
    if (half) {
      gauss_legendre(na, 0.0, kPi, xa, wa);
    } else {
      xa.resize(na);
      wa.assign(na, 2.0 * kPi / na);
      for (int k = 0; k < na; ++k) xa[k] = 2.0 * kPi * k / na;
    }
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
      gauss_legendre(nr, cuts[p], cuts[p + 1], xr, wr);
      for (int i = 0; i < nr; ++i)
        for (int k = 0; k < na; ++k) {
          const Vec3 X = F + xr[i] * (std::cos(xa[k]) * ea + std::sin(xa[k]) * eb);
          out.points.push_back({X, N, 0.0, 0.0, wr[i] * wa[k] * xr[i]});
        }
    }
    out.spacing = hint.extent / nr;
    if (half) {
      std::vector<double> cuts2;
      for (double c : cuts) {
        cuts2.push_back(-c);
        cuts2.push_back(c);
      }
      std::sort(cuts2.begin(), cuts2.end());
      cuts2.erase(std::unique(cuts2.begin(), cuts2.end()), cuts2.end());
      for (std::size_t p = 0; p + 1 < cuts2.size(); ++p) {
        gauss_legendre(nr, cuts2[p], cuts2[p + 1], xr, wr);
        for (int i = 0; i < nr; ++i) out.boundary.push_back({F + xr[i] * ea, ea, wr[i]});
      }
    }
    return out;
  }

  // Spheres: θ from the polar axis by Gauss–Legendre, φ by the trapezoid rule
  // (periodic) or Gauss–Legendre on [0, π] for the hemisphere.
  const double R = s.radius;
  const Vec3& C = s.point;
  Vec3 a1, a2;
  Vec3 ax = s.axis.normalized();
  if (s.kind == AnalyticKind::hemisphere) {
    // φ measured from e1 towards e2 so that x2 − c2 = R sinθ sinφ.
    ax = Vec3::UnitZ();
    a1 = Vec3::UnitX();
    a2 = Vec3::UnitY();
  } else {
    // Align the pole with the focus so radial kernels depend on θ alone.
    const Vec3 towards = hint.focus - C;
    if (s.polar_min == 0.0 && towards.norm() > 1e-12 * R) ax = towards.normalized();
    orthonormal_pair(ax, a1, a2);
  }
  const int nt = 16 * scale;
  const int np = 32 * scale;
  std::vector<double> tcuts{s.polar_min, kPi};
  if (s.kind == AnalyticKind::sphere && s.polar_min == 0.0) {
    const double d = (hint.focus - C).norm();
    std::vector<double> radii = hint.breaks;
    if (std::isfinite(hint.extent)) radii.push_back(hint.extent);
    for (double rho : radii) {
      if (d == 0.0) break;
      const double c = (R * R + d * d - rho * rho) / (2.0 * R * d);
      if (c > -1.0 && c < 1.0) tcuts.push_back(std::acos(c));
    }
  }
  std::sort(tcuts.begin(), tcuts.end());
  tcuts.erase(std::unique(tcuts.begin(), tcuts.end()), tcuts.end());
  xr.clear();
  wr.clear();
  for (std::size_t p = 0; p + 1 < tcuts.size(); ++p) {
    std::vector<double> x, w;
    gauss_legendre(nt, tcuts[p], tcuts[p + 1], x, w);
    xr.insert(xr.end(), x.begin(), x.end());
    wr.insert(wr.end(), w.begin(), w.end());
  }
  if (s.kind == AnalyticKind::hemisphere) {
    gauss_legendre(np / 2, 0.0, kPi, xa, wa);
  } else {
    xa.resize(np);
    wa.assign(np, 2.0 * kPi / np);
    for (int k = 0; k < np; ++k) xa[k] = 2.0 * kPi * k / np;
  }
  for (std::size_t i = 0; i < xr.size(); ++i) {
    const double st = std::sin(xr[i]), ct = std::cos(xr[i]);
    for (std::size_t k = 0; k < xa.size(); ++k) {
      const Vec3 dir = st * std::cos(xa[k]) * a1 + st * std::sin(xa[k]) * a2 + ct * ax;
      out.points.push_back({C + R * dir, -dir, H, A2, R * R * st * wr[i] * wa[k]});
    }
  }
  out.spacing = kPi * R / nt;
  if (s.kind == AnalyticKind::hemisphere) {
    const int nb = np;
    const double a0 = s.polar_min;
    const double span = 2.0 * (kPi - a0);
    // Boundary great circle X = C + R(sin α, 0, cos α), α ∈ [a0, 2π − a0].
    if (a0 == 0.0) {
      for (int k = 0; k < nb; ++k) {
        const double al = 2.0 * kPi * k / nb;
        out.boundary.push_back({C + R * Vec3(std::sin(al), 0.0, std::cos(al)),
                                Vec3(std::cos(al), 0.0, -std::sin(al)), R * 2.0 * kPi / nb});
      }
    } else {
      gauss_legendre(nb, a0, a0 + span, xa, wa);
      for (int k = 0; k < nb; ++k) {
        const double al = xa[k];
        out.boundary.push_back({C + R * Vec3(std::sin(al), 0.0, std::cos(al)),
                                Vec3(std::cos(al), 0.0, -std::sin(al)), R * wa[k]});
      }
    }
  }
  return out;
}

ConvergedIntegral integrate_converged(const AnalyticSurface& s, const PointIntegrand& f,
                                      const QuadratureHint& hint, double rel_tol, int max_level) {
  auto sum = [&](int level) {
    double acc = 0.0;
    for (const auto& p : sample(s, hint, level).points) acc += f(p) * p.w;
    return acc;
  };
  ConvergedIntegral r;
  double prev = sum(0);
  for (int level = 1; level <= max_level; ++level) {
    const double cur = sum(level);
    r.value = cur;
    r.error = std::abs(cur - prev);
    r.level = level;
    if (r.error <= rel_tol * std::abs(cur) || (cur == 0.0 && prev == 0.0)) {
      r.converged = true;
      return r;
    }
    prev = cur;
  }
  r.converged = false;
  return r;
}

double analytic_perimeter(const AnalyticSurface& s) {
  switch (s.kind) {
    case AnalyticKind::hemisphere: return 2.0 * kPi * s.radius;
    case AnalyticKind::half_plane: return kInf;
    default: return 0.0;
  }
}

}  // namespace mcflab
