#include "mcflab/support_surface.hpp"

#include "mcflab/jet.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <vector>

namespace mcflab {

namespace {

std::string format_number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

class FlatHeight final : public HeightFunction {
 public:
  HeightDerivatives eval(double, double) const override { return {}; }
  std::string name() const override { return "flat"; }
  bool is_flat() const override { return true; }
};

class ParabolicHeight final : public HeightFunction {
 public:
  explicit ParabolicHeight(double a) : a_(a) {}
  HeightDerivatives eval(double y1, double) const override {
    HeightDerivatives d;
    d.value = 0.5 * a_ * y1 * y1;
    d.grad = Vec2(a_ * y1, 0.0);
    d.hess(0, 0) = a_;
    return d;
  }
  std::string name() const override { return "paraboloid:" + format_number(a_); }

 private:
  double a_;
};

class SphereCapHeight final : public HeightFunction {
 public:
  explicit SphereCapHeight(double R) : R_(R) {}
  HeightDerivatives eval(double y1, double y3) const override {
    const double rho2 = y1 * y1 + y3 * y3;
    if (rho2 >= R_ * R_) {
      throw Error(ErrorKind::chart_out_of_range, "sphere cap evaluated outside its radius");
    }
    const double s = std::sqrt(R_ * R_ - rho2);
    const double s3 = s * s * s;
    const double s5 = s3 * s * s;
    const double y[2] = {y1, y3};
    HeightDerivatives d;
    d.value = R_ - s;
    for (int a = 0; a < 2; ++a) {
      d.grad[a] = y[a] / s;
      for (int b = 0; b < 2; ++b) {
        d.hess(a, b) = (a == b ? 1.0 / s : 0.0) + y[a] * y[b] / s3;
        for (int c = 0; c < 2; ++c) {
          double t = 3.0 * y[a] * y[b] * y[c] / s5;
          if (a == b) t += y[c] / s3;
          if (a == c) t += y[b] / s3;
          if (b == c) t += y[a] / s3;
          d.third[a](b, c) = t;
        }
      }
    }
    return d;
  }
  std::string name() const override { return "sphere_cap:" + format_number(R_); }

 private:
  double R_;
};

class ScaledHeight final : public HeightFunction {
 public:
  ScaledHeight(HeightPtr base, double lambda) : base_(std::move(base)), lambda_(lambda) {}
  HeightDerivatives eval(double y1, double y3) const override {
    HeightDerivatives d = base_->eval(lambda_ * y1, lambda_ * y3);
    d.value /= lambda_;
    d.hess *= lambda_;
    d.third[0] *= lambda_ * lambda_;
    d.third[1] *= lambda_ * lambda_;
    return d;
  }
  std::string name() const override {
    return "scaled(" + base_->name() + "," + format_number(lambda_) + ")";
  }
  bool is_flat() const override { return base_->is_flat(); }

 private:
  HeightPtr base_;
  double lambda_;
};

// Lattice-sampled height. All derivative lattices are precomputed with
// five-point central stencils, then interpolated with 4x4 cubic Lagrange.
class SampledHeight final : public HeightFunction {
 public:
  SampledHeight(const HeightFunction& src, double half_width, double spacing)
      : name_("sampled(" + src.name() + ")"), L_(half_width), s_(spacing) {
    margin_ = 8;
    n_ = static_cast<int>(std::ceil(half_width / spacing)) + margin_;
    m_ = 2 * n_ + 1;
    std::vector<double> f(static_cast<std::size_t>(m_) * m_);
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) f[idx(i, j)] = src.eval(coord(i), coord(j)).value;
    auto d1x = diff1(f, true), d1y = diff1(f, false);
    auto d11 = diff2(f, true), d33 = diff2(f, false);
    auto d13 = diff1(d1x, false);
    fields_ = {f, d1x, d1y, d11, d13, d33, diff1(d11, true), diff1(d11, false),
               diff1(d33, true), diff1(d33, false)};
  }

  HeightDerivatives eval(double y1, double y3) const override {
    const double lim = L_ + s_;
    if (std::abs(y1) > lim || std::abs(y3) > lim) {
      throw Error(ErrorKind::chart_out_of_range, "sampled height evaluated outside its lattice");
    }
    double wx[4], wy[4];
    int ix, iy;
    weights(y1, ix, wx);
    weights(y3, iy, wy);
    std::array<double, 10> v{};
    for (std::size_t k = 0; k < fields_.size(); ++k) {
      double acc = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) acc += wx[a] * wy[b] * fields_[k][idx(ix + a, iy + b)];
      v[k] = acc;
    }
    HeightDerivatives d;
    d.value = v[0];
    d.grad = Vec2(v[1], v[2]);
    d.hess << v[3], v[4], v[4], v[5];
    // third[a](b,c): 111, 113, 133, 333
    d.third[0] << v[6], v[7], v[7], v[8];
    d.third[1] << v[7], v[8], v[8], v[9];
    return d;
  }
  std::string name() const override { return name_; }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * m_ + j; }
  double coord(int i) const { return (i - n_) * s_; }

  std::vector<double> diff1(const std::vector<double>& f, bool along_x) const {
    std::vector<double> out(f.size(), 0.0);
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) {
        int k = along_x ? i : j;
        if (k < 2 || k > m_ - 3) continue;
        auto at = [&](int o) { return along_x ? f[idx(i + o, j)] : f[idx(i, j + o)]; };
        out[idx(i, j)] = (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * s_);
      }
    return out;
  }
  std::vector<double> diff2(const std::vector<double>& f, bool along_x) const {
    std::vector<double> out(f.size(), 0.0);
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < m_; ++j) {
        int k = along_x ? i : j;
        if (k < 2 || k > m_ - 3) continue;
        auto at = [&](int o) { return along_x ? f[idx(i + o, j)] : f[idx(i, j + o)]; };
        out[idx(i, j)] =
            (-at(-2) + 16.0 * at(-1) - 30.0 * at(0) + 16.0 * at(1) - at(2)) / (12.0 * s_ * s_);
      }
    return out;
  }
  void weights(double y, int& base, double w[4]) const {
    const double g = y / s_ + n_;
    const int i0 = static_cast<int>(std::floor(g));
    const double t = g - i0;
    base = i0 - 1;
    w[0] = -t * (t - 1.0) * (t - 2.0) / 6.0;
    w[1] = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    w[2] = -(t + 1.0) * t * (t - 2.0) / 2.0;
    w[3] = (t + 1.0) * t * (t - 1.0) / 6.0;
  }

  std::string name_;
  double L_, s_;
  int margin_, n_, m_;
  std::vector<std::vector<double>> fields_;
};

Jet2 jet_of(double v, double d0, double d1, const Mat2& dd) {
  Jet2 j;
  j.v = v;
  j.d = {d0, d1};
  j.dd = {{{dd(0, 0), dd(0, 1)}, {dd(1, 0), dd(1, 1)}}};
  return j;
}

double parse_number(std::string_view text, std::string_view key) {
  double x = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorKind::validation_error, "phi: cannot parse parameter of '" + std::string(key) + "'");
  }
  return x;
}

}  // namespace

HeightPtr flat_height() { return std::make_shared<FlatHeight>(); }
HeightPtr parabolic_height(double a) { return std::make_shared<ParabolicHeight>(a); }

HeightPtr sphere_cap_height(double radius) {
  if (!(radius > 0.0)) throw Error(ErrorKind::validation_error, "phi: sphere_cap radius must be > 0");
  return std::make_shared<SphereCapHeight>(radius);
}

HeightPtr scaled_height(HeightPtr base, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::validation_error, "scale factor must be > 0");
  return std::make_shared<ScaledHeight>(std::move(base), lambda);
}

HeightPtr sampled_height(const HeightFunction& source, double half_width, double spacing) {
  if (!(spacing > 0.0) || !(half_width > 0.0) || !std::isfinite(half_width)) {
    throw Error(ErrorKind::validation_error, "lattice_spacing: sampled patch needs a finite lattice");
  }
  return std::make_shared<SampledHeight>(source, half_width, spacing);
}

HeightPtr height_from_catalog(std::string_view e) {
  if (e == "flat") return flat_height();
  auto colon = e.find(':');
  if (colon != std::string_view::npos) {
    auto key = e.substr(0, colon);
    auto arg = e.substr(colon + 1);
    if (key == "paraboloid") return parabolic_height(parse_number(arg, key));
    if (key == "sphere_cap") return sphere_cap_height(parse_number(arg, key));
  }
  throw Error(ErrorKind::validation_error, "phi: unknown catalog entry '" + std::string(e) + "'");
}

const char* to_string(PatchKind kind) noexcept {
  switch (kind) {
    case PatchKind::flat: return "flat";
    case PatchKind::analytic_quadric: return "analytic-quadric";
    case PatchKind::sampled: return "sampled";
  }
  return "?";
}

SupportPatch::SupportPatch(PatchKind kind, HeightPtr height, double kappa,
                           std::optional<double> chart_bound, const Vec3& origin, const Mat3& frame)
    : kind_(kind), height_(std::move(height)), flat_(false), kappa_(kappa), origin_(origin), frame_(frame) {
  if (!height_) throw Error(ErrorKind::validation_error, "phi: missing height function");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    throw Error(ErrorKind::validation_error, "kappa: must be finite and >= 0");
  }
  flat_ = height_->is_flat();
  if (kind_ == PatchKind::flat && !flat_) {
    throw Error(ErrorKind::validation_error, "kind: flat patch requires phi = flat");
  }
  if (kappa == 0.0 && !flat_) {
    throw Error(ErrorKind::validation_error, "kappa: 0 is only admitted for flat patches");
  }
  if (chart_bound && !(*chart_bound > 0.0)) {
    throw Error(ErrorKind::validation_error, "chart_radius: must be > 0");
  }
  chart_radius_ = kappa > 0.0 ? 1.0 / kappa : kInf;
  if (chart_bound) chart_radius_ = std::min(chart_radius_, *chart_bound);
  if (!flat_) {
    const auto d0 = height_->eval(0.0, 0.0);
    const double tol = 1e-8 * std::max(1.0, std::isfinite(chart_radius_) ? chart_radius_ : 1.0);
    if (std::abs(d0.value) > tol || d0.grad.norm() > 1e-8) {
      throw Error(ErrorKind::validation_error, "phi: must vanish to first order at the base point");
    }
  }
}

SupportPatch SupportPatch::flat(std::optional<double> chart_bound) {
  return SupportPatch(PatchKind::flat, flat_height(), 0.0, chart_bound);
}

SupportPatch SupportPatch::from_catalog(PatchKind kind, std::string_view phi, double kappa,
                                        std::optional<double> chart_bound,
                                        std::optional<double> lattice_spacing) {
  HeightPtr h = height_from_catalog(phi);
  if (kind == PatchKind::sampled) {
    double radius = kappa > 0.0 ? 1.0 / kappa : kInf;
    if (chart_bound) radius = std::min(radius, *chart_bound);
    if (!std::isfinite(radius)) {
      throw Error(ErrorKind::validation_error, "chart_radius: sampled patch needs a finite chart");
    }
    h = sampled_height(*h, radius, lattice_spacing.value_or(radius / 64.0));
  }
  return SupportPatch(kind, std::move(h), kappa, chart_bound);
}

ChartJet SupportPatch::chart_jet(const Vec3& Y) const {
  ChartJet c;
  for (auto& row : c.dd)
    for (auto& v : row) v.setZero();
  if (flat_) {
    c.phi = Y;
    c.d = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
    return c;
  }
  const double y1 = Y[0], y2 = Y[1], y3 = Y[2];
  const HeightDerivatives hd = height_->eval(y1, y3);
  const Jet2 p1 = jet_of(hd.grad[0], hd.hess(0, 0), hd.hess(0, 1), hd.third[0]);
  const Jet2 p3 = jet_of(hd.grad[1], hd.hess(1, 0), hd.hess(1, 1), hd.third[1]);
  const Jet2 inv_w = reciprocal(sqrt(Jet2::constant(1.0) + p1 * p1 + p3 * p3));
  const std::array<Jet2, 3> nu{-(p1 * inv_w), inv_w, -(p3 * inv_w)};

  Vec3 n, dn[2], ddn[2][2];
  for (int k = 0; k < 3; ++k) {
    n[k] = nu[k].v;
    for (int a = 0; a < 2; ++a) {
      dn[a][k] = nu[k].d[a];
      for (int b = 0; b < 2; ++b) ddn[a][b][k] = nu[k].dd[a][b];
    }
  }
  c.phi = Vec3(y1, hd.value, y3) + y2 * n;
  c.d[0] = Vec3(1.0, hd.grad[0], 0.0) + y2 * dn[0];
  c.d[1] = n;
  c.d[2] = Vec3(0.0, hd.grad[1], 1.0) + y2 * dn[1];
  c.dd[0][0] = Vec3(0.0, hd.hess(0, 0), 0.0) + y2 * ddn[0][0];
  c.dd[0][2] = Vec3(0.0, hd.hess(0, 1), 0.0) + y2 * ddn[0][1];
  c.dd[2][2] = Vec3(0.0, hd.hess(1, 1), 0.0) + y2 * ddn[1][1];
  c.dd[2][0] = c.dd[0][2];
  c.dd[0][1] = c.dd[1][0] = dn[0];
  c.dd[2][1] = c.dd[1][2] = dn[1];
  return c;
}

void SupportPatch::check_range(const Vec3& Y) const {
  if (!(Y.norm() < chart_radius_)) {
    throw Error(ErrorKind::chart_out_of_range, "|Y| must stay below the chart radius");
  }
}

Vec3 SupportPatch::tubular_map(const Vec3& Y) const {
  check_range(Y);
  return to_world(chart_jet(Y).phi);
}

double SupportPatch::newton_tolerance(const Vec3& X) const {
  const double scale = std::isfinite(chart_radius_) ? chart_radius_ : std::max(1.0, X.norm());
  return 1e-12 * scale;
}

Vec3 SupportPatch::chart_coordinates(const Vec3& Xw) const {
  const Vec3 X = to_local(Xw);
  if (flat_) return X;
  const double tol = newton_tolerance(X);
  Vec3 Y = X;
  for (int it = 0; it < 50; ++it) {
    ChartJet c = chart_jet(Y);
    Mat3 J;
    for (int i = 0; i < 3; ++i) J.col(i) = c.d[i];
    const Vec3 delta = J.partialPivLu().solve(c.phi - X);
    if (!delta.allFinite()) break;
    Y -= delta;
    if (delta.norm() <= tol) {
      if (!(Y.norm() < chart_radius_)) {
        throw Error(ErrorKind::chart_out_of_range, "point lies outside the tubular chart");
      }
      return Y;
    }
  }
  throw Error(ErrorKind::no_convergence, "Newton inversion of the chart did not converge in 50 steps");
}

Projection SupportPatch::project_and_distance(const Vec3& X) const {
  Projection p;
  p.chart = chart_coordinates(X);
  p.distance = p.chart[1];
  p.gradient = normal(p.chart[0], p.chart[2]);
  p.point = X - p.distance * p.gradient;
  return p;
}

Vec3 SupportPatch::reflect(const Vec3& X) const {
  const Projection p = project_and_distance(X);
  return 2.0 * p.point - X;
}

bool SupportPatch::in_complementary_ball(const Vec3& P, double r, const Vec3& X) const {
  if (!(r > 0.0)) throw Error(ErrorKind::precondition, "complementary ball radius must be > 0");
  const Projection pp = project_and_distance(P);
  if (pp.distance < 0.0) throw Error(ErrorKind::precondition, "ball center must lie in U");
  if (pp.distance >= r) return false;  // B_r(P) ⊂ U
  const Projection px = project_and_distance(X);
  if (px.distance < 0.0) return false;
  const Vec3 Xr = 2.0 * px.point - X;
  // X̃ has signed distance −d ≤ 0, so it is outside U unless X ∈ Γ.
  return (Xr - P).norm() < r && -px.distance < 0.0;
}

MetricConnection SupportPatch::pullback_metric_connection(const Vec3& Y) const {
  check_range(Y);
  return metric_connection(chart_jet(Y), Y);
}

MetricConnection SupportPatch::metric_connection(const ChartJet& c, const Vec3& Y) const {
  MetricConnection m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m.h(i, j) = c.d[i].dot(c.d[j]);
  if (!(m.h.determinant() > 0.0)) {
    throw Error(ErrorKind::singular_metric, "pull-back metric is degenerate");
  }
  m.h_inv = m.h.inverse();
  // ∂_l h_ij = ∂_l∂_iΦ·∂_jΦ + ∂_iΦ·∂_l∂_jΦ; Christoffel symbols of the first
  // kind reduce to ∂_i∂_jΦ·∂_lΦ in a flat ambient space.
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int l = 0; l < 3; ++l) s += m.h_inv(k, l) * c.dd[i][j].dot(c.d[l]);
        m.gamma[k](i, j) = s;
      }
  }
  const double scale = kappa_ * Y.norm();
  if (scale > 0.0) {
    m.deviation_constant = (m.h - Mat3::Identity()).cwiseAbs().maxCoeff() / scale;
  }
  return m;
}

Vec3 SupportPatch::normal(double y1, double y3) const {
  if (flat_) return direction_to_world(Vec3::UnitY());
  const HeightDerivatives hd = height_->eval(y1, y3);
  const Vec3 n(-hd.grad[0], 1.0, -hd.grad[1]);
  return direction_to_world(n.normalized());
}

double SupportPatch::mean_curvature(double y1, double y3) const {
  if (flat_) return 0.0;
  const HeightDerivatives hd = height_->eval(y1, y3);
  const double p = hd.grad[0], q = hd.grad[1];
  const double w2 = 1.0 + p * p + q * q;
  return ((1.0 + q * q) * hd.hess(0, 0) - 2.0 * p * q * hd.hess(0, 1) + (1.0 + p * p) * hd.hess(1, 1)) /
         (w2 * std::sqrt(w2));
}

double SupportPatch::second_fundamental_form(const Vec3& X, const Vec3& tangent) const {
  if (flat_) return 0.0;
  const Vec3 Y = chart_coordinates(X);
  const HeightDerivatives hd = height_->eval(Y[0], Y[2]);
  const Vec3 t = frame_.transpose() * tangent;
  // Project onto the graph tangent plane parametrised by (y1, y3).
  const Vec2 a(t[0], t[2]);
  const double w = std::sqrt(1.0 + hd.grad.squaredNorm());
  return a.dot(hd.hess * a) / w;
}

SupportPatch SupportPatch::rescaled(const Vec3& P, double lambda) const {
  if (!(lambda > 0.0)) throw Error(ErrorKind::validation_error, "rescaling factor must be > 0");
  HeightPtr h = flat_ ? height_ : scaled_height(height_, lambda);
  std::optional<double> bound;
  if (std::isfinite(chart_radius_)) bound = chart_radius_ / lambda;
  return SupportPatch(kind_, std::move(h), kappa_ * lambda, bound, (origin_ - P) / lambda, frame_);
}

KappaReport SupportPatch::verify_kappa_condition() const {
  KappaReport r;
  if (flat_) {
    r.min_mean_curvature = 0.0;
    r.pass = true;
    return r;
  }
  const double radius = std::isfinite(chart_radius_) ? chart_radius_ : 1.0;
  const int n = 64;
  r.spacing = radius / n;
  const double lim = radius * (1.0 - 1e-9);
  const int m = 2 * n + 1;
  std::vector<std::optional<HeightDerivatives>> lat(static_cast<std::size_t>(m) * m);
  auto at = [&](int i, int j) -> std::optional<HeightDerivatives>& {
    return lat[static_cast<std::size_t>(i) * m + j];
  };
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      const double y1 = (i - n) * r.spacing, y3 = (j - n) * r.spacing;
      if (std::hypot(y1, y3) >= lim) continue;
      const HeightDerivatives hd = height_->eval(y1, y3);
      at(i, j) = hd;
      ++r.samples;
      r.max_hessian = std::max(r.max_hessian, hd.hess.norm());
      r.max_third = std::max(r.max_third,
                             std::sqrt(hd.third[0].squaredNorm() + hd.third[1].squaredNorm()));
      r.min_mean_curvature = std::min(r.min_mean_curvature, mean_curvature(y1, y3));
    }
  const int nb[4][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (!at(i, j)) continue;
      for (const auto& o : nb) {
        const int i2 = i + o[0], j2 = j + o[1];
        if (i2 < 0 || i2 >= m || j2 < 0 || j2 >= m || !at(i2, j2)) continue;
        const auto& a = *at(i, j);
        const auto& b = *at(i2, j2);
        const double diff = std::sqrt((a.third[0] - b.third[0]).squaredNorm() +
                                      (a.third[1] - b.third[1]).squaredNorm());
        const double dist = r.spacing * std::hypot(o[0], o[1]);
        r.lipschitz_third = std::max(r.lipschitz_third, diff / dist);
      }
    }
  const double k = kappa_;
  r.pass = r.max_hessian <= k && r.max_third <= k * k && r.lipschitz_third <= k * k * k &&
           r.min_mean_curvature >= -1e-8;
  return r;
}

}  // namespace mcflab
