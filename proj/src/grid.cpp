#include "mcflab/grid.hpp"

#include "mcflab/common.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mcflab {

namespace {

double chord_primitive(double x, double r) {
  const double c = std::clamp(x / r, -1.0, 1.0);
  return 0.5 * (x * std::sqrt(std::max(0.0, r * r - x * x)) + r * r * std::asin(c));
}

}  // namespace

double rect_disk_area(double x0, double x1, double y0, double y1, double r) {
  const double a = std::max(x0, -r), b = std::min(x1, r);
  if (!(b > a) || !(y1 > y0)) return 0.0;
  std::vector<double> cuts{a, b};
  for (double y : {y0, y1}) {
    if (std::abs(y) < r) {
      const double x = std::sqrt(r * r - y * y);
      for (double c : {-x, x})
        if (c > a && c < b) cuts.push_back(c);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double p = cuts[k], q = cuts[k + 1];
    if (!(q > p)) continue;
    const double m = 0.5 * (p + q);
    const double s = std::sqrt(std::max(0.0, r * r - m * m));
    const bool upper_is_chord = s < y1;
    const bool lower_is_chord = -s > y0;
    const double upper = upper_is_chord ? s : y1;
    const double lower = lower_is_chord ? -s : y0;
    if (upper <= lower) continue;
    const double chord = chord_primitive(q, r) - chord_primitive(p, r);
    area += (upper_is_chord ? chord : y1 * (q - p)) - (lower_is_chord ? -chord : y0 * (q - p));
  }
  return area;
}

const char* to_string(DomainShape shape) noexcept {
  switch (shape) {
    case DomainShape::half_disk: return "half_disk";
    case DomainShape::disk: return "disk";
    case DomainShape::half_strip: return "half_strip";
  }
  return "?";
}

Grid::Grid(DomainShape shape, double h, double r_dom) : shape_(shape), h_(h), r_dom_(r_dom) {
  if (!(h > 0.0) || !(r_dom > 0.0) || !std::isfinite(r_dom)) {
    throw Error(ErrorKind::validation_error, "grid: h and r_dom must be positive");
  }
  const double ratio = r_dom / h;
  n_ = static_cast<int>(std::lround(ratio));
  if (n_ < 2 || std::abs(ratio - n_) > 1e-9 * ratio) {
    throw Error(ErrorKind::validation_error, "grid: r_dom must be an integer multiple (>= 2) of h");
  }
  roles_.resize(size());
  areas_.assign(size(), 0.0);
  for (int i = lo(); i <= hi(); ++i)
    for (int j = lo(); j <= hi(); ++j) roles_[index(i, j)] = classify(i, j);

  const double hh = 0.5 * h_;
  for (int i = lo(); i <= hi(); ++i)
    for (int j = lo(); j <= hi(); ++j) {
      const NodeRole r = roles_[index(i, j)];
      if (r != NodeRole::active && r != NodeRole::rim) continue;
      const double x = y1(i), y = y2(j);
      double a = 0.0;
      switch (shape_) {
        case DomainShape::disk:
          a = rect_disk_area(x - hh, x + hh, y - hh, y + hh, r_dom_);
          break;
        case DomainShape::half_disk:
          a = rect_disk_area(x - hh, x + hh, std::max(0.0, y - hh), y + hh, r_dom_);
          break;
        case DomainShape::half_strip:
          // Columns −n … n−1 tile one period exactly.
          if (i >= -n_ && i < n_) {
            const double lo2 = std::max(0.0, y - hh), hi2 = std::min(r_dom_, y + hh);
            a = hi2 > lo2 ? h_ * (hi2 - lo2) : 0.0;
          }
          break;
      }
      areas_[index(i, j)] = a;
    }
}

NodeRole Grid::classify(int i, int j) const noexcept {
  const double x = y1(i), y = y2(j);
  const double rho = std::hypot(x, y);
  switch (shape_) {
    case DomainShape::disk:
      if (rho < r_dom_) return NodeRole::active;
      return rho < r_dom_ + kGhost * h_ ? NodeRole::rim : NodeRole::outside;
    case DomainShape::half_disk: {
      if (j < 0) return classify(i, -j) == NodeRole::outside ? NodeRole::outside : NodeRole::mirror;
      if (rho < r_dom_) return NodeRole::active;
      return rho < r_dom_ + kGhost * h_ ? NodeRole::rim : NodeRole::outside;
    }
    case DomainShape::half_strip:
      if (j < 0) return NodeRole::mirror;
      if (j >= n_) return NodeRole::rim;
      if (i < -n_ || i >= n_) return NodeRole::periodic;
      return NodeRole::active;
  }
  return NodeRole::outside;
}

void Grid::ghost_source(int i, int j, int& si, int& sj) const noexcept {
  si = i;
  sj = j;
  if (shape_ != DomainShape::disk && sj < 0) sj = -sj;
  if (shape_ == DomainShape::half_strip && sj < n_) {
    if (si < -n_) si += 2 * n_;
    if (si >= n_) si -= 2 * n_;
  }
}

bool Grid::has_stencil(int i, int j) const noexcept {
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      if (role(i + a, j + b) == NodeRole::outside) return false;
  return true;
}

bool Grid::in_domain(double a, double b) const noexcept {
  switch (shape_) {
    case DomainShape::disk: return std::hypot(a, b) < r_dom_;
    case DomainShape::half_disk: return b >= 0.0 && std::hypot(a, b) < r_dom_;
    case DomainShape::half_strip: return b >= 0.0 && b < r_dom_;
  }
  return false;
}

}  // namespace mcflab
