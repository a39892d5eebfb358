#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mcflab {

/// Parameter domain of a graph surface in the (y1, y2) chart plane.
///  half_disk: |y| < r_dom, y2 ≥ 0 with the free boundary on y2 = 0
///  disk:      |y| < r_dom, no free boundary
///  half_strip: y1 periodic with period 2 r_dom, 0 ≤ y2 < r_dom
enum class DomainShape { half_disk, disk, half_strip };

enum class NodeRole : std::uint8_t { outside, active, rim, mirror, periodic };

const char* to_string(DomainShape shape) noexcept;

class Grid {
 public:
  static constexpr int kGhost = 3;

  Grid() = default;
  /// r_dom must be an integer multiple of h (relative slack 1e-9).
  Grid(DomainShape shape, double h, double r_dom);

  DomainShape shape() const noexcept { return shape_; }
  double h() const noexcept { return h_; }
  double r_dom() const noexcept { return r_dom_; }
  int n() const noexcept { return n_; }
  int lo() const noexcept { return -n_ - kGhost; }
  int hi() const noexcept { return n_ + kGhost; }
  int width() const noexcept { return 2 * (n_ + kGhost) + 1; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(width()) * width(); }
  bool has_free_boundary() const noexcept { return shape_ != DomainShape::disk; }

  bool contains(int i, int j) const noexcept { return i >= lo() && i <= hi() && j >= lo() && j <= hi(); }
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(i - lo()) * width() + static_cast<std::size_t>(j - lo());
  }
  int i_of(std::size_t k) const noexcept { return static_cast<int>(k / width()) + lo(); }
  int j_of(std::size_t k) const noexcept { return static_cast<int>(k % width()) + lo(); }
  double y1(int i) const noexcept { return i * h_; }
  double y2(int j) const noexcept { return j * h_; }

  NodeRole role(int i, int j) const noexcept {
    return contains(i, j) ? roles_[index(i, j)] : NodeRole::outside;
  }
  NodeRole role(std::size_t k) const noexcept { return roles_[k]; }

  /// Source node of a mirror or periodic ghost.
  void ghost_source(int i, int j, int& si, int& sj) const noexcept;

  /// Area of the node's cell [y ± h/2]² intersected with the domain.
  double cell_area(int i, int j) const noexcept { return areas_[index(i, j)]; }
  double cell_area(std::size_t k) const noexcept { return areas_[k]; }

  /// True when all eight neighbours carry values (any role but outside).
  bool has_stencil(int i, int j) const noexcept;

  bool in_domain(double y1, double y2) const noexcept;

 private:
  NodeRole classify(int i, int j) const noexcept;

  DomainShape shape_ = DomainShape::half_disk;
  double h_ = 0.0;
  double r_dom_ = 0.0;
  int n_ = 0;
  std::vector<NodeRole> roles_;
  std::vector<double> areas_;
};

/// Area of the rectangle [x0, x1] × [y0, y1] intersected with the disk of
/// radius r centred at the origin.
double rect_disk_area(double x0, double x1, double y0, double y1, double r);

}  // namespace mcflab
