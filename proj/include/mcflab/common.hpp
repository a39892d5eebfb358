#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace mcflab {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

/// Failure categories shared by every module. The CLI maps them onto exit codes.
enum class ErrorKind {
  chart_out_of_range,
  no_convergence,
  singular_metric,
  ball_exceeds_grid,
  topology_untagged,
  cfl_violation,
  chart_exit,
  non_finite,
  past_singularity,
  reflection_condition_violated,
  insufficient_snapshots,
  precondition,
  time_window,
  empty_window,
  out_of_range,
  empty_region,
  parse_error,
  validation_error,
  io_error,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace mcflab
