#include "mcflab/common.hpp"

namespace mcflab {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::chart_out_of_range: return "chart-out-of-range";
    case ErrorKind::no_convergence: return "no-convergence";
    case ErrorKind::singular_metric: return "singular-metric";
    case ErrorKind::ball_exceeds_grid: return "ball-exceeds-grid";
    case ErrorKind::topology_untagged: return "topology-untagged";
    case ErrorKind::cfl_violation: return "cfl-violation";
    case ErrorKind::chart_exit: return "chart-exit";
    case ErrorKind::non_finite: return "non-finite";
    case ErrorKind::past_singularity: return "past-singularity";
    case ErrorKind::reflection_condition_violated: return "reflection-condition-violated";
    case ErrorKind::insufficient_snapshots: return "insufficient-snapshots";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::time_window: return "time-window";
    case ErrorKind::empty_window: return "empty-window";
    case ErrorKind::out_of_range: return "out-of-range";
    case ErrorKind::empty_region: return "empty-region";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::validation_error: return "validation-error";
    case ErrorKind::io_error: return "io-error";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace mcflab
