#pragma once

// End-to-end acceptance checks against exact solutions and refinement oracles.

#include <string>
#include <vector>

namespace mcflab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Runs criteria 1–12. `fast` coarsens the grids of checks whose resolution
/// is not part of the criterion itself.
std::vector<CriterionResult> run_acceptance(bool fast = false);

/// One "PASS|FAIL <id> <name> (<seconds>s) <detail>" line per criterion.
std::string format_result(const CriterionResult& r);

}  // namespace mcflab
