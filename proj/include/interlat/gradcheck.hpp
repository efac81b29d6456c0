#pragma once

#include <string>
#include <vector>

namespace interlat {

struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 1e-4;
  bool passed = false;
};

// Finite-difference validation of every differentiable operation plus the
// composite paths up to the full training objective. `only` keeps the cases
// whose name contains it (all cases when empty). `sabotage` appends a case
// with a deliberately wrong gradient; a healthy harness must report it as
// failed.
std::vector<GradCheckCase> run_grad_checks(const std::string& only = "",
                                           bool sabotage = false);

}  // namespace interlat
