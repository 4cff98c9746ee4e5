#pragma once

#include <iosfwd>
#include <vector>

#include "bdem/config.hpp"

namespace bdem {

struct OptimizerRun {
  SolverMethod method = SolverMethod::kSecondOrder;
  SolveResult result;
  int iterations_to_tolerance = -1;  // -1 when never reached
  int best_iteration = 0;            // smallest |grad| in the trace
  double best_constraint = 0.0;      // |C| at that iterate
};

struct OptimizerComparison {
  double tolerance = 0.0;  // absolute |grad| threshold
  std::vector<OptimizerRun> runs;
};

/// Solves the first implicit step of the scene with every method from the
/// same predictor. Each method stops at `tolerance` (relative to the force
/// scale) or after max_iterations.
OptimizerComparison compare_optimizers(const SceneConfig& config, int max_iterations);

/// method,iteration,f,grad_norm,constraint_norm
void write_comparison_csv(std::ostream& out, const OptimizerComparison& comparison);
/// One "method iterations_to_tolerance best_constraint" line per method and the ordering checks.
void write_ordering_summary(std::ostream& out, const OptimizerComparison& comparison);

}  // namespace bdem
