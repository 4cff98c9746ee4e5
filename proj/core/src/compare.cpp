#include "bdem/compare.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <ostream>

namespace bdem {

OptimizerComparison compare_optimizers(const SceneConfig& config, int max_iterations) {
  const Scene scene = build_scene(config);
  const StepContext ctx = StepContext::from_scene(scene, config.dt);
  VectorXd x0 = predict(scene, ctx.x_curr, config.dt);
  for (const PinnedMotion& pin : scene.pins) {
    set_pose(x0, pin.element, pin.position(config.dt), pin.orientation(config.dt));
  }
  const IncrementalPotential phi(scene, ctx, contact_candidates(scene, ctx.x_curr, 0.0));

  SolverOptions options = solver_options(config, scene, config.dt);
  options.max_iterations = max_iterations;

  OptimizerComparison out;
  out.tolerance = options.tolerance;
  for (SolverMethod m : {SolverMethod::kSecondOrder, SolverMethod::kFirstOrder, SolverMethod::kAugmented,
                         SolverMethod::kLagrange, SolverMethod::kPenalty}) {
    OptimizerRun run;
    run.method = m;
    run.result = run_solver(m, phi, x0, options);
    double best = INFINITY;
    for (const IterationRecord& r : run.result.trace) {
      const bool feasible = m == SolverMethod::kFirstOrder || m == SolverMethod::kSecondOrder ||
                            r.constraint_norm < options.constraint_tolerance;
      if (run.iterations_to_tolerance < 0 && r.grad_norm < options.tolerance && feasible) {
        run.iterations_to_tolerance = r.iteration;
      }
      if (r.grad_norm < best) {
        best = r.grad_norm;
        run.best_iteration = r.iteration;
        run.best_constraint = r.constraint_norm;
      }
    }
    out.runs.push_back(std::move(run));
  }
  return out;
}

void write_comparison_csv(std::ostream& out, const OptimizerComparison& c) {
  out << "# bdem-convergence v1\nmethod,iteration,f,grad_norm,constraint_norm\n";
  char line[160];
  for (const OptimizerRun& run : c.runs) {
    for (const IterationRecord& r : run.result.trace) {
      std::snprintf(line, sizeof line, "%s,%d,%.17g,%.17g,%.17g\n", to_string(run.method), r.iteration, r.f,
                    r.grad_norm, r.constraint_norm);
      out << line;
    }
  }
}

void write_ordering_summary(std::ostream& out, const OptimizerComparison& c) {
  char line[200];
  std::snprintf(line, sizeof line, "tolerance %.6e\n", c.tolerance);
  out << line;
  const auto count = [](const OptimizerRun& r) {
    return r.iterations_to_tolerance < 0 ? INFINITY : static_cast<double>(r.iterations_to_tolerance);
  };
  for (const OptimizerRun& r : c.runs) {
    std::snprintf(line, sizeof line, "%-13s iterations_to_tolerance %s  best_grad_iteration %d  best_constraint %.3e\n",
                  to_string(r.method),
                  r.iterations_to_tolerance < 0 ? "not-reached" : std::to_string(r.iterations_to_tolerance).c_str(),
                  r.best_iteration, r.best_constraint);
    out << line;
  }
  const auto find = [&](SolverMethod m) -> const OptimizerRun& {
    for (const OptimizerRun& r : c.runs) {
      if (r.method == m) return r;
    }
    return c.runs.front();
  };
  const double second = count(find(SolverMethod::kSecondOrder));
  const double first = count(find(SolverMethod::kFirstOrder));
  bool baselines_slower = true;
  for (SolverMethod m : {SolverMethod::kAugmented, SolverMethod::kLagrange, SolverMethod::kPenalty}) {
    baselines_slower = baselines_slower && first < count(find(m));
  }
  out << "second-order < first-order: " << (second < first ? "yes" : "no") << '\n'
      << "first-order < every constrained baseline: " << (baselines_slower ? "yes" : "no") << '\n';
}

}  // namespace bdem
