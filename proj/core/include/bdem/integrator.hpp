#pragma once

#include <string>
#include <vector>

#include "bdem/manifold_solver.hpp"
#include "bdem/model.hpp"

namespace bdem {

/// Two-point history of one time step.
struct StepContext {
  double dt = 0.0;
  VectorXd x_prev;  // synthesized as x_curr - dt v on the first step
  VectorXd x_curr;
  VectorXd x_hat;   // 2 x_curr - x_prev; quaternion part left unnormalized
  std::vector<double> mass_p;
  std::vector<double> mass_q;

  /// Seeds the history from the scene's current state and velocities.
  static StepContext from_scene(const Scene& scene, double dt);
  static StepContext from_history(const Scene& scene, const VectorXd& x_prev, const VectorXd& x_curr, double dt);
};

/// Stacked rates [v, qdot] per element.
VectorXd velocity_vector(const Scene& scene);

enum class Scheme {
  kRightPoint,  // (1/dt^2) M (x - x̂) + ∇V(x) = 0
  kMidPoint,    // (1/dt^2) M (x - x̂) + 1/2 ∇V((x + x_c)/2) + 1/2 ∇V((x_p + x_c)/2) = 0
};

/// Φ(x) = 1/2 (1/dt^2) (x - x̂)^T M (x - x̂) + V(x) for the right-point rule;
/// the mid-point rule replaces V(x) by V((x + x_c)/2) + 1/2 ∇V((x_p + x_c)/2)^T x.
class IncrementalPotential final : public Objective {
 public:
  IncrementalPotential(const Scene& scene, StepContext ctx, std::vector<ContactPair> candidates,
                       Scheme scheme = Scheme::kRightPoint);

  int element_count() const override { return scene_->element_count(); }
  bool fixed(int e) const override { return scene_->elements[e].pinned; }
  Evaluation evaluate(const VectorXd& x, EvalLevel level) const override;

  const StepContext& context() const { return ctx_; }
  const std::vector<ContactPair>& candidates() const { return candidates_; }

 private:
  const Scene* scene_;
  StepContext ctx_;
  std::vector<ContactPair> candidates_;
  Scheme scheme_;
  VectorXd previous_mid_grad_;  // ∇V((x_p + x_c)/2), mid-point only
};

enum class SolverMethod { kFirstOrder, kSecondOrder, kPenalty, kLagrange, kAugmented };

const char* to_string(SolverMethod m);
SolverMethod parse_solver_method(const std::string& name);

SolveResult run_solver(SolverMethod method, const Objective& objective, const VectorXd& x0,
                       const SolverOptions& options);

/// Initial guess x_n + dt v_n with a geodesic quaternion predictor.
VectorXd predict(const Scene& scene, const VectorXd& x_curr, double dt);

struct StepOutcome {
  VectorXd x_next;
  VectorXd v_next;  // (x_next - x_curr) / dt
  SolveResult solve;
};

StepOutcome step_right_point(const Scene& scene, const StepContext& ctx, const SolverOptions& options,
                             SolverMethod method = SolverMethod::kSecondOrder);
StepOutcome step_mid_point(const Scene& scene, const StepContext& ctx, const SolverOptions& options);
/// x̂ - dt^2 M^-1 ∇V(x_curr) with quaternions renormalized.
VectorXd step_left_point(const Scene& scene, const StepContext& ctx);

struct BrokenBond {
  int bond = -1;
  double sigma = 0.0;
  double tau = 0.0;
  bool by_strain = false;  // plastic strain limit rather than stress
};

struct StableStepOptions {
  SolverMethod method = SolverMethod::kSecondOrder;
  SolverOptions solver;
};

struct StepReport {
  bool converged = false;
  int newton_iterations = 0;
  int pcg_iterations = 0;
  double grad_norm = 0.0;
  double max_unit_violation = 0.0;
  EnergyBreakdown energy;
  std::vector<BrokenBond> broken;
  std::vector<IterationRecord> trace;
  std::string message;
};

/// One step of the stable integrator: predictor, Newton solve, velocity
/// update, friction, bond stress/fracture/plasticity and surface flags.
/// On failure the scene is left untouched.
StepReport stable_step(Scene& scene, double dt, const StableStepOptions& options);

/// Updates bond stresses at the current configuration and applies fracture
/// and plasticity. Returns the bonds broken by this call.
std::vector<BrokenBond> update_bonds(Scene& scene);

}  // namespace bdem
