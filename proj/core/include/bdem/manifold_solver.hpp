#pragma once

#include <string>
#include <vector>

#include "bdem/model.hpp"
#include "bdem/sparse_linear.hpp"

namespace bdem {

/// grad_p f = grad_p f̄, grad_q f = (I - q q^T) grad_q f̄. Rows of fixed
/// elements are zeroed when `fixed` is given.
VectorXd riemannian_gradient(const VectorXd& x, const VectorXd& euclid_grad,
                             const std::vector<bool>* fixed = nullptr);

/// Symmetric Riemannian Hessian as a sum of local blocks in ambient
/// coordinates. Each block is P H P - (q^T g_q) P per quaternion, using the
/// block's own gradient so the curvature correction sums to the global one.
class TangentOperator {
 public:
  TangentOperator(int element_count, std::vector<LocalTerm> blocks);

  int element_count() const { return n_; }
  const std::vector<LocalTerm>& blocks() const { return blocks_; }
  void apply(const VectorXd& x, VectorXd& y) const;
  MatrixXd to_dense() const;

 private:
  int n_;
  std::vector<LocalTerm> blocks_;
};

TangentOperator riemannian_hessian(const VectorXd& x, const std::vector<LocalTerm>& euclid_terms);

/// Eigenvalues of a symmetric block clamped to >= 0.
MatrixXd spd_project(const MatrixXd& block);

/// Per-element map from ambient to reduced coordinates, blockdiag(I3, G(q)).
Eigen::Matrix<double, kTangentDim, kPoseDim> reduction_map(const Quat& q);

/// G H G^T y = G b in 6 unknowns per element; fixed elements get an identity
/// block and a zero right-hand side.
struct ReducedSystem {
  BlockSparseMatrix matrix{0, kTangentDim};
  VectorXd rhs;
  std::vector<Eigen::Matrix<double, kTangentDim, kPoseDim>> maps;

  /// Δx = G^T y.
  VectorXd recover(const VectorXd& y) const;
  /// z = G b.
  VectorXd reduce(const VectorXd& b) const;
};

ReducedSystem nullspace_reduce(const VectorXd& x, const TangentOperator& hess, const VectorXd& b,
                               const std::vector<bool>& fixed, bool project_spd = true);

/// Which linear system a Newton iteration solves.
enum class LinearPath {
  kReduced,    // 6 unknowns per element
  kProjector,  // 7 unknowns per element with (I - q q^T) projectors
};

struct SolverOptions {
  double tolerance = 1e-6;  // on |grad f|
  int max_iterations = 100;
  double armijo = 1e-4;
  double shrink = 0.5;
  double min_step = 1e-12;
  LinearPath path = LinearPath::kReduced;
  int pcg_max_iterations = 2000;
  PreconditionerKind preconditioner = PreconditionerKind::kBlockJacobi;
  bool record_directions = false;
  bool record_pcg_history = false;
  /// Baseline penalty weight.
  double penalty = 1e4;
  /// Feasibility required of the baselines before they count as converged.
  double constraint_tolerance = 1e-8;
};

struct IterationRecord {
  int iteration = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double constraint_norm = 0.0;
  int pcg_iterations = 0;
  double pcg_residual = 0.0;
  double pcg_tolerance = 0.0;
  double step = 0.0;
};

struct SolveResult {
  VectorXd x;
  bool converged = false;
  int iterations = 0;
  int pcg_iterations = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double constraint_norm = 0.0;
  /// max |‖q‖ - 1| over every point the solver evaluated.
  double max_unit_violation = 0.0;
  int gradient_fallbacks = 0;
  std::vector<IterationRecord> trace;
  std::vector<VectorXd> directions;  // ambient Newton directions, if recorded
  std::vector<VectorXd> iterates;    // points at which those directions were computed
  std::vector<std::vector<double>> pcg_energy_histories;
  std::string message;
};

/// Geodesic update x ⊕ α Δx followed by normalization of every quaternion.
VectorXd retract(const VectorXd& x, const VectorXd& dx, double alpha, const std::vector<bool>& fixed);

struct LineSearchResult {
  bool success = false;
  double alpha = 0.0;
  VectorXd x;
  double f = 0.0;
  int evaluations = 0;
  double max_unit_violation = 0.0;
};

/// Backtracking from alpha0 with the Armijo condition.
LineSearchResult line_search(const Objective& objective, const VectorXd& x, double f0, const VectorXd& grad,
                             const VectorXd& dx, double alpha0, const SolverOptions& options);

/// sqrt(sum C(q)^2) with C = 1/2 (q^T q - 1).
double constraint_norm(const VectorXd& x);
double max_unit_violation(const VectorXd& x);

std::vector<bool> fixed_mask(const Objective& objective);

struct DirectionResult {
  VectorXd dx;
  int pcg_iterations = 0;
  double relative_residual = 0.0;
};

/// The Newton direction solve_second_order takes at x, on options.path.
DirectionResult second_order_direction(const Objective& objective, const VectorXd& x, const SolverOptions& options);

/// Riemannian gradient descent with geodesic line search.
SolveResult solve_first_order(const Objective& objective, const VectorXd& x0, const SolverOptions& options);

/// Riemannian Newton with SPD projection, PCG and geodesic line search.
SolveResult solve_second_order(const Objective& objective, const VectorXd& x0, const SolverOptions& options);

/// Ambient Newton on f + 1/2 κ |C|^2.
SolveResult solve_penalty(const Objective& objective, const VectorXd& x0, const SolverOptions& options);
/// Ambient Newton on the KKT system of f + λ^T C, dense direct solve.
SolveResult solve_lagrange(const Objective& objective, const VectorXd& x0, const SolverOptions& options);
/// Ambient Newton on f + λ^T C + 1/2 κ |C|^2 with multiplier updates λ += κ C.
SolveResult solve_augmented(const Objective& objective, const VectorXd& x0, const SolverOptions& options);

}  // namespace bdem
