#include <cmath>
#include <limits>

#include "bdem/error.hpp"
#include "bdem/manifold_solver.hpp"

namespace bdem {
namespace {

// f + sum λ_e C_e + 1/2 κ sum C_e^2 in ambient coordinates.
Evaluation evaluate_constrained(const Objective& objective, const VectorXd& x, const VectorXd& lambda,
                                double kappa, EvalLevel level) {
  Evaluation ev = objective.evaluate(x, level);
  const int n = objective.element_count();
  for (int e = 0; e < n; ++e) {
    if (objective.fixed(e)) continue;
    const Vec4 q = x.segment<4>(kPoseDim * e + 3);
    const double c = 0.5 * (q.squaredNorm() - 1.0);
    const double lam = lambda.size() ? lambda[e] : 0.0;
    ev.value += lam * c + 0.5 * kappa * c * c;
    if (level == EvalLevel::kValue) continue;
    const double w = lam + kappa * c;
    ev.grad.segment<4>(kPoseDim * e + 3) += w * q;
    if (level == EvalLevel::kHessian) {
      LocalTerm t;
      t.a = e;
      t.grad = VectorXd::Zero(kPoseDim);
      t.grad.tail<4>() = w * q;
      t.hess = MatrixXd::Zero(kPoseDim, kPoseDim);
      t.hess.bottomRightCorner<4, 4>() = kappa * q * q.transpose() + w * Mat4::Identity();
      ev.terms.push_back(std::move(t));
    }
  }
  return ev;
}

VectorXd projected_objective_gradient(const Objective& objective, const VectorXd& x,
                                      const std::vector<bool>& fixed) {
  const Evaluation ev = objective.evaluate(x, EvalLevel::kGradient);
  return riemannian_gradient(x, ev.grad, &fixed);
}

BlockSparseMatrix assemble_ambient(const Evaluation& ev, const std::vector<bool>& fixed) {
  const int n = static_cast<int>(fixed.size());
  BlockSparseMatrix m(n, kPoseDim);
  for (const LocalTerm& t : ev.terms) {
    const MatrixXd h = spd_project(t.hess);
    const int k = t.b < 0 ? 1 : 2;
    for (int r = 0; r < k; ++r) {
      const int er = r == 0 ? t.a : t.b;
      if (fixed[er]) continue;
      for (int c = 0; c < k; ++c) {
        const int ec = c == 0 ? t.a : t.b;
        if (fixed[ec]) continue;
        m.add_block(er, ec, h.block(kPoseDim * r, kPoseDim * c, kPoseDim, kPoseDim));
      }
    }
  }
  for (int e = 0; e < n; ++e) {
    if (fixed[e]) m.add_block(e, e, MatrixXd::Identity(kPoseDim, kPoseDim));
  }
  m.finalize();
  return m;
}

void zero_fixed(VectorXd& v, const std::vector<bool>& fixed) {
  for (std::size_t e = 0; e < fixed.size(); ++e) {
    if (fixed[e]) v.segment<kPoseDim>(kPoseDim * static_cast<Eigen::Index>(e)).setZero();
  }
}

bool finite_unified(const SolveResult& r) { return std::isfinite(r.grad_norm) && std::isfinite(r.constraint_norm); }

// Records the unified metric |P grad f|, |C| for iterate x and reports
// whether it meets both tolerances.
bool record(SolveResult& res, const Objective& objective, const VectorXd& x, const std::vector<bool>& fixed,
            int it, const SolverOptions& options, int pcg_its, double step) {
  const VectorXd g = projected_objective_gradient(objective, x, fixed);
  IterationRecord rec;
  rec.iteration = it;
  rec.f = objective.evaluate(x, EvalLevel::kValue).value;
  rec.grad_norm = g.norm();
  rec.constraint_norm = constraint_norm(x);
  rec.pcg_iterations = pcg_its;
  rec.step = step;
  res.trace.push_back(rec);
  res.f = rec.f;
  res.grad_norm = rec.grad_norm;
  res.constraint_norm = rec.constraint_norm;
  res.max_unit_violation = std::max(res.max_unit_violation, max_unit_violation(x));
  return finite_unified(res) && rec.grad_norm < options.tolerance &&
         rec.constraint_norm < options.constraint_tolerance;
}

// One ambient Newton iteration on f + λ^T C + κ/2 |C|^2 with backtracking.
// Returns false when no descent step could be taken.
bool ambient_newton_step(const Objective& objective, VectorXd& x, const VectorXd& lambda, double kappa,
                         const std::vector<bool>& fixed, const SolverOptions& options, int& pcg_its,
                         double& step, double& merit_grad) {
  const Evaluation ev = evaluate_constrained(objective, x, lambda, kappa, EvalLevel::kHessian);
  VectorXd g = ev.grad;
  zero_fixed(g, fixed);
  merit_grad = g.norm();
  const BlockSparseMatrix h = assemble_ambient(ev, fixed);
  const BlockJacobiPreconditioner pre(kPoseDim, h.diagonal_blocks());
  PcgOptions po;
  po.relative_tolerance = relative_tolerance(merit_grad);
  po.max_iterations = options.pcg_max_iterations;
  const PcgResult sol = pcg([&](const VectorXd& v, VectorXd& y) { h.apply(v, y); }, -g, pre, po);
  pcg_its = sol.iterations;
  VectorXd dx = sol.x;
  if (!dx.allFinite() || !(g.dot(dx) < 0.0)) dx = -g;
  const double slope = g.dot(dx);
  const double noise = 1e-12 * std::abs(ev.value);
  double alpha = 1.0;
  while (alpha >= options.min_step) {
    const VectorXd trial = x + alpha * dx;
    const double f = evaluate_constrained(objective, trial, lambda, kappa, EvalLevel::kValue).value;
    if (std::isfinite(f) &&
        (f <= ev.value + options.armijo * alpha * slope || (-alpha * slope < noise && f <= ev.value + noise))) {
      x = trial;
      step = alpha;
      return true;
    }
    alpha *= options.shrink;
  }
  return false;
}

}  // namespace

SolveResult solve_penalty(const Objective& objective, const VectorXd& x0, const SolverOptions& options) {
  const std::vector<bool> fixed = fixed_mask(objective);
  SolveResult res;
  res.x = x0;
  const VectorXd no_lambda;
  double best = std::numeric_limits<double>::infinity();
  VectorXd best_x = x0;
  double best_c = constraint_norm(x0);
  for (int it = 0;; ++it) {
    if (record(res, objective, res.x, fixed, it, options, 0, 0.0)) {
      res.converged = true;
      break;
    }
    if (res.grad_norm < best) {
      best = res.grad_norm;
      best_x = res.x;
      best_c = res.constraint_norm;
    }
    if (it >= options.max_iterations) {
      res.message = "penalty: tolerance not reached";
      break;
    }
    int pcg_its = 0;
    double step = 0.0, merit = 0.0;
    if (!ambient_newton_step(objective, res.x, no_lambda, options.penalty, fixed, options, pcg_its, step, merit)) {
      res.message = "penalty: stalled at the penalized minimizer";
      break;
    }
    res.trace.back().pcg_iterations = pcg_its;
    res.trace.back().step = step;
    res.pcg_iterations += pcg_its;
    res.iterations = it + 1;
  }
  if (!res.converged) {
    // Report the best iterate in the unified metric.
    res.x = best_x;
    res.grad_norm = best;
    res.constraint_norm = best_c;
  }
  return res;
}

SolveResult solve_augmented(const Objective& objective, const VectorXd& x0, const SolverOptions& options) {
  const std::vector<bool> fixed = fixed_mask(objective);
  const int n = objective.element_count();
  SolveResult res;
  res.x = x0;
  VectorXd lambda = VectorXd::Zero(n);
  int inner = 0;
  for (int it = 0;; ++it) {
    if (record(res, objective, res.x, fixed, it, options, 0, 0.0)) {
      res.converged = true;
      break;
    }
    if (it >= options.max_iterations) {
      res.message = "augmented: tolerance not reached";
      break;
    }
    int pcg_its = 0;
    double step = 0.0, merit = 0.0;
    const bool moved = ambient_newton_step(objective, res.x, lambda, options.penalty, fixed, options, pcg_its, step, merit);
    res.trace.back().pcg_iterations = pcg_its;
    res.trace.back().step = step;
    res.pcg_iterations += pcg_its;
    res.iterations = it + 1;
    ++inner;
    // Outer multiplier update once the inner problem is solved or stalls.
    const VectorXd g = evaluate_constrained(objective, res.x, lambda, options.penalty, EvalLevel::kGradient).grad;
    VectorXd gf = g;
    zero_fixed(gf, fixed);
    if (!moved || gf.norm() < options.tolerance || inner >= 20) {
      for (int e = 0; e < n; ++e) {
        if (!fixed[e]) lambda[e] += options.penalty * constraint_value(orientation_of(res.x, e));
      }
      inner = 0;
    }
  }
  return res;
}

SolveResult solve_lagrange(const Objective& objective, const VectorXd& x0, const SolverOptions& options) {
  const std::vector<bool> fixed = fixed_mask(objective);
  const int n = objective.element_count();
  const int nx = kPoseDim * n;
  SolveResult res;
  res.x = x0;
  // Least-squares multiplier estimate λ = -q^T grad_q f / |q|^2.
  VectorXd lambda = VectorXd::Zero(n);
  {
    const Evaluation ev = objective.evaluate(x0, EvalLevel::kGradient);
    for (int e = 0; e < n; ++e) {
      if (fixed[e]) continue;
      const Vec4 q = x0.segment<4>(kPoseDim * e + 3);
      lambda[e] = -q.dot(ev.grad.segment<4>(kPoseDim * e + 3)) / q.squaredNorm();
    }
  }
  for (int it = 0;; ++it) {
    if (record(res, objective, res.x, fixed, it, options, 0, 0.0)) {
      res.converged = true;
      break;
    }
    if (it >= options.max_iterations) {
      res.message = "lagrange: tolerance not reached";
      break;
    }
    if (!res.x.allFinite()) {
      res.message = "lagrange: diverged";
      break;
    }
    const Evaluation ev = evaluate_constrained(objective, res.x, lambda, 0.0, EvalLevel::kHessian);
    MatrixXd kkt = MatrixXd::Zero(nx + n, nx + n);
    VectorXd rhs = VectorXd::Zero(nx + n);
    for (const LocalTerm& t : ev.terms) {
      const MatrixXd& h = t.hess;
      const int k = t.b < 0 ? 1 : 2;
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) {
          const int er = r == 0 ? t.a : t.b;
          const int ec = c == 0 ? t.a : t.b;
          kkt.block<kPoseDim, kPoseDim>(kPoseDim * er, kPoseDim * ec) += h.block<kPoseDim, kPoseDim>(kPoseDim * r, kPoseDim * c);
        }
    }
    rhs.head(nx) = -ev.grad;
    for (int e = 0; e < n; ++e) {
      const int row = nx + e;
      if (fixed[e]) {
        kkt.block(kPoseDim * e, 0, kPoseDim, nx + n).setZero();
        kkt.block(0, kPoseDim * e, nx + n, kPoseDim).setZero();
        kkt.block<kPoseDim, kPoseDim>(kPoseDim * e, kPoseDim * e).setIdentity();
        rhs.segment<kPoseDim>(kPoseDim * e).setZero();
        kkt(row, row) = 1.0;
        continue;
      }
      const Vec4 q = res.x.segment<4>(kPoseDim * e + 3);
      kkt.block<1, 4>(row, kPoseDim * e + 3) = q.transpose();
      kkt.block<4, 1>(kPoseDim * e + 3, row) = q;
      rhs[row] = -constraint_value(Quat(q));
    }
    const VectorXd sol = Eigen::PartialPivLU<MatrixXd>(kkt).solve(rhs);
    res.x += sol.head(nx);
    lambda += sol.tail(n);
    res.trace.back().step = 1.0;
    res.iterations = it + 1;
  }
  return res;
}

}  // namespace bdem
