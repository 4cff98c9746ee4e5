#include "bdem/manifold_solver.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "bdem/error.hpp"

namespace bdem {
namespace {

using ReductionMap = Eigen::Matrix<double, kTangentDim, kPoseDim>;

Mat4 tangent_projector(const Quat& q) {
  const Vec4 c = q.coeffs();
  return Mat4::Identity() - c * c.transpose() / c.squaredNorm();
}

// Number of elements a local term touches.
int arity(const LocalTerm& t) { return t.b < 0 ? 1 : 2; }

int element_of(const LocalTerm& t, int slot) { return slot == 0 ? t.a : t.b; }

// Applies T_a ⊕ T_b to an ambient local block: R = T H T^T.
MatrixXd reduce_block(const MatrixXd& h, const std::vector<ReductionMap>& maps, const LocalTerm& t) {
  const int k = arity(t);
  MatrixXd tmat = MatrixXd::Zero(kTangentDim * k, kPoseDim * k);
  for (int s = 0; s < k; ++s) tmat.block<kTangentDim, kPoseDim>(kTangentDim * s, kPoseDim * s) = maps[element_of(t, s)];
  return tmat * h * tmat.transpose();
}

MatrixXd lift_block(const MatrixXd& r, const std::vector<ReductionMap>& maps, const LocalTerm& t) {
  const int k = arity(t);
  MatrixXd tmat = MatrixXd::Zero(kTangentDim * k, kPoseDim * k);
  for (int s = 0; s < k; ++s) tmat.block<kTangentDim, kPoseDim>(kTangentDim * s, kPoseDim * s) = maps[element_of(t, s)];
  return tmat.transpose() * r * tmat;
}

// Scatters a local block of dimension bs*k into a global block matrix,
// skipping rows and columns of fixed elements.
void scatter_block(BlockSparseMatrix& m, const MatrixXd& local, const LocalTerm& t, int bs,
                   const std::vector<bool>& fixed) {
  const int k = arity(t);
  for (int r = 0; r < k; ++r) {
    const int er = element_of(t, r);
    if (fixed[er]) continue;
    for (int c = 0; c < k; ++c) {
      const int ec = element_of(t, c);
      if (fixed[ec]) continue;
      m.add_block(er, ec, local.block(bs * r, bs * c, bs, bs));
    }
  }
}

// Preconditioner for the projector system: T^T B^-1 T with B^-1 the reduced
// preconditioner, so its iterates are the lifted iterates of the reduced system.
class LiftedPreconditioner final : public Preconditioner {
 public:
  LiftedPreconditioner(const std::vector<ReductionMap>& maps, std::unique_ptr<Preconditioner> inner)
      : maps_(maps), inner_(std::move(inner)) {}

  void apply(const VectorXd& r, VectorXd& z) const override {
    const int n = static_cast<int>(maps_.size());
    VectorXd r6(kTangentDim * n), z6;
    for (int e = 0; e < n; ++e) r6.segment<kTangentDim>(kTangentDim * e) = maps_[e] * r.segment<kPoseDim>(kPoseDim * e);
    inner_->apply(r6, z6);
    z.resize(r.size());
    for (int e = 0; e < n; ++e) {
      z.segment<kPoseDim>(kPoseDim * e) = maps_[e].transpose() * z6.segment<kTangentDim>(kTangentDim * e);
    }
  }

 private:
  std::vector<ReductionMap> maps_;
  std::unique_ptr<Preconditioner> inner_;
};

struct NewtonDirection {
  VectorXd dx;
  PcgResult pcg;
  double tolerance = 0.0;
};

NewtonDirection newton_direction(const VectorXd& x, const Evaluation& eval, const VectorXd& grad,
                                 const std::vector<bool>& fixed, const SolverOptions& options) {
  const int n = static_cast<int>(fixed.size());
  const TangentOperator hess = riemannian_hessian(x, eval.terms);
  const VectorXd b = -grad;
  ReducedSystem sys = nullspace_reduce(x, hess, b, fixed);

  NewtonDirection out;
  out.tolerance = relative_tolerance(grad.norm());
  PcgOptions po;
  po.relative_tolerance = out.tolerance;
  po.max_iterations = options.pcg_max_iterations;
  po.record_history = options.record_pcg_history;

  if (options.path == LinearPath::kReduced) {
    const auto pre = make_preconditioner(options.preconditioner, sys.matrix);
    out.pcg = pcg([&](const VectorXd& v, VectorXd& y) { sys.matrix.apply(v, y); }, sys.rhs, *pre, po);
    out.dx = sys.recover(out.pcg.x);
    return out;
  }

  // Projector form: lift every clamped reduced block back to ambient coordinates.
  BlockSparseMatrix full(n, kPoseDim);
  for (const LocalTerm& t : hess.blocks()) {
    const MatrixXd r = spd_project(reduce_block(t.hess, sys.maps, t));
    scatter_block(full, lift_block(r, sys.maps, t), t, kPoseDim, fixed);
  }
  for (int e = 0; e < n; ++e) {
    if (fixed[e]) full.add_block(e, e, MatrixXd::Identity(kPoseDim, kPoseDim));
  }
  full.finalize();
  VectorXd rhs = b;
  for (int e = 0; e < n; ++e) {
    if (fixed[e]) rhs.segment<kPoseDim>(kPoseDim * e).setZero();
  }
  const LiftedPreconditioner pre(sys.maps, make_preconditioner(options.preconditioner, sys.matrix));
  out.pcg = pcg([&](const VectorXd& v, VectorXd& y) { full.apply(v, y); }, rhs, pre, po);
  out.dx = out.pcg.x;
  for (int e = 0; e < n; ++e) {
    if (fixed[e]) out.dx.segment<kPoseDim>(kPoseDim * e).setZero();
  }
  return out;
}

}  // namespace

VectorXd riemannian_gradient(const VectorXd& x, const VectorXd& euclid_grad, const std::vector<bool>* fixed) {
  const int n = static_cast<int>(x.size() / kPoseDim);
  VectorXd g = euclid_grad;
  for (int e = 0; e < n; ++e) {
    if (fixed && (*fixed)[e]) {
      g.segment<kPoseDim>(kPoseDim * e).setZero();
      continue;
    }
    const Quat q = orientation_of(x, e);
    g.segment<4>(kPoseDim * e + 3) = project_tangent(q, euclid_grad.segment<4>(kPoseDim * e + 3));
  }
  return g;
}

TangentOperator::TangentOperator(int element_count, std::vector<LocalTerm> blocks)
    : n_(element_count), blocks_(std::move(blocks)) {}

void TangentOperator::apply(const VectorXd& x, VectorXd& y) const {
  y = VectorXd::Zero(x.size());
  for (const LocalTerm& t : blocks_) {
    const int k = arity(t);
    VectorXd local(kPoseDim * k);
    for (int s = 0; s < k; ++s) local.segment<kPoseDim>(kPoseDim * s) = x.segment<kPoseDim>(kPoseDim * element_of(t, s));
    const VectorXd out = t.hess * local;
    for (int s = 0; s < k; ++s) y.segment<kPoseDim>(kPoseDim * element_of(t, s)) += out.segment<kPoseDim>(kPoseDim * s);
  }
}

MatrixXd TangentOperator::to_dense() const {
  MatrixXd d = MatrixXd::Zero(kPoseDim * n_, kPoseDim * n_);
  for (const LocalTerm& t : blocks_) {
    const int k = arity(t);
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) {
        d.block<kPoseDim, kPoseDim>(kPoseDim * element_of(t, r), kPoseDim * element_of(t, c)) +=
            t.hess.block<kPoseDim, kPoseDim>(kPoseDim * r, kPoseDim * c);
      }
  }
  return d;
}

TangentOperator riemannian_hessian(const VectorXd& x, const std::vector<LocalTerm>& euclid_terms) {
  const int n = static_cast<int>(x.size() / kPoseDim);
  std::vector<LocalTerm> blocks;
  blocks.reserve(euclid_terms.size());
  for (const LocalTerm& t : euclid_terms) {
    const int k = arity(t);
    MatrixXd p = MatrixXd::Identity(kPoseDim * k, kPoseDim * k);
    MatrixXd curvature = MatrixXd::Zero(kPoseDim * k, kPoseDim * k);
    for (int s = 0; s < k; ++s) {
      const Quat q = orientation_of(x, element_of(t, s));
      const Mat4 pq = tangent_projector(q);
      p.block<4, 4>(kPoseDim * s + 3, kPoseDim * s + 3) = pq;
      const double lambda = q.coeffs().dot(t.grad.segment<4>(kPoseDim * s + 3));
      curvature.block<4, 4>(kPoseDim * s + 3, kPoseDim * s + 3) = lambda * pq;
    }
    LocalTerm out = t;
    out.hess = p * t.hess * p - curvature;
    out.hess = 0.5 * (out.hess + out.hess.transpose()).eval();
    blocks.push_back(std::move(out));
  }
  return TangentOperator(n, std::move(blocks));
}

MatrixXd spd_project(const MatrixXd& block) {
  const MatrixXd sym = 0.5 * (block + block.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  const VectorXd& ev = es.eigenvalues();
  if (ev.minCoeff() >= 0.0) return sym;
  return es.eigenvectors() * ev.cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
}

Eigen::Matrix<double, kTangentDim, kPoseDim> reduction_map(const Quat& q) {
  ReductionMap t = ReductionMap::Zero();
  t.topLeftCorner<3, 3>().setIdentity();
  t.bottomRightCorner<3, 4>() = nullspace_left(q);
  return t;
}

VectorXd ReducedSystem::recover(const VectorXd& y) const {
  const int n = static_cast<int>(maps.size());
  VectorXd dx(kPoseDim * n);
  for (int e = 0; e < n; ++e) dx.segment<kPoseDim>(kPoseDim * e) = maps[e].transpose() * y.segment<kTangentDim>(kTangentDim * e);
  return dx;
}

VectorXd ReducedSystem::reduce(const VectorXd& b) const {
  const int n = static_cast<int>(maps.size());
  VectorXd z(kTangentDim * n);
  for (int e = 0; e < n; ++e) z.segment<kTangentDim>(kTangentDim * e) = maps[e] * b.segment<kPoseDim>(kPoseDim * e);
  return z;
}

ReducedSystem nullspace_reduce(const VectorXd& x, const TangentOperator& hess, const VectorXd& b,
                               const std::vector<bool>& fixed, bool project_spd) {
  const int n = hess.element_count();
  ReducedSystem sys;
  sys.maps.reserve(n);
  for (int e = 0; e < n; ++e) sys.maps.push_back(reduction_map(orientation_of(x, e)));
  sys.matrix = BlockSparseMatrix(n, kTangentDim);
  for (const LocalTerm& t : hess.blocks()) {
    MatrixXd r = reduce_block(t.hess, sys.maps, t);
    if (project_spd) r = spd_project(r);
    scatter_block(sys.matrix, r, t, kTangentDim, fixed);
  }
  for (int e = 0; e < n; ++e) {
    if (fixed[e]) sys.matrix.add_block(e, e, MatrixXd::Identity(kTangentDim, kTangentDim));
  }
  sys.matrix.finalize();
  sys.rhs = sys.reduce(b);
  for (int e = 0; e < n; ++e) {
    if (fixed[e]) sys.rhs.segment<kTangentDim>(kTangentDim * e).setZero();
  }
  return sys;
}

VectorXd retract(const VectorXd& x, const VectorXd& dx, double alpha, const std::vector<bool>& fixed) {
  const int n = static_cast<int>(x.size() / kPoseDim);
  VectorXd out = x;
  for (int e = 0; e < n; ++e) {
    if (fixed[e]) continue;
    out.segment<3>(kPoseDim * e) += alpha * dx.segment<3>(kPoseDim * e);
    const Quat q = orientation_of(x, e);
    const Vec4 dq = alpha * project_tangent(q, dx.segment<4>(kPoseDim * e + 3));
    out.segment<4>(kPoseDim * e + 3) = geodesic_step(normalize(q), dq).coeffs();
  }
  return out;
}

double constraint_norm(const VectorXd& x) {
  const int n = static_cast<int>(x.size() / kPoseDim);
  double sum = 0.0;
  for (int e = 0; e < n; ++e) {
    const double c = constraint_value(orientation_of(x, e));
    sum += c * c;
  }
  return std::sqrt(sum);
}

double max_unit_violation(const VectorXd& x) {
  const int n = static_cast<int>(x.size() / kPoseDim);
  double worst = 0.0;
  for (int e = 0; e < n; ++e) worst = std::max(worst, std::abs(x.segment<4>(kPoseDim * e + 3).norm() - 1.0));
  return worst;
}

std::vector<bool> fixed_mask(const Objective& objective) {
  std::vector<bool> mask(objective.element_count());
  for (int e = 0; e < objective.element_count(); ++e) mask[e] = objective.fixed(e);
  return mask;
}

LineSearchResult line_search(const Objective& objective, const VectorXd& x, double f0, const VectorXd& grad,
                             const VectorXd& dx, double alpha0, const SolverOptions& options) {
  const std::vector<bool> fixed = fixed_mask(objective);
  const double slope = grad.dot(dx);
  LineSearchResult res;
  if (!(slope < 0.0)) return res;
  // Decreases below this are invisible in f at double precision.
  const double noise = 1e-12 * (std::abs(f0) + 1e-300);
  double alpha = alpha0;
  while (alpha >= options.min_step) {
    VectorXd trial = retract(x, dx, alpha, fixed);
    const double f = objective.evaluate(trial, EvalLevel::kValue).value;
    ++res.evaluations;
    res.max_unit_violation = std::max(res.max_unit_violation, max_unit_violation(trial));
    const bool armijo = f <= f0 + options.armijo * alpha * slope;
    const bool roundoff = -alpha * slope < noise && f <= f0 + noise;
    if (std::isfinite(f) && (armijo || roundoff)) {
      res.success = true;
      res.alpha = alpha;
      res.x = std::move(trial);
      res.f = f;
      return res;
    }
    alpha *= options.shrink;
  }
  return res;
}

SolveResult solve_first_order(const Objective& objective, const VectorXd& x0, const SolverOptions& options) {
  const std::vector<bool> fixed = fixed_mask(objective);
  SolveResult res;
  res.x = x0;
  res.max_unit_violation = max_unit_violation(x0);
  double alpha_prev = 0.5;
  for (int it = 0;; ++it) {
    const Evaluation eval = objective.evaluate(res.x, EvalLevel::kGradient);
    const VectorXd g = riemannian_gradient(res.x, eval.grad, &fixed);
    res.f = eval.value;
    res.grad_norm = g.norm();
    res.constraint_norm = constraint_norm(res.x);
    IterationRecord rec{it, res.f, res.grad_norm, res.constraint_norm, 0, 0.0, 0.0, 0.0};
    if (res.grad_norm < options.tolerance) {
      res.trace.push_back(rec);
      res.converged = true;
      break;
    }
    if (it >= options.max_iterations) {
      res.trace.push_back(rec);
      res.message = "first-order: max iterations reached";
      break;
    }
    const VectorXd dx = -g;
    if (options.record_directions) {
      res.directions.push_back(dx);
      res.iterates.push_back(res.x);
    }
    const LineSearchResult ls =
        line_search(objective, res.x, res.f, g, dx, std::min(1.0, 2.0 * alpha_prev), options);
    res.max_unit_violation = std::max(res.max_unit_violation, ls.max_unit_violation);
    if (!ls.success) {
      res.trace.push_back(rec);
      res.message = "first-order: line search step underflow";
      break;
    }
    rec.step = ls.alpha;
    res.trace.push_back(rec);
    alpha_prev = ls.alpha;
    res.x = ls.x;
    res.iterations = it + 1;
  }
  return res;
}

DirectionResult second_order_direction(const Objective& objective, const VectorXd& x, const SolverOptions& options) {
  const std::vector<bool> fixed = fixed_mask(objective);
  const Evaluation eval = objective.evaluate(x, EvalLevel::kHessian);
  const VectorXd g = riemannian_gradient(x, eval.grad, &fixed);
  NewtonDirection nd = newton_direction(x, eval, g, fixed, options);
  return {std::move(nd.dx), nd.pcg.iterations, nd.pcg.relative_residual};
}

SolveResult solve_second_order(const Objective& objective, const VectorXd& x0, const SolverOptions& options) {
  const std::vector<bool> fixed = fixed_mask(objective);
  SolveResult res;
  res.x = x0;
  res.max_unit_violation = max_unit_violation(x0);
  for (int it = 0;; ++it) {
    const Evaluation eval = objective.evaluate(res.x, EvalLevel::kHessian);
    const VectorXd g = riemannian_gradient(res.x, eval.grad, &fixed);
    res.f = eval.value;
    res.grad_norm = g.norm();
    res.constraint_norm = constraint_norm(res.x);
    IterationRecord rec{it, res.f, res.grad_norm, res.constraint_norm, 0, 0.0, 0.0, 0.0};
    if (!std::isfinite(res.f) || !std::isfinite(res.grad_norm)) {
      res.trace.push_back(rec);
      res.message = "second-order: non-finite objective";
      break;
    }
    if (res.grad_norm < options.tolerance) {
      res.trace.push_back(rec);
      res.converged = true;
      break;
    }
    if (it >= options.max_iterations) {
      res.trace.push_back(rec);
      res.message = "second-order: max iterations reached (|grad| = " + std::to_string(res.grad_norm) + ")";
      break;
    }

    NewtonDirection nd = newton_direction(res.x, eval, g, fixed, options);
    rec.pcg_iterations = nd.pcg.iterations;
    rec.pcg_residual = nd.pcg.relative_residual;
    rec.pcg_tolerance = nd.tolerance;
    res.pcg_iterations += nd.pcg.iterations;
    if (options.record_pcg_history) res.pcg_energy_histories.push_back(nd.pcg.energy_history);

    VectorXd dx = nd.dx;
    bool fallback = !dx.allFinite() || !(g.dot(dx) < 0.0);
    if (fallback) {
      dx = -g;
      ++res.gradient_fallbacks;
    }
    if (options.record_directions) {
      res.directions.push_back(dx);
      res.iterates.push_back(res.x);
    }
    LineSearchResult ls = line_search(objective, res.x, res.f, g, dx, 1.0, options);
    if (!ls.success && !fallback) {
      ++res.gradient_fallbacks;
      ls = line_search(objective, res.x, res.f, g, -g, 1.0, options);
    }
    res.max_unit_violation = std::max(res.max_unit_violation, ls.max_unit_violation);
    if (!ls.success) {
      res.trace.push_back(rec);
      res.message = "second-order: line search step underflow (|grad| = " + std::to_string(res.grad_norm) + ")";
      break;
    }
    rec.step = ls.alpha;
    res.trace.push_back(rec);
    res.x = std::move(ls.x);
    res.iterations = it + 1;
  }
  return res;
}

}  // namespace bdem
