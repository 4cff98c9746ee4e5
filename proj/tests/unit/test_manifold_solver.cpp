#include <gtest/gtest.h>

#include <random>

#include "bdem/manifold_solver.hpp"

namespace bdem {
namespace {

// f = sum_e 1/2 k |p_e - a_e|^2 - w b_e.q_e, minimized on the manifold at p = a, q = b.
class Toy final : public Objective {
 public:
  Toy(std::vector<Vec3> a, std::vector<Quat> b, double k, double w) : a_(std::move(a)), b_(std::move(b)), k_(k), w_(w) {}

  int element_count() const override { return static_cast<int>(a_.size()); }
  bool fixed(int) const override { return false; }

  Evaluation evaluate(const VectorXd& x, EvalLevel level) const override {
    Evaluation ev;
    ev.grad = VectorXd::Zero(x.size());
    for (int e = 0; e < element_count(); ++e) {
      const Vec3 dp = position_of(x, e) - a_[e];
      const Vec4 q = orientation_of(x, e).coeffs();
      ev.value += 0.5 * k_ * dp.squaredNorm() - w_ * b_[e].coeffs().dot(q);
      ev.grad.segment<3>(kPoseDim * e) = k_ * dp;
      ev.grad.segment<4>(kPoseDim * e + 3) = -w_ * b_[e].coeffs();
      if (level == EvalLevel::kHessian) {
        LocalTerm t;
        t.a = e;
        t.grad = ev.grad.segment<kPoseDim>(kPoseDim * e);
        t.hess = MatrixXd::Zero(kPoseDim, kPoseDim);
        t.hess.topLeftCorner<3, 3>() = k_ * Mat3::Identity();
        ev.terms.push_back(std::move(t));
      }
    }
    return ev;
  }

 private:
  std::vector<Vec3> a_;
  std::vector<Quat> b_;
  double k_;
  double w_;
};

Quat random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Quat(Vec4(n(rng), n(rng), n(rng), n(rng)).normalized());
}

struct Problem {
  Toy toy;
  VectorXd x0;
  VectorXd x_star;
};

Problem make_problem(int n, std::uint64_t seed, double max_angle) {
  std::mt19937_64 rng(seed);
  std::vector<Vec3> a;
  std::vector<Quat> b;
  VectorXd x0(kPoseDim * n), x_star(kPoseDim * n);
  for (int e = 0; e < n; ++e) {
    a.push_back(Vec3::Random());
    b.push_back(random_unit(rng));
    set_pose(x_star, e, a.back(), b.back());
    const Vec3 axis = Vec3::Random().normalized();
    set_pose(x0, e, Vec3::Zero(), normalize(mul(from_axis_angle(axis, max_angle), b.back())));
  }
  return {Toy(a, b, 10.0, 1.0), x0, x_star};
}

SolverOptions options() {
  SolverOptions o;
  o.tolerance = 1e-10;
  o.max_iterations = 200;
  o.record_directions = true;
  return o;
}

TEST(ManifoldSolver, RiemannianGradientIsTangent) {
  std::mt19937_64 rng(3);
  VectorXd x(14), g = VectorXd::Random(14);
  set_pose(x, 0, Vec3::Zero(), random_unit(rng));
  set_pose(x, 1, Vec3::Ones(), random_unit(rng));
  const VectorXd r = riemannian_gradient(x, g);
  for (int e = 0; e < 2; ++e) {
    EXPECT_NEAR(orientation_of(x, e).coeffs().dot(r.segment<4>(kPoseDim * e + 3)), 0.0, 1e-15);
    EXPECT_EQ(r.segment<3>(kPoseDim * e), g.segment<3>(kPoseDim * e));
  }
  const std::vector<bool> fixed{true, false};
  EXPECT_EQ(riemannian_gradient(x, g, &fixed).head<kPoseDim>().norm(), 0.0);
}

TEST(ManifoldSolver, SpdProjectClampsNegativeEigenvalues) {
  MatrixXd a(2, 2);
  a << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  const MatrixXd p = spd_project(a);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(p);
  EXPECT_NEAR(es.eigenvalues()[0], 0.0, 1e-14);
  EXPECT_NEAR(es.eigenvalues()[1], 3.0, 1e-14);
  EXPECT_LT((spd_project(MatrixXd::Identity(3, 3)) - MatrixXd::Identity(3, 3)).norm(), 1e-15);
}

TEST(ManifoldSolver, RetractStaysOnSphere) {
  std::mt19937_64 rng(4);
  VectorXd x(7);
  set_pose(x, 0, Vec3::Zero(), random_unit(rng));
  const VectorXd dx = VectorXd::Random(7);
  const VectorXd y = retract(x, dx, 0.7, {false});
  EXPECT_NEAR(orientation_of(y, 0).norm(), 1.0, 1e-15);
  EXPECT_LT((position_of(y, 0) - 0.7 * dx.head<3>()).norm(), 1e-15);
  EXPECT_EQ(retract(x, dx, 0.7, {true}), x);
}

TEST(ManifoldSolver, StartAtMinimumReturnsImmediately) {
  const Problem p = make_problem(3, 5, 0.0);
  for (const auto& solve : {solve_first_order, solve_second_order}) {
    const SolveResult r = solve(p.toy, p.x_star, options());
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 0);
  }
}

TEST(ManifoldSolver, PositionOnlyQuadraticTakesOneNewtonStep) {
  Problem p = make_problem(4, 6, 0.0);
  for (int e = 0; e < 4; ++e) set_pose(p.x0, e, Vec3::Zero(), orientation_of(p.x_star, e));
  const SolveResult r = solve_second_order(p.toy, p.x0, options());
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 1);
}

TEST(ManifoldSolver, SecondOrderConvergesFeasiblyAndMonotonically) {
  const Problem p = make_problem(5, 7, 1.0);
  const SolveResult r = solve_second_order(p.toy, p.x0, options());
  ASSERT_TRUE(r.converged) << r.message;
  EXPECT_LT((r.x - p.x_star).norm(), 1e-8);
  EXPECT_LT(r.max_unit_violation, 1e-12);
  for (std::size_t k = 1; k < r.trace.size(); ++k) EXPECT_LE(r.trace[k].f, r.trace[k - 1].f);
  for (std::size_t k = 0; k < r.directions.size(); ++k) {
    for (int e = 0; e < 5; ++e) {
      const double qdq = orientation_of(r.iterates[k], e).coeffs().dot(r.directions[k].segment<4>(kPoseDim * e + 3));
      EXPECT_NEAR(qdq, 0.0, 1e-10);
    }
  }
}

TEST(ManifoldSolver, FirstOrderConvergesLinearlyAndSlower) {
  const Problem p = make_problem(1, 8, 0.8);
  SolverOptions o = options();
  o.max_iterations = 5000;
  // A gradient below ~1e-7 moves f by less than its rounding error, which a
  // value-based line search cannot see.
  o.tolerance = 1e-6;
  const SolveResult first = solve_first_order(p.toy, p.x0, o);
  const SolveResult second = solve_second_order(p.toy, p.x0, o);
  ASSERT_TRUE(first.converged) << first.message << " after " << first.iterations;
  ASSERT_TRUE(second.converged) << second.message;
  EXPECT_LT(first.max_unit_violation, 1e-12);
  EXPECT_LT(second.iterations, first.iterations);
  EXPECT_LT((first.x - p.x_star).norm(), 1e-5);
}

TEST(ManifoldSolver, ReducedAndProjectorDirectionsAgree) {
  const Problem p = make_problem(4, 9, 0.6);
  SolverOptions reduced = options();
  reduced.preconditioner = PreconditionerKind::kCholesky;
  SolverOptions projector = reduced;
  projector.path = LinearPath::kProjector;
  const DirectionResult a = second_order_direction(p.toy, p.x0, reduced);
  const DirectionResult b = second_order_direction(p.toy, p.x0, projector);
  EXPECT_LT((a.dx - b.dx).norm(), 1e-8 * a.dx.norm());
}

TEST(Baselines, AugmentedLagrangianReachesFeasibility) {
  const Problem p = make_problem(2, 10, 0.5);
  SolverOptions o = options();
  o.tolerance = 1e-8;
  o.penalty = 10.0;
  const SolveResult r = solve_augmented(p.toy, p.x0, o);
  EXPECT_TRUE(r.converged) << r.message;
  EXPECT_LT(r.constraint_norm, 1e-4);
}

TEST(Baselines, PenaltyStaysInfeasibleForSmallKappa) {
  const Problem p = make_problem(2, 11, 0.5);
  SolverOptions o = options();
  o.penalty = 10.0;
  const SolveResult r = solve_penalty(p.toy, p.x0, o);
  // The penalized minimizer sits at |q|^2 - 1 of order w / kappa.
  EXPECT_GT(r.constraint_norm, 1e-3);
}

}  // namespace
}  // namespace bdem
