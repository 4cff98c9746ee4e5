#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bdem/sparse_linear.hpp"

namespace bdem {
namespace {

MatrixXd random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = g(rng);
  }
  return a * a.transpose() + 0.1 * MatrixXd::Identity(n, n);
}

BlockSparseMatrix tridiagonal_blocks(int n, int bs, std::mt19937_64& rng) {
  BlockSparseMatrix m(n, bs);
  std::normal_distribution<double> g(0.0, 0.1);
  for (int i = 0; i < n; ++i) {
    m.add_block(i, i, 4.0 * MatrixXd::Identity(bs, bs) + 0.1 * random_spd(bs, rng));
    if (i + 1 < n) {
      MatrixXd off(bs, bs);
      for (int r = 0; r < bs; ++r) {
        for (int c = 0; c < bs; ++c) off(r, c) = g(rng);
      }
      m.add_block(i, i + 1, off);
      m.add_block(i + 1, i, off.transpose());
    }
  }
  m.finalize();
  return m;
}

TEST(SparseLinear, BlockMatrixApplyMatchesDense) {
  std::mt19937_64 rng(11);
  const BlockSparseMatrix m = tridiagonal_blocks(10, 6, rng);
  const MatrixXd dense = m.to_dense();
  EXPECT_LT((dense - dense.transpose()).norm(), 1e-14);
  const VectorXd x = VectorXd::LinSpaced(60, -1.0, 2.0);
  VectorXd y;
  m.apply(x, y);
  EXPECT_LT((y - dense * x).norm(), 1e-12);
  EXPECT_LT((MatrixXd(m.to_sparse()) - dense).norm(), 1e-14);
  EXPECT_EQ(m.nonzero_blocks(), 28u);
}

TEST(SparseLinear, AddAfterFinalizeThrows) {
  BlockSparseMatrix m(2, 3);
  m.add_block(0, 0, MatrixXd::Identity(3, 3));
  m.finalize();
  EXPECT_THROW(m.add_block(1, 1, MatrixXd::Identity(3, 3)), std::exception);
}

TEST(SparseLinear, PcgMatchesDenseSolveOnRandomSpd) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const MatrixXd a = random_spd(50, rng);
    const VectorXd b = VectorXd::Random(50);
    const VectorXd exact = a.ldlt().solve(b);
    PcgOptions o;
    o.relative_tolerance = 1e-10;
    o.max_iterations = 500;
    o.record_history = true;
    const PcgResult r = pcg([&](const VectorXd& x, VectorXd& y) { y = a * x; }, b, IdentityPreconditioner{}, o);
    EXPECT_TRUE(r.converged);
    EXPECT_LE((a * r.x - b).norm(), 1e-10 * b.norm() * 1.0000001);
    EXPECT_LT((r.x - exact).norm() / exact.norm(), 1e-6);
    for (std::size_t k = 1; k < r.energy_history.size(); ++k) {
      EXPECT_LE(r.energy_history[k], r.energy_history[k - 1] + 1e-12 * std::abs(r.energy_history[k - 1]));
    }
  }
}

TEST(SparseLinear, PreconditionersReduceIterations) {
  std::mt19937_64 rng(13);
  const BlockSparseMatrix m = tridiagonal_blocks(40, 6, rng);
  const VectorXd b = VectorXd::Ones(m.rows());
  const LinearApply apply = [&](const VectorXd& x, VectorXd& y) { m.apply(x, y); };
  PcgOptions o;
  o.relative_tolerance = 1e-10;
  const PcgResult plain = pcg(apply, b, IdentityPreconditioner{}, o);
  const PcgResult jacobi = pcg(apply, b, *make_preconditioner(PreconditionerKind::kBlockJacobi, m), o);
  const PcgResult chol = pcg(apply, b, *make_preconditioner(PreconditionerKind::kCholesky, m), o);
  EXPECT_TRUE(plain.converged && jacobi.converged && chol.converged);
  EXPECT_LE(jacobi.iterations, plain.iterations);
  EXPECT_LE(chol.iterations, 2);
}

TEST(SparseLinear, ZeroRightHandSide) {
  const MatrixXd a = MatrixXd::Identity(4, 4);
  const PcgResult r = pcg([&](const VectorXd& x, VectorXd& y) { y = a * x; }, VectorXd::Zero(4),
                          IdentityPreconditioner{}, PcgOptions{});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.x.norm(), 0.0);
}

TEST(SparseLinear, ForcingTerm) {
  EXPECT_DOUBLE_EQ(relative_tolerance(100.0), 0.5);
  EXPECT_NEAR(relative_tolerance(0.04), 0.2, 1e-16);
  EXPECT_DOUBLE_EQ(relative_tolerance(0.0), 0.0);
}

TEST(SparseLinear, PreconditionerNames) {
  for (PreconditionerKind k :
       {PreconditionerKind::kBlockJacobi, PreconditionerKind::kIncompleteCholesky, PreconditionerKind::kCholesky}) {
    EXPECT_EQ(parse_preconditioner(to_string(k)), k);
  }
  EXPECT_THROW(parse_preconditioner("amg"), std::exception);
}

}  // namespace
}  // namespace bdem
