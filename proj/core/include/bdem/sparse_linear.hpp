#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace bdem {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// y = A x for a symmetric operator.
using LinearApply = std::function<void(const VectorXd& x, VectorXd& y)>;

class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual void apply(const VectorXd& r, VectorXd& z) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
 public:
  void apply(const VectorXd& r, VectorXd& z) const override { z = r; }
};

/// Inverse of each diagonal block, applied blockwise. Blocks whose
/// factorization fails are replaced by the identity.
class BlockJacobiPreconditioner final : public Preconditioner {
 public:
  BlockJacobiPreconditioner(int block_size, const std::vector<MatrixXd>& diagonal_blocks);

  void apply(const VectorXd& r, VectorXd& z) const override;

  int block_size() const { return block_size_; }
  int fallback_blocks() const { return fallback_blocks_; }
  const std::vector<MatrixXd>& inverses() const { return inverses_; }

 private:
  int block_size_;
  std::vector<MatrixXd> inverses_;
  int fallback_blocks_ = 0;
};

/// Incomplete Cholesky factor of the assembled matrix, a stronger stand-in
/// for a multigrid preconditioner on stiff systems.
class IncompleteCholeskyPreconditioner final : public Preconditioner {
 public:
  explicit IncompleteCholeskyPreconditioner(const Eigen::SparseMatrix<double>& a);
  void apply(const VectorXd& r, VectorXd& z) const override;
  bool ok() const { return ok_; }

 private:
  Eigen::IncompleteCholesky<double, Eigen::Lower, Eigen::AMDOrdering<int>> factor_;
  bool ok_ = false;
};

/// Sparse LDL^T factor of the assembled matrix; PCG then converges in one
/// iteration. Meant for desk-scale systems only.
class CholeskyPreconditioner final : public Preconditioner {
 public:
  explicit CholeskyPreconditioner(const Eigen::SparseMatrix<double>& a);
  void apply(const VectorXd& r, VectorXd& z) const override;
  bool ok() const { return ok_; }

 private:
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> factor_;
  bool ok_ = false;
};

/// Square block-sparse matrix with dense bs x bs blocks in compressed rows.
/// Both triangles are stored so the structure is symmetric.
class BlockSparseMatrix {
 public:
  BlockSparseMatrix(int block_rows, int block_size);

  /// Accumulates into block (i, j). Only valid before finalize().
  void add_block(int i, int j, const MatrixXd& block);
  void finalize();

  int block_rows() const { return n_; }
  int block_size() const { return bs_; }
  int rows() const { return n_ * bs_; }
  std::size_t nonzero_blocks() const { return cols_.size(); }

  void apply(const VectorXd& x, VectorXd& y) const;
  MatrixXd diagonal_block(int i) const;
  std::vector<MatrixXd> diagonal_blocks() const;
  MatrixXd to_dense() const;
  Eigen::SparseMatrix<double> to_sparse() const;

  /// One "row col value" line per stored scalar, 0-based, full precision.
  void write_triplets(std::ostream& out) const;

 private:
  int n_;
  int bs_;
  bool finalized_ = false;
  std::vector<std::unordered_map<int, MatrixXd>> pending_;
  std::vector<int> row_ptr_;
  std::vector<int> cols_;
  std::vector<double> values_;
};

enum class PreconditionerKind { kBlockJacobi, kIncompleteCholesky, kCholesky };

const char* to_string(PreconditionerKind k);
PreconditionerKind parse_preconditioner(const std::string& name);

/// Builds the requested preconditioner, falling back to block Jacobi when a
/// factorization fails.
std::unique_ptr<Preconditioner> make_preconditioner(PreconditionerKind kind, const BlockSparseMatrix& a);

struct PcgOptions {
  double relative_tolerance = 1e-8;
  int max_iterations = 1000;
  bool record_history = false;
};

struct PcgResult {
  VectorXd x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  int restarts = 0;  // breakdowns handled by boosting the diagonal
  /// 1/2 x^T A x - b^T x after each iteration, equivalent to the squared A-norm
  /// of the error up to a constant.
  std::vector<double> energy_history;
  std::vector<double> residual_history;
};

/// Preconditioned conjugate gradient, stopping at |A x - b| <= tol |b|.
PcgResult pcg(const LinearApply& a, const VectorXd& b, const Preconditioner& precond,
              const PcgOptions& options);

/// Inexact-Newton forcing term min(0.5, sqrt(|grad f|)).
double relative_tolerance(double grad_norm);

}  // namespace bdem
