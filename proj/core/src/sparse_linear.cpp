#include "bdem/sparse_linear.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "bdem/error.hpp"

namespace bdem {

BlockJacobiPreconditioner::BlockJacobiPreconditioner(int block_size,
                                                     const std::vector<MatrixXd>& diagonal_blocks)
    : block_size_(block_size) {
  inverses_.reserve(diagonal_blocks.size());
  for (const MatrixXd& d : diagonal_blocks) {
    Eigen::LDLT<MatrixXd> ldlt(d);
    bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive();
    if (ok) {
      const auto& diag = ldlt.vectorD();
      ok = diag.minCoeff() > 1e-14 * std::max(1.0, diag.cwiseAbs().maxCoeff());
    }
    if (!ok) {
      ++fallback_blocks_;
      inverses_.push_back(MatrixXd::Identity(block_size, block_size));
      continue;
    }
    inverses_.push_back(ldlt.solve(MatrixXd::Identity(block_size, block_size)));
  }
}

void BlockJacobiPreconditioner::apply(const VectorXd& r, VectorXd& z) const {
  z.resize(r.size());
  const int bs = block_size_;
  for (std::size_t i = 0; i < inverses_.size(); ++i) {
    const auto off = static_cast<Eigen::Index>(i) * bs;
    z.segment(off, bs).noalias() = inverses_[i] * r.segment(off, bs);
  }
}

IncompleteCholeskyPreconditioner::IncompleteCholeskyPreconditioner(const Eigen::SparseMatrix<double>& a) {
  factor_.compute(a);
  ok_ = factor_.info() == Eigen::Success;
}

void IncompleteCholeskyPreconditioner::apply(const VectorXd& r, VectorXd& z) const { z = factor_.solve(r); }

CholeskyPreconditioner::CholeskyPreconditioner(const Eigen::SparseMatrix<double>& a) {
  factor_.compute(a);
  ok_ = factor_.info() == Eigen::Success && (factor_.vectorD().array() > 0.0).all();
}

void CholeskyPreconditioner::apply(const VectorXd& r, VectorXd& z) const { z = factor_.solve(r); }

const char* to_string(PreconditionerKind k) {
  switch (k) {
    case PreconditionerKind::kBlockJacobi: return "block-jacobi";
    case PreconditionerKind::kIncompleteCholesky: return "incomplete-cholesky";
    case PreconditionerKind::kCholesky: return "cholesky";
  }
  return "unknown";
}

PreconditionerKind parse_preconditioner(const std::string& name) {
  for (auto k : {PreconditionerKind::kBlockJacobi, PreconditionerKind::kIncompleteCholesky,
                 PreconditionerKind::kCholesky}) {
    if (name == to_string(k)) return k;
  }
  throw Error("unknown preconditioner '" + name + "' (expected block-jacobi, incomplete-cholesky or cholesky)");
}

std::unique_ptr<Preconditioner> make_preconditioner(PreconditionerKind kind, const BlockSparseMatrix& a) {
  if (kind == PreconditionerKind::kIncompleteCholesky) {
    auto p = std::make_unique<IncompleteCholeskyPreconditioner>(a.to_sparse());
    if (p->ok()) return p;
  } else if (kind == PreconditionerKind::kCholesky) {
    auto p = std::make_unique<CholeskyPreconditioner>(a.to_sparse());
    if (p->ok()) return p;
  }
  return std::make_unique<BlockJacobiPreconditioner>(a.block_size(), a.diagonal_blocks());
}

BlockSparseMatrix::BlockSparseMatrix(int block_rows, int block_size)
    : n_(block_rows), bs_(block_size), pending_(block_rows) {}

void BlockSparseMatrix::add_block(int i, int j, const MatrixXd& block) {
  if (finalized_) throw Error("BlockSparseMatrix: add_block after finalize");
  auto [it, inserted] = pending_[i].try_emplace(j, block);
  if (!inserted) it->second += block;
}

void BlockSparseMatrix::finalize() {
  row_ptr_.assign(n_ + 1, 0);
  cols_.clear();
  values_.clear();
  const int bb = bs_ * bs_;
  for (int i = 0; i < n_; ++i) {
    std::vector<int> keys;
    keys.reserve(pending_[i].size());
    for (const auto& kv : pending_[i]) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    for (int j : keys) {
      cols_.push_back(j);
      const MatrixXd& m = pending_[i][j];
      values_.insert(values_.end(), m.data(), m.data() + bb);
    }
    row_ptr_[i + 1] = static_cast<int>(cols_.size());
  }
  pending_.clear();
  pending_.shrink_to_fit();
  finalized_ = true;
}

void BlockSparseMatrix::apply(const VectorXd& x, VectorXd& y) const {
  y.setZero(rows());
  const int bb = bs_ * bs_;
  for (int i = 0; i < n_; ++i) {
    auto yi = y.segment(static_cast<Eigen::Index>(i) * bs_, bs_);
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      Eigen::Map<const MatrixXd> blk(values_.data() + static_cast<std::size_t>(k) * bb, bs_, bs_);
      yi.noalias() += blk * x.segment(static_cast<Eigen::Index>(cols_[k]) * bs_, bs_);
    }
  }
}

MatrixXd BlockSparseMatrix::diagonal_block(int i) const {
  const int bb = bs_ * bs_;
  for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
    if (cols_[k] == i) {
      return Eigen::Map<const MatrixXd>(values_.data() + static_cast<std::size_t>(k) * bb, bs_, bs_);
    }
  }
  return MatrixXd::Zero(bs_, bs_);
}

std::vector<MatrixXd> BlockSparseMatrix::diagonal_blocks() const {
  std::vector<MatrixXd> out;
  out.reserve(n_);
  for (int i = 0; i < n_; ++i) out.push_back(diagonal_block(i));
  return out;
}

MatrixXd BlockSparseMatrix::to_dense() const {
  MatrixXd d = MatrixXd::Zero(rows(), rows());
  const int bb = bs_ * bs_;
  for (int i = 0; i < n_; ++i) {
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      d.block(static_cast<Eigen::Index>(i) * bs_, static_cast<Eigen::Index>(cols_[k]) * bs_, bs_, bs_) =
          Eigen::Map<const MatrixXd>(values_.data() + static_cast<std::size_t>(k) * bb, bs_, bs_);
    }
  }
  return d;
}

Eigen::SparseMatrix<double> BlockSparseMatrix::to_sparse() const {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(values_.size());
  const int bb = bs_ * bs_;
  for (int i = 0; i < n_; ++i) {
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      Eigen::Map<const MatrixXd> blk(values_.data() + static_cast<std::size_t>(k) * bb, bs_, bs_);
      for (int c = 0; c < bs_; ++c)
        for (int r = 0; r < bs_; ++r) trip.emplace_back(i * bs_ + r, cols_[k] * bs_ + c, blk(r, c));
    }
  }
  Eigen::SparseMatrix<double> m(rows(), rows());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

void BlockSparseMatrix::write_triplets(std::ostream& out) const {
  const int bb = bs_ * bs_;
  out << std::setprecision(17);
  for (int i = 0; i < n_; ++i) {
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      Eigen::Map<const MatrixXd> blk(values_.data() + static_cast<std::size_t>(k) * bb, bs_, bs_);
      for (int r = 0; r < bs_; ++r)
        for (int c = 0; c < bs_; ++c) {
          if (blk(r, c) == 0.0) continue;
          out << i * bs_ + r << ' ' << cols_[k] * bs_ + c << ' ' << blk(r, c) << '\n';
        }
    }
  }
}

PcgResult pcg(const LinearApply& a, const VectorXd& b, const Preconditioner& precond,
              const PcgOptions& options) {
  PcgResult res;
  const Eigen::Index n = b.size();
  res.x = VectorXd::Zero(n);
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    res.converged = true;
    return res;
  }

  double boost = 0.0;
  auto apply = [&](const VectorXd& x, VectorXd& y) {
    a(x, y);
    if (boost > 0.0) y += boost * x;
  };

  VectorXd r = b;
  VectorXd z(n), p(n), ap(n);
  precond.apply(r, z);
  p = z;
  double rz = r.dot(z);
  double energy = 0.0;
  int true_residual_restarts = 0;
  const double tol = options.relative_tolerance * b_norm;

  while (res.iterations < options.max_iterations) {
    apply(p, ap);
    const double pap = p.dot(ap);
    if (!(pap > 0.0) || !(rz > 0.0)) {
      // Breakdown: boost the diagonal and restart from the current iterate.
      const double scale = std::abs(pap) / std::max(p.squaredNorm(), 1e-300);
      boost = std::max({10.0 * boost, 1e-8 * scale, 1e-12});
      ++res.restarts;
      if (res.restarts > 20) break;
      apply(res.x, ap);
      r = b - ap;
      precond.apply(r, z);
      p = z;
      rz = r.dot(z);
      continue;
    }
    const double alpha = rz / pap;
    res.x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    energy -= 0.5 * alpha * rz;
    ++res.iterations;

    const double r_norm = r.norm();
    if (options.record_history) {
      res.energy_history.push_back(energy);
      res.residual_history.push_back(r_norm / b_norm);
    }
    if (r_norm <= tol) {
      // Confirm against the true residual; recursive residuals drift on
      // ill-conditioned systems.
      apply(res.x, ap);
      r = b - ap;
      if (r.norm() <= tol || ++true_residual_restarts > 5) {
        res.converged = r.norm() <= tol;
        break;
      }
      precond.apply(r, z);
      p = z;
      rz = r.dot(z);
      continue;
    }
    precond.apply(r, z);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  // Report the true residual, not the recursively updated one.
  VectorXd check(n);
  a(res.x, check);
  res.relative_residual = (b - check).norm() / b_norm;
  return res;
}

double relative_tolerance(double grad_norm) { return std::min(0.5, std::sqrt(grad_norm)); }

}  // namespace bdem
