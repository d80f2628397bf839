#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>

#include "etrs/options.hpp"
#include "etrs/problem.hpp"

namespace etrs {

/// Matvec-only view of a symmetric matrix. Implementations apply the
/// operator to a block of columns at once.
class SymmetricOperator {
 public:
  virtual ~SymmetricOperator() = default;
  virtual Index size() const = 0;
  virtual void apply(const Eigen::Ref<const MatrixXd>& X,
                     Eigen::Ref<MatrixXd> Y) const = 0;
  virtual MatrixXd to_dense() const;
};

class SparseOperator final : public SymmetricOperator {
 public:
  explicit SparseOperator(const SparseMatrix& A) : A_(A) {}
  Index size() const override { return A_.rows(); }
  void apply(const Eigen::Ref<const MatrixXd>& X,
             Eigen::Ref<MatrixXd> Y) const override;
  MatrixXd to_dense() const override { return MatrixXd(A_); }

 private:
  const SparseMatrix& A_;
};

class DenseOperator final : public SymmetricOperator {
 public:
  explicit DenseOperator(MatrixXd M) : M_(std::move(M)) {}
  Index size() const override { return M_.rows(); }
  void apply(const Eigen::Ref<const MatrixXd>& X,
             Eigen::Ref<MatrixXd> Y) const override {
    Y.noalias() = M_ * X;
  }
  MatrixXd to_dense() const override { return M_; }

 private:
  MatrixXd M_;
};

/// D(t, lambda) = [[t, w'], [w, A]] with w = -a + (lambda/2) b, applied
/// implicitly. lambda = 0 gives the classical parametric matrix D(t).
class BorderedOperator final : public SymmetricOperator {
 public:
  BorderedOperator(const ProblemInstance& base, double t, double lambda);
  Index size() const override { return base_.dim() + 1; }
  void apply(const Eigen::Ref<const MatrixXd>& X,
             Eigen::Ref<MatrixXd> Y) const override;
  MatrixXd to_dense() const override;

  double t() const { return t_; }
  double lambda() const { return lambda_; }
  const VectorXd& border() const { return border_; }

 private:
  const ProblemInstance& base_;
  double t_;
  double lambda_;
  VectorXd border_;
};

/// A + V diag(shifts) V', the deflated matrix used for clusters of size > 2.
class LowRankUpdatedOperator final : public SymmetricOperator {
 public:
  LowRankUpdatedOperator(const SparseMatrix& A, MatrixXd V, VectorXd shifts);
  Index size() const override { return A_.rows(); }
  void apply(const Eigen::Ref<const MatrixXd>& X,
             Eigen::Ref<MatrixXd> Y) const override;
  MatrixXd to_dense() const override;

  const MatrixXd& vectors() const { return V_; }
  const VectorXd& shifts() const { return shifts_; }

 private:
  const SparseMatrix& A_;
  MatrixXd V_;
  VectorXd shifts_;
};

struct EigResult {
  double value = 0.0;
  int multiplicity = 1;
  /// Orthonormal columns spanning the cluster at `value`.
  MatrixXd basis;
  /// Column of `basis` with nonzero first component (bordered operators).
  std::optional<Index> anchored;
  /// Distance from `value` to the first eigenvalue outside the cluster
  /// (infinity when the whole spectrum is one cluster).
  double next_gap = 0.0;
  /// Cluster separation is below 10 * tol_cluster: multiplicity is unreliable.
  bool gap_warning = false;
  double max_residual = 0.0;
  long matvecs = 0;
  bool dense = false;
};

class EigenFailure : public std::runtime_error {
 public:
  EigenFailure(const std::string& what, double best_value, double residual)
      : std::runtime_error(what), best_value(best_value), residual(residual) {}
  double best_value;
  double residual;
};

/// Smallest eigenvalue, its cluster and an orthonormal cluster basis.
/// Dispatches to the dense path when M.size() <= opts.dense_threshold.
/// `warm` columns (if any) seed the starting block.
EigResult smallest_eigpair(const SymmetricOperator& M, int k_hint,
                           const EigOptions& opts,
                           const MatrixXd& warm = MatrixXd());

EigResult smallest_eigpair_dense(const SymmetricOperator& M,
                                 const EigOptions& opts);

/// Thick-restart block Lanczos with full reorthogonalization.
EigResult smallest_eigpair_lanczos(const SymmetricOperator& M, int k_hint,
                                   const EigOptions& opts,
                                   const MatrixXd& warm = MatrixXd());

/// Rotates the cluster basis so that only its first column carries a
/// first-coordinate component (a Householder reflection acting on the
/// coordinates of the basis). Sets `anchored` to 0 when that component is
/// at least tol_anchor, otherwise leaves it empty.
EigResult anchor_basis(EigResult result, double tol_anchor = 1e-6);

/// Smallest eigenpair of A itself. The block grows until the detected
/// cluster is strictly smaller than the block.
EigResult smallest_eig_A(const ProblemInstance& instance,
                         const EigOptions& opts, int block_hint = 4);

}  // namespace etrs
