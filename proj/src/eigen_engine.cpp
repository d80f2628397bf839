#include "etrs/eigen_engine.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <lapacke.h>

namespace etrs {

MatrixXd SymmetricOperator::to_dense() const {
  const Index n = size();
  MatrixXd I = MatrixXd::Identity(n, n);
  MatrixXd out(n, n);
  apply(I, out);
  return 0.5 * (out + out.transpose());
}

void SparseOperator::apply(const Eigen::Ref<const MatrixXd>& X,
                           Eigen::Ref<MatrixXd> Y) const {
  Y.noalias() = A_ * X;
}

BorderedOperator::BorderedOperator(const ProblemInstance& base, double t,
                                   double lambda)
    : base_(base),
      t_(t),
      lambda_(lambda),
      border_(-base.a + (0.5 * lambda) * base.b) {}

void BorderedOperator::apply(const Eigen::Ref<const MatrixXd>& X,
                             Eigen::Ref<MatrixXd> Y) const {
  const Index n = base_.dim();
  const auto head = X.topRows(1);
  const auto tail = X.bottomRows(n);
  Y.topRows(1).noalias() = t_ * head + border_.transpose() * tail;
  Y.bottomRows(n).noalias() = base_.A * tail;
  Y.bottomRows(n).noalias() += border_ * head;
}

MatrixXd BorderedOperator::to_dense() const {
  const Index n = base_.dim();
  MatrixXd D(n + 1, n + 1);
  D(0, 0) = t_;
  D.block(0, 1, 1, n) = border_.transpose();
  D.block(1, 0, n, 1) = border_;
  D.bottomRightCorner(n, n) = MatrixXd(base_.A);
  return D;
}

LowRankUpdatedOperator::LowRankUpdatedOperator(const SparseMatrix& A,
                                               MatrixXd V, VectorXd shifts)
    : A_(A), V_(std::move(V)), shifts_(std::move(shifts)) {}

void LowRankUpdatedOperator::apply(const Eigen::Ref<const MatrixXd>& X,
                                   Eigen::Ref<MatrixXd> Y) const {
  Y.noalias() = A_ * X;
  if (V_.cols() > 0) {
    const MatrixXd coeff = shifts_.asDiagonal() * (V_.transpose() * X);
    Y.noalias() += V_ * coeff;
  }
}

MatrixXd LowRankUpdatedOperator::to_dense() const {
  MatrixXd D(A_);
  if (V_.cols() > 0) D += V_ * shifts_.asDiagonal() * V_.transpose();
  return D;
}

namespace {

struct Cluster {
  int size = 1;
  double next_gap = std::numeric_limits<double>::infinity();
};

// Ritz/eigen values sorted ascending.
Cluster find_cluster(const Eigen::Ref<const VectorXd>& values,
                     const EigOptions& opts) {
  const double window = opts.tol_cluster * std::max(1.0, std::abs(values(0)));
  Cluster c;
  c.size = 1;
  while (c.size < values.size() && values(c.size) - values(0) <= window) {
    ++c.size;
  }
  if (c.size < values.size()) c.next_gap = values(c.size) - values(0);
  return c;
}

class BlockBuilder {
 public:
  BlockBuilder(Index rows, std::uint64_t seed) : rows_(rows), rng_(seed) {}

  VectorXd random_vector() {
    VectorXd v(rows_);
    for (Index i = 0; i < rows_; ++i) v(i) = normal_(rng_);
    return v;
  }

  // Orthonormalizes the columns of W against `basis` and each other
  // (classical Gram-Schmidt, applied twice). Columns that collapse are
  // replaced by fresh random directions.
  void orthonormalize(MatrixXd& W, const Eigen::Ref<const MatrixXd>& basis) {
    for (Index j = 0; j < W.cols(); ++j) {
      for (int attempt = 0;; ++attempt) {
        VectorXd w = W.col(j);
        const double before = w.norm();
        for (int pass = 0; pass < 2; ++pass) {
          if (basis.cols() > 0) w.noalias() -= basis * (basis.transpose() * w);
          if (j > 0) {
            w.noalias() -= W.leftCols(j) * (W.leftCols(j).transpose() * w);
          }
        }
        const double after = w.norm();
        if (after > 1e-10 * before && after > 0.0) {
          W.col(j) = w / after;
          break;
        }
        if (attempt > 8) {
          throw EigenFailure("cannot extend Krylov basis", 0.0, 0.0);
        }
        W.col(j) = random_vector();
      }
    }
  }

 private:
  Index rows_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

}  // namespace

EigResult smallest_eigpair_dense(const SymmetricOperator& M,
                                 const EigOptions& opts) {
  const MatrixXd D = M.to_dense();
  const lapack_int n = static_cast<lapack_int>(D.rows());
  // Only the lowest eigenpairs are computed; the window grows while the
  // cluster fills it.
  lapack_int want = std::min<lapack_int>(n, 8);
  VectorXd values;
  MatrixXd vectors;
  Cluster c;
  for (;;) {
    MatrixXd work = D;
    VectorXd w(n);
    MatrixXd z(n, want);
    std::vector<lapack_int> support(2 * static_cast<size_t>(want));
    lapack_int found = 0;
    const lapack_int info = LAPACKE_dsyevr(
        LAPACK_COL_MAJOR, 'V', 'I', 'L', n, work.data(), n, 0.0, 0.0, 1, want,
        0.0, &found, w.data(), z.data(), n, support.data());
    if (info != 0 || found != want) {
      throw EigenFailure("dense eigendecomposition failed (info " +
                             std::to_string(info) + ")",
                         0.0, 0.0);
    }
    values = w.head(found);
    vectors = std::move(z);
    c = find_cluster(values, opts);
    if (c.size < found || found == n) break;
    want = std::min<lapack_int>(n, 2 * want);
  }
  EigResult r;
  r.value = values(0);
  r.multiplicity = c.size;
  r.basis = vectors.leftCols(c.size);
  r.next_gap = c.next_gap;
  r.gap_warning =
      c.next_gap < 10.0 * opts.tol_cluster * std::max(1.0, std::abs(r.value));
  r.max_residual = (D * r.basis - r.basis * r.value).colwise().norm().maxCoeff();
  r.dense = true;
  return r;
}

EigResult smallest_eigpair_lanczos(const SymmetricOperator& M, int k_hint,
                                   const EigOptions& opts,
                                   const MatrixXd& warm) {
  const Index m = M.size();
  const Index p = std::min<Index>(std::max(k_hint, 2), m);
  if (m <= 6 * p) return smallest_eigpair_dense(M, opts);

  const Index max_basis =
      std::min<Index>(m, std::max<Index>(p * opts.basis_blocks, 5 * p));
  BlockBuilder builder(m, opts.seed);
  MatrixXd V(m, max_basis);
  MatrixXd MV(m, max_basis);
  Index cur = 0;
  long matvecs = 0;

  auto append = [&](MatrixXd& W) {
    builder.orthonormalize(W, V.leftCols(cur));
    V.middleCols(cur, W.cols()) = W;
    M.apply(W, MV.middleCols(cur, W.cols()));
    matvecs += W.cols();
    cur += W.cols();
  };

  {
    MatrixXd X(m, p);
    Index from_warm = 0;
    if (warm.rows() == m) {
      from_warm = std::min<Index>(warm.cols(), p);
      X.leftCols(from_warm) = warm.leftCols(from_warm);
    }
    for (Index j = from_warm; j < p; ++j) X.col(j) = builder.random_vector();
    append(X);
  }

  double best_value = std::numeric_limits<double>::quiet_NaN();
  double best_residual = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    while (cur + p <= max_basis) {
      MatrixXd W = MV.middleCols(cur - p, p);
      append(W);
    }

    MatrixXd H = V.leftCols(cur).transpose() * MV.leftCols(cur);
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
    const VectorXd& theta = es.eigenvalues();
    const Index nk = std::min<Index>(cur - p, 3 * p);
    const MatrixXd Y = es.eigenvectors().leftCols(nk);
    MatrixXd U = V.leftCols(cur) * Y;
    MatrixXd MU = MV.leftCols(cur) * Y;
    const MatrixXd R = MU - U * theta.head(nk).asDiagonal();
    const VectorXd res = R.colwise().norm();

    const double scale = std::max(1.0, std::abs(theta(0)));
    const double tol = opts.tol_eig * scale;
    const Cluster c = find_cluster(theta.head(nk), opts);
    best_value = theta(0);
    best_residual = res(0);

    bool converged = res.head(c.size).maxCoeff() <= tol;
    if (converged && c.size < nk) {
      converged = res(c.size) <= std::max(tol, 0.25 * c.next_gap);
    }
    if (converged && c.size >= p && p < m) {
      // The cluster fills the block; redo with a wider block.
      EigResult wider =
          smallest_eigpair_lanczos(M, static_cast<int>(c.size + 2), opts,
                                   U.leftCols(c.size));
      wider.matvecs += matvecs;
      return wider;
    }
    if (converged) {
      EigResult r;
      r.value = theta(0);
      r.multiplicity = c.size;
      r.basis = U.leftCols(c.size);
      r.next_gap = c.next_gap;
      r.gap_warning = c.next_gap < 10.0 * opts.tol_cluster * scale;
      r.max_residual = res.head(c.size).maxCoeff();
      r.matvecs = matvecs;
      return r;
    }

    // Thick restart: keep the lowest Ritz vectors, continue from the
    // residual block (which spans the next Krylov direction).
    const Index keep = nk;
    V.leftCols(keep) = U;
    MV.leftCols(keep) = MU;
    cur = keep;
    MatrixXd W = R.leftCols(p);
    append(W);
  }
  throw EigenFailure("Lanczos did not converge after " +
                         std::to_string(opts.max_restarts) + " restarts",
                     best_value, best_residual);
}

EigResult smallest_eigpair(const SymmetricOperator& M, int k_hint,
                           const EigOptions& opts, const MatrixXd& warm) {
  if (M.size() <= opts.dense_threshold) return smallest_eigpair_dense(M, opts);
  return smallest_eigpair_lanczos(M, k_hint, opts, warm);
}

EigResult anchor_basis(EigResult result, double tol_anchor) {
  result.anchored.reset();
  if (result.basis.rows() == 0 || result.basis.cols() == 0) return result;
  const VectorXd f = result.basis.row(0).transpose();
  const double nf = f.norm();
  if (nf < tol_anchor) return result;
  const Index r = f.size();
  if (r > 1) {
    // Reflector H with H e1 = f / |f|; basis * H puts all of the first
    // coordinate into column 0.
    VectorXd u = -f / nf;
    u(0) += 1.0;
    const double un = u.squaredNorm();
    if (un > 1e-30) {
      MatrixXd H = MatrixXd::Identity(r, r) - (2.0 / un) * u * u.transpose();
      result.basis = (result.basis * H).eval();
    }
  }
  if (result.basis(0, 0) < 0.0) result.basis.col(0) *= -1.0;
  result.anchored = 0;
  return result;
}

EigResult smallest_eig_A(const ProblemInstance& instance,
                         const EigOptions& opts, int block_hint) {
  SparseOperator op(instance.A);
  return smallest_eigpair(op, block_hint, opts);
}

}  // namespace etrs
