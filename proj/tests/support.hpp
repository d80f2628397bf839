#pragma once

// Test-only helpers: small fixtures and an independent reference minimizer.
//
// The reference enumerates KKT candidates instead of solving a secular
// equation: the multipliers of stationary points on a sphere are the real
// eigenvalues of the 2n x 2n matrix [[-H, I], [g g'/r2, -H]]. Each one is
// polished by Newton steps on 1/|x(mu)| = 1/sqrt(r2). Interior stationary
// points, hyperplane-restricted points and the hard-case boundary point of
// the ball problem are added, and the best feasible candidate wins. This is
// exact for generic instances and for the planted hard cases used here.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "etrs/problem.hpp"

namespace etrs::test {

inline ProblemInstance diag_instance(const std::vector<double>& d,
                                     const std::vector<double>& a,
                                     const std::vector<double>& b, double c,
                                     double delta) {
  const Index n = static_cast<Index>(d.size());
  MatrixXd A = MatrixXd::Zero(n, n);
  VectorXd av(n), bv(n);
  for (Index i = 0; i < n; ++i) {
    A(i, i) = d[static_cast<size_t>(i)];
    av(i) = a[static_cast<size_t>(i)];
    bv(i) = b[static_cast<size_t>(i)];
  }
  return make_instance_dense(A, av, bv, c, delta);
}

// A = diag(-2, 1) family used by many module examples.
inline ProblemInstance diag21(const std::vector<double>& a,
                              const std::vector<double>& b, double c) {
  return diag_instance({-2.0, 1.0}, a, b, c, 1.0);
}

inline ProblemInstance gap_instance() {
  return diag_instance({-1.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}, 0.0, 1.0);
}

inline ProblemInstance hard_mult2_instance() {
  return diag_instance({-1.0, -1.0, 1.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, 1.0},
                       10.0, 1.0);
}

inline MatrixXd dense(const ProblemInstance& p) { return MatrixXd(p.A); }

inline double min_eigenvalue(const MatrixXd& M) {
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(M, Eigen::EigenvaluesOnly)
      .eigenvalues()(0);
}

// Dense random instance with an interior Slater point; not planted in any
// way, so generic with probability one.
inline ProblemInstance random_dense_instance(Index n, std::uint64_t seed,
                                             bool with_b = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  MatrixXd A(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i <= j; ++i) A(i, j) = A(j, i) = N(rng);
  const double lmin = min_eigenvalue(A);
  if (lmin > -0.1) A -= (lmin + 0.5) * MatrixXd::Identity(n, n);
  VectorXd a(n), b(n);
  for (Index i = 0; i < n; ++i) a(i) = 2.0 * N(rng);
  for (Index i = 0; i < n; ++i) b(i) = with_b ? N(rng) : 0.0;
  const double delta = 0.5 + 0.75 * (U(rng) + 1.0);
  VectorXd x(n);
  for (Index i = 0; i < n; ++i) x(i) = N(rng);
  x *= 0.5 * std::sqrt(delta) / x.norm();
  const double c = with_b ? b.dot(x) + 0.5 * U(rng) : 1.0;
  return make_instance_dense(A, a, b, c, delta);
}

struct ReferenceResult {
  double value = std::numeric_limits<double>::infinity();
  VectorXd x;
};

namespace detail {

inline void polish_on_sphere(const MatrixXd& H, const VectorXd& g, double r2,
                             double mu, std::vector<VectorXd>& out) {
  const Index n = H.rows();
  const MatrixXd I = MatrixXd::Identity(n, n);
  VectorXd x;
  for (int it = 0; it < 6; ++it) {
    const Eigen::FullPivLU<MatrixXd> lu(H + mu * I);
    if (!lu.isInvertible()) return;
    x = lu.solve(g);
    const double nx = x.norm();
    if (!(nx > 0.0) || !std::isfinite(nx)) return;
    const VectorXd y = lu.solve(x);
    const double phi = 1.0 / nx - 1.0 / std::sqrt(r2);
    const double dphi = x.dot(y) / (nx * nx * nx);
    if (!(std::abs(dphi) > 0.0)) break;
    mu -= phi / dphi;
  }
  const Eigen::FullPivLU<MatrixXd> lu(H + mu * I);
  if (!lu.isInvertible()) return;
  x = lu.solve(g);
  if (std::abs(x.squaredNorm() - r2) <= 1e-8 * std::max(1.0, r2)) {
    out.push_back(x);
  }
}

// Stationary points of u'Hu - 2g'u on |u|^2 = r2 plus the interior point.
inline std::vector<VectorXd> stationary_points(const MatrixXd& H,
                                               const VectorXd& g, double r2) {
  const Index n = H.rows();
  std::vector<VectorXd> out;
  if (n == 0) {
    out.emplace_back(VectorXd());
    return out;
  }
  const Eigen::FullPivLU<MatrixXd> lu(H);
  if (lu.isInvertible()) out.push_back(lu.solve(g));
  if (r2 <= 0.0) {
    if (r2 == 0.0) out.emplace_back(VectorXd::Zero(n));
    return out;
  }
  MatrixXd M(2 * n, 2 * n);
  M << -H, MatrixXd::Identity(n, n), g * g.transpose() / r2, -H;
  const Eigen::EigenSolver<MatrixXd> es(M, false);
  for (Index k = 0; k < 2 * n; ++k) {
    const auto mu = es.eigenvalues()(k);
    if (std::abs(mu.imag()) <= 1e-6 * std::max(1.0, std::abs(mu.real()))) {
      polish_on_sphere(H, g, r2, mu.real(), out);
    }
  }
  // Hard case: minimum-norm solution at the smallest eigenvalue plus a null
  // vector.
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(H);
  const double shift = -eig.eigenvalues()(0);
  const MatrixXd S = H + shift * MatrixXd::Identity(n, n);
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(S);
  cod.setThreshold(1e-10);
  const VectorXd xp = cod.solve(g);
  if ((S * xp - g).norm() <= 1e-9 * std::max(1.0, g.norm()) &&
      xp.squaredNorm() <= r2) {
    const VectorXd z = eig.eigenvectors().col(0);
    const VectorXd zp = (z - xp.dot(z) / std::max(xp.squaredNorm(), 1e-300) *
                                 xp)
                            .normalized();
    const VectorXd dir = xp.norm() > 0.0 ? zp : z;
    const double tau = std::sqrt(std::max(0.0, r2 - xp.squaredNorm()));
    out.push_back(xp + tau * dir);
    out.push_back(xp - tau * dir);
  }
  return out;
}

}  // namespace detail

// Global minimum of x'Ax - 2a'x over |x|^2 <= delta, b'x <= c.
inline ReferenceResult reference_minimum(const ProblemInstance& p) {
  const MatrixXd A = dense(p);
  const Index n = p.dim();
  std::vector<VectorXd> cands = detail::stationary_points(A, p.a, p.delta);

  const double bb = p.b.squaredNorm();
  if (bb > 0.0) {
    const VectorXd x0 = p.c / bb * p.b;
    const double r2 = p.delta - x0.squaredNorm();
    if (r2 >= 0.0) {
      const Eigen::HouseholderQR<MatrixXd> qr(p.b);
      const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(n, n);
      const MatrixXd W = Q.rightCols(n - 1);
      const MatrixXd H = W.transpose() * A * W;
      const VectorXd g = W.transpose() * (p.a - A * x0);
      for (const VectorXd& u : detail::stationary_points(H, g, r2)) {
        cands.push_back(n > 1 ? VectorXd(x0 + W * u) : x0);
      }
    }
  }

  ReferenceResult best;
  const double tol = 1e-9;
  for (const VectorXd& x : cands) {
    if (x.squaredNorm() - p.delta > tol * std::max(1.0, p.delta)) continue;
    if (p.b.dot(x) - p.c > tol * std::max(1.0, std::abs(p.c))) continue;
    const double v = objective(p, x);
    if (v < best.value) {
      best.value = v;
      best.x = x;
    }
  }
  return best;
}

inline double rel_diff(double x, double y) {
  return std::abs(x - y) / std::max(1.0, std::abs(y));
}

}  // namespace etrs::test
