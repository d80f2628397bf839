#pragma once

#include <map>
#include <optional>
#include <string>

#include "etrs/dual_solver.hpp"

namespace etrs {

enum class SolveStatus { kStrongDualitySolved, kDualityGapLowerBound };

std::string to_string(SolveStatus s);

/// Two boundary points solving (A - lambda_min I)x = a - (mu/2) b that lie on
/// opposite sides of the hyperplane: witnesses p* > d*.
struct GapCertificate {
  VectorXd x1;
  VectorXd x2;
  double mu = 0.0;
  double sign1 = 0.0;  // b'x1 - c
  double sign2 = 0.0;  // b'x2 - c
};

struct SolveReport {
  SolveStatus status = SolveStatus::kStrongDualitySolved;
  std::optional<VectorXd> x_star;
  /// Primal value when solved, otherwise the lower bound k(t*, lambda*).
  double objective = 0.0;
  double dual_value = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  KktResiduals kkt;
  std::optional<GapCertificate> gap_certificate;
  PhaseTimings timings;
  long matvec_count = 0;
  std::map<std::string, std::string> diagnostics;
};

/// Duality-gap test at a hard-case dual optimum; `x_cand` is the
/// candidate built from the anchored eigenvector.
std::optional<GapCertificate> gap_test(SolverContext& ctx,
                                       const DualResult& dual,
                                       const Eigen::Ref<const VectorXd>& x_cand);

/// x_cand + alpha z on the sphere (simple lambda_min(A)).
VectorXd complete_mult1(const ProblemInstance& instance,
                        const Eigen::Ref<const VectorXd>& x_cand,
                        const Eigen::Ref<const VectorXd>& z);

/// x_cand + Z alpha for a two-dimensional eigenspace Z (n x 2, orthonormal).
VectorXd complete_mult2(const ProblemInstance& instance,
                        const Eigen::Ref<const VectorXd>& x_cand,
                        const Eigen::Ref<const MatrixXd>& Z, double lambda_star);

struct Deflation {
  /// A + V diag(shifts) V'.
  LowRankUpdatedOperator op;
  /// Unit eigenvectors orthogonal to b that were lifted out of the cluster.
  MatrixXd lifted;
  /// Orthonormal basis of what remains of the eigenspace (two columns).
  MatrixXd remaining;
};

/// Reduces a cluster of size i > 2 to size 2 by lifting i - 2 eigenvectors
/// orthogonal to b by 1 + |lambda_min(A)|.
Deflation deflate_and_reduce(const ProblemInstance& instance,
                             const EigResult& eig_A);

SolveReport recover(SolverContext& ctx, const DualResult& dual);

/// validate + solve_dual + recover.
SolveReport solve(const ProblemInstance& instance, const DualConfig& config = {});

}  // namespace etrs
