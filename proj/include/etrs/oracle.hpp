#pragma once

#include <stdexcept>
#include <string>

#include "etrs/problem.hpp"

namespace etrs {

class OracleCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Global minimizer of x'Hx - 2g'x over ||x||^2 <= radius_sq, from a full
/// eigendecomposition. In the hard case the minimizers form the family
/// x + null_basis * w (on the sphere when multiplier > 0).
struct DenseTrsSolution {
  VectorXd x;
  double multiplier = 0.0;
  double value = 0.0;
  bool hard_case = false;
  MatrixXd null_basis;
};

DenseTrsSolution dense_trs(const MatrixXd& H, const VectorXd& g,
                           double radius_sq);

struct OracleResult {
  double p_star = 0.0;
  VectorXd x;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  /// "ball" (linear constraint inactive, global ball minimizer),
  /// "ball-local" (a local, non-global ball minimizer) or "hyperplane".
  std::string active_set;
};

/// Exact global optimum by enumerating active sets on dense
/// eigendecompositions. Refuses instances larger than `cap`.
OracleResult oracle_solve(const ProblemInstance& instance, Index cap = 400);

}  // namespace etrs
