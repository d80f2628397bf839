#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace etrs {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Thrown for malformed inputs (dimension mismatches, bad files). Distinct
/// from assumption violations, which are reported by validate().
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a branch that the theory rules out is reached numerically.
class InternalInconsistency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// minimize x'Ax - 2a'x  subject to  ||x||^2 <= delta,  b'x <= c.
///
/// A is stored with both triangles present; every constructor path goes
/// through symmetric completion so A(i,j) == A(j,i) bitwise.
struct ProblemInstance {
  SparseMatrix A;
  VectorXd a;
  VectorXd b;
  double c = 0.0;
  double delta = 1.0;

  Index dim() const { return A.rows(); }
};

/// Builds an instance from one stored triangle (or a full symmetric matrix):
/// off-diagonal entries are mirrored, entries given twice are rejected.
ProblemInstance make_instance(const SparseMatrix& triangle, VectorXd a,
                              VectorXd b, double c, double delta);

ProblemInstance make_instance_dense(const MatrixXd& A, VectorXd a, VectorXd b,
                                    double c, double delta);

enum class Violation {
  kAsymmetricStorage,
  kNonPositiveDelta,
  kSlaterFailure,
  kPositiveDefinite,
  kPendingEigenCheck,
};

std::string to_string(Violation v);

struct ValidationReport {
  std::vector<Violation> violations;

  bool accepted() const;
  bool contains(Violation v) const;
  std::string describe() const;
};

/// Thrown by the solver entry point for instances outside the standing
/// assumptions.
class ValidationFailure : public std::runtime_error {
 public:
  explicit ValidationFailure(ValidationReport r)
      : std::runtime_error(r.describe()), report(std::move(r)) {}
  ValidationReport report;
};

/// Checks the standing assumptions. Without `lambda_min_A` the definiteness
/// test is deferred and reported as kPendingEigenCheck.
ValidationReport validate(const ProblemInstance& instance,
                          std::optional<double> lambda_min_A = std::nullopt);

/// Rejection threshold for the definiteness check.
double positive_definite_threshold(const ProblemInstance& instance);

struct KktResiduals {
  double kkt1 = 0.0;         // ||(A + l1 I)x - (a - l2/2 b)||_inf
  double kkt2 = 0.0;         // l1 (||x||^2 - delta)
  double kkt3 = 0.0;         // l2 (b'x - c)
  double primal_ball = 0.0;  // ||x||^2 - delta
  double primal_lin = 0.0;   // b'x - c
};

KktResiduals kkt_residuals(const ProblemInstance& instance,
                           const Eigen::Ref<const VectorXd>& x, double lambda1,
                           double lambda2);

double objective(const ProblemInstance& instance,
                 const Eigen::Ref<const VectorXd>& x);

double ball_tolerance(const ProblemInstance& instance);
double linear_tolerance(const ProblemInstance& instance);

bool is_feasible(const ProblemInstance& instance,
                 const Eigen::Ref<const VectorXd>& x);

/// ||A||_inf (max absolute row sum).
double inf_norm(const SparseMatrix& A);

/// Scale used for relative tolerances on dual quantities.
double problem_scale(const ProblemInstance& instance);

}  // namespace etrs
