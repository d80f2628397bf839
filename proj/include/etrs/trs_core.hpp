#pragma once

#include <optional>
#include <stdexcept>

#include "etrs/eigen_engine.hpp"
#include "etrs/options.hpp"
#include "etrs/problem.hpp"

namespace etrs {

class IterativeSolveFailure : public std::runtime_error {
 public:
  IterativeSolveFailure(const std::string& what, double residual)
      : std::runtime_error(what), residual(residual) {}
  double residual;
};

struct PhaseTimings {
  double eigen_ms = 0.0;
  double t_steps_ms = 0.0;
  double lambda_steps_ms = 0.0;
  double recovery_ms = 0.0;
};

/// Per-solve state: the instance, configuration, the cached eigenpair of A
/// and warm-start vectors for the bordered eigenproblems. Not thread-safe;
/// use one context per concurrent solve.
class SolverContext {
 public:
  explicit SolverContext(const ProblemInstance& instance,
                         DualConfig config = {});

  const ProblemInstance& instance() const { return instance_; }
  const DualConfig& config() const { return config_; }

  /// lambda_min(A) with its cluster basis, computed once.
  const EigResult& eig_A();

  /// Anchored smallest eigenpair of D(t, lambda), warm-started from the
  /// previous call.
  EigResult eig_D(double t, double lambda);

  /// Applies (A - lambda_min(A) I)^+ to g, i.e. solves on the orthogonal
  /// complement of the lambda_min(A) eigenspace.
  VectorXd apply_shifted_pinv(const Eigen::Ref<const VectorXd>& g);

  long matvecs() const { return matvecs_; }
  int eig_solves() const { return eig_solves_; }
  PhaseTimings& timings() { return timings_; }
  double scale() const { return scale_; }

 private:
  const ProblemInstance& instance_;
  DualConfig config_;
  std::optional<EigResult> eig_A_;
  /// Full eigendecomposition of A, only on the dense path.
  std::optional<MatrixXd> dense_Q_;
  VectorXd dense_values_;
  MatrixXd warm_D_;
  long matvecs_ = 0;
  int eig_solves_ = 0;
  double scale_ = 1.0;
  PhaseTimings timings_;
};

/// Value and (sub)gradient of k(t, lambda) = (delta+1) lambda_min(D(t,lambda))
/// - t - lambda c.
struct DualEval {
  double t = 0.0;
  double lambda = 0.0;
  double k_value = 0.0;
  EigResult eig;
  double grad_t = -1.0;
  double grad_lambda = 0.0;
  bool differentiable = false;
};

DualEval eval_k(SolverContext& ctx, double t, double lambda);

/// x = (A - lambda_min I)^+ g with g = a - (lambda/2) b, together with
/// t0 = lambda_min + g'x and the norm of g's component in the eigenspace.
struct HardCaseCandidate {
  VectorXd x;
  double t0 = 0.0;
  double eigenspace_component = 0.0;
};

HardCaseCandidate hard_case_candidate(SolverContext& ctx, double lambda);

double compute_t0(SolverContext& ctx, double lambda);

struct TrsSolution {
  double t_star = 0.0;
  double lambda = 0.0;
  VectorXd x;
  bool hard_case = false;
  std::optional<double> t0;
  double lambda1 = 0.0;
  double boundary_norm_sq = 0.0;
  /// k(t_star, lambda).
  double k_value = 0.0;
  /// lambda_min(D(t_star, lambda)).
  double eig_value = 0.0;
  int probes = 0;
};

/// argmax_t k(t, lambda): the trust-region subproblem with linear term
/// a - (lambda/2) b, solved through the parametric eigenvalue problem.
TrsSolution maximize_over_t(SolverContext& ctx, double lambda);

}  // namespace etrs
