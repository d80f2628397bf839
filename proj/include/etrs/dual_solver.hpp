#pragma once

#include <vector>

#include "etrs/trs_core.hpp"

namespace etrs {

enum class DualStatus { kRunning, kConverged, kIterationCap, kStalled };

struct DualIterate {
  double t;
  double lambda;
  double k;
};

struct DualState {
  double t = 0.0;
  double lambda = 0.0;
  double k_value = 0.0;
  double last_improvement = 0.0;
  int iteration = 0;
  /// t-maximizations spent in the profile search fallback.
  int profile_steps = 0;
  std::vector<DualIterate> history;
  DualStatus status = DualStatus::kRunning;
};

struct DualResult {
  double t_star = 0.0;
  double lambda_star = 0.0;
  /// Best k(t, lambda) found; the dual optimal value at convergence.
  double d_star = 0.0;
  /// Eigenpair of D(t*, lambda*). In the hard case this is assembled from
  /// the eigenbasis of A: [(1, x)/|(1, x)|, (0, z_1), ..., (0, z_i)].
  EigResult eig_at_opt;
  bool hard_case = false;
  /// The t-maximization at lambda*, carrying the primal candidate.
  TrsSolution trs;
  DualState state;
};

struct LambdaStep {
  double lambda = 0.0;
  double k_value = 0.0;
  bool stalled = false;
  int probes = 0;
};

/// argmax_{lambda >= 0} k(t, lambda) by bracketing on the sign of the
/// lambda-subgradient. Never returns a point worse than lambda_init.
LambdaStep lambda_step(SolverContext& ctx, double t, double lambda_init);

/// Alternating maximization of k over lambda >= 0 and t.
DualResult solve_dual(SolverContext& ctx);

std::string to_string(DualStatus s);

}  // namespace etrs
