#include <chrono>

#include "etrs/recovery.hpp"

namespace etrs {

SolveReport solve(const ProblemInstance& instance, const DualConfig& config) {
  ValidationReport pre = validate(instance);
  if (!pre.accepted()) throw ValidationFailure(std::move(pre));

  SolverContext ctx(instance, config);
  const auto start = std::chrono::steady_clock::now();
  const double lambda_min = ctx.eig_A().value;
  ctx.timings().eigen_ms += std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - start)
                                .count();
  ValidationReport full = validate(instance, lambda_min);
  if (!full.accepted()) throw ValidationFailure(std::move(full));

  const DualResult dual = solve_dual(ctx);
  SolveReport rep = recover(ctx, dual);
  rep.diagnostics["eig_solves"] = std::to_string(ctx.eig_solves());
  return rep;
}

}  // namespace etrs
