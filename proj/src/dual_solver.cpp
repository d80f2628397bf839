#include "etrs/dual_solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "etrs/detail/root_find.hpp"

namespace etrs {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

double lambda_cap(const SolverContext& ctx) {
  const ProblemInstance& p = ctx.instance();
  if (ctx.config().lambda_cap > 0.0) return ctx.config().lambda_cap;
  const double bn = p.b.norm();
  return 1e8 * std::max(1.0, bn > 0.0 ? p.a.norm() / bn : 1.0);
}

}  // namespace

std::string to_string(DualStatus s) {
  switch (s) {
    case DualStatus::kRunning:
      return "running";
    case DualStatus::kConverged:
      return "converged";
    case DualStatus::kIterationCap:
      return "iteration-cap";
    case DualStatus::kStalled:
      return "stalled";
  }
  return "unknown";
}

LambdaStep lambda_step(SolverContext& ctx, double t, double lambda_init) {
  const ProblemInstance& p = ctx.instance();
  const DualConfig& cfg = ctx.config();
  const double g_tol =
      1e-11 * std::max({1.0, std::abs(p.c), p.b.norm() * std::sqrt(p.delta)});

  // Probes may only be returned if they do not lose ascent against the
  // starting point; among those the one with the smallest |derivative| wins,
  // since k is too flat near the maximizer to discriminate by value.
  LambdaStep out;
  out.k_value = -std::numeric_limits<double>::infinity();
  double floor_k = -std::numeric_limits<double>::infinity();
  double best_grad = std::numeric_limits<double>::infinity();
  const double slack = 1e-13 * ctx.scale();
  auto record = [&](const DualEval& ev) {
    ++out.probes;
    if (ev.k_value < floor_k - slack) return;
    // At lambda = 0 a nonpositive derivative is optimal.
    const double g = ev.lambda == 0.0 ? std::max(0.0, ev.grad_lambda)
                                      : std::abs(ev.grad_lambda);
    if (g < best_grad ||
        (g == best_grad && ev.k_value > out.k_value)) {
      best_grad = g;
      out.k_value = ev.k_value;
      out.lambda = ev.lambda;
    }
  };
  auto probe = [&](double lambda) -> detail::Probe {
    const DualEval ev = eval_k(ctx, t, lambda);
    record(ev);
    return {ev.grad_lambda, std::abs(ev.grad_lambda) <= g_tol};
  };

  lambda_init = std::max(0.0, lambda_init);
  const double cap = lambda_cap(ctx);
  double lo = 0.0;
  double hi = 0.0;
  detail::Probe plo{0.0, false};
  detail::Probe phi{0.0, false};

  std::optional<DualEval> at_init;
  if (lambda_init > 0.0) {
    // Establish the ascent floor before anything else is recorded.
    at_init = eval_k(ctx, t, lambda_init);
    floor_k = at_init->k_value;
    record(*at_init);
  }
  const detail::Probe p0 = probe(0.0);
  if (p0.value <= 0.0 || p0.done) return out;
  plo = p0;
  if (lambda_init > 0.0) {
    const detail::Probe pi{at_init->grad_lambda,
                           std::abs(at_init->grad_lambda) <= g_tol};
    if (pi.done) return out;
    if (pi.value > 0.0) {
      lo = lambda_init;
      plo = pi;
    } else {
      hi = lambda_init;
      phi = pi;
    }
  }
  if (hi == 0.0) {
    hi = std::max(1.0, 2.0 * lo);
    for (;;) {
      hi = std::min(hi, cap);
      phi = probe(hi);
      if (phi.done) return out;
      if (phi.value <= 0.0) break;
      if (hi >= cap) {
        out.stalled = true;
        return out;
      }
      lo = hi;
      plo = phi;
      hi *= 2.0;
    }
  }
  detail::illinois_decreasing(probe, lo, plo.value, hi, phi.value,
                              [&](double l, double h) {
                                return cfg.tol_lambda *
                                       std::max({1.0, std::abs(l), std::abs(h)});
                              });
  return out;
}

namespace {

struct SlackRange {
  double lo;
  double hi;
};

// Range of b'x - c over the t-step's primal solutions: a single value in
// the easy case, the extremes over the boundary family in the hard case.
// This is the subdifferential of the t-maximized dual in lambda.
SlackRange slack_range(SolverContext& ctx, const TrsSolution& trs) {
  const ProblemInstance& p = ctx.instance();
  const double centre = p.b.dot(trs.x) - p.c;
  if (!trs.hard_case) return {centre, centre};
  const double r = std::sqrt(std::max(0.0, p.delta - trs.x.squaredNorm()));
  const double half = r * (ctx.eig_A().basis.transpose() * p.b).norm();
  return {centre - half, centre + half};
}

bool profile_optimal(SolverContext& ctx, const TrsSolution& trs) {
  const SlackRange s = slack_range(ctx, trs);
  const double tol = linear_tolerance(ctx.instance());
  if (trs.lambda <= 0.0) return s.lo <= tol;
  return s.lo <= tol && s.hi >= -tol;
}

// Sign of the lambda-subdifferential of the profile max_t k(t, lambda):
// +1 when every element is positive, -1 when every element is negative.
int ascent_direction(SolverContext& ctx, const TrsSolution& trs) {
  const SlackRange s = slack_range(ctx, trs);
  const double tol = linear_tolerance(ctx.instance());
  if (s.lo > tol) return 1;
  if (s.hi < -tol) return trs.lambda > 0.0 ? -1 : 0;
  return 0;
}

// Bisection-type search in lambda on the profile max_t k(t, lambda), each
// probe being a full t-maximization. Used when the alternation halts at a
// kink of k where neither coordinate move makes progress.
TrsSolution profile_search(SolverContext& ctx, TrsSolution start, int& steps) {
  const double cap = lambda_cap(ctx);
  auto eval = [&](double lambda) {
    ++steps;
    return maximize_over_t(ctx, lambda);
  };
  int dir = ascent_direction(ctx, start);
  if (dir == 0) return start;

  double lo;
  double hi;
  TrsSolution at_lo;
  TrsSolution at_hi;
  if (dir < 0) {
    hi = start.lambda;
    at_hi = std::move(start);
    at_lo = eval(0.0);
    if (ascent_direction(ctx, at_lo) <= 0) return at_lo;
    lo = 0.0;
  } else {
    lo = start.lambda;
    at_lo = std::move(start);
    hi = std::max(1.0, 2.0 * lo);
    for (;;) {
      hi = std::min(hi, cap);
      at_hi = eval(hi);
      dir = ascent_direction(ctx, at_hi);
      if (dir == 0) return at_hi;
      if (dir < 0) break;
      if (hi >= cap) return at_hi;
      lo = hi;
      at_lo = std::move(at_hi);
      hi *= 2.0;
    }
  }

  auto value_of = [&](const TrsSolution& trs, int d) {
    const SlackRange r = slack_range(ctx, trs);
    return d > 0 ? r.lo : r.hi;
  };
  std::optional<TrsSolution> found;
  auto probe = [&](double lambda) -> detail::Probe {
    TrsSolution trs = eval(lambda);
    const int d = ascent_direction(ctx, trs);
    const double v = d == 0 ? 0.0 : value_of(trs, d);
    if (d == 0) {
      found = std::move(trs);
    } else if (d > 0) {
      at_lo = std::move(trs);
    } else {
      at_hi = std::move(trs);
    }
    return {v, d == 0};
  };
  detail::illinois_decreasing(probe, lo, value_of(at_lo, 1), hi,
                              value_of(at_hi, -1), [&](double l, double h) {
                                return ctx.config().tol_lambda *
                                       std::max({1.0, std::abs(l),
                                                 std::abs(h)});
                              });
  if (found) return std::move(*found);
  return at_lo.k_value >= at_hi.k_value ? at_lo : at_hi;
}

// The multiplier at which a - (lambda/2) b loses its component in the
// lambda_min(A) eigenspace, if such a lambda >= 0 exists. Alternation can
// only approach a dual optimum sitting there, so it is probed directly.
std::optional<double> kink_multiplier(SolverContext& ctx) {
  const ProblemInstance& p = ctx.instance();
  const MatrixXd& Z = ctx.eig_A().basis;
  const VectorXd za = Z.transpose() * p.a;
  const VectorXd zb = Z.transpose() * p.b;
  const double zb2 = zb.squaredNorm();
  if (zb2 <= 1e-24 * std::max(1.0, p.b.squaredNorm())) return std::nullopt;
  const double lambda = 2.0 * za.dot(zb) / zb2;
  if (!(lambda >= 0.0)) return std::nullopt;
  const double resid = (za - 0.5 * lambda * zb).norm();
  if (resid > 1e-9 * std::max(1.0, p.a.norm())) return std::nullopt;
  return lambda;
}

}  // namespace

DualResult solve_dual(SolverContext& ctx) {
  const ProblemInstance& p = ctx.instance();
  const DualConfig& cfg = ctx.config();
  const EigResult eA = ctx.eig_A();

  DualResult result;
  DualState& st = result.state;
  st.lambda = 0.0;
  st.t = eA.value * (p.delta + 1.0);
  st.k_value = -std::numeric_limits<double>::infinity();

  const bool no_constraint_normal = p.b.isZero(0.0);
  const double ascent_slack = 1e-12 * ctx.scale();
  TrsSolution best_trs;
  bool trs_current = false;
  for (st.iteration = 1; st.iteration <= std::max(1, cfg.max_outer);
       ++st.iteration) {
    const double prev_lambda = st.lambda;
    double k_after_lambda = st.k_value;
    if (!no_constraint_normal) {
      const auto start = Clock::now();
      const LambdaStep ls = lambda_step(ctx, st.t, st.lambda);
      ctx.timings().lambda_steps_ms += ms_since(start);
      if (ls.k_value >= st.k_value - ascent_slack || st.iteration == 1) {
        st.lambda = ls.lambda;
        k_after_lambda = ls.k_value;
      }
      if (ls.stalled) st.status = DualStatus::kStalled;
    }
    const auto start = Clock::now();
    TrsSolution trs = maximize_over_t(ctx, st.lambda);
    ctx.timings().t_steps_ms += ms_since(start);

    const double k_prev = st.k_value;
    if (trs.k_value >= k_after_lambda - ascent_slack || st.iteration == 1) {
      st.t = trs.t_star;
      st.k_value = trs.k_value;
      best_trs = std::move(trs);
      trs_current = true;
    } else {
      // The t-step could not improve on the previous t; keep it.
      st.k_value = k_after_lambda;
      trs_current = false;
    }
    st.last_improvement = st.k_value - k_prev;
    st.history.push_back({st.t, st.lambda, st.k_value});

    if (no_constraint_normal || st.status == DualStatus::kStalled) break;
    if (st.iteration > 1) {
      const bool flat = std::abs(st.last_improvement) <=
                        cfg.tol_outer * std::max(1.0, std::abs(st.k_value));
      const bool fixed = st.lambda == prev_lambda;
      if (fixed || (flat && trs_current && profile_optimal(ctx, best_trs))) {
        st.status = DualStatus::kConverged;
        break;
      }
    }
  }
  if (st.status == DualStatus::kRunning) {
    st.status = no_constraint_normal ? DualStatus::kConverged
                                     : DualStatus::kIterationCap;
  }

  auto adopt = [&](TrsSolution&& trs) {
    st.t = trs.t_star;
    st.lambda = trs.lambda;
    st.k_value = trs.k_value;
    best_trs = std::move(trs);
    trs_current = true;
    st.history.push_back({st.t, st.lambda, st.k_value});
  };
  if (!no_constraint_normal) {
    if (!trs_current || best_trs.lambda != st.lambda) {
      TrsSolution trs = maximize_over_t(ctx, st.lambda);
      if (trs.k_value >= st.k_value - ascent_slack) adopt(std::move(trs));
    }
    if (trs_current && !profile_optimal(ctx, best_trs)) {
      const auto start = Clock::now();
      TrsSolution trs = profile_search(ctx, best_trs, st.profile_steps);
      ctx.timings().lambda_steps_ms += ms_since(start);
      if (trs.k_value >= st.k_value - ascent_slack) {
        adopt(std::move(trs));
        if (profile_optimal(ctx, best_trs)) st.status = DualStatus::kConverged;
      }
    }
    if (const auto kink = kink_multiplier(ctx)) {
      const auto start = Clock::now();
      TrsSolution trs = maximize_over_t(ctx, *kink);
      ctx.timings().t_steps_ms += ms_since(start);
      if (trs.k_value >= st.k_value - ascent_slack) {
        adopt(std::move(trs));
        if (st.status != DualStatus::kStalled) {
          st.status = DualStatus::kConverged;
        }
      }
    }
  }
  if (!trs_current || best_trs.lambda != st.lambda) {
    best_trs = maximize_over_t(ctx, st.lambda);
  }

  result.t_star = st.t;
  result.lambda_star = st.lambda;
  result.d_star = st.k_value;
  result.trs = std::move(best_trs);

  const double window =
      cfg.eig.tol_cluster * std::max(1.0, std::abs(eA.value));
  result.hard_case =
      result.trs.hard_case || result.trs.eig_value >= eA.value - window;

  if (result.trs.hard_case) {
    const Index n = p.dim();
    const Index i = eA.multiplicity;
    EigResult e;
    e.value = eA.value;
    e.multiplicity = static_cast<int>(i + 1);
    e.basis = MatrixXd::Zero(n + 1, i + 1);
    e.basis(0, 0) = 1.0;
    e.basis.col(0).tail(n) = result.trs.x;
    e.basis.col(0).normalize();
    e.basis.bottomRightCorner(n, i) = eA.basis;
    e.anchored = 0;
    e.next_gap = eA.next_gap;
    result.eig_at_opt = std::move(e);
  } else {
    result.eig_at_opt = ctx.eig_D(result.t_star, result.lambda_star);
  }
  return result;
}

}  // namespace etrs
