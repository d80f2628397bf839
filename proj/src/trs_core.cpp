#include "etrs/trs_core.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "etrs/detail/root_find.hpp"

namespace etrs {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

}  // namespace

SolverContext::SolverContext(const ProblemInstance& instance, DualConfig config)
    : instance_(instance),
      config_(std::move(config)),
      scale_(problem_scale(instance)) {}

const EigResult& SolverContext::eig_A() {
  if (eig_A_) return *eig_A_;
  const auto start = Clock::now();
  const Index n = instance_.dim();
  if (n <= config_.eig.dense_threshold) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es{MatrixXd(instance_.A)};
    if (es.info() != Eigen::Success) {
      throw EigenFailure("dense eigendecomposition of A failed", 0.0, 0.0);
    }
    dense_Q_ = es.eigenvectors();
    dense_values_ = es.eigenvalues();
    DenseOperator op(MatrixXd(instance_.A));
    eig_A_ = smallest_eigpair_dense(op, config_.eig);
    // Reuse the decomposition already computed so both views agree exactly.
    eig_A_->value = dense_values_(0);
    eig_A_->basis = dense_Q_->leftCols(eig_A_->multiplicity);
  } else {
    eig_A_ = smallest_eig_A(instance_, config_.eig, config_.eig_A_block);
    matvecs_ += eig_A_->matvecs;
  }
  ++eig_solves_;
  timings_.eigen_ms += ms_since(start);
  return *eig_A_;
}

EigResult SolverContext::eig_D(double t, double lambda) {
  const int k_hint = eig_A().multiplicity + 2;
  const auto start = Clock::now();
  BorderedOperator op(instance_, t, lambda);
  EigOptions opts = config_.eig;
  opts.dense_threshold += 1;  // D has one more row than A
  EigResult r = smallest_eigpair(op, k_hint, opts, warm_D_);
  r = anchor_basis(std::move(r), opts.tol_anchor);
  warm_D_ = r.basis;
  matvecs_ += r.matvecs;
  ++eig_solves_;
  timings_.eigen_ms += ms_since(start);
  return r;
}

VectorXd SolverContext::apply_shifted_pinv(const Eigen::Ref<const VectorXd>& g) {
  const EigResult& e = eig_A();
  const Index i = e.multiplicity;
  if (dense_Q_) {
    VectorXd y = dense_Q_->transpose() * g;
    y.head(i).setZero();
    for (Index j = i; j < y.size(); ++j) y(j) /= dense_values_(j) - e.value;
    return *dense_Q_ * y;
  }
  // Conjugate gradients on the complement of the eigenspace, re-projecting
  // every iterate so the singular directions never enter.
  const MatrixXd& Z = e.basis;
  auto project = [&Z](VectorXd& v) { v.noalias() -= Z * (Z.transpose() * v); };
  VectorXd r = g;
  project(r);
  VectorXd x = VectorXd::Zero(g.size());
  const double target = 1e-13 * std::max(r.norm(), 1e-300);
  VectorXd p = r;
  double rs = r.squaredNorm();
  const Index max_iter = std::max<Index>(2000, 10 * g.size());
  for (Index k = 0; k < max_iter && std::sqrt(rs) > target; ++k) {
    VectorXd Ap = instance_.A * p - e.value * p;
    project(Ap);
    ++matvecs_;
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0)) break;
    const double alpha = rs / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    project(r);
    const double rs_new = r.squaredNorm();
    p = r + (rs_new / rs) * p;
    rs = rs_new;
  }
  VectorXd check = g - (instance_.A * x - e.value * x);
  project(check);
  const double res = check.norm();
  if (res > 1e-8 * std::max(1.0, g.norm())) {
    throw IterativeSolveFailure("deflated CG did not converge", res);
  }
  return x;
}

DualEval eval_k(SolverContext& ctx, double t, double lambda) {
  const ProblemInstance& p = ctx.instance();
  DualEval ev;
  ev.t = t;
  ev.lambda = lambda;
  ev.eig = ctx.eig_D(t, lambda);
  ev.k_value = (p.delta + 1.0) * ev.eig.value - t - lambda * p.c;
  if (ev.eig.anchored) {
    const auto v = ev.eig.basis.col(*ev.eig.anchored);
    const double y0 = v(0);
    const double bz = p.b.dot(v.tail(p.dim()));
    ev.grad_t = (p.delta + 1.0) * y0 * y0 - 1.0;
    ev.grad_lambda = (p.delta + 1.0) * y0 * bz - p.c;
    ev.differentiable = ev.eig.multiplicity == 1;
  } else {
    ev.grad_t = -1.0;
    ev.grad_lambda = -p.c;
    ev.differentiable = false;
  }
  return ev;
}

HardCaseCandidate hard_case_candidate(SolverContext& ctx, double lambda) {
  const ProblemInstance& p = ctx.instance();
  const EigResult& e = ctx.eig_A();
  const VectorXd g = p.a - (0.5 * lambda) * p.b;
  HardCaseCandidate hc;
  hc.eigenspace_component = (e.basis.transpose() * g).norm();
  hc.x = ctx.apply_shifted_pinv(g);
  hc.t0 = e.value + g.dot(hc.x);
  return hc;
}

double compute_t0(SolverContext& ctx, double lambda) {
  return hard_case_candidate(ctx, lambda).t0;
}

TrsSolution maximize_over_t(SolverContext& ctx, double lambda) {
  const ProblemInstance& p = ctx.instance();
  const DualConfig& cfg = ctx.config();
  const EigResult& eA = ctx.eig_A();
  const double lam_min = eA.value;
  const double delta = p.delta;
  const double root_delta = std::sqrt(delta);
  const VectorXd g = p.a - (0.5 * lambda) * p.b;
  const double gn = g.norm();
  const double component = (eA.basis.transpose() * g).norm();

  TrsSolution sol;
  sol.lambda = lambda;

  double hi_cap = std::numeric_limits<double>::infinity();
  double psi_cap = 0.0;
  if (component <= 1e-9 * std::max(1.0, gn)) {
    // g has (numerically) no component in the eigenspace: either the
    // hard case proper, or the root lies strictly left of t0.
    HardCaseCandidate hc = hard_case_candidate(ctx, lambda);
    const double xn2 = hc.x.squaredNorm();
    sol.t0 = hc.t0;
    if (xn2 <= delta * (1.0 + 1e-8)) {
      sol.t_star = hc.t0;
      sol.hard_case = true;
      sol.lambda1 = -lam_min;
      sol.boundary_norm_sq = xn2;
      sol.x = std::move(hc.x);
      sol.eig_value = lam_min;
      sol.k_value = (delta + 1.0) * lam_min - hc.t0 - lambda * p.c;
      return sol;
    }
    hi_cap = hc.t0;
    psi_cap = 1.0 / std::sqrt(xn2) - 1.0 / root_delta;
  }

  // psi(t) = 1/||x(t)|| - 1/sqrt(delta) has the sign of the t-derivative of
  // k and is close to linear near the root, so it drives the interpolation.
  struct Candidate {
    double t;
    double k_value;
    double eig_value;
    double grad_abs;
    VectorXd x;
  };
  std::vector<Candidate> seen;
  const double g_scale = delta + 1.0;
  auto probe = [&](double t) -> detail::Probe {
    DualEval ev = eval_k(ctx, t, lambda);
    ++sol.probes;
    if (!ev.eig.anchored) return {-1.0 / root_delta, false};
    const MatrixXd& B = ev.eig.basis;
    const Index n = p.dim();
    // Largest first component attainable inside the cluster.
    const double r = B.row(0).norm();
    double psi;
    double grad_abs;
    VectorXd x;
    if (ev.eig.multiplicity > 1) {
      // Inside a (numerical) cluster the eigenvectors do not determine the
      // slope; the sign comes from a difference of k, valid by concavity.
      const double h = 1e-10 * std::max(1.0, std::abs(t));
      const DualEval ahead = eval_k(ctx, t + h, lambda);
      ++sol.probes;
      psi = (ahead.k_value - ev.k_value) / h;
      if (g_scale * r * r >= 1.0) {
        // Rotate to a unit cluster vector with first component
        // 1/sqrt(delta + 1), which puts x on the sphere.
        const VectorXd f = B.row(0).transpose() / r;
        Index j = 0;
        f.cwiseAbs().minCoeff(&j);
        VectorXd q = VectorXd::Unit(f.size(), j) - f(j) * f;
        q.normalize();
        const double cs = 1.0 / (r * std::sqrt(g_scale));
        const double sn = std::sqrt(std::max(0.0, 1.0 - cs * cs));
        const VectorXd v = B * (cs * f + sn * q);
        x = v.tail(n) / v(0);
        grad_abs = 0.0;
      } else {
        x = B.col(*ev.eig.anchored).tail(n) / B(0, *ev.eig.anchored);
        grad_abs = std::abs(g_scale * r * r - 1.0);
      }
    } else {
      const double y0 = B(0, *ev.eig.anchored);
      const double rest = 1.0 - y0 * y0;
      psi = rest > 0.0 ? y0 / std::sqrt(rest) - 1.0 / root_delta : 1e300;
      grad_abs = std::abs(ev.grad_t);
      x = B.col(*ev.eig.anchored).tail(n) / y0;
    }
    const bool done = ev.eig.multiplicity == 1 && grad_abs <= 1e-10;
    seen.push_back({t, ev.k_value, ev.eig.value, grad_abs, std::move(x)});
    return {psi, done};
  };

  double lo = lam_min - gn * (delta + 1.0) / root_delta - 1.0;
  double hi = std::isfinite(hi_cap) ? hi_cap : lam_min + gn * root_delta + 1.0;
  detail::Probe phi{psi_cap, false};
  bool have_hi = std::isfinite(hi_cap);
  detail::Probe plo = probe(lo);
  for (int e = 0; !plo.done && plo.value <= 0.0; ++e) {
    if (e >= cfg.max_expansions) {
      throw IterativeSolveFailure("no lower bracket for t (dual unbounded?)",
                                  plo.value);
    }
    const double step = std::max(1.0, hi - lo);
    phi = plo;
    have_hi = true;
    hi = lo;
    lo -= step;
    plo = probe(lo);
  }
  if (!plo.done && !have_hi) {
    phi = probe(hi);
    for (int e = 0; !phi.done && phi.value > 0.0; ++e) {
      if (e >= cfg.max_expansions) {
        throw IterativeSolveFailure("no upper bracket for t", phi.value);
      }
      const double step = std::max(1.0, hi - lo);
      lo = hi;
      plo = phi;
      hi += step;
      phi = probe(hi);
    }
  }
  if (!plo.done && !phi.done) {
    detail::illinois_decreasing(
        probe, lo, plo.value, hi, phi.value,
        [](double l, double h) {
          return 1e-12 * std::max({1.0, std::abs(l), std::abs(h)});
        });
  }
  if (seen.empty()) {
    throw InternalInconsistency(
        "no eigenvector with nonzero first component during t-maximization");
  }
  // k is concave in t: keep the probes that attain the maximum up to
  // rounding and among them the one closest to stationarity.
  double k_max = -std::numeric_limits<double>::infinity();
  for (const Candidate& c : seen) k_max = std::max(k_max, c.k_value);
  const double k_tol = 1e-13 * ctx.scale();
  Candidate* best = nullptr;
  for (Candidate& c : seen) {
    if (c.k_value < k_max - k_tol) continue;
    if (!best || c.grad_abs < best->grad_abs) best = &c;
  }
  sol.t_star = best->t;
  sol.lambda1 = -best->eig_value;
  sol.boundary_norm_sq = best->x.squaredNorm();
  sol.x = std::move(best->x);
  sol.k_value = best->k_value;
  sol.eig_value = best->eig_value;
  return sol;
}

}  // namespace etrs
