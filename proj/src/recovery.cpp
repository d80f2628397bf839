#include "etrs/recovery.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/QR>

namespace etrs {

namespace {

using Clock = std::chrono::steady_clock;

// Multipliers below this are treated as an inactive hyperplane.
constexpr double kLambdaZeroTol = 1e-8;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Real roots of s^2 + 2 p s + q = 0; a slightly negative discriminant
// (within `slack`) is clamped to zero.
std::optional<std::pair<double, double>> monic_roots(double p, double q,
                                                     double slack) {
  double disc = p * p - q;
  if (disc < 0.0) {
    if (disc < -slack) return std::nullopt;
    disc = 0.0;
  }
  const double r = std::sqrt(disc);
  // Stable form: compute the larger-magnitude root first.
  const double big = p >= 0.0 ? -p - r : -p + r;
  const double small = big != 0.0 ? q / big : 0.0;
  return std::make_pair(std::min(big, small), std::max(big, small));
}

// Among candidate points pick the feasible one with the lowest objective;
// ties go to the point closest to the hyperplane.
VectorXd pick_best(const ProblemInstance& p, std::vector<VectorXd> cands) {
  const double lin_tol = linear_tolerance(p);
  const double tie = 1e-12 * problem_scale(p);
  Index best = -1;
  double best_obj = std::numeric_limits<double>::infinity();
  double best_slack = std::numeric_limits<double>::infinity();
  double least_violation = std::numeric_limits<double>::infinity();
  Index least_violating = 0;
  for (Index k = 0; k < static_cast<Index>(cands.size()); ++k) {
    const double s = p.b.dot(cands[k]) - p.c;
    if (s > lin_tol) {
      if (s < least_violation) {
        least_violation = s;
        least_violating = k;
      }
      continue;
    }
    const double f = objective(p, cands[k]);
    const double slack = std::abs(s);
    if (best < 0 || f < best_obj - tie ||
        (f <= best_obj + tie && slack < best_slack)) {
      best = k;
      best_obj = std::min(f, best_obj);
      best_slack = slack;
    }
  }
  return std::move(cands[best >= 0 ? best : least_violating]);
}

double stationarity_residual(const ProblemInstance& p, double shift,
                             double mu, const VectorXd& x) {
  const VectorXd r =
      p.A * x - shift * x - (p.a - 0.5 * mu * p.b);
  return r.lpNorm<Eigen::Infinity>();
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kStrongDualitySolved:
      return "strong-duality-solved";
    case SolveStatus::kDualityGapLowerBound:
      return "duality-gap-lower-bound";
  }
  return "unknown";
}

std::optional<GapCertificate> gap_test(SolverContext& ctx,
                                       const DualResult& dual,
                                       const Eigen::Ref<const VectorXd>& x_cand) {
  const ProblemInstance& p = ctx.instance();
  const EigResult& eA = ctx.eig_A();
  const double window =
      ctx.config().eig.tol_cluster * std::max(1.0, std::abs(eA.value));
  if (!dual.hard_case || eA.value >= -window || eA.multiplicity != 1 ||
      dual.lambda_star <= kLambdaZeroTol) {
    return std::nullopt;
  }
  const VectorXd z = eA.basis.col(0).normalized();
  const double xz = x_cand.dot(z);
  const auto roots =
      monic_roots(xz, x_cand.squaredNorm() - p.delta, 0.0);
  if (!roots) return std::nullopt;

  GapCertificate cert;
  cert.mu = dual.lambda_star;
  cert.x1 = x_cand + roots->first * z;
  cert.x2 = x_cand + roots->second * z;
  cert.sign1 = p.b.dot(cert.x1) - p.c;
  cert.sign2 = p.b.dot(cert.x2) - p.c;

  const double lin_tol = linear_tolerance(p);
  const bool straddles = (cert.sign1 > lin_tol && cert.sign2 < -lin_tol) ||
                         (cert.sign1 < -lin_tol && cert.sign2 > lin_tol);
  if (!straddles) return std::nullopt;

  const double res_tol =
      1e-7 * std::max({1.0, p.a.lpNorm<Eigen::Infinity>(),
                       cert.mu * p.b.lpNorm<Eigen::Infinity>()});
  if (stationarity_residual(p, eA.value, cert.mu, cert.x1) > res_tol ||
      stationarity_residual(p, eA.value, cert.mu, cert.x2) > res_tol) {
    return std::nullopt;
  }
  return cert;
}

VectorXd complete_mult1(const ProblemInstance& instance,
                        const Eigen::Ref<const VectorXd>& x_cand,
                        const Eigen::Ref<const VectorXd>& z) {
  const VectorXd zn = z.normalized();
  const auto roots = monic_roots(x_cand.dot(zn),
                                 x_cand.squaredNorm() - instance.delta,
                                 1e-10 * std::max(1.0, instance.delta));
  if (!roots) {
    throw InternalInconsistency(
        "hard-case candidate lies outside the ball; no boundary completion");
  }
  return pick_best(instance, {x_cand + roots->first * zn,
                              x_cand + roots->second * zn});
}

VectorXd complete_mult2(const ProblemInstance& instance,
                        const Eigen::Ref<const VectorXd>& x_cand,
                        const Eigen::Ref<const MatrixXd>& Z,
                        double lambda_star) {
  if (Z.cols() != 2 || Z.rows() != instance.dim()) {
    throw StructuralError("two-dimensional eigenspace basis expected");
  }
  const ProblemInstance& p = instance;
  const Eigen::Vector2d w = Z.transpose() * p.b;
  const Eigen::Vector2d zx = Z.transpose() * x_cand;
  const double bx = p.b.dot(x_cand);
  const double lin_tol = linear_tolerance(p);
  const double wn = w.norm();
  const double w_tiny = 1e-12 * std::max(1.0, p.b.norm());

  if (lambda_star <= kLambdaZeroTol && bx <= p.c + lin_tol) {
    // Inactive hyperplane: move inside the eigenspace along a direction
    // that leaves b'x unchanged.
    Eigen::Vector2d u(1.0, 0.0);
    if (wn > w_tiny) u = Eigen::Vector2d(-w(1), w(0)) / wn;
    const VectorXd dir = Z * u;
    const double dn = dir.norm();
    const auto roots = monic_roots(x_cand.dot(dir) / (dn * dn),
                                   (x_cand.squaredNorm() - p.delta) / (dn * dn),
                                   1e-10 * std::max(1.0, p.delta));
    if (!roots) {
      throw InternalInconsistency(
          "hard-case candidate lies outside the ball; no boundary completion");
    }
    return pick_best(p, {x_cand + roots->first * dir,
                         x_cand + roots->second * dir});
  }

  // Active hyperplane: intersect the circle |x_cand + Z al|^2 = delta with
  // the line w'al = c - b'x_cand in eigenspace coordinates.
  const Eigen::Vector2d center = -zx;
  const double radius_sq = p.delta - x_cand.squaredNorm() + zx.squaredNorm();
  const double slack = 1e-6 * p.delta;
  if (radius_sq < -slack) {
    throw InternalInconsistency(
        "hard-case candidate lies outside the ball; no boundary completion");
  }
  const double radius = std::sqrt(std::max(0.0, radius_sq));
  const double h = p.c - bx;
  if (wn <= w_tiny) {
    if (std::abs(h) > lin_tol) {
      throw InternalInconsistency(
          "hyperplane cannot be reached inside the eigenspace");
    }
    return x_cand + Z * (center + Eigen::Vector2d(radius, 0.0));
  }
  const Eigen::Vector2d w_hat = w / wn;
  const Eigen::Vector2d w_perp(-w_hat(1), w_hat(0));
  double d = (h - w.dot(center)) / wn;
  double disc = radius_sq - d * d;
  if (disc < 0.0) {
    if (disc < -slack) {
      throw InternalInconsistency(
          "circle and hyperplane do not meet in the eigenspace");
    }
    disc = 0.0;
  }
  const double half = std::sqrt(disc);
  const Eigen::Vector2d foot = center + d * w_hat;
  return pick_best(p, {x_cand + Z * (foot + half * w_perp),
                       x_cand + Z * (foot - half * w_perp)});
}

Deflation deflate_and_reduce(const ProblemInstance& instance,
                             const EigResult& eig_A) {
  const Index i = eig_A.multiplicity;
  if (i <= 2) {
    throw StructuralError("deflation needs an eigenspace of dimension > 2");
  }
  const MatrixXd& Z = eig_A.basis;
  const VectorXd w = Z.transpose() * instance.b;

  // Orthonormal basis of R^i whose first column is along w; the trailing
  // columns map to eigenvectors orthogonal to b.
  MatrixXd Q = MatrixXd::Identity(i, i);
  if (w.norm() > 1e-12 * std::max(1.0, instance.b.norm())) {
    Eigen::HouseholderQR<MatrixXd> qr(w);
    Q = qr.householderQ() * MatrixXd::Identity(i, i);
  }
  MatrixXd remaining(Z.rows(), 2);
  remaining.col(0) = Z * Q.col(0);
  remaining.col(1) = Z * Q.col(1);
  MatrixXd lifted = Z * Q.rightCols(i - 2);

  const double tol = 1e-8 * std::max(1.0, instance.b.norm());
  for (Index k = 0; k < lifted.cols(); ++k) {
    if (std::abs(instance.b.dot(lifted.col(k))) > tol) {
      throw InternalInconsistency(
          "no eigenvector orthogonal to b found for deflation");
    }
  }
  const VectorXd shifts =
      VectorXd::Constant(i - 2, 1.0 + std::abs(eig_A.value));
  LowRankUpdatedOperator op(instance.A, lifted, shifts);
  return Deflation{std::move(op), std::move(lifted), std::move(remaining)};
}

SolveReport recover(SolverContext& ctx, const DualResult& dual) {
  const auto start = Clock::now();
  const ProblemInstance& p = ctx.instance();
  const EigResult& eA = ctx.eig_A();

  SolveReport rep;
  rep.dual_value = dual.d_star;
  rep.lambda2 = dual.lambda_star;
  rep.diagnostics["dual_status"] = to_string(dual.state.status);
  rep.diagnostics["outer_iterations"] = std::to_string(dual.state.iteration);
  rep.diagnostics["t_star"] = fmt(dual.t_star);
  rep.diagnostics["lambda_min_A"] = fmt(eA.value);
  rep.diagnostics["multiplicity_A"] = std::to_string(eA.multiplicity);
  if (eA.gap_warning) rep.diagnostics["gap_warning"] = "cluster separation small";

  VectorXd x;
  if (!dual.trs.hard_case) {
    x = dual.trs.x;
    rep.lambda1 = dual.trs.lambda1;
    if (x.size() != p.dim()) {
      throw InternalInconsistency("easy case without a primal candidate");
    }
    rep.diagnostics["branch"] = dual.hard_case ? "near-hard" : "easy";
  } else {
    const VectorXd& x_cand = dual.trs.x;
    rep.lambda1 = std::max(0.0, -eA.value);
    if (auto cert = gap_test(ctx, dual, x_cand)) {
      rep.status = SolveStatus::kDualityGapLowerBound;
      rep.objective = dual.d_star;
      rep.gap_certificate = std::move(cert);
      rep.diagnostics["branch"] = "gap";
      rep.timings = ctx.timings();
      rep.timings.recovery_ms += std::chrono::duration<double, std::milli>(
                                     Clock::now() - start)
                                     .count();
      rep.matvec_count = ctx.matvecs();
      return rep;
    }
    if (eA.multiplicity == 1) {
      x = complete_mult1(p, x_cand, eA.basis.col(0));
      rep.diagnostics["branch"] = "hard-simple";
    } else if (eA.multiplicity == 2) {
      x = complete_mult2(p, x_cand, eA.basis, dual.lambda_star);
      rep.diagnostics["branch"] = "hard-double";
    } else {
      const Deflation defl = deflate_and_reduce(p, eA);
      x = complete_mult2(p, x_cand, defl.remaining, dual.lambda_star);
      rep.diagnostics["branch"] = "hard-deflated";
      rep.diagnostics["deflated_vectors"] = std::to_string(defl.lifted.cols());
    }
  }

  rep.status = SolveStatus::kStrongDualitySolved;
  rep.objective = objective(p, x);
  rep.kkt = kkt_residuals(p, x, rep.lambda1, rep.lambda2);
  rep.x_star = std::move(x);
  rep.timings = ctx.timings();
  rep.timings.recovery_ms +=
      std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  rep.matvec_count = ctx.matvecs();
  return rep;
}

}  // namespace etrs
