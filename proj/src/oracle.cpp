#include "etrs/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

namespace etrs {

namespace {

struct Spectrum {
  VectorXd d;  // ascending
  MatrixXd Q;
  VectorXd gamma;  // Q'g
};

Spectrum decompose(const MatrixXd& H, const VectorXd& g) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(H);
  if (es.info() != Eigen::Success) {
    throw InternalInconsistency("dense eigendecomposition failed");
  }
  return {es.eigenvalues(), es.eigenvectors(),
          es.eigenvectors().transpose() * g};
}

double norm_sq_at(const Spectrum& s, double mu) {
  double acc = 0.0;
  for (Index i = 0; i < s.d.size(); ++i) {
    const double r = s.gamma(i) / (s.d(i) + mu);
    acc += r * r;
  }
  return acc;
}

VectorXd point_at(const Spectrum& s, double mu) {
  VectorXd coef(s.d.size());
  for (Index i = 0; i < s.d.size(); ++i) coef(i) = s.gamma(i) / (s.d(i) + mu);
  return s.Q * coef;
}

double quad_value(const MatrixXd& H, const VectorXd& g, const VectorXd& x) {
  return x.dot(H * x) - 2.0 * g.dot(x);
}

// Bisects a sign change of f on [lo, hi] until the interval stops shrinking.
template <class F>
double bisect(F&& f, double lo, double hi) {
  const bool lo_neg = f(lo) < 0.0;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if ((f(mid) < 0.0) == lo_neg) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct Stationary {
  VectorXd x;
  double mu;
};

// Sphere stationary points with multiplier strictly between the two
// smallest distinct eigenvalues (negated), restricted to mu >= 0. These are
// the only candidates for a local, non-global ball minimizer.
std::vector<Stationary> local_sphere_points(const Spectrum& s,
                                            double radius_sq) {
  std::vector<Stationary> out;
  const Index n = s.d.size();
  const double d1 = s.d(0);
  const double tol = 1e-10 * std::max(1.0, s.d.cwiseAbs().maxCoeff());
  Index next = 0;
  while (next < n && s.d(next) <= d1 + tol) ++next;
  if (next >= n || d1 >= 0.0) return out;
  const double hi = -d1;
  const double lo = std::max(0.0, -s.d(next));
  if (!(lo < hi)) return out;

  const double eps = 1e-13 * std::max(1.0, hi - lo);
  const double a = lo == 0.0 && -s.d(next) < 0.0 ? lo : lo + eps;
  const double b = hi - eps;
  if (!(a < b)) return out;
  auto phi = [&](double mu) { return norm_sq_at(s, mu) - radius_sq; };
  auto dphi = [&](double mu) {
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double r = s.d(i) + mu;
      acc -= 2.0 * s.gamma(i) * s.gamma(i) / (r * r * r);
    }
    return acc;
  };
  // phi is convex on the interval; locate its minimum through phi'.
  double m;
  if (dphi(a) >= 0.0) {
    m = a;
  } else if (dphi(b) <= 0.0) {
    m = b;
  } else {
    m = bisect(dphi, a, b);
  }
  if (phi(m) > 0.0) return out;
  if (phi(a) >= 0.0) {
    const double mu = bisect(phi, a, m);
    out.push_back({point_at(s, mu), mu});
  }
  if (phi(b) >= 0.0) {
    const double mu = bisect(phi, m, b);
    out.push_back({point_at(s, mu), mu});
  }
  return out;
}

DenseTrsSolution dense_trs_impl(const MatrixXd& H, const Spectrum& s,
                                const VectorXd& g, double radius_sq) {
  const Index n = s.d.size();
  DenseTrsSolution sol;
  if (radius_sq <= 0.0) {
    sol.x = VectorXd::Zero(n);
    sol.multiplier = 0.0;
    sol.value = 0.0;
    return sol;
  }
  const double d1 = s.d(0);
  const double scale = std::max(1.0, s.d.cwiseAbs().maxCoeff());
  const double tol = 1e-10 * scale;

  if (d1 > tol && norm_sq_at(s, 0.0) <= radius_sq) {
    sol.x = point_at(s, 0.0);
    sol.multiplier = 0.0;
    sol.value = quad_value(H, g, sol.x);
    return sol;
  }

  double mu_low = std::max(0.0, -d1);
  Index cluster = 0;
  if (d1 <= tol) {
    while (cluster < n && s.d(cluster) <= d1 + tol) ++cluster;
    const double g_tol = 1e-10 * std::max(1.0, s.gamma.norm());
    bool flat = true;
    for (Index i = 0; i < cluster; ++i) flat = flat && std::abs(s.gamma(i)) <= g_tol;
    if (flat) {
      VectorXd coef = VectorXd::Zero(n);
      for (Index i = cluster; i < n; ++i) {
        coef(i) = s.gamma(i) / (s.d(i) + mu_low);
      }
      if (coef.squaredNorm() <= radius_sq) {
        sol.hard_case = true;
        sol.multiplier = mu_low;
        sol.x = s.Q * coef;
        sol.null_basis = s.Q.leftCols(cluster);
        // Every member of the family has the same value; evaluate one on
        // the sphere.
        const double r = std::sqrt(std::max(0.0, radius_sq - coef.squaredNorm()));
        const VectorXd member = sol.x + r * sol.null_basis.col(0);
        sol.value = quad_value(H, g, member);
        return sol;
      }
    }
  } else {
    mu_low = 0.0;
  }

  // phi(mu) = ||x(mu)||^2 - radius_sq is decreasing on (mu_low, inf).
  const double lo = mu_low;
  double hi = mu_low + s.gamma.norm() / std::sqrt(radius_sq) + 1.0;
  auto phi = [&](double mu) {
    if (mu <= lo) return std::numeric_limits<double>::infinity();
    return norm_sq_at(s, mu) - radius_sq;
  };
  while (phi(hi) > 0.0) hi = lo + 2.0 * (hi - lo);
  const double mu = bisect(phi, lo, hi);
  sol.multiplier = mu;
  sol.x = point_at(s, mu);
  sol.value = quad_value(H, g, sol.x);
  return sol;
}

}  // namespace

DenseTrsSolution dense_trs(const MatrixXd& H, const VectorXd& g,
                           double radius_sq) {
  return dense_trs_impl(H, decompose(H, g), g, radius_sq);
}

OracleResult oracle_solve(const ProblemInstance& instance, Index cap) {
  const Index n = instance.dim();
  if (n > cap) {
    throw OracleCapExceeded("dimension " + std::to_string(n) +
                            " exceeds the dense reference cap " +
                            std::to_string(cap));
  }
  const MatrixXd A = MatrixXd(instance.A);
  const VectorXd& a = instance.a;
  const VectorXd& b = instance.b;
  const double delta = instance.delta;
  const double lin_tol = linear_tolerance(instance);

  OracleResult best;
  best.p_star = std::numeric_limits<double>::infinity();
  auto offer = [&](const VectorXd& x, double l1, double l2, const char* set) {
    if (b.dot(x) - instance.c > lin_tol) return;
    const double f = objective(instance, x);
    if (f < best.p_star) {
      best.p_star = f;
      best.x = x;
      best.lambda1 = l1;
      best.lambda2 = l2;
      best.active_set = set;
    }
  };

  // Linear constraint inactive: global ball minimizers first.
  const Spectrum s = decompose(A, a);
  const DenseTrsSolution ball = dense_trs_impl(A, s, a, delta);
  if (ball.hard_case) {
    const VectorXd nb = ball.null_basis.transpose() * b;
    const double r = std::sqrt(std::max(0.0, delta - ball.x.squaredNorm()));
    VectorXd w = VectorXd::Zero(ball.null_basis.cols());
    if (nb.norm() > 0.0) {
      w = -r * nb / nb.norm();
    } else {
      w(0) = r;
    }
    offer(ball.x + ball.null_basis * w, ball.multiplier, 0.0, "ball");
  } else {
    offer(ball.x, ball.multiplier, 0.0, "ball");
  }
  // Local, non-global ball minimizers.
  for (const Stationary& p : local_sphere_points(s, delta)) {
    offer(p.x, p.mu, 0.0, "ball-local");
  }

  // Linear constraint active: TRS on the hyperplane section of the ball.
  const double bn2 = b.squaredNorm();
  if (bn2 > 0.0) {
    const VectorXd x0 = (instance.c / bn2) * b;
    const double radius_sq = delta - x0.squaredNorm();
    if (radius_sq >= -1e-14 * std::max(1.0, delta)) {
      Eigen::HouseholderQR<MatrixXd> qr(b);
      const MatrixXd W =
          (qr.householderQ() * MatrixXd::Identity(n, n)).rightCols(n - 1);
      if (n == 1) {
        offer(x0, 0.0, 0.0, "hyperplane");
      } else {
        const MatrixXd H = W.transpose() * A * W;
        const VectorXd g = W.transpose() * (a - A * x0);
        const DenseTrsSolution sub =
            dense_trs(0.5 * (H + H.transpose()), g, std::max(0.0, radius_sq));
        VectorXd u = sub.x;
        if (sub.hard_case && sub.multiplier > 0.0) {
          const double r = std::sqrt(
              std::max(0.0, radius_sq - u.squaredNorm()));
          u += r * sub.null_basis.col(0);
        }
        const VectorXd x = x0 + W * u;
        const double l1 = sub.multiplier;
        const VectorXd resid = A * x + l1 * x - a;
        const double l2 = -2.0 * b.dot(resid) / bn2;
        offer(x, l1, l2, "hyperplane");
      }
    }
  }
  if (!std::isfinite(best.p_star)) {
    throw InternalInconsistency("reference solver found no feasible point");
  }
  return best;
}

}  // namespace etrs
