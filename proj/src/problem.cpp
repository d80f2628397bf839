#include "etrs/problem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace etrs {

namespace {

void check_dimensions(const ProblemInstance& p) {
  if (p.A.rows() != p.A.cols()) {
    throw StructuralError("matrix is not square");
  }
  if (p.A.rows() < 1) {
    throw StructuralError("problem dimension must be at least 1");
  }
  if (p.a.size() != p.A.rows() || p.b.size() != p.A.rows()) {
    throw StructuralError("vector lengths do not match matrix dimension " +
                          std::to_string(p.A.rows()));
  }
}

}  // namespace

ProblemInstance make_instance(const SparseMatrix& triangle, VectorXd a,
                              VectorXd b, double c, double delta) {
  if (triangle.rows() != triangle.cols()) {
    throw StructuralError("matrix is not square");
  }
  // Collect one value per unordered pair; a full symmetric input contributes
  // each off-diagonal pair twice with equal values.
  std::map<std::pair<Index, Index>, double> entries;
  for (Index k = 0; k < triangle.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(triangle, k); it; ++it) {
      const Index i = std::max(it.row(), it.col());
      const Index j = std::min(it.row(), it.col());
      auto [pos, inserted] = entries.emplace(std::make_pair(i, j), it.value());
      if (!inserted && pos->second != it.value()) {
        throw StructuralError("conflicting values for entry (" +
                              std::to_string(i + 1) + "," +
                              std::to_string(j + 1) + ")");
      }
    }
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * entries.size());
  for (const auto& [ij, v] : entries) {
    trips.emplace_back(ij.first, ij.second, v);
    if (ij.first != ij.second) trips.emplace_back(ij.second, ij.first, v);
  }
  ProblemInstance p;
  p.A.resize(triangle.rows(), triangle.cols());
  p.A.setFromTriplets(trips.begin(), trips.end());
  p.A.makeCompressed();
  p.a = std::move(a);
  p.b = std::move(b);
  p.c = c;
  p.delta = delta;
  check_dimensions(p);
  return p;
}

ProblemInstance make_instance_dense(const MatrixXd& A, VectorXd a, VectorXd b,
                                    double c, double delta) {
  SparseMatrix lower =
      MatrixXd(A.triangularView<Eigen::Lower>()).sparseView(0.0, 0.0);
  return make_instance(lower, std::move(a), std::move(b), c, delta);
}

std::string to_string(Violation v) {
  switch (v) {
    case Violation::kAsymmetricStorage:
      return "asymmetric storage";
    case Violation::kNonPositiveDelta:
      return "delta must be positive";
    case Violation::kSlaterFailure:
      return "Slater failure";
    case Violation::kPositiveDefinite:
      return "A positive definite";
    case Violation::kPendingEigenCheck:
      return "pending eigen check";
  }
  return "unknown";
}

bool ValidationReport::accepted() const {
  return std::all_of(violations.begin(), violations.end(), [](Violation v) {
    return v == Violation::kPendingEigenCheck;
  });
}

bool ValidationReport::contains(Violation v) const {
  return std::find(violations.begin(), violations.end(), v) !=
         violations.end();
}

std::string ValidationReport::describe() const {
  std::string out;
  for (Violation v : violations) {
    if (v == Violation::kPendingEigenCheck) continue;
    if (!out.empty()) out += "; ";
    out += to_string(v);
  }
  return out;
}

double positive_definite_threshold(const ProblemInstance& instance) {
  return 1e-10 * std::max(1.0, inf_norm(instance.A));
}

ValidationReport validate(const ProblemInstance& instance,
                          std::optional<double> lambda_min_A) {
  check_dimensions(instance);
  ValidationReport report;

  const SparseMatrix At = instance.A.transpose();
  SparseMatrix diff = instance.A - At;
  diff.prune(0.0, 0.0);
  if (diff.nonZeros() != 0) {
    report.violations.push_back(Violation::kAsymmetricStorage);
  }
  if (!(instance.delta > 0.0)) {
    report.violations.push_back(Violation::kNonPositiveDelta);
  } else if (!(-instance.b.norm() * std::sqrt(instance.delta) < instance.c)) {
    report.violations.push_back(Violation::kSlaterFailure);
  }
  if (!lambda_min_A) {
    report.violations.push_back(Violation::kPendingEigenCheck);
  } else if (*lambda_min_A > positive_definite_threshold(instance)) {
    report.violations.push_back(Violation::kPositiveDefinite);
  }
  return report;
}

KktResiduals kkt_residuals(const ProblemInstance& instance,
                           const Eigen::Ref<const VectorXd>& x, double lambda1,
                           double lambda2) {
  if (x.size() != instance.dim()) {
    throw StructuralError("point has wrong dimension");
  }
  KktResiduals r;
  const VectorXd stationarity = instance.A * x + lambda1 * x -
                                (instance.a - 0.5 * lambda2 * instance.b);
  r.kkt1 = stationarity.lpNorm<Eigen::Infinity>();
  r.primal_ball = x.squaredNorm() - instance.delta;
  r.primal_lin = instance.b.dot(x) - instance.c;
  r.kkt2 = lambda1 * r.primal_ball;
  r.kkt3 = lambda2 * r.primal_lin;
  return r;
}

double objective(const ProblemInstance& instance,
                 const Eigen::Ref<const VectorXd>& x) {
  return x.dot(instance.A * x) - 2.0 * instance.a.dot(x);
}

double ball_tolerance(const ProblemInstance& instance) {
  return 1e-8 * std::max(1.0, instance.delta);
}

double linear_tolerance(const ProblemInstance& instance) {
  return 1e-8 * std::max(1.0, std::abs(instance.c));
}

bool is_feasible(const ProblemInstance& instance,
                 const Eigen::Ref<const VectorXd>& x) {
  return x.squaredNorm() - instance.delta <= ball_tolerance(instance) &&
         instance.b.dot(x) - instance.c <= linear_tolerance(instance);
}

double inf_norm(const SparseMatrix& A) {
  VectorXd rows = VectorXd::Zero(A.rows());
  for (Index k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
      rows(it.row()) += std::abs(it.value());
    }
  }
  return rows.size() ? rows.maxCoeff() : 0.0;
}

double problem_scale(const ProblemInstance& instance) {
  const double r = std::sqrt(std::max(instance.delta, 0.0));
  return std::max({1.0, inf_norm(instance.A) * instance.delta,
                   2.0 * instance.a.norm() * r, std::abs(instance.c)});
}

}  // namespace etrs
