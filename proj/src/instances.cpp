#include "etrs/instances.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "etrs/eigen_engine.hpp"
#include "etrs/options.hpp"

namespace etrs {

namespace {

VectorXd randn(Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, 1.0);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = scale * dist(rng);
  return v;
}

// A uniformly random point strictly inside the ball of squared radius delta.
VectorXd interior_point(Index n, double delta, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VectorXd x = randn(n, rng);
  const double nx = x.norm();
  if (nx == 0.0) return x;
  const double r = std::sqrt(delta) * 0.9 * std::pow(u(rng), 1.0 / double(n));
  return x * (r / nx);
}

// c = b'x + U(-1, 1) for an interior x; retried until Slater holds.
double draw_offset(const VectorXd& b, double delta, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double floor = -b.norm() * std::sqrt(delta);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const VectorXd x = interior_point(b.size(), delta, rng);
    const double c = b.dot(x) + u(rng);
    if (c > floor) return c;
  }
  throw std::runtime_error("could not draw a Slater-feasible offset");
}

double smallest_eigenvalue(const SparseMatrix& A) {
  if (A.rows() <= 400) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(MatrixXd(A),
                                               Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  }
  SparseOperator op(A);
  return smallest_eigpair(op, 2, EigOptions{}).value;
}

}  // namespace

std::string to_string(InstanceClass c) {
  switch (c) {
    case InstanceClass::kClass1:
      return "class1";
    case InstanceClass::kClass2:
      return "class2";
    case InstanceClass::kRandom:
      return "random";
  }
  return "unknown";
}

InstanceClass parse_instance_class(const std::string& s) {
  if (s == "1" || s == "class1") return InstanceClass::kClass1;
  if (s == "2" || s == "class2") return InstanceClass::kClass2;
  if (s == "random") return InstanceClass::kRandom;
  throw std::invalid_argument("unknown instance class '" + s + "'");
}

SparseMatrix random_sparse_symmetric(Index n, double density,
                                     std::mt19937_64& rng) {
  if (n < 1) throw std::invalid_argument("matrix size must be positive");
  if (!(density > 0.0 && density <= 1.0)) {
    throw std::invalid_argument("density must lie in (0, 1]");
  }
  const double slots = 0.5 * double(n) * double(n + 1);
  const auto target = static_cast<std::size_t>(std::clamp(
      std::round(0.5 * density * double(n) * double(n)), 1.0, slots));
  std::uniform_int_distribution<Index> pick(0, n - 1);
  std::normal_distribution<double> value(0.0, 1.0);
  std::set<std::pair<Index, Index>> seen;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * target);
  while (seen.size() < target) {
    Index i = pick(rng);
    Index j = pick(rng);
    if (i > j) std::swap(i, j);
    if (!seen.emplace(i, j).second) continue;
    const double v = value(rng);
    trips.emplace_back(i, j, v);
    if (i != j) trips.emplace_back(j, i, v);
  }
  SparseMatrix A(n, n);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

ProblemInstance generate_class1(const GenSpec& spec) {
  if (spec.class_id != InstanceClass::kClass1) {
    throw std::invalid_argument("class1 generator called with another class");
  }
  const Index n = spec.n;
  const Index m = spec.m;
  if (m < 1 || n <= m) throw std::invalid_argument("class1 needs n > m >= 1");
  if (!(spec.alpha > 0.0)) throw std::invalid_argument("alpha must be positive");

  std::mt19937_64 rng(spec.seed);
  const Index n0 = n - m;
  const SparseMatrix A0 = random_sparse_symmetric(n0, spec.density, rng);
  const double planted = smallest_eigenvalue(A0) - spec.alpha;

  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(A0.nonZeros() + m);
  for (Index k = 0; k < A0.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A0, k); it; ++it) {
      trips.emplace_back(perm[it.row()], perm[it.col()], it.value());
    }
  }
  for (Index i = n0; i < n; ++i) trips.emplace_back(perm[i], perm[i], planted);

  ProblemInstance p;
  p.A.resize(n, n);
  p.A.setFromTriplets(trips.begin(), trips.end());
  p.A.makeCompressed();
  p.a = randn(n, rng, 10.0);
  p.b = randn(n, rng, 10.0);
  p.delta = 1.0;
  p.c = draw_offset(p.b, p.delta, rng);
  return p;
}

ProblemInstance generate_class2(const GenSpec& spec) {
  if (spec.class_id != InstanceClass::kClass2) {
    throw std::invalid_argument("class2 generator called with another class");
  }
  const Index n = spec.n;
  std::mt19937_64 rng(spec.seed);
  SparseMatrix A = random_sparse_symmetric(n, spec.density, rng);
  const double lmin = smallest_eigenvalue(A);
  if (lmin > -0.1) {
    SparseMatrix shift(n, n);
    shift.setIdentity();
    A -= (lmin + 0.1) * shift;
    A.makeCompressed();
  }
  ProblemInstance p;
  p.A = std::move(A);
  p.a = randn(n, rng, 10.0);
  p.b = VectorXd::Unit(n, 0);
  p.c = 1.0;
  p.delta = 1.0;
  return p;
}

ProblemInstance generate_random(const GenSpec& spec) {
  const Index n = spec.n;
  if (n < 1) throw std::invalid_argument("matrix size must be positive");
  std::mt19937_64 rng(spec.seed);
  MatrixXd M(n, n);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) M(i, j) = M(j, i) = dist(rng);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(M, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin > -0.1) M.diagonal().array() -= lmin + 0.1;

  std::uniform_real_distribution<double> u(0.5, 2.0);
  const double delta = u(rng);
  VectorXd a = randn(n, rng);
  VectorXd b = randn(n, rng);
  const double c = draw_offset(b, delta, rng);
  return make_instance_dense(M, std::move(a), std::move(b), c, delta);
}

ProblemInstance generate(const GenSpec& spec) {
  switch (spec.class_id) {
    case InstanceClass::kClass1:
      return generate_class1(spec);
    case InstanceClass::kClass2:
      return generate_class2(spec);
    case InstanceClass::kRandom:
      return generate_random(spec);
  }
  throw std::invalid_argument("unknown instance class");
}

}  // namespace etrs
