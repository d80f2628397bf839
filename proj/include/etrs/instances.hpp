#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "etrs/problem.hpp"

namespace etrs {

enum class InstanceClass { kClass1, kClass2, kRandom };

std::string to_string(InstanceClass c);
InstanceClass parse_instance_class(const std::string& s);

struct GenSpec {
  InstanceClass class_id = InstanceClass::kClass1;
  Index n = 100;
  double density = 0.01;
  /// Multiplicity of the smallest eigenvalue (class 1 only).
  Index m = 2;
  /// Gap between the planted eigenvalue and the rest (class 1 only).
  double alpha = 1.0;
  std::uint64_t seed = 0;
};

/// Random sparse symmetric matrix: about density * n^2 / 2 positions drawn
/// uniformly from the upper triangle (diagonal included) with standard
/// normal values, mirrored.
SparseMatrix random_sparse_symmetric(Index n, double density,
                                     std::mt19937_64& rng);

/// blkdiag(A0, (lambda_min(A0) - alpha) I_m) under a random symmetric
/// permutation; a, b ~ 10 N(0, I); delta = 1; c centered on b'x for a random
/// interior point x.
ProblemInstance generate_class1(const GenSpec& spec);

/// Random sparse A shifted so lambda_min(A) <= -0.1; a ~ 10 N(0, I);
/// b = e_1; c = 1; delta = 1.
ProblemInstance generate_class2(const GenSpec& spec);

/// Dense random instance with no planted structure: A ~ symmetric N(0, 1),
/// a, b ~ N(0, I), delta ~ U(0.5, 2), c around b'x for an interior x.
ProblemInstance generate_random(const GenSpec& spec);

ProblemInstance generate(const GenSpec& spec);

}  // namespace etrs
