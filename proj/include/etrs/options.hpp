#pragma once

#include <cstdint>

namespace etrs {

/// Knobs for the smallest-eigenpair engine. Tolerances are relative to
/// max(1, |lambda_min|).
struct EigOptions {
  double tol_eig = 1e-10;
  double tol_cluster = 1e-8;
  double tol_anchor = 1e-6;
  /// Operators of dimension <= this are decomposed densely.
  long dense_threshold = 400;
  int max_restarts = 300;
  /// Krylov basis size before a thick restart, as a multiple of block size.
  int basis_blocks = 12;
  std::uint64_t seed = 0x5eed;
};

/// Options for the alternating dual ascent (and, via `eig`, everything below).
struct DualConfig {
  int max_outer = 30;
  double tol_outer = 1e-10;
  /// Relative bracket width at which the lambda bisection stops.
  double tol_lambda = 1e-12;
  /// Upper bound for lambda; <= 0 selects 1e8 * max(1, ||a|| / ||b||).
  double lambda_cap = 0.0;
  int max_expansions = 60;
  /// Block size hint for the eigenbasis of A (grown automatically when the
  /// detected cluster fills the block).
  int eig_A_block = 4;
  EigOptions eig;
};

}  // namespace etrs
