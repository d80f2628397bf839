#pragma once

#include <cstdint>
#include <string>

#include "etrs/problem.hpp"

namespace etrs {

enum class FormatErrorKind {
  kOpen,
  kHeader,
  kNotSymmetric,
  kSize,
  kIndexRange,
  kValue,
  kCount,
  kDimension,
};

/// Malformed input file; `line` is 1-based (0 when not tied to a line).
class FormatError : public StructuralError {
 public:
  FormatError(FormatErrorKind kind, std::string path, long line,
              const std::string& message);
  FormatErrorKind kind;
  std::string path;
  long line;
};

/// Reads a "matrix coordinate real symmetric" Matrix Market file. Returns
/// the entries as stored (one triangle).
SparseMatrix read_matrix_market(const std::string& path);

/// Writes the lower triangle of a symmetric matrix, values with 17
/// significant digits.
void write_matrix_market(const std::string& path, const SparseMatrix& A);

/// Dense vector: one value per line, optionally preceded by a Matrix Market
/// "array" header and its size line. `expected` < 0 skips the length check.
VectorXd read_vector(const std::string& path, Index expected = -1);

void write_vector(const std::string& path, const VectorXd& v);

/// Loads and validates (structure, delta, Slater) an instance from files.
/// Throws FormatError or ValidationFailure.
ProblemInstance load_instance(const std::string& matrix_path,
                              const std::string& a_path,
                              const std::string& b_path, double c,
                              double delta);

/// 64-bit FNV-1a over the file's bytes.
std::uint64_t file_hash(const std::string& path);

}  // namespace etrs
