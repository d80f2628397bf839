#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "etrs/instances.hpp"
#include "etrs/options.hpp"

namespace etrs {

/// Process exit codes of the command-line front end.
enum ExitCode : int { kExitSolved = 0, kExitError = 1, kExitGap = 2 };

struct SolveArgs {
  std::string matrix;
  std::string a;
  std::string b;
  double c = 0.0;
  double delta = 1.0;
  DualConfig config;
  std::string out;     // report path; empty writes to the output stream
  std::string emit_x;  // optional path for x*
};

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err);

struct GenerateArgs {
  GenSpec spec;
  std::string out_dir;
};

/// Writes A.mtx, a.vec, b.vec and manifest.json into out_dir.
int cmd_generate(const GenerateArgs& args, std::ostream& out,
                 std::ostream& err);

struct VerifyArgs {
  InstanceClass instance_class = InstanceClass::kClass2;
  Index n_min = 50;
  Index n_max = 50;
  int count = 20;
  std::uint64_t seed = 0;
  double density = 0.1;
  Index m = 2;
  double alpha = 1.0;
  bool include_gap_fixture = false;
  Index oracle_cap = 400;
  DualConfig config;
};

struct VerifyRow {
  std::string label;
  std::uint64_t seed = 0;
  Index n = 0;
  std::string solver_status;
  double solver_value = 0.0;
  double oracle_value = 0.0;
  double difference = 0.0;
  double kkt_max = 0.0;
  bool agree = false;
  std::string error;
};

std::vector<VerifyRow> run_verify(const VerifyArgs& args);
int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err);

struct BenchArgs {
  InstanceClass instance_class = InstanceClass::kClass1;
  std::vector<Index> sizes{1000};
  double density = 1e-3;
  Index m = 2;
  double alpha = 1.0;
  int repeats = 1;
  std::uint64_t seed = 0;
  std::string csv;  // optional CSV output path
  DualConfig config;
};

struct BenchRow {
  Index n = 0;
  int runs = 0;
  int failures = 0;
  double kkt1 = 0.0;
  double kkt2 = 0.0;
  double kkt3 = 0.0;
  double seconds = 0.0;
  double matvecs = 0.0;
  std::string note;
};

std::vector<BenchRow> run_bench(const BenchArgs& args);
int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err);

/// Worker count: hardware concurrency, capped by ETRS_THREADS when set.
unsigned worker_count();

/// The planted instance with a certified duality gap.
ProblemInstance gap_fixture();

}  // namespace etrs
