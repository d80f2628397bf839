#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "etrs/commands.hpp"

namespace {

void add_config_flags(CLI::App* app, etrs::DualConfig& cfg,
                      const std::string& seed_flag) {
  app->add_option("--max-outer", cfg.max_outer, "Alternation iteration cap");
  app->add_option("--tol", cfg.tol_outer, "Relative stopping tolerance on k");
  app->add_option(seed_flag, cfg.eig.seed, "Eigensolver start-vector seed");
  app->add_option("--dense-threshold", cfg.eig.dense_threshold,
                  "Use dense eigensolvers up to this size");
}

// "50" or "20:100".
bool parse_range(const std::string& s, etrs::Index& lo, etrs::Index& hi) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) {
      lo = hi = std::stol(s);
    } else {
      lo = std::stol(s.substr(0, colon));
      hi = std::stol(s.substr(colon + 1));
    }
  } catch (const std::exception&) {
    return false;
  }
  return lo >= 1 && hi >= lo;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trust-region subproblem with one linear inequality"};
  app.require_subcommand(1);

  etrs::SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Solve an instance from files");
  s->add_option("--matrix", solve.matrix, "Matrix Market file (symmetric)")
      ->required();
  s->add_option("--a", solve.a, "Linear term vector file")->required();
  s->add_option("--b", solve.b, "Constraint normal vector file")->required();
  s->add_option("--c", solve.c, "Constraint offset")->required();
  s->add_option("--delta", solve.delta, "Squared ball radius")->required();
  s->add_option("--out", solve.out, "Report path (default: stdout)");
  s->add_option("--emit-x", solve.emit_x, "Write the solution vector here");
  add_config_flags(s, solve.config, "--seed");

  etrs::GenerateArgs gen;
  std::string gen_class = "1";
  auto* g = app.add_subcommand("generate", "Write a generated instance");
  g->add_option("--class", gen_class, "1, 2 or random")->required();
  g->add_option("--n", gen.spec.n, "Dimension")->required();
  g->add_option("--density", gen.spec.density, "Matrix density");
  g->add_option("--m", gen.spec.m, "Multiplicity of the smallest eigenvalue");
  g->add_option("--alpha", gen.spec.alpha, "Eigenvalue separation");
  g->add_option("--seed", gen.spec.seed, "Random seed");
  g->add_option("--out-dir", gen.out_dir, "Output directory")->required();

  etrs::VerifyArgs verify;
  std::string verify_class = "2";
  std::string verify_n = "50";
  auto* v = app.add_subcommand("verify", "Compare the solver with the dense "
                                         "reference solver");
  v->add_option("--class", verify_class, "1, 2 or random");
  v->add_option("--n", verify_n, "Dimension or range lo:hi");
  v->add_option("--count", verify.count, "Number of instances");
  v->add_option("--seed", verify.seed, "First seed");
  v->add_option("--density", verify.density, "Matrix density");
  v->add_option("--m", verify.m, "Multiplicity (class 1)");
  v->add_option("--alpha", verify.alpha, "Eigenvalue separation (class 1)");
  v->add_option("--oracle-cap", verify.oracle_cap, "Largest n for the reference");
  v->add_flag("--include-gap-fixture", verify.include_gap_fixture,
              "Append the planted duality-gap instance");

  etrs::BenchArgs bench;
  std::string bench_class = "1";
  auto* b = app.add_subcommand("bench", "KKT residual and timing table");
  b->add_option("--class", bench_class, "1, 2 or random");
  b->add_option("--n", bench.sizes, "Dimensions")->delimiter(',');
  b->add_option("--density", bench.density, "Matrix density");
  b->add_option("--m", bench.m, "Multiplicity (class 1)");
  b->add_option("--alpha", bench.alpha, "Eigenvalue separation (class 1)");
  b->add_option("--repeats", bench.repeats, "Instances per dimension");
  b->add_option("--seed", bench.seed, "First seed");
  b->add_option("--csv", bench.csv, "Also write CSV here");
  add_config_flags(b, bench.config, "--eig-seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : etrs::kExitError;
  }

  try {
    if (*s) return etrs::cmd_solve(solve, std::cout, std::cerr);
    if (*g) {
      gen.spec.class_id = etrs::parse_instance_class(gen_class);
      return etrs::cmd_generate(gen, std::cout, std::cerr);
    }
    if (*v) {
      verify.instance_class = etrs::parse_instance_class(verify_class);
      if (!parse_range(verify_n, verify.n_min, verify.n_max)) {
        std::cerr << "error: --n expects N or LO:HI\n";
        return etrs::kExitError;
      }
      return etrs::cmd_verify(verify, std::cout, std::cerr);
    }
    if (*b) {
      bench.instance_class = etrs::parse_instance_class(bench_class);
      return etrs::cmd_bench(bench, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return etrs::kExitError;
}
