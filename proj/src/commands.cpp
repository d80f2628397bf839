#include "etrs/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "etrs/io.hpp"
#include "etrs/oracle.hpp"
#include "etrs/recovery.hpp"
#include "etrs/report.hpp"
#include "json.hpp"

namespace etrs {

namespace {

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// Runs fn(i) for i in [0, count) on up to worker_count() threads.
template <class F>
void parallel_for(int count, F&& fn) {
  const unsigned workers =
      std::max(1u, std::min<unsigned>(worker_count(), unsigned(count)));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < count; i = next++) fn(i);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
}

double kkt_max(const SolveReport& r, double scale) {
  return std::max({r.kkt.kkt1, std::abs(r.kkt.kkt2), std::abs(r.kkt.kkt3)}) /
         scale;
}

}  // namespace

unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ETRS_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

ProblemInstance gap_fixture() {
  MatrixXd A(2, 2);
  A << -1.0, 0.0, 0.0, 0.0;
  return make_instance_dense(A, VectorXd::Unit(2, 0),
                             2.0 * VectorXd::Unit(2, 0), 0.0, 1.0);
}

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const ProblemInstance p =
        load_instance(args.matrix, args.a, args.b, args.c, args.delta);
    const SolveReport rep = solve(p, args.config);
    InstanceMeta meta;
    meta.n = p.dim();
    meta.nnz = p.A.nonZeros();
    const std::string text = to_json(make_report(rep, meta));
    if (args.out.empty()) {
      out << text << '\n';
    } else {
      std::ofstream f(args.out);
      if (!f) throw StructuralError("cannot write report to " + args.out);
      f << text << '\n';
    }
    if (!args.emit_x.empty() && rep.x_star) write_vector(args.emit_x, *rep.x_star);
    return rep.status == SolveStatus::kStrongDualitySolved ? kExitSolved
                                                           : kExitGap;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

int cmd_generate(const GenerateArgs& args, std::ostream& out,
                 std::ostream& err) {
  namespace fs = std::filesystem;
  try {
    const ProblemInstance p = generate(args.spec);
    std::error_code ec;
    fs::create_directories(args.out_dir, ec);
    if (ec || !fs::is_directory(args.out_dir)) {
      throw StructuralError("cannot create directory " + args.out_dir);
    }
    const fs::path dir(args.out_dir);
    const std::string mtx = (dir / "A.mtx").string();
    const std::string av = (dir / "a.vec").string();
    const std::string bv = (dir / "b.vec").string();
    write_matrix_market(mtx, p.A);
    write_vector(av, p.a);
    write_vector(bv, p.b);

    nlohmann::json m;
    m["class"] = to_string(args.spec.class_id);
    m["n"] = args.spec.n;
    m["density"] = args.spec.density;
    m["m"] = args.spec.m;
    m["alpha"] = args.spec.alpha;
    m["seed"] = args.spec.seed;
    m["c"] = p.c;
    m["delta"] = p.delta;
    m["files"] = {{"A.mtx", hex64(file_hash(mtx))},
                  {"a.vec", hex64(file_hash(av))},
                  {"b.vec", hex64(file_hash(bv))}};
    std::ofstream f(dir / "manifest.json");
    if (!f) throw StructuralError("cannot write manifest in " + args.out_dir);
    f << m.dump(2) << '\n';
    out << "wrote " << args.out_dir << " (n=" << p.dim()
        << ", nnz=" << p.A.nonZeros() << ")\n";
    return kExitSolved;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

std::vector<VerifyRow> run_verify(const VerifyArgs& args) {
  if (args.n_max > args.oracle_cap) {
    throw OracleCapExceeded("n = " + std::to_string(args.n_max) +
                            " exceeds the reference solver cap " +
                            std::to_string(args.oracle_cap));
  }
  const int count = std::max(0, args.count);
  const int total = count + (args.include_gap_fixture ? 1 : 0);
  std::vector<VerifyRow> rows(static_cast<size_t>(total));
  const Index span = std::max<Index>(1, args.n_max - args.n_min + 1);

  parallel_for(total, [&](int i) {
    VerifyRow& row = rows[static_cast<size_t>(i)];
    ProblemInstance p;
    if (i < count) {
      GenSpec spec;
      spec.class_id = args.instance_class;
      spec.seed = args.seed + static_cast<std::uint64_t>(i);
      spec.n = args.n_min + static_cast<Index>(spec.seed % span);
      spec.density = args.density;
      spec.m = args.m;
      spec.alpha = args.alpha;
      row.label = to_string(spec.class_id);
      row.seed = spec.seed;
      try {
        p = generate(spec);
      } catch (const std::exception& e) {
        row.error = e.what();
        return;
      }
    } else {
      p = gap_fixture();
      row.label = "gap-fixture";
      row.seed = args.seed + static_cast<std::uint64_t>(count);
    }
    row.n = p.dim();
    try {
      const SolveReport r = solve(p, args.config);
      const OracleResult o = oracle_solve(p, args.oracle_cap);
      const double scale = problem_scale(p);
      row.solver_status = to_string(r.status);
      row.oracle_value = o.p_star;
      row.kkt_max = kkt_max(r, scale);
      if (r.status == SolveStatus::kStrongDualitySolved) {
        row.solver_value = r.objective;
        row.difference = std::abs(r.objective - o.p_star);
        row.agree = row.difference <= 1e-6 * std::max(1.0, std::abs(o.p_star));
      } else {
        row.solver_value = r.dual_value;
        row.difference = o.p_star - r.dual_value;
        row.agree = row.difference > 1e-6 * scale;
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  std::stable_sort(rows.begin(), rows.end(),
                   [](const VerifyRow& a, const VerifyRow& b) {
                     return a.seed < b.seed;
                   });
  return rows;
}

int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<VerifyRow> rows;
  try {
    rows = run_verify(args);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  out << std::left << std::setw(12) << "instance" << std::right
      << std::setw(8) << "seed" << std::setw(6) << "n" << "  " << std::left
      << std::setw(24) << "status" << std::right << std::setw(18)
      << "p_solver" << std::setw(18) << "p_oracle" << std::setw(12) << "|gap|"
      << std::setw(12) << "kkt" << "  agree\n";
  int agree = 0;
  for (const VerifyRow& r : rows) {
    out << std::left << std::setw(12) << r.label << std::right << std::setw(8)
        << r.seed << std::setw(6) << r.n << "  " << std::left << std::setw(24)
        << (r.error.empty() ? r.solver_status : "error") << std::right;
    if (r.error.empty()) {
      out << std::setprecision(10) << std::setw(18) << r.solver_value
          << std::setw(18) << r.oracle_value << std::setprecision(3)
          << std::setw(12) << r.difference << std::setw(12) << r.kkt_max
          << "  " << (r.agree ? "yes" : "NO") << '\n';
    } else {
      out << "  " << r.error << '\n';
    }
    agree += r.agree ? 1 : 0;
  }
  out << agree << "/" << rows.size() << " agree\n";
  return agree == static_cast<int>(rows.size()) ? kExitSolved : kExitError;
}

std::vector<BenchRow> run_bench(const BenchArgs& args) {
  using Clock = std::chrono::steady_clock;
  std::vector<BenchRow> rows;
  for (Index n : args.sizes) {
    BenchRow row;
    row.n = n;
    int ok = 0;
    for (int r = 0; r < std::max(1, args.repeats); ++r) {
      GenSpec spec;
      spec.class_id = args.instance_class;
      spec.n = n;
      spec.density = args.density;
      spec.m = args.m;
      spec.alpha = args.alpha;
      spec.seed = args.seed + static_cast<std::uint64_t>(r);
      ++row.runs;
      try {
        const ProblemInstance p = generate(spec);
        const auto start = Clock::now();
        const SolveReport rep = solve(p, args.config);
        row.seconds +=
            std::chrono::duration<double>(Clock::now() - start).count();
        row.kkt1 += rep.kkt.kkt1;
        row.kkt2 += std::abs(rep.kkt.kkt2);
        row.kkt3 += std::abs(rep.kkt.kkt3);
        row.matvecs += static_cast<double>(rep.matvec_count);
        if (rep.status == SolveStatus::kDualityGapLowerBound) {
          row.note = "gap";
        }
        ++ok;
      } catch (const std::exception& e) {
        ++row.failures;
        row.note = e.what();
      }
    }
    if (ok > 0) {
      row.kkt1 /= ok;
      row.kkt2 /= ok;
      row.kkt3 /= ok;
      row.seconds /= ok;
      row.matvecs /= ok;
    }
    rows.push_back(row);
  }
  return rows;
}

int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err) {
  const std::vector<BenchRow> rows = run_bench(args);
  out << std::right << std::setw(8) << "n" << std::setw(12) << "KKT1"
      << std::setw(12) << "KKT2" << std::setw(12) << "KKT3" << std::setw(10)
      << "time(s)" << std::setw(12) << "matvecs" << "  note\n";
  out << std::setprecision(3);
  for (const BenchRow& r : rows) {
    out << std::setw(8) << r.n << std::setw(12) << r.kkt1 << std::setw(12)
        << r.kkt2 << std::setw(12) << r.kkt3 << std::setw(10) << r.seconds
        << std::setw(12) << r.matvecs << "  " << r.note << '\n';
  }
  if (!args.csv.empty()) {
    std::ofstream f(args.csv);
    if (!f) {
      err << "error: cannot write " << args.csv << '\n';
      return kExitError;
    }
    f << "n,runs,failures,kkt1,kkt2,kkt3,seconds,matvecs\n";
    f << std::setprecision(17);
    for (const BenchRow& r : rows) {
      f << r.n << ',' << r.runs << ',' << r.failures << ',' << r.kkt1 << ','
        << r.kkt2 << ',' << r.kkt3 << ',' << r.seconds << ',' << r.matvecs
        << '\n';
    }
  }
  const bool failed = std::any_of(rows.begin(), rows.end(),
                                  [](const BenchRow& r) { return r.failures; });
  return failed ? kExitError : kExitSolved;
}

}  // namespace etrs
