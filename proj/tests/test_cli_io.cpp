#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "etrs/commands.hpp"
#include "etrs/io.hpp"
#include "etrs/recovery.hpp"
#include "etrs/report.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace etrs;
using namespace etrs::test;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("etrs_test_") + info->test_suite_name() + "_" +
            info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) const {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }
  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }

  // Writes an instance as matrix/a/b files and returns their paths.
  std::array<std::string, 3> write_instance(const ProblemInstance& p,
                                            const std::string& tag) const {
    std::array<std::string, 3> files{path(tag + "A.mtx"), path(tag + "a.vec"),
                                     path(tag + "b.vec")};
    write_matrix_market(files[0], p.A);
    write_vector(files[1], p.a);
    write_vector(files[2], p.b);
    return files;
  }

  fs::path dir_;
};

FormatErrorKind kind_of(const std::string& path) {
  try {
    read_matrix_market(path);
  } catch (const FormatError& e) {
    return e.kind;
  }
  ADD_FAILURE() << "no error raised for " << path;
  return FormatErrorKind::kOpen;
}

const char* kHeader = "%%MatrixMarket matrix coordinate real symmetric\n";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ETRS_CLI_PATH) + " " + args +
                          " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

using LoadInstance = TempDir;
using Report = TempDir;
using Commands = TempDir;

TEST_F(LoadInstance, DiagFixture) {
  const auto m = write("A.mtx", std::string(kHeader) +
                                    "% comment\n2 2 2\n1 1 -2\n2 2 1\n");
  const auto a = write("a.vec", "0\n0\n");
  const auto b = write("b.vec", "1\n0\n");
  const auto p = load_instance(m, a, b, 0.0, 1.0);
  EXPECT_EQ(MatrixXd(p.A), dense(diag21({0, 0}, {1, 0}, 0.0)));
  EXPECT_EQ(p.b, Eigen::Vector2d(1, 0));
}

TEST_F(LoadInstance, MirrorsLowerTriangle) {
  const auto m = write("A.mtx", std::string(kHeader) +
                                    "2 2 3\n1 1 -1\n2 1 0.5\n2 2 1\n");
  const auto a = write("a.vec", "%%MatrixMarket matrix array real general\n"
                                "2 1\n1\n2\n");
  const auto b = write("b.vec", "0\n0\n");
  const auto p = load_instance(m, a, b, 1.0, 1.0);
  EXPECT_EQ(p.A.coeff(0, 1), 0.5);
  EXPECT_EQ(p.A.coeff(1, 0), 0.5);
  EXPECT_EQ(p.a, Eigen::Vector2d(1, 2));
}

TEST_F(LoadInstance, RejectsGeneralKind) {
  const auto m = write("A.mtx", "%%MatrixMarket matrix coordinate real "
                                "general\n2 2 1\n1 1 1\n");
  EXPECT_EQ(kind_of(m), FormatErrorKind::kNotSymmetric);
}

TEST_F(LoadInstance, IndexRangeReportsLine) {
  const auto m = write("A.mtx", std::string(kHeader) + "2 2 2\n1 1 -1\n3 1 2\n");
  try {
    read_matrix_market(m);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind, FormatErrorKind::kIndexRange);
    EXPECT_EQ(e.line, 4);
    EXPECT_NE(std::string(e.what()).find(":4:"), std::string::npos);
  }
}

TEST_F(LoadInstance, DistinctErrorKinds) {
  EXPECT_EQ(kind_of(path("missing.mtx")), FormatErrorKind::kOpen);
  EXPECT_EQ(kind_of(write("h.mtx", "hello\n")), FormatErrorKind::kHeader);
  EXPECT_EQ(kind_of(write("s.mtx", std::string(kHeader) + "2 3 1\n1 1 1\n")),
            FormatErrorKind::kSize);
  EXPECT_EQ(kind_of(write("v.mtx", std::string(kHeader) + "2 2 1\n1 1 x\n")),
            FormatErrorKind::kValue);
  EXPECT_EQ(kind_of(write("c.mtx", std::string(kHeader) + "2 2 2\n1 1 1\n")),
            FormatErrorKind::kCount);
  const auto m = write("ok.mtx", std::string(kHeader) + "2 2 1\n1 1 -1\n");
  const auto a3 = write("a3.vec", "1\n2\n3\n");
  const auto b = write("b.vec", "0\n0\n");
  try {
    load_instance(m, a3, b, 1.0, 1.0);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind, FormatErrorKind::kDimension);
  }
}

TEST_F(LoadInstance, ValidationFailureCarriesReport) {
  const auto m = write("A.mtx", std::string(kHeader) + "2 2 1\n1 1 -1\n");
  const auto v = write("z.vec", "0\n0\n");
  try {
    load_instance(m, v, v, 1.0, 0.0);
    FAIL();
  } catch (const ValidationFailure& e) {
    EXPECT_TRUE(e.report.contains(Violation::kNonPositiveDelta));
  }
}

TEST_F(LoadInstance, WriteLoadRoundTrip) {
  for (auto cls : {InstanceClass::kClass1, InstanceClass::kClass2}) {
    GenSpec s;
    s.class_id = cls;
    s.n = 80;
    s.density = 0.05;
    s.seed = 5;
    const auto p = generate(s);
    const auto f = write_instance(p, to_string(cls));
    const auto q = load_instance(f[0], f[1], f[2], p.c, p.delta);
    EXPECT_EQ(q.A.nonZeros(), p.A.nonZeros());
    EXPECT_EQ(MatrixXd(q.A), MatrixXd(p.A));
    EXPECT_EQ(q.a, p.a);
    EXPECT_EQ(q.b, p.b);
  }
}

TEST_F(LoadInstance, FileHashIsFnv1a) {
  EXPECT_EQ(file_hash(write("e", "")), 0xcbf29ce484222325ULL);
  EXPECT_EQ(file_hash(write("a", "a")), 0xaf63dc4c8601ec8cULL);
}

TEST_F(Report, RoundTripSolved) {
  const auto rep = solve(hard_mult2_instance());
  InstanceMeta meta;
  meta.n = 3;
  meta.nnz = 3;
  meta.instance_class = "class1";
  meta.seed = 42;
  const auto doc = make_report(rep, meta);
  const auto back = report_from_json(to_json(doc));
  EXPECT_TRUE(back == doc);
  EXPECT_EQ(back.status, "strong-duality-solved");
  EXPECT_EQ(back.schema_version, kReportSchema);
}

TEST_F(Report, RoundTripGap) {
  const auto doc = make_report(solve(gap_instance()), InstanceMeta{2, 2});
  ASSERT_TRUE(doc.gap_certificate.has_value());
  const auto text = to_json(doc);
  EXPECT_TRUE(report_from_json(text) == doc);
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["status"], "duality-gap-lower-bound");
  EXPECT_EQ(j["gap_certificate"]["signs"].size(), 2u);
  EXPECT_TRUE(j["instance_meta"]["seed"].is_null());
}

TEST_F(Report, ExactDoubles) {
  ReportDocument doc;
  doc.objective = 0.1 + 0.2;
  doc.lambda1 = 1.0 / 3.0;
  doc.kkt1 = 5e-324;
  EXPECT_TRUE(report_from_json(to_json(doc)) == doc);
}

TEST_F(Report, RejectsMalformed) {
  EXPECT_THROW(report_from_json("{"), std::runtime_error);
  auto j = nlohmann::json::parse(to_json(ReportDocument{}));
  j["schema_version"] = "etrs-report/0";
  EXPECT_THROW(report_from_json(j.dump()), std::runtime_error);
  j = nlohmann::json::parse(to_json(ReportDocument{}));
  j.erase("kkt");
  EXPECT_THROW(report_from_json(j.dump()), std::runtime_error);
}

TEST_F(Commands, SolveExitCodes) {
  std::ostringstream out, err;
  SolveArgs args;
  auto f = write_instance(gap_instance(), "gap");
  args.matrix = f[0];
  args.a = f[1];
  args.b = f[2];
  args.c = 0.0;
  args.delta = 1.0;
  EXPECT_EQ(cmd_solve(args, out, err), kExitGap);
  const auto doc = report_from_json(out.str());
  EXPECT_NEAR(doc.dual_value, -1.0, 1e-6);

  f = write_instance(diag21({0, 0}, {1, 0}, 0.0), "diag");
  args.matrix = f[0];
  args.a = f[1];
  args.b = f[2];
  args.out = path("report.json");
  args.emit_x = path("x.vec");
  EXPECT_EQ(cmd_solve(args, out, err), kExitSolved);
  const auto solved = report_from_json(slurp(args.out));
  EXPECT_NEAR(solved.objective, -2.0, 1e-10);
  EXPECT_LE(solved.kkt1, 1e-10);
  EXPECT_LE(std::abs(solved.kkt2), 1e-10);
  EXPECT_LE(std::abs(solved.kkt3), 1e-10);
  const VectorXd x = read_vector(args.emit_x);
  EXPECT_NEAR(x(0), -1.0, 1e-8);

  std::ostringstream err2;
  args.delta = 0.0;
  EXPECT_EQ(cmd_solve(args, out, err2), kExitError);
  EXPECT_NE(err2.str().find("delta must be positive"), std::string::npos);
}

TEST_F(Commands, GenerateIsDeterministic) {
  GenerateArgs g;
  g.spec.class_id = InstanceClass::kClass1;
  g.spec.n = 100;
  g.spec.m = 2;
  g.spec.alpha = 1.0;
  g.spec.density = 0.01;
  g.spec.seed = 1;
  std::ostringstream out, err;
  g.out_dir = path("one");
  ASSERT_EQ(cmd_generate(g, out, err), kExitSolved);
  g.out_dir = path("two");
  ASSERT_EQ(cmd_generate(g, out, err), kExitSolved);
  for (const char* f : {"A.mtx", "a.vec", "b.vec", "manifest.json"}) {
    EXPECT_EQ(slurp(path(std::string("one/") + f)),
              slurp(path(std::string("two/") + f)))
        << f;
  }
  const auto m = nlohmann::json::parse(slurp(path("one/manifest.json")));
  const auto p = load_instance(path("one/A.mtx"), path("one/a.vec"),
                               path("one/b.vec"), m["c"].get<double>(),
                               m["delta"].get<double>());
  EXPECT_TRUE(validate(p, min_eigenvalue(dense(p))).violations.empty());
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(file_hash(path("one/A.mtx"))));
  EXPECT_EQ(m["files"]["A.mtx"], hex);
}

TEST_F(Commands, GenerateClass2Files) {
  GenerateArgs g;
  g.spec.class_id = InstanceClass::kClass2;
  g.spec.n = 100;
  g.spec.seed = 2;
  g.out_dir = path("c2");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_generate(g, out, err), kExitSolved);
  const VectorXd b = read_vector(path("c2/b.vec"));
  EXPECT_EQ(b(0), 1.0);
  EXPECT_EQ(b.cwiseAbs().sum(), 1.0);
  const auto m = nlohmann::json::parse(slurp(path("c2/manifest.json")));
  EXPECT_EQ(m["c"].get<double>(), 1.0);
}

TEST_F(Commands, GenerateUnwritableDirectory) {
  write("file", "x");
  GenerateArgs g;
  g.spec.n = 10;
  g.out_dir = path("file/sub");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_generate(g, out, err), kExitError);
}

TEST_F(Commands, VerifyClass2) {
  VerifyArgs v;
  v.instance_class = InstanceClass::kClass2;
  v.n_min = v.n_max = 50;
  v.count = 20;
  v.seed = 0;
  v.include_gap_fixture = true;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify(v, out, err), kExitSolved);
  EXPECT_NE(out.str().find("21/21 agree"), std::string::npos);
  const auto rows = run_verify(v);
  ASSERT_EQ(rows.size(), 21u);
  EXPECT_EQ(rows.back().label, "gap-fixture");
  EXPECT_EQ(rows.back().solver_status, "duality-gap-lower-bound");
  EXPECT_TRUE(rows.back().agree);
  for (size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i - 1].seed, rows[i].seed);
  }
}

TEST_F(Commands, VerifyEmptyAndCap) {
  VerifyArgs v;
  v.count = 0;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_verify(v, out, err), kExitSolved);
  EXPECT_NE(out.str().find("0/0 agree"), std::string::npos);
  v.n_max = 500;
  EXPECT_EQ(cmd_verify(v, out, err), kExitError);
}

TEST_F(Commands, VerifyIndependentOfThreadCount) {
  VerifyArgs v;
  v.instance_class = InstanceClass::kRandom;
  v.n_min = 10;
  v.n_max = 30;
  v.count = 8;
  ::setenv("ETRS_THREADS", "1", 1);
  EXPECT_EQ(worker_count(), 1u);
  const auto serial = run_verify(v);
  ::unsetenv("ETRS_THREADS");
  const auto parallel = run_verify(v);
  ASSERT_EQ(serial.size(), parallel.size());
  for (size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].seed, parallel[i].seed);
    EXPECT_EQ(serial[i].solver_value, parallel[i].solver_value);
  }
}

TEST_F(Commands, BenchTable) {
  BenchArgs b;
  b.instance_class = InstanceClass::kClass1;
  b.sizes = {100};
  b.density = 0.05;
  b.repeats = 1;
  b.csv = path("bench.csv");
  std::ostringstream out, err;
  EXPECT_EQ(cmd_bench(b, out, err), kExitSolved);
  const auto rows = run_bench(b);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].runs, 1);
  EXPECT_LE(rows[0].kkt1, 1e-7);
  const auto csv = slurp(b.csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST_F(Commands, BinaryExitCodes) {
  auto f = write_instance(gap_instance(), "gap");
  const std::string gap_args =
      "solve --matrix " + f[0] + " --a " + f[1] + " --b " + f[2];
  EXPECT_EQ(run_cli(gap_args + " --c 0 --delta 1"), 2);
  EXPECT_EQ(run_cli(gap_args + " --c 0 --delta 0"), 1);
  f = write_instance(diag21({0, 0}, {1, 0}, 0.0), "diag");
  EXPECT_EQ(run_cli("solve --matrix " + f[0] + " --a " + f[1] + " --b " +
                    f[2] + " --c 0 --delta 1 --out " + path("r.json")),
            0);
  EXPECT_EQ(report_from_json(slurp(path("r.json"))).status,
            "strong-duality-solved");
  EXPECT_EQ(run_cli("solve --matrix " + path("nope.mtx") + " --a x --b y "
                    "--c 0 --delta 1"),
            1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("generate --class 2 --n 30 --seed 3 --out-dir " +
                    path("gen")),
            0);
  EXPECT_TRUE(fs::exists(path("gen/manifest.json")));
  EXPECT_EQ(run_cli("verify --class 1 --n 20:30 --count 3 --m 2"), 0);
}
