#include "etrs/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace etrs {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  return s;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char ch) { return std::isspace(ch); });
}

std::vector<std::string> split(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

class LineReader {
 public:
  explicit LineReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) {
      throw FormatError(FormatErrorKind::kOpen, path, 0, "cannot open file");
    }
  }

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++number_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    return false;
  }

  // Next line that is neither blank nor a '%' comment.
  bool next_data(std::string& line) {
    while (next(line)) {
      if (blank(line) || line[0] == '%') continue;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(FormatErrorKind kind, const std::string& msg) const {
    throw FormatError(kind, path_, number_, msg);
  }

  long number() const { return number_; }

 private:
  std::string path_;
  std::ifstream in_;
  long number_ = 0;
};

double parse_real(const LineReader& r, const std::string& tok) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    r.fail(FormatErrorKind::kValue, "not a real number: '" + tok + "'");
  }
  return v;
}

long long parse_int(const LineReader& r, const std::string& tok,
                    FormatErrorKind kind) {
  long long v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    r.fail(kind, "not an integer: '" + tok + "'");
  }
  return v;
}

std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

FormatError::FormatError(FormatErrorKind kind, std::string path, long line,
                         const std::string& message)
    : StructuralError(path + (line > 0 ? ":" + std::to_string(line) : "") +
                      ": " + message),
      kind(kind),
      path(std::move(path)),
      line(line) {}

SparseMatrix read_matrix_market(const std::string& path) {
  LineReader r(path);
  std::string line;
  if (!r.next(line)) r.fail(FormatErrorKind::kHeader, "empty file");
  const auto head = split(lower(line));
  if (head.size() != 5 || head[0] != "%%matrixmarket" || head[1] != "matrix") {
    r.fail(FormatErrorKind::kHeader,
           "expected '%%MatrixMarket matrix coordinate real symmetric'");
  }
  if (head[2] != "coordinate") {
    r.fail(FormatErrorKind::kHeader, "coordinate format required, got '" +
                                         head[2] + "'");
  }
  if (head[3] != "real" && head[3] != "integer") {
    r.fail(FormatErrorKind::kHeader, "real field required, got '" + head[3] +
                                         "'");
  }
  if (head[4] != "symmetric") {
    r.fail(FormatErrorKind::kNotSymmetric,
           "symmetric kind required, got '" + head[4] + "'");
  }

  if (!r.next_data(line)) r.fail(FormatErrorKind::kSize, "missing size line");
  const auto size = split(line);
  if (size.size() != 3) {
    r.fail(FormatErrorKind::kSize, "size line must be 'rows cols entries'");
  }
  const long long rows = parse_int(r, size[0], FormatErrorKind::kSize);
  const long long cols = parse_int(r, size[1], FormatErrorKind::kSize);
  const long long nnz = parse_int(r, size[2], FormatErrorKind::kSize);
  if (rows < 1 || rows != cols || nnz < 0) {
    r.fail(FormatErrorKind::kSize, "symmetric matrix must be square and "
                                   "nonempty");
  }

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(nnz));
  while (static_cast<long long>(trips.size()) < nnz) {
    if (!r.next_data(line)) {
      r.fail(FormatErrorKind::kCount,
             "expected " + std::to_string(nnz) + " entries, found " +
                 std::to_string(trips.size()));
    }
    const auto tok = split(line);
    if (tok.size() != 3) {
      r.fail(FormatErrorKind::kValue, "entry must be 'row col value'");
    }
    const long long i = parse_int(r, tok[0], FormatErrorKind::kIndexRange);
    const long long j = parse_int(r, tok[1], FormatErrorKind::kIndexRange);
    if (i < 1 || i > rows || j < 1 || j > cols) {
      r.fail(FormatErrorKind::kIndexRange,
             "index (" + tok[0] + "," + tok[1] + ") outside " +
                 std::to_string(rows) + "x" + std::to_string(cols));
    }
    trips.emplace_back(i - 1, j - 1, parse_real(r, tok[2]));
  }
  if (r.next_data(line)) {
    r.fail(FormatErrorKind::kCount, "more entries than declared");
  }
  SparseMatrix A(rows, cols);
  // Keep repeated positions apart so make_instance can flag conflicts.
  A.setFromTriplets(trips.begin(), trips.end(),
                    [&](const double& a, const double& b) {
                      if (a != b) {
                        throw FormatError(FormatErrorKind::kValue, path, 0,
                                          "entry listed twice with "
                                          "different values");
                      }
                      return a;
                    });
  A.makeCompressed();
  return A;
}

void write_matrix_market(const std::string& path, const SparseMatrix& A) {
  std::ofstream out(path);
  if (!out) throw FormatError(FormatErrorKind::kOpen, path, 0, "cannot write");
  std::vector<std::pair<std::pair<Index, Index>, double>> entries;
  for (Index k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
      if (it.row() >= it.col()) {
        entries.push_back({{it.col(), it.row()}, it.value()});
      }
    }
  }
  // Column-major order of the lower triangle.
  std::sort(entries.begin(), entries.end());
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << A.rows() << ' ' << A.cols() << ' ' << entries.size() << '\n';
  for (const auto& [ij, v] : entries) {
    out << ij.second + 1 << ' ' << ij.first + 1 << ' ' << format_real(v)
        << '\n';
  }
  if (!out) throw FormatError(FormatErrorKind::kOpen, path, 0, "write failed");
}

VectorXd read_vector(const std::string& path, Index expected) {
  LineReader r(path);
  std::string line;
  std::vector<double> values;
  long long declared = -1;
  bool first = true;
  while (r.next(line)) {
    if (first) {
      first = false;
      if (line.rfind("%%", 0) == 0) {
        const auto head = split(lower(line));
        if (head.size() < 3 || head[0] != "%%matrixmarket" ||
            head[2] != "array") {
          r.fail(FormatErrorKind::kHeader, "expected an array header");
        }
        if (!r.next_data(line)) r.fail(FormatErrorKind::kSize, "missing size");
        const auto size = split(line);
        if (size.size() != 2) {
          r.fail(FormatErrorKind::kSize, "array size line must be 'rows 1'");
        }
        declared = parse_int(r, size[0], FormatErrorKind::kSize);
        if (parse_int(r, size[1], FormatErrorKind::kSize) != 1) {
          r.fail(FormatErrorKind::kSize, "vector must have one column");
        }
        continue;
      }
    }
    if (blank(line) || line[0] == '%') continue;
    const auto tok = split(line);
    if (tok.size() != 1) r.fail(FormatErrorKind::kValue, "one value per line");
    values.push_back(parse_real(r, tok[0]));
  }
  if (declared >= 0 && declared != static_cast<long long>(values.size())) {
    throw FormatError(FormatErrorKind::kCount, path, r.number(),
                      "header declares " + std::to_string(declared) +
                          " values, found " + std::to_string(values.size()));
  }
  if (expected >= 0 && static_cast<Index>(values.size()) != expected) {
    throw FormatError(FormatErrorKind::kDimension, path, r.number(),
                      "vector has " + std::to_string(values.size()) +
                          " entries, matrix dimension is " +
                          std::to_string(expected));
  }
  return Eigen::Map<VectorXd>(values.data(), static_cast<Index>(values.size()));
}

void write_vector(const std::string& path, const VectorXd& v) {
  std::ofstream out(path);
  if (!out) throw FormatError(FormatErrorKind::kOpen, path, 0, "cannot write");
  for (Index i = 0; i < v.size(); ++i) out << format_real(v(i)) << '\n';
  if (!out) throw FormatError(FormatErrorKind::kOpen, path, 0, "write failed");
}

ProblemInstance load_instance(const std::string& matrix_path,
                              const std::string& a_path,
                              const std::string& b_path, double c,
                              double delta) {
  const SparseMatrix stored = read_matrix_market(matrix_path);
  VectorXd a = read_vector(a_path, stored.rows());
  VectorXd b = read_vector(b_path, stored.rows());
  ProblemInstance p =
      make_instance(stored, std::move(a), std::move(b), c, delta);
  ValidationReport rep = validate(p);
  if (!rep.accepted()) throw ValidationFailure(std::move(rep));
  return p;
}

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrorKind::kOpen, path, 0, "cannot open file");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace etrs
