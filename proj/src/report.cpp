#include "etrs/report.hpp"

#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace etrs {

namespace {

using nlohmann::json;

json vec_to_json(const VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

VectorXd vec_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  VectorXd v(static_cast<Index>(values.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = values[static_cast<size_t>(i)];
  return v;
}

bool same(const VectorXd& a, const VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

}  // namespace

ReportDocument make_report(const SolveReport& solve, InstanceMeta meta) {
  ReportDocument doc;
  doc.instance = std::move(meta);
  doc.status = to_string(solve.status);
  doc.objective = solve.objective;
  doc.dual_value = solve.dual_value;
  doc.lambda1 = solve.lambda1;
  doc.lambda2 = solve.lambda2;
  doc.kkt1 = solve.kkt.kkt1;
  doc.kkt2 = solve.kkt.kkt2;
  doc.kkt3 = solve.kkt.kkt3;
  if (solve.gap_certificate) {
    const GapCertificate& g = *solve.gap_certificate;
    doc.gap_certificate = ReportGap{g.x1, g.x2, g.mu, g.sign1, g.sign2};
  }
  doc.timings = solve.timings;
  doc.matvec_count = solve.matvec_count;
  doc.diagnostics = solve.diagnostics;
  return doc;
}

std::string to_json(const ReportDocument& doc) {
  json j;
  j["schema_version"] = doc.schema_version;
  json meta = {{"n", doc.instance.n},
               {"nnz", doc.instance.nnz},
               {"class", doc.instance.instance_class}};
  meta["seed"] = doc.instance.seed ? json(*doc.instance.seed) : json(nullptr);
  j["instance_meta"] = meta;
  j["status"] = doc.status;
  j["objective"] = doc.objective;
  j["dual_value"] = doc.dual_value;
  j["lambda1"] = doc.lambda1;
  j["lambda2"] = doc.lambda2;
  j["kkt"] = {{"kkt1", doc.kkt1}, {"kkt2", doc.kkt2}, {"kkt3", doc.kkt3}};
  if (doc.gap_certificate) {
    const ReportGap& g = *doc.gap_certificate;
    j["gap_certificate"] = {{"x1", vec_to_json(g.x1)},
                            {"x2", vec_to_json(g.x2)},
                            {"mu", g.mu},
                            {"signs", {g.sign1, g.sign2}}};
  } else {
    j["gap_certificate"] = nullptr;
  }
  j["timings"] = {{"eigen_ms", doc.timings.eigen_ms},
                  {"t_steps_ms", doc.timings.t_steps_ms},
                  {"lambda_steps_ms", doc.timings.lambda_steps_ms},
                  {"recovery_ms", doc.timings.recovery_ms}};
  j["matvec_count"] = doc.matvec_count;
  j["diagnostics"] = doc.diagnostics;
  return j.dump(2);
}

ReportDocument report_from_json(const std::string& text) {
  ReportDocument doc;
  try {
    const json j = json::parse(text);
    doc.schema_version = j.at("schema_version").get<std::string>();
    if (doc.schema_version != kReportSchema) {
      throw std::runtime_error("unsupported report schema '" +
                               doc.schema_version + "'");
    }
    const json& meta = j.at("instance_meta");
    doc.instance.n = meta.at("n").get<Index>();
    doc.instance.nnz = meta.at("nnz").get<Index>();
    doc.instance.instance_class = meta.at("class").get<std::string>();
    if (!meta.at("seed").is_null()) {
      doc.instance.seed = meta.at("seed").get<std::uint64_t>();
    }
    doc.status = j.at("status").get<std::string>();
    doc.objective = j.at("objective").get<double>();
    doc.dual_value = j.at("dual_value").get<double>();
    doc.lambda1 = j.at("lambda1").get<double>();
    doc.lambda2 = j.at("lambda2").get<double>();
    const json& kkt = j.at("kkt");
    doc.kkt1 = kkt.at("kkt1").get<double>();
    doc.kkt2 = kkt.at("kkt2").get<double>();
    doc.kkt3 = kkt.at("kkt3").get<double>();
    if (j.contains("gap_certificate") && !j["gap_certificate"].is_null()) {
      const json& g = j["gap_certificate"];
      ReportGap gap;
      gap.x1 = vec_from_json(g.at("x1"));
      gap.x2 = vec_from_json(g.at("x2"));
      gap.mu = g.at("mu").get<double>();
      gap.sign1 = g.at("signs").at(0).get<double>();
      gap.sign2 = g.at("signs").at(1).get<double>();
      doc.gap_certificate = std::move(gap);
    }
    const json& t = j.at("timings");
    doc.timings.eigen_ms = t.at("eigen_ms").get<double>();
    doc.timings.t_steps_ms = t.at("t_steps_ms").get<double>();
    doc.timings.lambda_steps_ms = t.at("lambda_steps_ms").get<double>();
    doc.timings.recovery_ms = t.at("recovery_ms").get<double>();
    doc.matvec_count = j.at("matvec_count").get<long>();
    if (j.contains("diagnostics")) {
      doc.diagnostics =
          j["diagnostics"].get<std::map<std::string, std::string>>();
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed report: ") + e.what());
  }
  return doc;
}

bool operator==(const ReportDocument& a, const ReportDocument& b) {
  auto same_gap = [](const std::optional<ReportGap>& x,
                     const std::optional<ReportGap>& y) {
    if (x.has_value() != y.has_value()) return false;
    if (!x) return true;
    return same(x->x1, y->x1) && same(x->x2, y->x2) && x->mu == y->mu &&
           x->sign1 == y->sign1 && x->sign2 == y->sign2;
  };
  return a.schema_version == b.schema_version && a.instance.n == b.instance.n &&
         a.instance.nnz == b.instance.nnz &&
         a.instance.instance_class == b.instance.instance_class &&
         a.instance.seed == b.instance.seed && a.status == b.status &&
         a.objective == b.objective && a.dual_value == b.dual_value &&
         a.lambda1 == b.lambda1 && a.lambda2 == b.lambda2 &&
         a.kkt1 == b.kkt1 && a.kkt2 == b.kkt2 && a.kkt3 == b.kkt3 &&
         same_gap(a.gap_certificate, b.gap_certificate) &&
         a.timings.eigen_ms == b.timings.eigen_ms &&
         a.timings.t_steps_ms == b.timings.t_steps_ms &&
         a.timings.lambda_steps_ms == b.timings.lambda_steps_ms &&
         a.timings.recovery_ms == b.timings.recovery_ms &&
         a.matvec_count == b.matvec_count && a.diagnostics == b.diagnostics;
}

}  // namespace etrs
