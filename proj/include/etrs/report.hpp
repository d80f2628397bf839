#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "etrs/recovery.hpp"

namespace etrs {

inline constexpr const char* kReportSchema = "etrs-report/1";

struct InstanceMeta {
  Index n = 0;
  Index nnz = 0;
  std::string instance_class = "file";
  std::optional<std::uint64_t> seed;
};

struct ReportGap {
  VectorXd x1;
  VectorXd x2;
  double mu = 0.0;
  double sign1 = 0.0;
  double sign2 = 0.0;
};

struct ReportDocument {
  std::string schema_version = kReportSchema;
  InstanceMeta instance;
  std::string status;
  double objective = 0.0;
  double dual_value = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double kkt1 = 0.0;
  double kkt2 = 0.0;
  double kkt3 = 0.0;
  std::optional<ReportGap> gap_certificate;
  PhaseTimings timings;
  long matvec_count = 0;
  std::map<std::string, std::string> diagnostics;
};

ReportDocument make_report(const SolveReport& solve, InstanceMeta meta);

std::string to_json(const ReportDocument& doc);

/// Throws std::runtime_error on malformed documents or a schema mismatch.
ReportDocument report_from_json(const std::string& text);

bool operator==(const ReportDocument& a, const ReportDocument& b);

}  // namespace etrs
