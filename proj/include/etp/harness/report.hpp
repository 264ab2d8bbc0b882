#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "etp/harness/experiment.hpp"

namespace etp::harness {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::string_view kMetricNames[] = {"err_pct", "ece_pct", "nll", "auroc_ood_pct"};

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample sd (n - 1); 0 for a single value
  std::size_t n = 0;
};

/// Mean and sd per metric over the seeds that succeeded. Metrics with no
/// successful seed get NaN (serialized as null).
std::map<std::string, MetricSummary> aggregate(const CalibrationReport& report);

nlohmann::json report_to_json(const CalibrationReport& report);
/// Header `seed,err_pct,ece_pct,nll,auroc_ood_pct`, one row per seed, then
/// an `aggregate` row of means. Failed metrics are empty cells.
std::string report_to_csv(const CalibrationReport& report);
/// Inverse of report_to_json for the per-seed part and config echo.
CalibrationReport report_from_json(const nlohmann::json& j);

/// Writes JSON or CSV; throws std::runtime_error on unwritable paths.
void emit_report(const CalibrationReport& report, std::string_view format,
                 const std::filesystem::path& path);
std::string render_report(const CalibrationReport& report, std::string_view format);

}  // namespace etp::harness
