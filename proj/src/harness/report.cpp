#include "etp/harness/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace etp::harness {

namespace {

double metric(const SeedMetrics& m, std::string_view name) {
  if (name == "err_pct") return m.err_pct;
  if (name == "ece_pct") return m.ece_pct;
  if (name == "nll") return m.nll;
  return m.auroc_ood_pct;
}

void set_metric(SeedMetrics& m, std::string_view name, double v) {
  if (name == "err_pct") m.err_pct = v;
  else if (name == "ece_pct") m.ece_pct = v;
  else if (name == "nll") m.nll = v;
  else m.auroc_ood_pct = v;
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json triple_json(const DecompositionRow& row) {
  const auto& t = row.triple;
  return {{"probe", row.probe},
          {"reducible", t.reducible},
          {"irreducible", t.irreducible},
          {"data", t.data},
          {"total", t.total},
          {"total_sampled", t.total_sampled},
          {"total_sampled_se", t.total_sampled_se}};
}

std::string csv_number(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::map<std::string, MetricSummary> aggregate(const CalibrationReport& report) {
  std::map<std::string, MetricSummary> out;
  for (std::string_view name : kMetricNames) {
    std::vector<double> xs;
    for (const auto& s : report.seeds) {
      if (!s.ok) continue;
      const double v = metric(s.metrics, name);
      if (std::isfinite(v)) xs.push_back(v);
    }
    MetricSummary m;
    m.n = xs.size();
    if (xs.empty()) {
      m.mean = m.sd = std::numeric_limits<double>::quiet_NaN();
    } else {
      double sum = 0.0;
      for (double x : xs) sum += x;
      m.mean = sum / static_cast<double>(xs.size());
      double ss = 0.0;
      for (double x : xs) ss += (x - m.mean) * (x - m.mean);
      m.sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
    }
    out.emplace(std::string(name), m);
  }
  return out;
}

nlohmann::json report_to_json(const CalibrationReport& report) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["config"] = report.config;

  nlohmann::json per_seed = nlohmann::json::array();
  nlohmann::json failures = nlohmann::json::array();
  double runtime_sum = 0.0;
  std::size_t runtime_n = 0;
  for (const auto& s : report.seeds) {
    nlohmann::json row;
    row["seed"] = s.seed;
    for (std::string_view name : kMetricNames) {
      row[std::string(name)] = s.ok ? number_or_null(metric(s.metrics, name)) : nullptr;
    }
    per_seed.push_back(row);
    if (!s.ok) failures.push_back({{"seed", s.seed}, {"error", s.error}});
    if (s.runtime_s_per_epoch) {
      runtime_sum += *s.runtime_s_per_epoch;
      ++runtime_n;
    }
  }
  j["per_seed"] = per_seed;
  j["failures"] = failures;

  nlohmann::json agg = nlohmann::json::object();
  for (const auto& [name, m] : aggregate(report)) {
    agg[name] = {{"mean", number_or_null(m.mean)}, {"sd", number_or_null(m.sd)}};
  }
  j["aggregate"] = agg;

  if (!report.decomposition.empty()) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.decomposition) rows.push_back(triple_json(r));
    j["decomposition"] = rows;
  }
  j["runtime_s_per_epoch"] =
      runtime_n > 0 ? nlohmann::json(runtime_sum / static_cast<double>(runtime_n)) : nullptr;
  return j;
}

std::string report_to_csv(const CalibrationReport& report) {
  std::ostringstream os;
  os << "seed";
  for (std::string_view name : kMetricNames) os << ',' << name;
  os << '\n';
  for (const auto& s : report.seeds) {
    os << s.seed;
    for (std::string_view name : kMetricNames) {
      os << ',' << (s.ok ? csv_number(metric(s.metrics, name)) : "");
    }
    os << '\n';
  }
  const auto agg = aggregate(report);
  os << "aggregate";
  for (std::string_view name : kMetricNames) os << ',' << csv_number(agg.at(std::string(name)).mean);
  os << '\n';
  return os.str();
}

CalibrationReport report_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", -1) != kReportSchemaVersion) {
    throw std::runtime_error("unsupported report schema version");
  }
  CalibrationReport r;
  r.config = j.at("config");
  std::map<std::uint64_t, std::string> errors;
  if (j.contains("failures")) {
    for (const auto& f : j.at("failures")) {
      errors[f.at("seed").get<std::uint64_t>()] = f.at("error").get<std::string>();
    }
  }
  for (const auto& row : j.at("per_seed")) {
    SeedResult s;
    s.seed = row.at("seed").get<std::uint64_t>();
    s.ok = !errors.count(s.seed);
    if (!s.ok) s.error = errors[s.seed];
    for (std::string_view name : kMetricNames) {
      const auto& v = row.at(std::string(name));
      set_metric(s.metrics, name,
                 v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
    }
    r.seeds.push_back(std::move(s));
  }
  return r;
}

std::string render_report(const CalibrationReport& report, std::string_view format) {
  if (format == "json") return report_to_json(report).dump(2) + "\n";
  if (format == "csv") return report_to_csv(report);
  throw std::invalid_argument("unknown report format '" + std::string(format) + "'");
}

void emit_report(const CalibrationReport& report, std::string_view format,
                 const std::filesystem::path& path) {
  const std::string text = render_report(report, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write report to '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace etp::harness
