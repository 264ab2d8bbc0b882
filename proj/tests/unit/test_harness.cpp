#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "etp/harness/config.hpp"
#include "etp/harness/experiment.hpp"
#include "etp/harness/report.hpp"

using namespace etp;
using harness::ConfigError;
using harness::ConfigLayer;

namespace {

std::string config_error_key(const std::vector<ConfigLayer>& layers) {
  try {
    harness::build_config(layers);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

harness::CalibrationReport sample_report() {
  harness::CalibrationReport r;
  r.config = {{"model", "etp"}};
  for (std::uint64_t s = 0; s < 3; ++s) {
    harness::SeedResult sr;
    sr.seed = s;
    sr.ok = true;
    sr.metrics = {10.0 + s, 2.0 * s, 0.3 + 0.1 * s, 90.0 - s};
    r.seeds.push_back(sr);
  }
  harness::SeedResult bad;
  bad.seed = 9;
  bad.error = "diverged";
  r.seeds.push_back(bad);
  return r;
}

harness::ExperimentConfig quick_config(const ConfigLayer& extra = {}) {
  ConfigLayer base{{"epochs", "20"}, {"seeds", "7"}, {"test_size", "200"}, {"ood_size", "50"}};
  for (const auto& [k, v] : extra) base[k] = v;
  return harness::build_config({base});
}

}  // namespace

TEST_CASE("an empty config gives the documented defaults") {
  const auto c = harness::build_config({});
  CHECK(c.task == harness::Task::two_gaussians);
  CHECK(c.model.kind == models::ModelKind::etp);
  CHECK(c.model.hidden == std::vector<std::size_t>{32});
  CHECK(c.model.memory_cells == 16);
  CHECK(c.model.gamma == 0.9);
  CHECK(c.model.kappa2 == 0.1);
  CHECK(c.model.context_fraction == 0.25);
  CHECK(c.train.epochs == 400);
  CHECK(c.train.batch_size == 8);
  CHECK(c.train.adam.lr == 1e-3);
  CHECK(c.seeds.size() == 10);
  CHECK(c.ece_bins == 10);
  CHECK(!c.corruption);
  const auto j = harness::config_to_json(c);
  CHECK(j.size() == harness::config_keys().size());
}

TEST_CASE("hidden widths follow the task unless set") {
  CHECK(harness::build_config({{{"task", "iris2d"}}}).model.hidden == std::vector<std::size_t>{32, 32});
  CHECK(harness::build_config({{{"task", "fmnist-vs-mnist"}}}).model.hidden == std::vector<std::size_t>{128});
  CHECK(harness::build_config({{{"task", "iris2d"}, {"hidden", "5,6,7"}}}).model.hidden ==
        std::vector<std::size_t>{5, 6, 7});
}

TEST_CASE("later layers override earlier ones") {
  const auto file = harness::parse_config_text("# comment\nlr = 0.01\nmodel = bnn  # trailing\nepochs=3\n");
  const auto c = harness::build_config({file, {{"lr", "0.5"}}});
  CHECK(c.train.adam.lr == 0.5);
  CHECK(c.model.kind == models::ModelKind::bnn);
  CHECK(c.train.epochs == 3);
}

TEST_CASE("invalid values name the offending key") {
  CHECK(config_error_key({{{"gamma", "1.5"}}}) == "gamma");
  CHECK(config_error_key({{{"gamma", "0"}}}) == "gamma");
  CHECK(config_error_key({{{"kappa2", "0"}}}) == "kappa2");
  CHECK(config_error_key({{{"context_fraction", "0"}}}) == "context_fraction");
  CHECK(config_error_key({{{"learning_rate", "0.1"}}}) == "learning_rate");
  CHECK(config_error_key({{{"epochs", "ten"}}}) == "epochs");
  CHECK(config_error_key({{{"epochs", "-1"}}}) == "epochs");
  CHECK(config_error_key({{{"memory_tanh", "maybe"}}}) == "memory_tanh");
  CHECK(config_error_key({{{"model", "gp"}}}) == "model");
  CHECK(config_error_key({{{"severity", "6"}}}) == "severity");
  CHECK(config_error_key({{{"corruption", "box-blur"}}}) == "corruption");
  CHECK(config_error_key({{{"probes", "1,2,3"}, {"task", "iris2d"}}}) == "probes");
  CHECK(config_error_key({{{"ood_inner", "10"}, {"ood_outer", "5"}}}) == "ood_outer");
  CHECK_THROWS_AS(harness::parse_config_text("no equals sign"), ConfigError);
}

TEST_CASE("corruption and severity apply in either order") {
  const auto a = harness::build_config({{{"severity", "3"}, {"corruption", "contrast"}}});
  REQUIRE(a.corruption);
  CHECK(a.corruption->kind == data::CorruptionKind::contrast);
  CHECK(a.corruption->severity == 3);
  const auto b = harness::build_config({{{"severity", "2"}}});
  REQUIRE(b.corruption);
  CHECK(b.corruption->kind == data::CorruptionKind::gaussian_noise);
}

TEST_CASE("aggregate recomputes means and sample sds over successful seeds") {
  const auto r = sample_report();
  const auto agg = harness::aggregate(r);
  CHECK(agg.at("err_pct").n == 3);
  CHECK(std::abs(agg.at("err_pct").mean - 11.0) <= 1e-12);
  CHECK(std::abs(agg.at("err_pct").sd - 1.0) <= 1e-12);
  CHECK(std::abs(agg.at("ece_pct").sd - 2.0) <= 1e-12);
  harness::CalibrationReport none;
  none.seeds.push_back(harness::SeedResult{});
  CHECK(std::isnan(harness::aggregate(none).at("nll").mean));
}

TEST_CASE("report JSON round-trips and records failures") {
  const auto r = sample_report();
  const auto j = harness::report_to_json(r);
  CHECK(j["failures"].size() == 1);
  CHECK(j["failures"][0]["seed"] == 9);
  CHECK(j["per_seed"][3]["err_pct"].is_null());
  CHECK(j["runtime_s_per_epoch"].is_null());
  const auto back = harness::report_from_json(j);
  CHECK(harness::report_to_json(back) == j);
  const auto agg = harness::aggregate(back);
  CHECK(std::abs(j["aggregate"]["nll"]["mean"].get<double>() - agg.at("nll").mean) <= 1e-12);

  auto bad = j;
  bad["schema_version"] = 2;
  CHECK_THROWS(harness::report_from_json(bad));
}

TEST_CASE("non-finite metrics serialize as null and empty CSV cells") {
  auto r = sample_report();
  r.seeds[0].metrics.nll = std::numeric_limits<double>::infinity();
  const auto j = harness::report_to_json(r);
  CHECK(j["per_seed"][0]["nll"].is_null());
  const auto csv = harness::report_to_csv(r);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 1 + r.seeds.size() + 1);
  CHECK(csv.rfind("seed,err_pct,ece_pct,nll,auroc_ood_pct\n", 0) == 0);
  CHECK(csv.find("\n0,10,0,,90\n") != std::string::npos);
  CHECK(csv.find("\n9,,,,\n") != std::string::npos);
  CHECK_THROWS(harness::render_report(r, "xml"));
}

TEST_CASE("emit_report writes a file and rejects unwritable paths") {
  const auto path = std::filesystem::temp_directory_path() / "etp_report_test.json";
  harness::emit_report(sample_report(), "json", path);
  std::ifstream in(path);
  CHECK(nlohmann::json::parse(in)["schema_version"] == harness::kReportSchemaVersion);
  std::filesystem::remove(path);
  CHECK_THROWS(harness::emit_report(sample_report(), "json", "/nonexistent/dir/r.json"));
}

TEST_CASE("a run is bitwise reproducible from its seed") {
  for (const char* model : {"etp", "bnn", "edl", "enp"}) {
    CAPTURE(model);
    const auto cfg = quick_config({{"model", model}});
    const auto a = harness::report_to_json(harness::run_experiment(cfg)).dump();
    const auto b = harness::report_to_json(harness::run_experiment(cfg)).dump();
    CHECK(a == b);
  }
}

TEST_CASE("worker count does not change results") {
  // The config echo records the worker count, so compare the results only.
  auto results = [](const harness::ExperimentConfig& cfg) {
    const auto j = harness::report_to_json(harness::run_experiment(cfg));
    return j["per_seed"].dump() + j["aggregate"].dump();
  };
  auto cfg = quick_config({{"seeds", "1,2,3"}});
  const auto serial = results(cfg);
  cfg.workers = 3;
  CHECK(results(cfg) == serial);
}

TEST_CASE("timing is reported only on request") {
  auto cfg = quick_config({{"timing", "true"}, {"epochs", "2"}});
  const auto j = harness::report_to_json(harness::run_experiment(cfg));
  CHECK(j["runtime_s_per_epoch"].get<double>() > 0.0);
}

TEST_CASE("divergence is recorded per seed, not thrown") {
  const auto cfg = quick_config({{"model", "bnn"}, {"init_logvar", "1500"}, {"seeds", "1,2"}});
  const auto r = harness::run_experiment(cfg);
  REQUIRE(r.seeds.size() == 2);
  CHECK(!r.seeds[0].ok);
  CHECK(!r.seeds[0].error.empty());
  const auto j = harness::report_to_json(r);
  CHECK(j["failures"].size() == 2);
  CHECK(j["aggregate"]["err_pct"]["mean"].is_null());
}

TEST_CASE("task data shapes") {
  const auto cfg = quick_config();
  const auto d = harness::build_task_data(cfg, 3);
  CHECK(d.train.size() == 40);
  CHECK(d.test.size() == 200);
  CHECK(d.ood.size() == 50);
  for (std::size_t i = 0; i < d.ood.size(); ++i) {
    const double r = std::abs(d.ood.features[i]);
    CHECK(r >= 6.0);
    CHECK(r <= 10.0);
  }
  const auto iris = harness::build_task_data(harness::build_config({{{"task", "iris2d"}}}), 3);
  CHECK(iris.train.size() + iris.test.size() == 150);
  CHECK(iris.train.dim == 2);
}

TEST_CASE("missing image files are a data error") {
  const auto cfg = harness::build_config(
      {{{"task", "fmnist-vs-mnist"}, {"data_dir", "/nonexistent/etp-data"}, {"seeds", "0"}}});
  CHECK_THROWS_AS(harness::build_task_data(cfg, 0), harness::DataError);
  CHECK_THROWS_AS(harness::run_experiment(cfg), harness::DataError);
}

TEST_CASE("probe inputs come from the config or the test split") {
  const auto cfg = quick_config({{"probes", "-0.5,0,2"}});
  const auto d = harness::build_task_data(cfg, 0);
  const auto p = harness::probe_inputs(cfg, d);
  CHECK(p.rows() == 3);
  CHECK(p(2, 0) == 2.0);
  const auto auto_cfg = quick_config({{"probe_count", "4"}});
  const auto q = harness::probe_inputs(auto_cfg, d);
  CHECK(q.rows() == 4);
  CHECK(q(1, 0) == d.test.features[1]);
}

TEST_CASE("decomposition is rejected for EDL and ENP") {
  for (const char* model : {"edl", "enp"}) {
    const auto cfg = quick_config({{"model", model}});
    dist::SeededRng init(0);
    auto m = models::make_predictor(cfg.model, init);
    CHECK_THROWS_AS(harness::run_decomposition(cfg, *m, ad::Tensor({1, 1}, 0.0), 0), ConfigError);
  }
}

TEST_CASE("data uncertainty is larger at the class boundary than far inside a class") {
  for (const char* model : {"etp", "bnn"}) {
    CAPTURE(model);
    const auto cfg = quick_config({{"model", model}, {"epochs", "150"}, {"decomp_outer", "300"}});
    auto t = harness::train_seed(cfg, 7);
    REQUIRE(t.result.ok);
    const auto rows = harness::run_decomposition(cfg, *t.model, ad::Tensor({3, 1}, {0.0, -3.0, 3.0}), 7);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].triple.data[0] > rows[1].triple.data[0]);
    CHECK(rows[0].triple.data[0] > rows[2].triple.data[0]);
    for (const auto& row : rows) {
      CHECK(row.triple.term_sum(0) == doctest::Approx(row.triple.total[0]).epsilon(1e-10));
    }
  }
}
