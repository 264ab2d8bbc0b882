// Command-line front end: train, eval, run, decompose, report.
//
// Exit codes: 0 success, 1 configuration error, 2 data error, 3 training
// failed on every seed.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "etp/data/idx.hpp"
#include "etp/harness/config.hpp"
#include "etp/harness/experiment.hpp"
#include "etp/harness/report.hpp"
#include "etp/models/checkpoint.hpp"

namespace {

using namespace etp;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitAllFailed = 3;

struct Flags {
  std::string config;
  std::optional<std::string> task, model, seeds, data_dir;
  std::optional<std::size_t> epochs, workers;
  std::optional<double> lr;
  std::vector<std::string> set;
  std::string out;
  std::string format = "json";
  std::string checkpoint;
  std::vector<std::string> inputs;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Config file (flat key = value)");
  cmd->add_option("--task", f.task, "two-gaussians | iris2d | fmnist-vs-mnist");
  cmd->add_option("--model", f.model, "bnn | edl | enp | etp");
  cmd->add_option("--seeds", f.seeds, "Comma-separated seed list");
  cmd->add_option("--epochs", f.epochs, "Training epochs");
  cmd->add_option("--lr", f.lr, "Adam learning rate");
  cmd->add_option("--data-dir", f.data_dir, "Directory holding fmnist/ and mnist/ IDX files");
  cmd->add_option("--workers", f.workers, "Seeds trained in parallel");
  cmd->add_option("--set", f.set, "Extra key=value overrides (repeatable)");
  cmd->add_option("--out", f.out, "Output path (stdout when omitted)");
  cmd->add_option("--format", f.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
}

harness::ConfigLayer flag_layer(const Flags& f) {
  harness::ConfigLayer layer;
  if (f.task) layer["task"] = *f.task;
  if (f.model) layer["model"] = *f.model;
  if (f.seeds) layer["seeds"] = *f.seeds;
  if (f.data_dir) layer["data_dir"] = *f.data_dir;
  if (f.epochs) layer["epochs"] = std::to_string(*f.epochs);
  if (f.workers) layer["workers"] = std::to_string(*f.workers);
  if (f.lr) {
    std::ostringstream os;
    os << std::setprecision(17) << *f.lr;
    layer["lr"] = os.str();
  }
  for (const auto& kv : f.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw harness::ConfigError("--set", "expected key=value, got '" + kv + "'");
    layer[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return layer;
}

harness::ExperimentConfig load_config(const Flags& f) {
  std::vector<harness::ConfigLayer> layers;
  if (!f.config.empty()) layers.push_back(harness::read_config_file(f.config));
  layers.push_back(flag_layer(f));
  return harness::build_config(layers);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::string seed_path(const std::string& base, std::uint64_t seed, bool many) {
  if (!many) return base;
  const std::filesystem::path p(base);
  return (p.parent_path() / (p.stem().string() + ".seed" + std::to_string(seed) + p.extension().string()))
      .string();
}

/// Model fields come from the checkpoint; everything else from the layers.
harness::ExperimentConfig with_checkpoint(harness::ExperimentConfig cfg,
                                          const models::Checkpoint& ck) {
  if (ck.config.input_dim != cfg.model.input_dim || ck.config.num_classes != cfg.model.num_classes) {
    throw harness::ConfigError("task", "checkpoint was trained for a different input shape");
  }
  cfg.model = ck.config;
  cfg.seeds = {ck.seed};
  return cfg;
}

int cmd_train(const Flags& f) {
  const auto cfg = load_config(f);
  const std::string base = f.out.empty() ? "model.ckpt" : f.out;
  std::size_t failed = 0;
  for (std::uint64_t seed : cfg.seeds) {
    auto t = harness::train_seed(cfg, seed);
    const std::string path = seed_path(base, seed, cfg.seeds.size() > 1);
    nlohmann::json trace{{"seed", seed}, {"ok", t.result.ok}, {"loss_trace", t.result.loss_trace}};
    if (!t.result.ok) {
      trace["error"] = t.result.error;
      ++failed;
      std::cerr << "seed " << seed << " failed: " << t.result.error << '\n';
    } else {
      models::save_checkpoint(*t.model, seed, path);
    }
    write_text(path + ".loss.json", trace.dump(2) + "\n");
  }
  return failed == cfg.seeds.size() ? kExitAllFailed : kExitOk;
}

int cmd_eval(const Flags& f) {
  if (f.checkpoint.empty()) throw harness::ConfigError("--checkpoint", "required for eval");
  const auto ck = models::load_checkpoint(f.checkpoint);
  const auto cfg = with_checkpoint(load_config(f), ck);
  const auto data = harness::build_task_data(cfg, ck.seed);
  harness::CalibrationReport report;
  report.config = harness::config_to_json(cfg);
  harness::SeedResult s;
  s.seed = ck.seed;
  s.ok = true;
  s.metrics = harness::evaluate(*ck.model, data, cfg, ck.seed);
  report.seeds.push_back(s);
  write_text(f.out, harness::render_report(report, f.format));
  return kExitOk;
}

int cmd_run(const Flags& f) {
  const auto cfg = load_config(f);
  const auto report = harness::run_experiment(cfg);
  write_text(f.out, harness::render_report(report, f.format));
  std::size_t failed = 0;
  for (const auto& s : report.seeds) {
    if (!s.ok) {
      ++failed;
      std::cerr << "seed " << s.seed << " failed: " << s.error << '\n';
    }
  }
  return failed == report.seeds.size() ? kExitAllFailed : kExitOk;
}

std::string decomposition_csv(const std::vector<harness::DecompositionRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(17);
  // Probe index, its input coordinates x0..x{d-1}, then one row per class.
  const std::size_t dim = rows.empty() ? 0 : rows.front().probe.size();
  os << "probe";
  for (std::size_t j = 0; j < dim; ++j) os << ",x" << j;
  os << ",class,reducible,irreducible,data,total,total_sampled,total_sampled_se\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& t = rows[r].triple;
    for (std::size_t k = 0; k < t.num_classes(); ++k) {
      os << r;
      for (double x : rows[r].probe) os << ',' << x;
      os << ',' << k << ',' << t.reducible[k] << ',' << t.irreducible[k] << ',' << t.data[k]
         << ',' << t.total[k] << ',' << t.total_sampled[k] << ',' << t.total_sampled_se[k] << '\n';
    }
  }
  return os.str();
}

int cmd_decompose(const Flags& f) {
  auto cfg = load_config(f);
  harness::CalibrationReport report;
  std::unique_ptr<models::Predictor> model;
  harness::TaskData data;
  std::uint64_t seed = cfg.seeds.front();
  if (!f.checkpoint.empty()) {
    auto ck = models::load_checkpoint(f.checkpoint);
    cfg = with_checkpoint(cfg, ck);
    seed = ck.seed;
    model = std::move(ck.model);
    data = harness::build_task_data(cfg, seed);
  } else {
    auto t = harness::train_seed(cfg, seed);
    if (!t.result.ok) {
      std::cerr << "seed " << seed << " failed: " << t.result.error << '\n';
      return kExitAllFailed;
    }
    model = std::move(t.model);
    data = std::move(t.data);
  }
  report.config = harness::config_to_json(cfg);
  report.decomposition =
      harness::run_decomposition(cfg, *model, harness::probe_inputs(cfg, data), seed);
  if (f.format == "csv") {
    write_text(f.out, decomposition_csv(report.decomposition));
  } else {
    nlohmann::json j = harness::report_to_json(report);
    write_text(f.out, j.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_report(const Flags& f) {
  if (f.inputs.empty()) throw harness::ConfigError("report", "no input reports given");
  harness::CalibrationReport merged;
  for (const auto& path : f.inputs) {
    std::ifstream in(path);
    if (!in) throw harness::ConfigError("report", "cannot read '" + path + "'");
    const auto part = harness::report_from_json(nlohmann::json::parse(in));
    if (merged.config.is_null()) merged.config = part.config;
    merged.seeds.insert(merged.seeds.end(), part.seeds.begin(), part.seeds.end());
  }
  write_text(f.out, harness::render_report(merged, f.format));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train and evaluate ETP, BNN, EDL and ENP classifiers"};
  app.require_subcommand(1);
  Flags f;
  auto* train = app.add_subcommand("train", "Train and write checkpoint + loss trace");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  auto* run = app.add_subcommand("run", "Train and evaluate every seed");
  auto* decompose = app.add_subcommand("decompose", "Predictive-variance decomposition");
  auto* report = app.add_subcommand("report", "Re-aggregate existing JSON reports");
  for (auto* cmd : {train, eval, run, decompose}) add_common(cmd, f);
  for (auto* cmd : {eval, decompose}) cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint file");
  report->add_option("inputs", f.inputs, "Report JSON files")->required();
  report->add_option("--out", f.out, "Output path (stdout when omitted)");
  report->add_option("--format", f.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) return cmd_train(f);
    if (*eval) return cmd_eval(f);
    if (*run) return cmd_run(f);
    if (*decompose) return cmd_decompose(f);
    if (*report) return cmd_report(f);
  } catch (const harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const harness::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const data::IdxError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const models::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
