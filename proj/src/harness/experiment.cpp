#include "etp/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <thread>

#include "etp/data/idx.hpp"
#include "etp/data/iris.hpp"
#include "etp/data/synthetic.hpp"
#include "etp/data/transforms.hpp"
#include "etp/metrics/calibration.hpp"
#include "etp/models/train.hpp"

namespace etp::harness {

namespace {

// Child streams of SeededRng(seed).
enum Stream : std::uint64_t { kData = 1, kInit = 2, kTrain = 3, kEval = 4, kOod = 5, kDecomp = 6 };

data::LabeledDataset take_first(const data::LabeledDataset& ds, std::size_t n) {
  std::vector<std::size_t> idx(std::min(n, ds.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return ds.subset(idx);
}

data::LabeledDataset read_pair(const std::filesystem::path& dir, const std::string& prefix) {
  const auto images = dir / (prefix + "-images-idx3-ubyte");
  const auto labels = dir / (prefix + "-labels-idx1-ubyte");
  if (!std::filesystem::exists(images) || !std::filesystem::exists(labels)) {
    throw DataError("missing IDX files " + images.string() + " / " + labels.string());
  }
  try {
    return data::read_idx(images, labels, 10);
  } catch (const data::IdxError& e) {
    throw DataError(images.string() + ": " + e.what());
  }
}

void maybe_corrupt(const ExperimentConfig& cfg, data::LabeledDataset& test, dist::SeededRng& rng) {
  if (cfg.corruption) test = data::corrupt(test, *cfg.corruption, rng);
}

double score(const ExperimentConfig& cfg, std::span<const double> probs) {
  if (cfg.ood_score == OodScore::entropy) return metrics::entropy(probs);
  return -*std::max_element(probs.begin(), probs.end());
}

}  // namespace

TaskData build_task_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  dist::SeededRng rng = dist::SeededRng(seed).derive(kData);
  TaskData d;
  switch (cfg.task) {
    case Task::two_gaussians: {
      d.train = data::gen_two_gaussians(cfg.train_per_class, rng).data;
      d.test = data::sample_from_oracle(data::two_gaussians_oracle(), cfg.test_size, rng);
      d.ood = data::gen_far_field(1, 2, cfg.ood_size, cfg.ood_inner, cfg.ood_outer, rng);
      maybe_corrupt(cfg, d.test, rng);
      break;
    }
    case Task::iris2d: {
      const data::LabeledDataset all = data::load_iris_pca2();
      const double fractions[] = {1.0 - cfg.iris_test_fraction, cfg.iris_test_fraction};
      auto parts = data::split(all, fractions, rng);
      d.train = std::move(parts[0]);
      d.test = std::move(parts[1]);
      maybe_corrupt(cfg, d.test, rng);
      data::LabeledDataset* others[] = {&d.test};
      data::zscore(d.train, others);
      // Far-field points live in the normalized space.
      d.ood = data::gen_far_field(2, 3, cfg.ood_size, cfg.ood_inner, cfg.ood_outer, rng);
      break;
    }
    case Task::fmnist_vs_mnist: {
      const std::filesystem::path root(cfg.data_dir);
      d.train = take_first(read_pair(root / "fmnist", "train"), cfg.fmnist_train);
      d.test = take_first(read_pair(root / "fmnist", "t10k"), cfg.fmnist_test);
      d.ood = take_first(read_pair(root / "mnist", "t10k"), cfg.mnist_ood);
      d.ood.provenance.origin = data::Origin::ood;
      maybe_corrupt(cfg, d.test, rng);
      data::LabeledDataset* others[] = {&d.test, &d.ood};
      data::zscore(d.train, others);
      break;
    }
  }
  return d;
}

TrainedSeed train_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  TrainedSeed out;
  out.result.seed = seed;
  out.data = build_task_data(cfg, seed);
  dist::SeededRng root(seed);
  dist::SeededRng init = root.derive(kInit);
  out.model = models::make_predictor(cfg.model, init);
  const auto start = std::chrono::steady_clock::now();
  try {
    out.result.loss_trace = models::train(*out.model, out.data.train, cfg.train, root.derive(kTrain)).loss_trace;
    out.result.ok = true;
  } catch (const models::TrainingDiverged& e) {
    out.result.ok = false;
    out.result.error = e.what();
  }
  if (cfg.timing && cfg.train.epochs > 0) {
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    out.result.runtime_s_per_epoch = dt.count() / static_cast<double>(cfg.train.epochs);
  }
  return out;
}

SeedMetrics evaluate(const models::Predictor& model, const TaskData& data,
                     const ExperimentConfig& cfg, std::uint64_t seed) {
  dist::SeededRng root(seed);
  dist::SeededRng eval_rng = root.derive(kEval);
  dist::SeededRng ood_rng = root.derive(kOod);
  const ad::Tensor p_in = model.predict(data.test.feature_tensor(), eval_rng);
  const metrics::PredictionSet preds(cfg.model.num_classes, p_in.values(), data.test.labels);
  SeedMetrics m;
  m.err_pct = 100.0 * metrics::error_rate(preds);
  m.ece_pct = 100.0 * metrics::ece(preds, cfg.ece_bins);
  m.nll = metrics::nll(preds);

  const ad::Tensor p_out = model.predict(data.ood.feature_tensor(), ood_rng);
  std::vector<double> s_in(data.test.size()), s_out(data.ood.size());
  for (std::size_t i = 0; i < s_in.size(); ++i) s_in[i] = score(cfg, p_in.row_view(i));
  for (std::size_t i = 0; i < s_out.size(); ++i) s_out[i] = score(cfg, p_out.row_view(i));
  m.auroc_ood_pct = 100.0 * metrics::auroc(s_in, s_out);
  return m;
}

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  TrainedSeed t = train_seed(cfg, seed);
  if (t.result.ok) t.result.metrics = evaluate(*t.model, t.data, cfg, seed);
  return std::move(t.result);
}

CalibrationReport run_experiment(const ExperimentConfig& cfg) {
  CalibrationReport report;
  report.config = config_to_json(cfg);
  report.seeds.resize(cfg.seeds.size());

  // Data errors abort the whole run; training failures stay per seed.
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      try {
        report.seeds[i] = run_seed(cfg, cfg.seeds[i]);
      } catch (const DataError&) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        return;
      } catch (const std::exception& e) {
        report.seeds[i].seed = cfg.seeds[i];
        report.seeds[i].ok = false;
        report.seeds[i].error = e.what();
      }
    }
  };
  const std::size_t n_workers = std::min(cfg.workers, cfg.seeds.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);
  return report;
}

std::vector<DecompositionRow> run_decomposition(const ExperimentConfig& cfg,
                                                const models::Predictor& model,
                                                const ad::Tensor& probes, std::uint64_t seed) {
  const auto kind = model.kind();
  if (kind != models::ModelKind::bnn && kind != models::ModelKind::etp) {
    throw ConfigError("model", std::string("no variance decomposition for '") +
                                   std::string(models::to_string(kind)) +
                                   "': EDL has a single data term and ENP no global posterior; "
                                   "use bnn or etp");
  }
  dist::SeededRng rng = dist::SeededRng(seed).derive(kDecomp);
  std::vector<DecompositionRow> rows;
  for (std::size_t i = 0; i < probes.rows(); ++i) {
    const auto r = probes.row_view(i);
    DecompositionRow row;
    row.probe.assign(r.begin(), r.end());
    row.triple = model.decompose(ad::Tensor({1, probes.cols()}, row.probe), cfg.decomp_outer,
                                 cfg.decomp_inner, rng);
    rows.push_back(std::move(row));
  }
  return rows;
}

ad::Tensor probe_inputs(const ExperimentConfig& cfg, const TaskData& data) {
  const std::size_t d = cfg.model.input_dim;
  if (!cfg.probes.empty()) return ad::Tensor({cfg.probes.size() / d, d}, cfg.probes);
  std::vector<std::size_t> idx(std::min(cfg.probe_count, data.test.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return data.test.feature_tensor(idx);
}

}  // namespace etp::harness
