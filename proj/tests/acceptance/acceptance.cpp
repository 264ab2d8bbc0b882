// Acceptance suite: one PASS / FAIL / SKIP line per criterion. The process
// exits non-zero when any criterion fails; skipped criteria do not fail.
//
// Usage: etp_acceptance [--data-dir DIR] [--only N[,N...]] [--known-failures N[,N...]]
//
// A criterion listed in --known-failures still prints FAIL but does not set
// the exit code; the list is kept next to the analysis of each failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "etp/data/synthetic.hpp"
#include "etp/dist/dirichlet.hpp"
#include "etp/harness/config.hpp"
#include "etp/harness/experiment.hpp"
#include "etp/harness/report.hpp"
#include "etp/metrics/calibration.hpp"
#include "etp/metrics/decomposition.hpp"
#include "etp/metrics/oracle.hpp"
#include "etp/models/checkpoint.hpp"
#include "etp/models/edl.hpp"
#include "etp/models/etp.hpp"
#include "support/dirichlet_oracle.hpp"
#include "support/gradcheck.hpp"
#include "support/metric_oracles.hpp"

using namespace etp;
using Clock = std::chrono::steady_clock;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome pass_if(bool ok, std::string detail) { return {ok ? Verdict::pass : Verdict::fail, std::move(detail)}; }

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

harness::ExperimentConfig config_from(const harness::ConfigLayer& layer) {
  return harness::build_config({layer});
}

std::vector<int> argmax_rows(const ad::Tensor& p) {
  std::vector<int> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const auto r = p.row_view(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

// Average ranks, ties sharing the mean rank.
std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;  // a constant series has no trend
  return sab / std::sqrt(saa * sbb);
}

// ---------------------------------------------------------------------------

Outcome autodiff_correctness() {
  const auto t0 = Clock::now();
  dist::SeededRng rng(1001);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    auto net = testing::make_smooth_mixed_net(rng);
    worst = std::max(worst, testing::max_fd_relative_error(net.net, net.inputs));
  }
  const double dt = seconds_since(t0);
  return pass_if(worst <= 1e-4 && dt < 10.0,
                 fmt("50 mixed networks, max relative error %.3g (<= 1e-4), %.2f s (< 10 s)", worst, dt));
}

Outcome dirichlet_analytics() {
  const auto t0 = Clock::now();
  dist::SeededRng rng(1002);
  std::size_t checks = 0, misses = 0;
  double worst_self_kl = 0.0;
  std::string first_miss;
  auto check = [&](const testing::McEstimate& mc, double value, const std::string& what) {
    ++checks;
    if (!mc.within(value)) {
      ++misses;
      if (first_miss.empty()) {
        first_miss = fmt("; first miss %s: analytic %.6g, MC %.6g +- %.2g", what.c_str(), value, mc.mean, mc.se);
      }
    }
  };
  for (int set = 0; set < 20; ++set) {
    const std::size_t K = 2 + rng.uniform_index(4);
    std::vector<double> a(K), b(K);
    for (double& v : a) v = std::exp(rng.uniform(std::log(0.3), std::log(20.0)));
    for (double& v : b) v = std::exp(rng.uniform(std::log(0.3), std::log(20.0)));
    const dist::DirichletParams q(a), p(b);
    const auto mc = testing::dirichlet_mc(a, b, 1000000, 5000 + set);
    const auto m = dist::dirichlet_moments(q);
    check(mc.kl, dist::dirichlet_kl(q, p), fmt("set %d KL", set));
    for (std::size_t k = 0; k < K; ++k) {
      check(mc.mean[k], m.mean[k], fmt("set %d mean[%zu]", set, k));
      check(mc.variance[k], m.variance[k], fmt("set %d variance[%zu]", set, k));
      check(mc.expected_log[k], dist::dirichlet_expected_log_prob(q, k), fmt("set %d E log[%zu]", set, k));
    }
    worst_self_kl = std::max(worst_self_kl, std::abs(dist::dirichlet_kl(q, q)));
  }
  const double dt = seconds_since(t0);
  return pass_if(misses == 0 && worst_self_kl <= 1e-10 && dt < 30.0,
                 fmt("%zu/%zu MC checks within 3 SE on 20 sets (1e6 draws), max KL(p||p) %.2g (<= 1e-10), "
                     "%.1f s (< 30 s)",
                     checks - misses, checks, worst_self_kl, dt) +
                     first_miss);
}

Outcome edl_elbo_constant() {
  dist::SeededRng rng(1003);
  double worst_sd = 0.0;
  for (std::size_t K : {2u, 3u, 10u}) {
    std::vector<double> diff;
    for (int i = 0; i < 100; ++i) {
      ad::Tensor alpha({1, K});
      for (double& v : alpha.data()) v = std::exp(rng.uniform(-3.0, 5.0));
      const std::vector<int> y{static_cast<int>(rng.uniform_index(K))};
      const double lambda = rng.uniform(0.0, 1.0);
      ad::Tape tape;
      const double loss = models::edl_loss_rows(tape.leaf(alpha), y, lambda).value()[0];
      diff.push_back(models::edl_negative_elbo(alpha, y, lambda)[0] - loss);
    }
    const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / 100.0;
    double ss = 0.0;
    for (double d : diff) ss += (d - mean) * (d - mean);
    worst_sd = std::max(worst_sd, std::sqrt(ss / 99.0));
  }
  return pass_if(worst_sd <= 1e-8,
                 fmt("100 random inputs for each K in {2, 3, 10}, max sample sd %.3g (<= 1e-8)", worst_sd));
}

Outcome risk_product_property() {
  const auto t0 = Clock::now();
  const std::size_t bad = testing::risk_product_violations(100000, 1004);
  const double dt = seconds_since(t0);
  return pass_if(bad == 0 && dt < 1.0, fmt("1e5 pairs, %zu violations, %.3f s (< 1 s)", bad, dt));
}

Outcome decomposition_identity() {
  dist::SeededRng rng(1005);
  std::size_t checks = 0, misses = 0;
  double worst_z = 0.0;
  auto record = [&](const metrics::DecompositionTriple& t) {
    for (std::size_t k = 0; k < t.total.size(); ++k) {
      ++checks;
      const double z = std::abs(t.term_sum(k) - t.total_sampled[k]) / t.total_sampled_se[k];
      worst_z = std::max(worst_z, z);
      if (!(z <= 3.0)) ++misses;
    }
  };
  for (int c = 0; c < 50; ++c) {
    const std::size_t K = 2 + rng.uniform_index(4);
    const auto base = testing::random_simplex(rng, K);
    const double spread = rng.uniform(0.1, 2.0);
    record(metrics::decompose_pbm(
        [&](dist::SeededRng& r) {
          std::vector<double> h(K);
          double s = 0.0;
          for (std::size_t k = 0; k < K; ++k) s += (h[k] = base[k] * std::exp(r.normal(0.0, spread)));
          for (double& v : h) v /= s;
          return h;
        },
        10000, rng));
  }
  for (int c = 0; c < 50; ++c) {
    const std::size_t K = 2 + rng.uniform_index(4);
    const auto center = testing::random_simplex(rng, K);
    const double scale = std::exp(rng.uniform(0.0, 3.0));
    const double spread = rng.uniform(0.1, 1.0);
    record(metrics::decompose_cbm(
        [&](dist::SeededRng& r) {
          std::vector<double> a(K);
          for (std::size_t k = 0; k < K; ++k) a[k] = scale * center[k] * std::exp(r.normal(0.0, spread)) + 0.05;
          return dist::DirichletParams(a);
        },
        10000, 4, rng));
  }
  return pass_if(misses == 0, fmt("100 configurations (50 parametric, 50 complete), S = 1e4: %zu/%zu class "
                                  "totals within 3 SE, max |z| %.2f",
                                  checks - misses, checks, worst_z));
}

// Shared by criteria 6 and 8: the simplified variant on the 1-D task.
struct B1Run {
  std::vector<double> accuracy;
  std::vector<std::unique_ptr<models::Predictor>> models;
  double seconds = 0.0;
  harness::ExperimentConfig cfg;
};

const B1Run& b1_run() {
  static const B1Run run = [] {
    B1Run r;
    r.cfg = config_from({{"task", "two-gaussians"},
                         {"model", "etp"},
                         {"key_network", "identity"},
                         {"combiner", "residual"},
                         {"memory_tanh", "false"},
                         {"epochs", "400"},
                         {"lr", "0.001"},
                         {"train_per_class", "20"},
                         {"test_size", "10000"},
                         {"seeds", "0,1,2,3,4,5,6,7,8,9"}});
    const auto t0 = Clock::now();
    for (auto seed : r.cfg.seeds) {
      auto t = harness::train_seed(r.cfg, seed);
      dist::SeededRng eval = dist::SeededRng(seed).derive(4);
      const auto p = t.model->predict(t.data.test.feature_tensor(), eval);
      const auto pred = argmax_rows(p);
      std::size_t right = 0;
      for (std::size_t i = 0; i < pred.size(); ++i) right += pred[i] == t.data.test.labels[i];
      r.accuracy.push_back(t.result.ok ? static_cast<double>(right) / static_cast<double>(pred.size())
                                       : std::nan(""));
      r.models.push_back(std::move(t.model));
    }
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

Outcome b1_reproduction() {
  const auto& r = b1_run();
  const double mean = std::accumulate(r.accuracy.begin(), r.accuracy.end(), 0.0) / 10.0;
  const double bayes = 1.0 - metrics::expected_bayes_error_1d(data::two_gaussians_oracle(), -12.0, 12.0);
  const bool ok = mean >= 0.75 && mean <= 0.90 && r.seconds < 120.0;
  return pass_if(ok, fmt("simplified ETP, 10 seeds, mean test accuracy %.4f in [0.75, 0.90] "
                         "(Bayes-optimal %.4f), %.1f s (< 120 s)",
                         mean, bayes, r.seconds));
}

Outcome b2_reproduction() {
  const auto t0 = Clock::now();
  std::ostringstream detail;
  bool ok = true;
  for (const char* kind : {"bnn", "edl", "enp", "etp"}) {
    const auto cfg = config_from({{"task", "iris2d"}, {"model", kind}, {"epochs", "400"}});
    double sum = 0.0, worst = 1.0;
    bool separable_all = true;
    for (auto seed : cfg.seeds) {
      auto t = harness::train_seed(cfg, seed);
      dist::SeededRng eval = dist::SeededRng(seed).derive(4);
      const auto pred = argmax_rows(t.model->predict(t.data.train.feature_tensor(), eval));
      std::size_t right = 0;
      for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool hit = pred[i] == t.data.train.labels[i];
        right += hit;
        if (t.data.train.labels[i] == 0 && !hit) separable_all = false;
      }
      const double acc = t.result.ok ? static_cast<double>(right) / static_cast<double>(pred.size()) : 0.0;
      sum += acc;
      worst = std::min(worst, acc);
    }
    const double mean = sum / static_cast<double>(cfg.seeds.size());
    ok = ok && mean >= 0.90 && separable_all;
    detail << kind << " mean " << fmt("%.3f", mean) << " (min " << fmt("%.3f", worst) << ", setosa "
           << (separable_all ? "all correct" : "MISSED") << "); ";
  }
  const double dt = seconds_since(t0);
  ok = ok && dt < 180.0;
  return pass_if(ok, "Iris-2D training accuracy over 10 seeds: " + detail.str() + fmt("%.1f s (< 180 s)", dt));
}

Outcome b1_memory_behavior() {
  const auto& r = b1_run();
  const ad::Tensor probes({2, 1}, {3.0, -3.0});
  std::size_t good = 0;
  for (std::size_t s = 0; s < r.models.size(); ++s) {
    const auto& m = dynamic_cast<const models::EtpModel&>(*r.models[s]);
    dist::SeededRng rng = dist::SeededRng(r.cfg.seeds[s]).derive(7);
    const auto e = m.memory_evidence(probes, 256, rng);
    // Row 0 is x = +3, row 1 is x = -3.
    if (e(0, 1) > e(1, 1) && e(1, 0) > e(0, 0)) ++good;
  }
  return pass_if(good >= 8, fmt("memory evidence ordered as expected in %zu of 10 seeds (>= 8)", good));
}

Outcome ood_surrogate(const std::string& data_dir) {
  namespace fs = std::filesystem;
  const fs::path root(data_dir);
  for (const char* f : {"fmnist/train-images-idx3-ubyte", "fmnist/train-labels-idx1-ubyte",
                        "fmnist/t10k-images-idx3-ubyte", "fmnist/t10k-labels-idx1-ubyte",
                        "mnist/t10k-images-idx3-ubyte", "mnist/t10k-labels-idx1-ubyte"}) {
    if (!fs::exists(root / f)) return {Verdict::skip, "data file " + (root / f).string() + " absent"};
  }
  const auto t0 = Clock::now();
  const auto cfg = config_from({{"task", "fmnist-vs-mnist"},
                                {"model", "etp"},
                                {"data_dir", data_dir},
                                {"seeds", "0,1,2,3,4"},
                                {"fmnist_train", "5000"},
                                {"mnist_ood", "5000"}});
  const auto agg = harness::aggregate(harness::run_experiment(cfg));
  const double auroc = agg.at("auroc_ood_pct").mean / 100.0;
  const double dt = seconds_since(t0);
  return pass_if(auroc >= 0.70 && dt < 900.0,
                 fmt("ETP entropy AUROC FMNIST vs MNIST over 5 seeds %.3f (>= 0.70), %.0f s (< 900 s)", auroc, dt));
}

Outcome metric_oracles() {
  dist::SeededRng rng(1010);
  std::size_t ece_bad = 0, auroc_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t K = 2 + rng.uniform_index(4);
    const std::size_t bins = 1 + rng.uniform_index(20);
    const auto set = testing::random_prediction_set(rng, 1 + rng.uniform_index(200), K);
    if (metrics::ece(set, bins) != testing::ece_brute_force(set, bins)) ++ece_bad;
  }
  std::size_t auroc_sets = 0;
  for (std::size_t n_in = 1; n_in <= 200; n_in += 7) {
    for (std::size_t n_out = 1; n_out <= 200; n_out += 13) {
      std::vector<double> in(n_in), out(n_out);
      // Coarse grid so ties are common.
      for (double& v : in) v = static_cast<double>(rng.uniform_index(25)) / 8.0;
      for (double& v : out) v = static_cast<double>(rng.uniform_index(25)) / 8.0 + 0.25;
      ++auroc_sets;
      if (metrics::auroc(in, out) != testing::auroc_all_pairs(in, out)) ++auroc_bad;
    }
  }
  return pass_if(ece_bad == 0 && auroc_bad == 0,
                 fmt("ECE exact on %zu/1000 sets; AUROC exact on %zu/%zu sets with N <= 200", 1000 - ece_bad,
                     auroc_sets - auroc_bad, auroc_sets));
}

Outcome corruption_monotonicity() {
  std::ostringstream detail;
  bool ok = true;
  for (const char* kind : {"bnn", "edl", "enp", "etp"}) {
    const auto base = config_from({{"task", "two-gaussians"}, {"model", kind}, {"epochs", "400"}});
    std::vector<double> severity, mean_ece;
    std::vector<std::vector<double>> per_seed(data::kMaxSeverity + 1);
    for (auto seed : base.seeds) {
      auto t = harness::train_seed(base, seed);
      if (!t.result.ok) continue;
      for (int s = 0; s <= data::kMaxSeverity; ++s) {
        auto cfg = base;
        cfg.corruption = data::CorruptionSpec{data::CorruptionKind::gaussian_noise, s};
        const auto d = harness::build_task_data(cfg, seed);
        per_seed[s].push_back(harness::evaluate(*t.model, d, cfg, seed).ece_pct);
      }
    }
    for (int s = 0; s <= data::kMaxSeverity; ++s) {
      const auto& v = per_seed[s];
      severity.push_back(s);
      mean_ece.push_back(v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / v.size());
    }
    const double rho = spearman(severity, mean_ece);
    const bool model_ok = per_seed[0].size() == base.seeds.size() && rho >= 0.0;
    ok = ok && model_ok;
    detail << kind << fmt(" rho %.2f (ECE %.2f -> %.2f %%)", rho, mean_ece.front(), mean_ece.back()) << "; ";
  }
  return pass_if(ok, "gaussian-noise severities 0..5, 10 seeds: " + detail.str());
}

Outcome determinism() {
  bool reports_equal = true;
  for (const char* kind : {"bnn", "edl", "enp", "etp"}) {
    const auto cfg = config_from({{"model", kind}, {"epochs", "30"}, {"seeds", "7,8"}});
    const auto a = harness::report_to_json(harness::run_experiment(cfg)).dump();
    const auto b = harness::report_to_json(harness::run_experiment(cfg)).dump();
    reports_equal = reports_equal && a == b;
  }
  bool checkpoints_equal = true;
  const auto dir = std::filesystem::temp_directory_path() / "etp_acceptance_ckpt";
  std::filesystem::create_directories(dir);
  for (const char* kind : {"bnn", "edl", "enp", "etp"}) {
    const auto cfg = config_from({{"model", kind}, {"epochs", "30"}, {"seeds", "3"}});
    auto t = harness::train_seed(cfg, 3);
    const auto path = dir / (std::string(kind) + ".ckpt");
    models::save_checkpoint(*t.model, 3, path);
    const auto loaded = models::load_checkpoint(path);
    checkpoints_equal = checkpoints_equal &&
                        models::encode_checkpoint(*loaded.model, loaded.seed) == models::encode_checkpoint(*t.model, 3);
    dist::SeededRng r1(9), r2(9);
    const auto x = t.data.test.feature_tensor();
    checkpoints_equal = checkpoints_equal && t.model->predict(x, r1) == loaded.model->predict(x, r2);
  }
  std::filesystem::remove_all(dir);
  return pass_if(reports_equal && checkpoints_equal,
                 std::string("repeated runs ") + (reports_equal ? "bitwise identical" : "DIFFER") +
                     "; checkpoint round trip " + (checkpoints_equal ? "bit-exact" : "NOT bit-exact") +
                     " for all four models");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string data_dir = "data";
  std::vector<int> only, known;
  app.add_option("--data-dir", data_dir, "Directory holding fmnist/ and mnist/ IDX files");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--known-failures", known, "Failures that do not set the exit code")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"autodiff correctness", autodiff_correctness},
      {"Dirichlet analytics", dirichlet_analytics},
      {"EDL loss equals negative ELBO up to a constant", edl_elbo_constant},
      {"risk product property", risk_product_property},
      {"variance decomposition identity", decomposition_identity},
      {"two-gaussians accuracy band", b1_reproduction},
      {"Iris-2D training accuracy", b2_reproduction},
      {"memory evidence grows away from the boundary", b1_memory_behavior},
      {"FMNIST vs MNIST OOD surrogate", [&] { return ood_surrogate(data_dir); }},
      {"metric oracles", metric_oracles},
      {"corruption monotonicity", corruption_monotonicity},
      {"determinism and serialization", determinism},
  };
  const std::set<int> selected(only.begin(), only.end());
  const std::set<int> expected(known.begin(), known.end());
  int failures = 0, known_failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Verdict::fail, std::string("threw: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
    const bool is_known = expected.count(id) > 0;
    if (o.verdict == Verdict::fail) ++(is_known ? known_failures : failures);
    std::printf("[%s] %2d %s: %s%s\n", tag, id, criteria[i].first.c_str(), o.detail.c_str(),
                o.verdict == Verdict::fail && is_known ? " (known failure)" : "");
    std::fflush(stdout);
  }
  std::printf("%d unexpected failure(s), %d known failure(s)\n", failures, known_failures);
  return failures == 0 ? 0 : 1;
}
