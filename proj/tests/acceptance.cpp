// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gradient_check.hpp"
#include "orars/checkpoint.hpp"
#include "orars/experiment.hpp"
#include "orars/features.hpp"
#include "orars/metrics.hpp"
#include "orars/ranking.hpp"
#include "orars/synth.hpp"
#include "test_support.hpp"

using namespace orars;
using orars::testing::TempDir;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

Matrix random_features(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = g(rng);
  return m;
}

MlpModel random_classifier(std::size_t dim, std::uint64_t seed) {
  const std::size_t hidden[] = {16, 8};
  return make_mlp(2 * dim, hidden, 2, Activation::softmax, seed);
}

// P(y_t > y_ref) for one pair, evaluated as its own batch.
double pair_probability(const MlpModel& m, std::span<const double> test, std::span<const double> ref) {
  Matrix z(1, test.size() + ref.size());
  for (std::size_t j = 0; j < test.size(); ++j) z(0, j) = test[j];
  for (std::size_t j = 0; j < ref.size(); ++j) z(0, test.size() + j) = ref[j];
  return forward(m, z)(0, 1);
}

Outcome feature_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> tdist(1, 50);
  std::uniform_int_distribution<std::size_t> cdist(2, 40);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto u = orars::testing::random_utterance(rng, tdist(rng), cdist(rng));
    worst = std::max(worst, orars::testing::max_abs_diff(compute_agop(u), orars::testing::naive_agop(u)));
    worst = std::max(worst, orars::testing::max_abs_diff(compute_cgop(u), orars::testing::naive_cgop(u)));
  }
  const double secs = seconds_since(t0);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max |diff| %.3g over 200 utterances, %.2f s", worst, secs);
  return {worst <= 1e-9 && secs < 5.0, buf};
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  int nets = 0;
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    for (const bool classifier : {true, false}) {
      const auto p = orars::testing::random_problem(seed, classifier);
      worst = std::max(worst, orars::testing::check_gradients(p.model, p.x, p.loss).max_relative_error);
      ++nets;
    }
  }
  const double secs = seconds_since(t0);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max relative error %.3g over %d networks, %.2f s", worst, nets, secs);
  return {worst <= 1e-4 && secs < 30.0, buf};
}

Outcome rank_placement_oracle() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> ndist(1, 30);
  std::uniform_int_distribution<std::size_t> ddist(2, 12);
  std::uniform_real_distribution<double> sdist(0.0, 5.0);
  int mismatches = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = ndist(rng);
    const std::size_t dim = ddist(rng);
    const auto model = random_classifier(dim, 1000 + inst);
    LabeledFeatures ref{random_features(rng, n, dim), {}};
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid so that ties among training scores occur.
      ref.scores.push_back(inst % 2 ? std::round(sdist(rng) * 2.0) / 2.0 : sdist(rng));
    }
    const auto test = random_features(rng, 1, dim);

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += pair_probability(model, test.row(0), ref.features.row(i));
    const double k = sum + 1.0;
    std::vector<double> sorted = ref.scores;
    for (std::size_t i = 1; i < sorted.size(); ++i)
      for (std::size_t j = i; j > 0 && sorted[j - 1] > sorted[j]; --j) std::swap(sorted[j - 1], sorted[j]);
    long idx = static_cast<long>(std::floor(k));
    if (idx < 1) idx = 1;
    if (idx > static_cast<long>(n)) idx = static_cast<long>(n);
    const double expected = sorted[static_cast<std::size_t>(idx - 1)];

    const auto got = score_rank_placement(model, ref, test.row(0));
    if (got.predicted_score != expected || got.k != k) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in 50 instances"};
}

Outcome anchor_oracle() {
  std::mt19937_64 rng(78);
  std::uniform_int_distribution<int> ndist(1, 4);
  std::uniform_int_distribution<std::size_t> ddist(2, 10);
  int mismatches = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const int per_rank = ndist(rng);
    const std::size_t dim = ddist(rng);
    const int rank_count = kDefaultRankCount;
    AnchorSet anchors;
    anchors.per_rank = per_rank;
    anchors.rank_count = rank_count;
    std::vector<int> present;
    for (int r = 1; r <= rank_count; ++r) {
      if (rng() % 3 == 0 || (r == rank_count && present.empty())) present.push_back(r);
    }
    for (const int r : present) {
      for (int k = 0; k < per_rank; ++k) {
        anchors.ranks.push_back(r);
        anchors.samples.scores.push_back(rank_to_score(r, rank_count));
      }
    }
    anchors.samples.features = random_features(rng, anchors.ranks.size(), dim);
    const auto model = random_classifier(dim, 2000 + inst);
    const auto test = random_features(rng, 1, dim);

    double sum = 0.0;
    for (std::size_t i = 0; i < anchors.ranks.size(); ++i) {
      sum += pair_probability(model, test.row(0), anchors.samples.features.row(i));
    }
    const double expected = sum / static_cast<double>(per_rank);
    if (score_anchor_set(model, anchors, test.row(0)).value != expected) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in 50 anchor sets"};
}

Outcome metric_oracle() {
  std::mt19937_64 rng(79);
  std::uniform_int_distribution<std::size_t> ldist(3, 1000);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = ldist(rng);
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t j = 0; j < n; ++j) {
      x[j] = g(rng);
      y[j] = 0.5 * x[j] + g(rng);
      if (i % 3 == 0) {  // force ties
        x[j] = std::round(x[j] * 2.0);
        y[j] = std::round(y[j]);
      }
    }
    using namespace orars::testing;
    worst = std::max(worst, std::abs(mae(x, y) - reference_mae(x, y)));
    worst = std::max(worst, std::abs(pcc(x, y) - reference_pcc(x, y)));
    worst = std::max(worst, std::abs(scc(x, y) - reference_pcc(reference_ranks(x), reference_ranks(y))));
  }
  // Ranks by hand: x -> 1, 2.5, 2.5, 4, 5 and y -> 2, 1, 3.5, 3.5, 5; rho = 7.25 / sqrt(9.5 * 9.5).
  const double tied = scc(std::vector<double>{1, 2, 2, 3, 5}, std::vector<double>{2, 1, 4, 4, 6});
  const double tied_err = std::abs(tied - 7.25 / 9.5);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "max |diff| %.3g over 100 pairs; tied example %.16f (error %.3g)", worst,
                tied, tied_err);
  return {worst <= 1e-12 && tied_err <= 1e-12, buf};
}

struct Benchmark {
  Outcome outcome;
  std::string orars_json;
  ExperimentConfig cfg;
  Dataset data;
};

Benchmark synthetic_benchmark(const TempDir& dir) {
  SynthConfig sc;
  sc.n_utterances = 500;
  sc.phoneme_count = 20;
  sc.min_frames = 20;
  sc.max_frames = 60;
  sc.seed = 1;
  Benchmark b{{}, {}, {}, generate_corpus(sc)};
  b.cfg.folds = 5;
  b.cfg.seed = 7;
  b.cfg.threads = 4;

  auto run = [&](Algorithm a, double& secs) {
    ExperimentConfig c = b.cfg;
    c.algorithm = a;
    const auto t0 = Clock::now();
    auto r = run_cross_validation(b.data, c);
    secs = seconds_since(t0);
    std::printf("  %-11s PCC %.4f  SCC %.4f  MAE %s  (%.1f s)\n", std::string(to_string(a)).c_str(),
                r.report.pcc, r.report.scc,
                r.report.mae ? std::to_string(*r.report.mae).c_str() : "/", secs);
    std::fflush(stdout);
    return std::make_pair(r, c);
  };
  double t_gop = 0.0;
  double t_nnr = 0.0;
  double t_orars = 0.0;
  const auto gop = run(Algorithm::gop_mean, t_gop).first.report.pcc;
  const auto nnr = run(Algorithm::nnr, t_nnr).first.report.pcc;
  const auto [orars_result, orars_cfg] = run(Algorithm::orars_rank, t_orars);
  const double orars = orars_result.report.pcc;
  write_cv_report(orars_result, orars_cfg, dir / "run1.json");
  b.orars_json = (dir / "run1.json").string();
  b.cfg = orars_cfg;

  const bool a = orars >= 0.80;
  const bool bb = orars > gop;
  const bool c = orars >= nnr - 0.02;
  const bool fast = std::max({t_gop, t_nnr, t_orars}) < 600.0;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "(a) %.4f >= 0.80 %s; (b) %.4f > gop %.4f %s; (c) %.4f >= nnr %.4f - 0.02 %s; "
                "slowest CV %.1f s",
                orars, a ? "ok" : "no", orars, gop, bb ? "ok" : "no", orars, nnr, c ? "ok" : "no",
                std::max({t_gop, t_nnr, t_orars}));
  b.outcome = {a && bb && c && fast, buf};
  return b;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome determinism(const Benchmark& b, const TempDir& dir) {
  const auto again = run_cross_validation(b.data, b.cfg);
  write_cv_report(again, b.cfg, dir / "run2.json");
  const bool json = slurp(b.orars_json) == slurp(dir / "run2.json");
  const bool table = slurp(b.orars_json + ".txt") == slurp(dir / "run2.json.txt");
  return {json && table, json && table ? "reports byte-identical" : "reports differ"};
}

Outcome round_trips(const TempDir& dir) {
  SynthConfig sc;
  sc.n_utterances = 40;
  sc.phoneme_count = 10;
  sc.min_frames = 5;
  sc.max_frames = 15;
  sc.seed = 5;
  const auto d = generate_corpus(sc);
  save_dataset(d, dir / "rt.jsonl");
  const auto d2 = load_dataset(dir / "rt.jsonl");

  TrainConfig tc = classifier_defaults();
  tc.epochs = 2;
  tc.seed = 3;
  Checkpoint ckpt;
  ckpt.config = tc;
  ckpt.model = train_classifier(d, tc).model;
  save_model(ckpt, dir / "rt.ckpt");
  const auto loaded = load_model(dir / "rt.ckpt");

  TrainConfig rc = regressor_defaults();
  rc.epochs = 2;
  Checkpoint reg;
  reg.kind = ModelKind::regressor;
  reg.config = rc;
  reg.model = train_nnr(d, rc).model;
  save_model(reg, dir / "rt-nnr.ckpt");
  const auto reg2 = load_model(dir / "rt-nnr.ckpt");

  const auto ref = labeled_features(d);
  const auto ref2 = labeled_features(d2);
  double worst = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto a = score_rank_placement(ckpt.model, ref, ref.features.row(i));
    const auto b = score_rank_placement(loaded.model, ref2, ref2.features.row(i));
    worst = std::max(worst, std::abs(a.predicted_score - b.predicted_score));
    worst = std::max(worst, std::abs(a.k - b.k));
    worst = std::max(worst, std::abs(predict_nnr(reg.model, ref.features.row(i)).raw -
                                     predict_nnr(reg2.model, ref2.features.row(i)).raw));
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max prediction drift %.3g", worst);
  return {worst <= 1e-12, buf};
}

Outcome boundaries() {
  std::vector<std::string> failures;
  const std::vector<double> scores{3.0, 0.5, 4.75, 2.0, 0.5};
  if (rank_placement_from_probs(std::vector<double>(5, 0.0), scores).predicted_score != 0.5)
    failures.push_back("all-0");
  if (rank_placement_from_probs(std::vector<double>(5, 1.0), scores).predicted_score != 4.75)
    failures.push_back("all-1");

  // A zero-weight row contributes nothing, whatever its inputs and label.
  const std::size_t hidden[] = {6, 4};
  const auto model = make_mlp(4, hidden, 2, Activation::softmax, 9);
  std::mt19937_64 rng(10);
  Matrix x = random_features(rng, 3, 4);
  const auto zero = backward(model, x, WeightedCrossEntropy{{1, 0, 1}, {0.0, 0.0, 0.0}}).grads;
  bool all_zero = true;
  for (std::size_t l = 0; l < zero.weights.size(); ++l) {
    for (const double g : zero.weights[l].data()) all_zero = all_zero && g == 0.0;
    for (const double g : zero.bias[l]) all_zero = all_zero && g == 0.0;
  }
  if (!all_zero) failures.push_back("w=0 gradient");
  Matrix x2 = x;
  for (double& v : x2.row(2)) v = -3.0 * v + 1.0;
  const auto a = backward(model, x, WeightedCrossEntropy{{1, 0, 1}, {0.7, 0.4, 0.0}}).grads;
  const auto b = backward(model, x2, WeightedCrossEntropy{{1, 0, 0}, {0.7, 0.4, 0.0}}).grads;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    if (!(a.weights[l] == b.weights[l]) || a.bias[l] != b.bias[l]) {
      failures.push_back("w=0 row changed the gradient");
      break;
    }
  }

  std::uniform_int_distribution<std::size_t> cdist(2, 40);
  for (int i = 0; i < 50; ++i) {
    const std::size_t C = cdist(rng);
    const auto cg = compute_cgop(orars::testing::random_utterance(rng, 1, C));
    if (!std::all_of(cg.begin() + static_cast<std::ptrdiff_t>(C - 1), cg.end(),
                     [](double v) { return v == 0.0; })) {
      failures.push_back("T=1 cGOP deviation");
      break;
    }
  }
  std::string detail = failures.empty() ? "all boundary cases hold" : "failed:";
  for (const auto& f : failures) detail += " " + f;
  return {failures.empty(), detail};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  TempDir dir("acceptance");
  report(1, "feature oracle", feature_oracle);
  report(2, "gradient check", gradient_check);
  report(3, "rank placement oracle", rank_placement_oracle);
  report(4, "anchor scoring oracle", anchor_oracle);
  report(5, "metric oracles", metric_oracle);

  std::optional<Benchmark> bench;
  report(6, "synthetic benchmark", [&] {
    bench.emplace(synthetic_benchmark(dir));
    return bench->outcome;
  });
  report(7, "determinism", [&]() -> Outcome {
    if (!bench) return {false, "benchmark did not run"};
    return determinism(*bench, dir);
  });
  report(8, "round-trips", [&] { return round_trips(dir); });
  report(9, "boundary suite", boundaries);

  std::printf("%d of 9 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
