#include <benchmark/benchmark.h>

#include <random>

#include "orars/features.hpp"
#include "orars/mlp.hpp"
#include "orars/ranking.hpp"
#include "orars/synth.hpp"

namespace {

using namespace orars;

const Dataset& corpus() {
  static const Dataset d = [] {
    SynthConfig cfg;
    cfg.n_utterances = 200;
    cfg.seed = 1;
    return generate_corpus(cfg);
  }();
  return d;
}

Matrix random_batch(std::size_t rows, std::size_t cols) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = g(rng);
  return m;
}

void BM_ExtractFeatures(benchmark::State& state) {
  const auto& d = corpus();
  for (auto _ : state) {
    for (const auto& u : d.utterances()) benchmark::DoNotOptimize(extract_features(u));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.size()));
}
BENCHMARK(BM_ExtractFeatures);

void BM_ClassifierForward(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 2 * feature_dimension(20);
  const auto model = make_mlp(dim, kDefaultHidden, 2, Activation::softmax, 1);
  const auto x = random_batch(rows, dim);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ClassifierForward)->Arg(64)->Arg(1024);

void BM_ClassifierBackward(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 2 * feature_dimension(20);
  const auto model = make_mlp(dim, kDefaultHidden, 2, Activation::softmax, 1);
  const auto x = random_batch(rows, dim);
  WeightedCrossEntropy loss;
  for (std::size_t r = 0; r < rows; ++r) {
    loss.labels.push_back(static_cast<int>(r % 2));
    loss.weights.push_back(0.5);
  }
  for (auto _ : state) benchmark::DoNotOptimize(backward(model, x, loss));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ClassifierBackward)->Arg(64)->Arg(1024);

void BM_RankPlacement(benchmark::State& state) {
  const auto reference = labeled_features(corpus());
  const auto model = make_mlp(2 * reference.features.cols(), kDefaultHidden, 2, Activation::softmax, 1);
  const auto test = reference.features.row(0);
  for (auto _ : state) benchmark::DoNotOptimize(score_rank_placement(model, reference, test));
}
BENCHMARK(BM_RankPlacement);

}  // namespace

BENCHMARK_MAIN();
