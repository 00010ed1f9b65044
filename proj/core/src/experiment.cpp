#include "orars/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include <json.hpp>

#include "format_util.hpp"
#include "orars/error.hpp"
#include "orars/ranking.hpp"
#include "orars/seeding.hpp"

namespace orars {

namespace {

enum Stream : std::uint64_t {
  kFoldStream = 100,
  kValidationStream = 200,
  kModelStream = 300,
  kAnchorStream = 400,
};

struct FoldOutput {
  std::vector<double> predictions;  // aligned with FoldSplit::test
};

FoldOutput run_fold(const Dataset& d, const LabeledFeatures& all, const FoldSplit& split,
                    std::size_t fold, const ExperimentConfig& cfg) {
  FoldOutput out;
  out.predictions.reserve(split.test.size());
  TrainConfig train_cfg = cfg.resolved_train_config();
  train_cfg.seed = derive_seed(cfg.seed, kModelStream + fold);

  switch (cfg.algorithm) {
    case Algorithm::gop_mean:
      for (const std::size_t i : split.test) out.predictions.push_back(classic_gop_sentence_score(d[i]));
      break;

    case Algorithm::nnr: {
      const auto model =
          train_nnr(all.subset(split.training), all.subset(split.validation), train_cfg).model;
      for (const std::size_t i : split.test) {
        out.predictions.push_back(predict_nnr(model, all.features.row(i)).reported);
      }
      break;
    }

    case Algorithm::orars_rank: {
      const auto reference = all.subset(split.training);
      const auto model = train_classifier(reference, all.subset(split.validation), train_cfg).model;
      for (const std::size_t i : split.test) {
        out.predictions.push_back(
            score_rank_placement(model, reference, all.features.row(i)).predicted_score);
      }
      break;
    }

    case Algorithm::orars_anchor: {
      const auto portion = d.subset(split.training);
      const auto anchor_split = split_anchor_set(portion, cfg.rank_count, cfg.per_rank,
                                                 derive_seed(cfg.seed, kAnchorStream + fold));
      const auto anchors =
          make_anchor_set(anchor_split.anchors, cfg.rank_count, cfg.per_rank, cfg.agop_mode);
      const auto train = labeled_features(anchor_split.training, cfg.agop_mode);
      const auto model = train_classifier(train, all.subset(split.validation), train_cfg).model;
      for (const std::size_t i : split.test) {
        out.predictions.push_back(score_anchor_set(model, anchors, all.features.row(i)).predicted_score);
      }
      break;
    }
  }
  return out;
}

std::string json_string(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

}  // namespace

Algorithm parse_algorithm(std::string_view name) {
  if (name == "gop_mean") return Algorithm::gop_mean;
  if (name == "nnr") return Algorithm::nnr;
  if (name == "orars_rank") return Algorithm::orars_rank;
  if (name == "orars_anchor") return Algorithm::orars_anchor;
  throw ConfigError("unknown algorithm '" + std::string(name) +
                    "' (expected gop_mean|nnr|orars_rank|orars_anchor)");
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::gop_mean:
      return "gop_mean";
    case Algorithm::nnr:
      return "nnr";
    case Algorithm::orars_rank:
      return "orars_rank";
    case Algorithm::orars_anchor:
      break;
  }
  return "orars_anchor";
}

void ExperimentConfig::validate() const {
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (algorithm == Algorithm::orars_anchor || stratify) {
    if (rank_count < 2) throw ConfigError("rank count M must be >= 2");
  }
  if (algorithm == Algorithm::orars_anchor && per_rank < 1) {
    throw ConfigError("per-rank anchor count N must be >= 1");
  }
  resolved_train_config().validate();
}

TrainConfig ExperimentConfig::resolved_train_config() const {
  TrainConfig c = train;
  if (c.batch_size == 0) {
    c.batch_size = algorithm == Algorithm::nnr ? kRegressorBatchSize : kClassifierBatchSize;
  }
  return c;
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t n, std::size_t folds,
                                                 std::uint64_t seed,
                                                 const std::vector<int>* ranks) {
  if (folds < 2) throw ConfigError("folds must be >= 2");
  if (folds > n) {
    throw ConfigError("fold count " + std::to_string(folds) + " exceeds dataset size " +
                      std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  if (ranks) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return (*ranks)[a] < (*ranks)[b]; });
  }
  std::vector<std::vector<std::size_t>> out(folds);
  for (std::size_t p = 0; p < n; ++p) out[p % folds].push_back(order[p]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

std::vector<FoldSplit> make_fold_splits(const Dataset& d, const ExperimentConfig& cfg) {
  std::vector<int> ranks;
  if (cfg.stratify) {
    for (const double s : d.scores()) ranks.push_back(score_to_rank(s, cfg.rank_count));
  }
  const auto folds = make_folds(d.size(), cfg.folds, derive_seed(cfg.seed, kFoldStream),
                                cfg.stratify ? &ranks : nullptr);

  std::vector<FoldSplit> splits;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    FoldSplit s;
    s.test = folds[f];
    std::vector<std::size_t> portion;
    std::vector<bool> is_test(d.size(), false);
    for (const std::size_t i : s.test) is_test[i] = true;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!is_test[i]) portion.push_back(i);
    }
    const auto tv = split_validation(portion.size(), cfg.train.validation_fraction,
                                     derive_seed(cfg.seed, kValidationStream + f));
    for (const std::size_t p : tv.training) s.training.push_back(portion[p]);
    for (const std::size_t p : tv.validation) s.validation.push_back(portion[p]);
    splits.push_back(std::move(s));
  }
  return splits;
}

std::size_t worker_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ORARS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    throw ConfigError("ORARS_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

CrossValidationResult run_cross_validation(const Dataset& d, const ExperimentConfig& cfg) {
  cfg.validate();
  const auto truth = d.scores();
  const auto splits = make_fold_splits(d, cfg);
  const auto all = labeled_features(d, cfg.agop_mode);

  std::vector<FoldOutput> outputs(splits.size());
  std::vector<std::exception_ptr> errors(splits.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < splits.size(); f = next++) {
      try {
        outputs[f] = run_fold(d, all, splits[f], f, cfg);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min(worker_threads(cfg.threads), splits.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  CrossValidationResult result;
  result.predictions.resize(d.size());
  const bool with_mae = cfg.algorithm != Algorithm::gop_mean;
  for (std::size_t f = 0; f < splits.size(); ++f) {
    std::vector<double> fold_truth;
    for (std::size_t k = 0; k < splits[f].test.size(); ++k) {
      const std::size_t i = splits[f].test[k];
      result.predictions[i] = {d[i].id, f, truth[i], outputs[f].predictions[k]};
      fold_truth.push_back(truth[i]);
    }
    const auto fold_report = evaluate(outputs[f].predictions, fold_truth, with_mae);
    result.report.per_fold.push_back(
        {fold_report.mae, fold_report.pcc, fold_report.scc, fold_report.n});
  }

  std::vector<double> predicted;
  predicted.reserve(d.size());
  for (const auto& p : result.predictions) predicted.push_back(p.predicted);
  auto overall = evaluate(predicted, truth, with_mae);
  overall.per_fold = std::move(result.report.per_fold);
  result.report = std::move(overall);
  return result;
}

CrossValidationResult run_cross_validation(const ExperimentConfig& cfg) {
  return run_cross_validation(load_dataset(cfg.dataset_path), cfg);
}

std::string format_cv_table(const CrossValidationResult& r, const ExperimentConfig& cfg) {
  return format_report_table(r.report, std::string(to_string(cfg.algorithm)) + ", " +
                                           std::to_string(cfg.folds) + "-fold cross-validation, seed " +
                                           std::to_string(cfg.seed));
}

std::string format_cv_json(const CrossValidationResult& r, const ExperimentConfig& cfg) {
  const auto train = cfg.resolved_train_config();
  std::string out = "{\"algorithm\":" + json_string(to_string(cfg.algorithm));
  out += ",\"folds\":" + std::to_string(cfg.folds);
  out += ",\"seed\":" + std::to_string(cfg.seed);
  out += ",\"agop_mode\":" + json_string(to_string(cfg.agop_mode));
  out += ",\"stratify\":" + std::string(cfg.stratify ? "true" : "false");
  out += ",\"rank_count\":" + std::to_string(cfg.rank_count);
  out += ",\"per_rank\":" + std::to_string(cfg.per_rank);
  out += ",\"train\":{\"learning_rate\":" + detail::real_to_string(train.learning_rate);
  out += ",\"epochs\":" + std::to_string(train.epochs);
  out += ",\"batch_size\":" + std::to_string(train.batch_size);
  out += ",\"validation_fraction\":" + detail::real_to_string(train.validation_fraction);
  out += ",\"pairs_per_epoch\":" + std::to_string(train.pairs_per_epoch) + "}";
  out += ",\"report\":" + format_report_json(r.report);
  out += ",\"predictions\":[";
  for (std::size_t i = 0; i < r.predictions.size(); ++i) {
    const auto& p = r.predictions[i];
    if (i) out += ',';
    out += "{\"id\":" + json_string(p.id) + ",\"fold\":" + std::to_string(p.fold) + ",\"truth\":" +
           detail::real_to_string(p.truth) + ",\"predicted\":" + detail::real_to_string(p.predicted) +
           "}";
  }
  out += "]}\n";
  return out;
}

void write_cv_report(const CrossValidationResult& r, const ExperimentConfig& cfg,
                     const std::filesystem::path& path) {
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open report for writing: " + p.string());
    f << text;
    if (!f) throw IoError("write failed: " + p.string());
  };
  write(path, format_cv_json(r, cfg));
  write(path.string() + ".txt", format_cv_table(r, cfg));
}

}  // namespace orars
