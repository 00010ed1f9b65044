// Command-line front end: synthetic data, features, training, scoring, evaluation,
// cross-validation and PCA plot data.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "orars/checkpoint.hpp"
#include "orars/dataset.hpp"
#include "orars/error.hpp"
#include "orars/experiment.hpp"
#include "orars/features.hpp"
#include "orars/metrics.hpp"
#include "orars/pca.hpp"
#include "orars/ranking.hpp"
#include "orars/synth.hpp"

namespace {

using namespace orars;

std::string real17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Writes to `path`, or standard output when empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f << text;
  if (!f) throw IoError("write failed: " + path);
}

struct TrainFlags {
  double learning_rate = 1e-4;
  std::size_t epochs = 30;
  std::size_t batch_size = 0;
  std::size_t pairs_per_epoch = 0;
  double validation_fraction = 0.10;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--learning-rate", learning_rate, "Adam learning rate")->capture_default_str();
    cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--batch-size", batch_size,
                    "Minibatch size (0 = 1024 for the classifier, 4 for the regressor)")
        ->capture_default_str();
    cmd->add_option("--pairs-per-epoch", pairs_per_epoch,
                    "Ordered training pairs per epoch (0 = 50 x training size)")
        ->capture_default_str();
    cmd->add_option("--validation-fraction", validation_fraction,
                    "Share of the training data held out for model selection")
        ->capture_default_str();
  }

  TrainConfig to_config(std::uint64_t seed, bool regressor) const {
    TrainConfig c;
    c.learning_rate = learning_rate;
    c.epochs = epochs;
    c.batch_size = batch_size ? batch_size : (regressor ? kRegressorBatchSize : kClassifierBatchSize);
    c.pairs_per_epoch = pairs_per_epoch;
    c.validation_fraction = validation_fraction;
    c.seed = seed;
    return c;
  }
};

// "id, score" lines, as written by `score`.
std::map<std::string, double> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open predictions file: " + path);
  std::map<std::string, double> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ParseError(path + ": line " + std::to_string(n) + ": expected 'id, score'");
    }
    std::string id = line.substr(0, comma);
    id.erase(id.find_last_not_of(" \t") + 1);
    try {
      out[id] = std::stod(line.substr(comma + 1));
    } catch (const std::logic_error&) {
      throw ParseError(path + ": line " + std::to_string(n) + ": bad score");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence-level pronunciation scoring with aGOP/cGOP features and ORARS"};
  app.set_config("--config", "", "Key/value configuration file; command-line flags override it");
  app.require_subcommand(1);

  // synth
  SynthConfig synth_cfg;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scored corpus");
  synth->add_option("--output,-o", synth_out, "Dataset file to write")->required();
  synth->add_option("--utterances", synth_cfg.n_utterances, "Number of utterances")->capture_default_str();
  synth->add_option("--phonemes", synth_cfg.phoneme_count, "Phoneme inventory size C")->capture_default_str();
  synth->add_option("--min-frames", synth_cfg.min_frames, "Shortest utterance (frames)")->capture_default_str();
  synth->add_option("--max-frames", synth_cfg.max_frames, "Longest utterance (frames)")->capture_default_str();
  synth->add_option("--quality-noise", synth_cfg.quality_noise, "Posterior perturbation scale")->capture_default_str();
  synth->add_option("--rater-noise", synth_cfg.rater_noise, "Rater standard deviation")->capture_default_str();
  synth->add_option("--raters", synth_cfg.n_raters, "Raters per utterance")->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed, "Random seed")->capture_default_str();

  // extract-features
  std::string fe_dataset;
  std::string fe_out;
  std::string fe_mode = "diagonal";
  auto* fe = app.add_subcommand("extract-features", "Write aGOP+cGOP feature vectors as CSV");
  fe->add_option("--dataset,-d", fe_dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  fe->add_option("--output,-o", fe_out, "CSV file (default: standard output)");
  fe->add_option("--agop-mode", fe_mode, "diagonal|literal")
      ->check(CLI::IsMember({"diagonal", "literal"}))
      ->capture_default_str();

  // train
  std::string tr_dataset;
  std::string tr_model;
  std::string tr_anchors_out;
  std::string tr_algorithm_name = "orars_rank";
  std::string tr_mode = "diagonal";
  std::uint64_t tr_seed = 0;
  int tr_ranks = kDefaultRankCount;
  int tr_per_rank = 1;
  TrainFlags tr_flags;
  auto* train = app.add_subcommand("train", "Train a pairwise classifier or the regressor baseline");
  train->add_option("--dataset,-d", tr_dataset, "Training dataset")->required()->check(CLI::ExistingFile);
  train->add_option("--model,-m", tr_model, "Checkpoint file to write")->required();
  train->add_option("--algorithm,-a", tr_algorithm_name, "orars_rank|orars_anchor|nnr")
      ->check(CLI::IsMember({"orars_rank", "orars_anchor", "nnr"}))
      ->capture_default_str();
  train->add_option("--anchors-out", tr_anchors_out,
                    "orars_anchor: where to write the anchor set (required for that algorithm)");
  train->add_option("--ranks", tr_ranks, "Rank count M for score discretization")->capture_default_str();
  train->add_option("--per-rank", tr_per_rank, "Anchors per rank N")->capture_default_str();
  train->add_option("--agop-mode", tr_mode, "diagonal|literal")
      ->check(CLI::IsMember({"diagonal", "literal"}))
      ->capture_default_str();
  train->add_option("--seed", tr_seed, "Random seed")->capture_default_str();
  tr_flags.add_to(train);

  // score
  std::string sc_model;
  std::string sc_ref;
  std::string sc_input;
  std::string sc_mode = "rank";
  int sc_ranks = kDefaultRankCount;
  int sc_per_rank = 1;
  auto* score = app.add_subcommand("score", "Print 'id, score' for every utterance of a dataset");
  score->add_option("--model,-m", sc_model, "Checkpoint")->required()->check(CLI::ExistingFile);
  score->add_option("--train-ref", sc_ref,
                    "Reference dataset: the training set (rank mode) or the anchor set (anchor mode)")
      ->check(CLI::ExistingFile);
  score->add_option("--input,-i", sc_input, "Dataset to score")->required()->check(CLI::ExistingFile);
  score->add_option("--mode", sc_mode, "Classifier scoring rule: rank|anchor")
      ->check(CLI::IsMember({"rank", "anchor"}))
      ->capture_default_str();
  score->add_option("--ranks", sc_ranks, "Rank count M (anchor mode)")->capture_default_str();
  score->add_option("--per-rank", sc_per_rank, "Anchors per rank N (anchor mode)")->capture_default_str();

  // evaluate
  std::string ev_dataset;
  std::string ev_predictions;
  std::string ev_out;
  std::string ev_inter_rater;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "MAE/PCC/SCC of predictions, or the inter-rater baseline");
  evaluate_cmd->add_option("--dataset,-d", ev_dataset, "Dataset with human scores")->required()->check(CLI::ExistingFile);
  auto* ev_pred_opt = evaluate_cmd->add_option("--predictions,-p", ev_predictions, "'id, score' lines")
                          ->check(CLI::ExistingFile);
  auto* ev_ir_opt = evaluate_cmd->add_option("--inter-rater", ev_inter_rater,
                                             "Human baseline from rater_scores: leave_one_out|pairwise")
                        ->check(CLI::IsMember({"leave_one_out", "pairwise"}));
  ev_pred_opt->excludes(ev_ir_opt);
  evaluate_cmd->add_option("--output,-o", ev_out, "Also write the machine-readable record here");

  // cross-validate
  ExperimentConfig cv;
  std::string cv_algorithm = "orars_rank";
  std::string cv_mode = "diagonal";
  TrainFlags cv_flags;
  std::string cv_dataset;
  std::string cv_out;
  auto* cross = app.add_subcommand("cross-validate", "K-fold cross-validation of one algorithm");
  cross->add_option("--dataset,-d", cv_dataset, "Scored dataset")->required()->check(CLI::ExistingFile);
  cross->add_option("--algorithm,-a", cv_algorithm, "gop_mean|nnr|orars_rank|orars_anchor")
      ->check(CLI::IsMember({"gop_mean", "nnr", "orars_rank", "orars_anchor"}))
      ->capture_default_str();
  cross->add_option("--folds", cv.folds, "Number of folds")->capture_default_str();
  cross->add_option("--ranks", cv.rank_count, "Rank count M")->capture_default_str();
  cross->add_option("--per-rank", cv.per_rank, "Anchors per rank N (orars_anchor)")->capture_default_str();
  cross->add_option("--agop-mode", cv_mode, "diagonal|literal")
      ->check(CLI::IsMember({"diagonal", "literal"}))
      ->capture_default_str();
  cross->add_option("--seed", cv.seed, "Random seed")->capture_default_str();
  cross->add_flag("--stratify", cv.stratify, "Balance folds by discretized rank");
  cross->add_option("--threads", cv.threads, "Worker threads (0 = ORARS_THREADS or all cores)")
      ->capture_default_str();
  cross->add_option("--output,-o", cv_out, "Report file (JSON); a .txt table is written next to it");
  cv_flags.add_to(cross);

  // pca-project
  std::string pca_dataset;
  std::string pca_out;
  std::string pca_features = "cgop";
  std::size_t pca_k = 2;
  std::string pca_mode = "diagonal";
  auto* pca = app.add_subcommand("pca-project", "Project feature vectors onto their principal axes (CSV)");
  pca->add_option("--dataset,-d", pca_dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  pca->add_option("--features", pca_features, "cgop|agop|combined")
      ->check(CLI::IsMember({"cgop", "agop", "combined"}))
      ->capture_default_str();
  pca->add_option("--components,-k", pca_k, "Number of principal components")->capture_default_str();
  pca->add_option("--agop-mode", pca_mode, "diagonal|literal")
      ->check(CLI::IsMember({"diagonal", "literal"}))
      ->capture_default_str();
  pca->add_option("--output,-o", pca_out, "CSV file (default: standard output)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      save_dataset(generate_corpus(synth_cfg), synth_out);
      std::cerr << "wrote " << synth_cfg.n_utterances << " utterances to " << synth_out << "\n";

    } else if (*fe) {
      const auto d = load_dataset(fe_dataset);
      std::string out = "id,score";
      for (std::size_t j = 0; j < feature_dimension(d.phoneme_count()); ++j) out += ",f" + std::to_string(j);
      out += '\n';
      for (const auto& u : d.utterances()) {
        out += u.id + ',' + (u.score ? real17(*u.score) : std::string());
        for (const double v : extract_features(u, parse_agop_mode(fe_mode)).combined) out += ',' + real17(v);
        out += '\n';
      }
      emit(fe_out, out);

    } else if (*train) {
      const auto d = load_dataset(tr_dataset);
      const Algorithm tr_algorithm = parse_algorithm(tr_algorithm_name);
      const AgopMode tr_agop = parse_agop_mode(tr_mode);
      Checkpoint ckpt;
      ckpt.agop_mode = tr_agop;
      ckpt.config = tr_flags.to_config(tr_seed, tr_algorithm == Algorithm::nnr);
      TrainedModel trained;
      switch (tr_algorithm) {
        case Algorithm::nnr:
          ckpt.kind = ModelKind::regressor;
          trained = train_nnr(d, ckpt.config, tr_agop);
          break;
        case Algorithm::orars_rank:
          trained = train_classifier(d, ckpt.config, tr_agop);
          break;
        case Algorithm::orars_anchor: {
          if (tr_anchors_out.empty()) throw ConfigError("orars_anchor training needs --anchors-out");
          const auto split = split_anchor_set(d, tr_ranks, tr_per_rank, tr_seed);
          save_dataset(split.anchors, tr_anchors_out);
          trained = train_classifier(split.training, ckpt.config, tr_agop);
          break;
        }
        case Algorithm::gop_mean:
          throw ConfigError("gop_mean has no trainable model");
      }
      ckpt.model = std::move(trained.model);
      save_model(ckpt, tr_model);
      std::cerr << "best epoch " << trained.trace.best_epoch + 1 << " of " << ckpt.config.epochs
                << ", validation loss " << trained.trace.validation_loss[trained.trace.best_epoch]
                << "\nwrote " << tr_model << "\n";

    } else if (*score) {
      const auto ckpt = load_model(sc_model);
      const auto input = load_dataset(sc_input);
      const auto features = feature_matrix(input, ckpt.agop_mode);
      std::string out;
      if (ckpt.kind == ModelKind::regressor) {
        for (std::size_t i = 0; i < input.size(); ++i) {
          out += input[i].id + ", " + real17(predict_nnr(ckpt.model, features.row(i)).reported) + "\n";
        }
      } else {
        if (sc_ref.empty()) throw ConfigError("a pairwise classifier needs --train-ref");
        const auto ref = load_dataset(sc_ref);
        if (sc_mode == "rank") {
          const auto reference = labeled_features(ref, ckpt.agop_mode);
          for (std::size_t i = 0; i < input.size(); ++i) {
            out += input[i].id + ", " +
                   real17(score_rank_placement(ckpt.model, reference, features.row(i)).predicted_score) +
                   "\n";
          }
        } else {
          const auto anchors = make_anchor_set(ref, sc_ranks, sc_per_rank, ckpt.agop_mode);
          for (std::size_t i = 0; i < input.size(); ++i) {
            out += input[i].id + ", " +
                   real17(score_anchor_set(ckpt.model, anchors, features.row(i)).predicted_score) + "\n";
          }
        }
      }
      std::cout << out;

    } else if (*evaluate_cmd) {
      const auto d = load_dataset(ev_dataset);
      EvalReport report;
      std::string title;
      if (!ev_inter_rater.empty()) {
        std::size_t raters = 0;
        for (const auto& u : d.utterances()) {
          if (!u.rater_scores) throw ValidationError("utterance '" + u.id + "' has no rater_scores");
          if (raters == 0) raters = u.rater_scores->size();
          if (u.rater_scores->size() != raters) {
            throw ValidationError("utterance '" + u.id + "' has a different number of raters");
          }
        }
        Matrix ratings(raters, d.size());
        for (std::size_t i = 0; i < d.size(); ++i)
          for (std::size_t r = 0; r < raters; ++r) ratings(r, i) = (*d[i].rater_scores)[r];
        report = inter_rater_baseline(ratings, ev_inter_rater == "pairwise" ? InterRaterMethod::pairwise
                                                                            : InterRaterMethod::leave_one_out);
        title = "inter-rater baseline (" + ev_inter_rater + ")";
      } else {
        if (ev_predictions.empty()) throw ConfigError("evaluate needs --predictions or --inter-rater");
        const auto preds = read_predictions(ev_predictions);
        std::vector<double> x;
        std::vector<double> y;
        for (const auto& u : d.utterances()) {
          const auto it = preds.find(u.id);
          if (it == preds.end()) throw ValidationError("no prediction for utterance '" + u.id + "'");
          if (!u.score) throw ValidationError("utterance '" + u.id + "' is unscored");
          x.push_back(it->second);
          y.push_back(*u.score);
        }
        report = orars::evaluate(x, y);
        title = "evaluation of " + ev_predictions;
      }
      std::cout << format_report_table(report, title);
      if (!ev_out.empty()) emit(ev_out, format_report_json(report) + "\n");

    } else if (*cross) {
      cv.dataset_path = cv_dataset;
      cv.algorithm = parse_algorithm(cv_algorithm);
      cv.agop_mode = parse_agop_mode(cv_mode);
      cv.train = cv_flags.to_config(cv.seed, cv.algorithm == Algorithm::nnr);
      if (cv_flags.batch_size == 0) cv.train.batch_size = 0;
      const auto result = run_cross_validation(cv);
      std::cout << format_cv_table(result, cv);
      if (!cv_out.empty()) {
        write_cv_report(result, cv, cv_out);
        std::cerr << "wrote " << cv_out << " and " << cv_out << ".txt\n";
      }

    } else if (*pca) {
      const auto d = load_dataset(pca_dataset);
      const std::size_t C = d.phoneme_count();
      const std::size_t begin = pca_features == "cgop" ? C : 0;
      const std::size_t end = pca_features == "agop" ? C : feature_dimension(C);
      const auto all = feature_matrix(d, parse_agop_mode(pca_mode));
      Matrix selected(d.size(), end - begin);
      for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = begin; j < end; ++j) selected(i, j - begin) = all(i, j);
      const auto r = pca_project(selected, pca_k);
      std::string out = "id,score";
      for (std::size_t c = 0; c < pca_k; ++c) out += ",pc" + std::to_string(c + 1);
      out += '\n';
      for (std::size_t i = 0; i < d.size(); ++i) {
        out += d[i].id + ',' + (d[i].score ? real17(*d[i].score) : std::string());
        for (std::size_t c = 0; c < pca_k; ++c) out += ',' + real17(r.projected(i, c));
        out += '\n';
      }
      emit(pca_out, out);
    }
  } catch (const orars::Error& e) {
    std::cerr << "orars: error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "orars: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
