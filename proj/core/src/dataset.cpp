#include "orars/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "format_util.hpp"
#include "orars/error.hpp"

namespace orars {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const Utterance& u, const std::string& what) {
  throw ValidationError("utterance '" + u.id + "': " + what);
}

double parse_log_prob(const json& v) {
  // null encodes log(0); it is floored like any zero probability.
  if (v.is_null()) return std::log(kProbabilityFloor);
  const double x = v.get<double>();
  if (std::isinf(x) && x < 0) return std::log(kProbabilityFloor);
  return x;
}

Utterance parse_record(const json& rec) {
  Utterance u;
  u.id = rec.at("id").get<std::string>();

  const auto& rows = rec.at("log_ppg");
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw ValidationError("utterance '" + u.id + "': log_ppg must be a non-empty array of arrays");
  }
  const std::size_t T = rows.size();
  const std::size_t C = rows[0].size();
  u.log_ppg = Matrix(T, C);
  for (std::size_t t = 0; t < T; ++t) {
    if (!rows[t].is_array() || rows[t].size() != C) {
      throw ValidationError("utterance '" + u.id + "': log_ppg row " + std::to_string(t) +
                            " has wrong width");
    }
    for (std::size_t c = 0; c < C; ++c) u.log_ppg(t, c) = parse_log_prob(rows[t][c]);
  }

  u.alignment = rec.at("alignment").get<std::vector<int>>();
  if (rec.contains("score") && !rec["score"].is_null()) u.score = rec["score"].get<double>();
  if (rec.contains("rater_scores") && !rec["rater_scores"].is_null()) {
    u.rater_scores = rec["rater_scores"].get<std::vector<double>>();
    if (!u.score && !u.rater_scores->empty()) {
      const auto& r = *u.rater_scores;
      u.score = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    }
  }
  return u;
}

void append_record(std::string& out, const Utterance& u) {
  out += "{\"id\":";
  out += json(u.id).dump();
  out += ",\"log_ppg\":[";
  for (std::size_t t = 0; t < u.frames(); ++t) {
    if (t) out += ',';
    out += '[';
    const auto row = u.log_ppg.row(t);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      detail::append_real(out, row[c]);
    }
    out += ']';
  }
  out += "],\"alignment\":[";
  for (std::size_t t = 0; t < u.alignment.size(); ++t) {
    if (t) out += ',';
    out += std::to_string(u.alignment[t]);
  }
  out += ']';
  if (u.score) {
    out += ",\"score\":";
    detail::append_real(out, *u.score);
  }
  if (u.rater_scores) {
    out += ",\"rater_scores\":[";
    for (std::size_t i = 0; i < u.rater_scores->size(); ++i) {
      if (i) out += ',';
      detail::append_real(out, (*u.rater_scores)[i]);
    }
    out += ']';
  }
  out += "}\n";
}

bool in_score_range(double s) { return std::isfinite(s) && s >= kMinScore && s <= kMaxScore; }

}  // namespace

void validate_utterance(const Utterance& u) {
  const std::size_t T = u.frames();
  const std::size_t C = u.phonemes();
  if (T < 1) invalid(u, "T >= 1 violated");
  if (C < 2) invalid(u, "C >= 2 violated");
  if (u.alignment.size() != T) {
    invalid(u, "alignment length " + std::to_string(u.alignment.size()) + " != T " +
                   std::to_string(T));
  }
  for (std::size_t t = 0; t < T; ++t) {
    const int a = u.alignment[t];
    if (a < 0 || static_cast<std::size_t>(a) >= C) {
      invalid(u, "alignment[" + std::to_string(t) + "] = " + std::to_string(a) +
                     " outside [0, C)");
    }
    double mass = 0.0;
    for (const double v : u.log_ppg.row(t)) {
      if (!std::isfinite(v) || v > 0.0) {
        invalid(u, "log_ppg element at frame " + std::to_string(t) + " is not a finite value <= 0");
      }
      mass += std::exp(v);
    }
    if (std::abs(mass - 1.0) > 1e-3) {
      invalid(u, "frame " + std::to_string(t) + " posterior mass " + detail::real_to_string(mass) +
                     " not within 1e-3 of 1");
    }
  }
  if (u.score && !in_score_range(*u.score)) invalid(u, "score outside [0, 5]");
  if (u.rater_scores) {
    const auto& r = *u.rater_scores;
    if (r.empty()) invalid(u, "rater_scores is empty");
    for (const double s : r) {
      if (!in_score_range(s)) invalid(u, "rater score outside [0, 5]");
    }
    if (u.score) {
      const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
      if (std::abs(mean - *u.score) > 1e-9) invalid(u, "score != mean(rater_scores)");
    }
  }
}

AlignmentMatrix alignment_to_matrix(std::span<const int> alignment, std::size_t phoneme_count) {
  AlignmentMatrix m{Matrix(alignment.size(), phoneme_count)};
  for (std::size_t t = 0; t < alignment.size(); ++t) {
    const int a = alignment[t];
    if (a < 0 || static_cast<std::size_t>(a) >= phoneme_count) {
      throw ValidationError("alignment index " + std::to_string(a) + " at frame " +
                            std::to_string(t) + " outside [0, " + std::to_string(phoneme_count) +
                            ")");
    }
    m.one_hot(t, static_cast<std::size_t>(a)) = 1.0;
  }
  return m;
}

Dataset::Dataset(std::vector<Utterance> utterances, std::size_t phoneme_count)
    : utterances_(std::move(utterances)), phoneme_count_(phoneme_count) {
  std::set<std::string_view> ids;
  for (const auto& u : utterances_) {
    validate_utterance(u);
    if (u.phonemes() != phoneme_count_) {
      invalid(u, "phoneme count " + std::to_string(u.phonemes()) + " != dataset phoneme_count " +
                     std::to_string(phoneme_count_));
    }
    if (!ids.insert(u.id).second) invalid(u, "duplicate id");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.phoneme_count_ = phoneme_count_;
  out.utterances_.reserve(indices.size());
  for (const std::size_t i : indices) out.utterances_.push_back(utterances_.at(i));
  return out;
}

std::vector<double> Dataset::scores() const {
  std::vector<double> s;
  s.reserve(utterances_.size());
  for (const auto& u : utterances_) {
    if (!u.score) invalid(u, "utterance is unscored");
    s.push_back(*u.score);
  }
  return s;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header line");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": malformed header: " + e.what());
  }
  if (!header.contains("format_version") || header["format_version"] != kDatasetFormatVersion) {
    throw ParseError(path.string() + ": unsupported or missing format_version (expected " +
                     std::to_string(kDatasetFormatVersion) + ")");
  }
  if (!header.contains("phoneme_count") || !header["phoneme_count"].is_number_unsigned()) {
    throw ParseError(path.string() + ": header lacks a non-negative phoneme_count");
  }
  const auto C = header["phoneme_count"].get<std::size_t>();

  std::vector<Utterance> utterances;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      utterances.push_back(parse_record(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": record " + std::to_string(record) + ": " + e.what());
    }
    ++record;
  }
  return Dataset(std::move(utterances), C);
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open dataset file for writing: " + path.string());
  std::string buf = "{\"format_version\":" + std::to_string(kDatasetFormatVersion) +
                    ",\"phoneme_count\":" + std::to_string(d.phoneme_count()) + "}\n";
  for (const auto& u : d.utterances()) {
    append_record(buf, u);
    if (buf.size() > (1u << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

int score_to_rank(double score, int rank_count) {
  if (rank_count < 2) throw ConfigError("rank count M must be >= 2");
  const double pos = score / kMaxScore * static_cast<double>(rank_count - 1) + 0.5;
  const int rank = 1 + static_cast<int>(std::floor(pos));
  return std::clamp(rank, 1, rank_count);
}

double rank_to_score(int rank, int rank_count) {
  return static_cast<double>(rank - 1) * kMaxScore / static_cast<double>(rank_count - 1);
}

std::map<std::string, int> discretize_scores(const Dataset& d, int rank_count) {
  std::map<std::string, int> ranks;
  for (const auto& u : d.utterances()) {
    if (!u.score) invalid(u, "cannot discretize an unscored utterance");
    ranks.emplace(u.id, score_to_rank(*u.score, rank_count));
  }
  return ranks;
}

AnchorSplit split_anchor_set(const Dataset& d, int rank_count, int per_rank, std::uint64_t seed) {
  if (per_rank < 1) throw ConfigError("per-rank anchor count N must be >= 1");
  auto ranks = discretize_scores(d, rank_count);

  std::map<int, std::vector<std::size_t>> by_rank;
  for (std::size_t i = 0; i < d.size(); ++i) by_rank[ranks.at(d[i].id)].push_back(i);

  std::mt19937_64 rng(seed);
  std::vector<bool> is_anchor(d.size(), false);
  for (auto& [rank, members] : by_rank) {
    if (members.size() < static_cast<std::size_t>(per_rank)) {
      throw ValidationError("rank " + std::to_string(rank) + " has " +
                            std::to_string(members.size()) + " samples, fewer than N = " +
                            std::to_string(per_rank));
    }
    std::shuffle(members.begin(), members.end(), rng);
    for (int k = 0; k < per_rank; ++k) is_anchor[members[static_cast<std::size_t>(k)]] = true;
  }

  std::vector<std::size_t> anchor_idx;
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < d.size(); ++i) (is_anchor[i] ? anchor_idx : train_idx).push_back(i);
  return {d.subset(anchor_idx), d.subset(train_idx), std::move(ranks)};
}

}  // namespace orars
