#pragma once

#include <filesystem>
#include <string_view>

#include "orars/features.hpp"
#include "orars/mlp.hpp"
#include "orars/train_config.hpp"

namespace orars {

inline constexpr int kCheckpointFormatVersion = 1;

enum class ModelKind { pairwise_classifier, regressor };

ModelKind parse_model_kind(std::string_view name);
std::string_view to_string(ModelKind kind);

struct Checkpoint {
  ModelKind kind = ModelKind::pairwise_classifier;
  MlpModel model;
  TrainConfig config;  // echo of the training configuration, seed included
  AgopMode agop_mode = AgopMode::diagonal;
};

void save_model(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws VersionError on an unsupported header, ParseError on a truncated or corrupt file.
Checkpoint load_model(const std::filesystem::path& path);

}  // namespace orars
