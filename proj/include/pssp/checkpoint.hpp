#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "pssp/augment.hpp"
#include "pssp/model.hpp"
#include "pssp/training.hpp"

namespace pssp {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to rebuild a trained model and re-derive its data split.
struct CheckpointMeta {
  model::ModelConfig model;
  training::TrainConfig train;
  AugmentConfig augment;
  /// Cap on windows used (0 = all), so the split can be re-derived.
  std::size_t max_windows = 0;
  training::History history;
};

struct Checkpoint {
  model::Parameters params;
  CheckpointMeta meta;
};

// File layout (all integers little-endian):
//   8 bytes   magic "PSSPCKPT"
//   8 bytes   header length H
//   H bytes   UTF-8 JSON header: format_version, config, seed, tensor
//             manifest (name, shape, byte offset), data checksum, metadata
//   payload   float64 little-endian tensor data in manifest order
// Writes go to a temporary file that is renamed into place.

void save_checkpoint(const model::Parameters& params, const CheckpointMeta& meta, const std::filesystem::path& path);

/// Throws CorruptCheckpoint (bad magic, truncation, bad JSON, checksum
/// failure), VersionMismatch (format version or manifest disagrees with the
/// config) and IoFailure.
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const model::ModelConfig& config);
model::ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const training::TrainConfig& config);
training::TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AugmentConfig& config);
AugmentConfig augment_config_from_json(const nlohmann::json& j);

}  // namespace pssp
