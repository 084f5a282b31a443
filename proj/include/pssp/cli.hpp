#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "pssp/augment.hpp"
#include "pssp/model.hpp"
#include "pssp/training.hpp"

namespace pssp::cli {

/// Fully resolved settings of one invocation; echoed as run_config.json.
struct RunConfig {
  std::string command;
  model::ModelConfig model;
  training::TrainConfig train;
  AugmentConfig augment;
  std::filesystem::path dataset;
  std::filesystem::path out;
  std::filesystem::path checkpoint;
  std::filesystem::path label_map;
  std::size_t max_windows = 0;  // 0 = use every window
  std::uint64_t seed = 42;
};

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns the process exit code (0 iff no error was reported).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pssp::cli
