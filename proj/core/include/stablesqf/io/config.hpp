#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "stablesqf/forecaster.hpp"
#include "stablesqf/training.hpp"

namespace stablesqf::io {

/// Everything needed to reproduce a train + evaluate run.
///
/// JSON schema (every key optional, unknown keys rejected):
///   {"model": {"lookback", "horizon", "blocks", "width", "backcast_relu",
///              "knots": "default" | "uniform:<L>" | [d_1, ..]},
///    "train": {"lambda", "p", "weight", "batch_size", "iterations",
///              "learning_rate", "ema_phi", "origin_range" (null = all),
///              "seed", "augment", "training_levels": <m> | [a_1, ..]},
///    "eval":  {"origins", "season"}}
struct ExperimentConfig {
  SQFConfig model;
  TrainConfig train;
  std::size_t n_origins = 13;
  std::size_t season = 12;

  /// n_origins + h - 1, used for both the validation and the test region.
  std::size_t region_length() const { return n_origins + model.horizon - 1; }
  void validate() const;
};

/// Throws std::invalid_argument naming the offending key.
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string to_json(const ExperimentConfig& config);

/// Small configuration for quick local runs (two blocks of width 64).
ExperimentConfig desk_preset();

}  // namespace stablesqf::io
