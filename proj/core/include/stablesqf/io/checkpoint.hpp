#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stablesqf/forecaster.hpp"
#include "stablesqf/io/config.hpp"
#include "stablesqf/training.hpp"

namespace stablesqf::io {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct LossDigest {
  std::uint64_t iterations = 0;
  double final_quality = 0.0;
  double final_instability = 0.0;
  double final_total = 0.0;
  /// FNV-1a over the bit patterns of every trace record.
  std::uint64_t hash = 0;
};

LossDigest digest_trace(std::span<const LossRecord> trace);

struct Checkpoint {
  ExperimentConfig config;
  /// Raw optimizer weights and the served EMA weights.
  std::vector<double> params;
  std::vector<double> ema;
  std::vector<std::string> series_ids;
  std::vector<Standardization> stats;
  std::uint64_t seed = 0;
  LossDigest digest;

  /// Model carrying the EMA weights.
  SQFModel model() const;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes the binary container to `path` (magic "SSQFCKPT", version,
/// little-endian 64-bit values) and the JSON sidecar to `path` + ".json".
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Throws CheckpointError on a bad magic, unknown version, truncated file or
/// vectors that do not match the configured layout.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace stablesqf::io
