#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "stablesqf/baselines.hpp"
#include "stablesqf/evaluation.hpp"
#include "stablesqf/io/checkpoint.hpp"
#include "stablesqf/io/config.hpp"
#include "stablesqf/io/dataset.hpp"

namespace stablesqf::io {

/// Validation is the region just before the test region; both hold
/// n_origins + h - 1 points at the end of each series.
enum class Region { Validation, Test };

struct RegionSpec {
  Region region = Region::Test;
  std::size_t n_origins = 13;
  std::size_t horizon = 6;

  std::size_t length() const { return n_origins + horizon - 1; }
  /// End (exclusive) of the region within a series of `n` points.
  std::size_t end(std::size_t n) const;
};

using ForecasterFactory = std::function<QuantileForecaster(std::size_t series)>;

/// Trains on every series up to the validation region, with standardization
/// statistics from the same points.
Checkpoint train_checkpoint(const Dataset& data, const ExperimentConfig& config,
                            const TrainProgress& progress = {});

/// One forecaster per series backed by `model` and the checkpoint's
/// statistics. `model` must outlive the returned factory.
ForecasterFactory model_forecasters(const SQFModel& model, const Checkpoint& ckpt,
                                    const QuantileGrid& grid);

/// Baseline forecasters; the seasonal naive error spread is estimated on the
/// points before the region so it does not move between origins.
ForecasterFactory baseline_forecasters(const Dataset& data, BaselineConfig config,
                                       const RegionSpec& spec, const QuantileGrid& grid);

/// Rolling-origin traces per series.
std::vector<std::vector<ForecastTrace>> panel_forecasts(const Dataset& data,
                                                        const ForecasterFactory& factory,
                                                        const RegionSpec& spec,
                                                        const QuantileGrid& grid);

/// Pooled report; each series is scaled by its history up to the region end.
EvalReport evaluate_panel(const Dataset& data,
                          std::span<const std::vector<ForecastTrace>> traces,
                          const RegionSpec& spec, const QuantileGrid& grid);

/// Groups flat traces by series id in dataset order. Throws when a series
/// has no traces.
std::vector<std::vector<ForecastTrace>> group_traces(const Dataset& data,
                                                     std::span<const ForecastTrace> traces);

}  // namespace stablesqf::io
