#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "stablesqf/forecaster.hpp"
#include "stablesqf/metrics.hpp"

namespace stablesqf {

/// One training instance: windows ending at origin t and at t-1, and the h
/// targets that follow each. `origin` is the index of the last lookback value
/// in the unpadded series and is negative when the series was front-padded.
struct TrainingSample {
  std::vector<double> lookback;
  std::vector<double> lagged_lookback;
  std::vector<double> targets;
  std::vector<double> lagged_targets;
  std::size_t series = 0;
  std::ptrdiff_t origin = 0;
};

struct TrainConfig {
  double lambda = 0.0;
  double wasserstein_order = 1.0;
  WeightKind instability_weight = WeightKind::Uniform;
  std::size_t batch_size = 512;
  std::size_t iterations = 11500;
  double learning_rate = 1e-3;
  double ema_phi = 0.99;
  /// Number of most recent valid origins to sample from; nullopt = all.
  std::optional<std::size_t> origin_range;
  std::uint64_t seed = 0;
  bool augment = true;
  QuantileGrid training_grid = QuantileGrid::midpoints(100);

  /// Throws std::invalid_argument on out-of-range values, including
  /// lambda > 0 with a one-step horizon.
  void validate(const SQFConfig& model) const;
};

struct StandardizedPanel {
  std::vector<std::vector<double>> series;
  std::vector<Standardization> stats;
};

/// Mean and (population) standard deviation of `values`, std floored.
Standardization fit_standardization(std::span<const double> values);

/// Standardizes every series with statistics computed on its first
/// `fit_lengths[j]` observations (all of them when `fit_lengths` is empty),
/// i.e. excluding the test region.
StandardizedPanel standardize_dataset(std::span<const std::vector<double>> series,
                                      std::span<const std::size_t> fit_lengths = {});

/// Inclusive range of origins (in front-padded coordinates) admitting
/// complete lookback, lagged lookback and forecast windows.
struct OriginRange {
  std::size_t pad = 0;
  std::size_t first = 0;
  std::size_t last = 0;
};
OriginRange valid_origins(std::size_t series_length, std::size_t lookback, std::size_t horizon,
                          std::optional<std::size_t> range);

/// Builds the sample at padded origin `origin` of `series` front-padded with
/// `pad` zeros.
TrainingSample make_sample(std::span<const double> series, std::size_t pad, std::size_t origin,
                           std::size_t lookback, std::size_t horizon);

/// Series drawn uniformly with replacement, then one origin uniformly from the
/// series' valid range; short series are zero-padded at the front.
std::vector<TrainingSample> sample_batch(std::span<const std::vector<double>> dataset,
                                         const SQFConfig& model, const TrainConfig& config,
                                         std::mt19937_64& rng);

/// (x + shift) * scale on all four windows of the sample.
void augment_sample(TrainingSample& sample, double shift, double scale);

/// Per sample: shift ~ U(-1, 1), then scale ~ U[0.5, 1.5).
void augment(std::vector<TrainingSample>& batch, std::mt19937_64& rng);

/// Unweighted quality term Q (mean sCRPS over both origins and all horizons),
/// unweighted instability term S (mean sW_p over overlapping targets) and
/// total = (1 - lambda) Q + lambda S.
struct LossTerms {
  double quality = 0.0;
  double instability = 0.0;
  double total = 0.0;
};

/// Batch-mean composite loss with its gradient. Holds the spline basis for
/// the training grid so it is built once per run.
class CompositeLoss {
 public:
  CompositeLoss(const SQFConfig& model, const TrainConfig& config);

  /// When `grad` is non-null it is resized to the parameter count and filled
  /// with dLoss/dtheta through both forward passes.
  LossTerms operator()(const SQFModel& model, std::span<const TrainingSample> batch,
                       std::vector<double>* grad = nullptr) const;

 private:
  SQFConfig model_;
  TrainConfig config_;
  SplineBasis basis_;
};

LossTerms composite_loss(const SQFModel& model, const TrainingSample& sample,
                         const TrainConfig& config);

struct LossRecord {
  std::size_t iteration = 0;
  double quality = 0.0;
  double instability = 0.0;
  double total = 0.0;
};

struct TrainResult {
  /// Model carrying the EMA weights.
  SQFModel model;
  /// Raw optimizer weights at the end of training.
  std::vector<double> raw_params;
  std::vector<LossRecord> trace;
};

using TrainProgress = std::function<void(const LossRecord&)>;

/// Adam on the batch-mean composite loss over standardized series, tracking
/// EMA weights from the initialization on. Throws std::runtime_error when the
/// loss becomes non-finite.
TrainResult train(std::span<const std::vector<double>> dataset, const SQFConfig& model_config,
                  const TrainConfig& config, const TrainProgress& progress = {});

}  // namespace stablesqf
