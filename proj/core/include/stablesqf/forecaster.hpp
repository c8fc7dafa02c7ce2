#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stablesqf/metrics.hpp"
#include "stablesqf/netcore.hpp"
#include "stablesqf/splineqf.hpp"

namespace stablesqf {

struct SQFConfig {
  std::size_t lookback = 48;
  std::size_t horizon = 6;
  std::size_t n_blocks = 10;
  std::size_t hidden_width = 512;
  KnotGridPtr knots = make_default_knots();
  /// ReLU on the backcast head. Inputs are standardized and may be negative,
  /// so this restricts each block to subtracting nonnegative components.
  bool backcast_relu = true;

  std::size_t n_knots() const { return knots ? knots->size() : 0; }
  /// gamma followed by L slopes, per horizon.
  std::size_t outputs_per_horizon() const { return 1 + n_knots(); }
  std::size_t n_outputs() const { return horizon * outputs_per_horizon(); }

  /// Throws std::invalid_argument unless T >= h >= 1, K >= 1, width >= 1.
  void validate() const;
};

/// Per-series affine transform applied before the network and undone after.
struct Standardization {
  double mean = 0.0;
  double std = 1.0;

  double apply(double y) const { return (y - mean) / std; }
  double invert(double z) const { return z * std + mean; }
};

/// Doubly residual stack of K blocks. Each block runs four shared ReLU layers,
/// then a backcast head (T outputs) and a spline head (width outputs) feeding
/// a linear projection with 1 + L outputs per horizon; a final ReLU keeps the
/// slopes nonnegative. Block k's input is block k-1's input minus its backcast,
/// and the partial splines are summed over blocks.
class SQFModel {
 public:
  struct BlockLayers {
    std::array<std::size_t, 4> trunk{};
    std::size_t backcast = 0;
    std::size_t head = 0;
    std::size_t projection = 0;
  };

  /// Recorded batched forward pass; one column per lookback window.
  struct Pass {
    explicit Pass(const nn::ParamStore& params) : tape(params) {}

    struct BlockRecord {
      std::array<std::size_t, 4> trunk{};
      std::size_t backcast = 0;
      std::size_t head = 0;
      std::size_t projection = 0;
    };

    nn::Tape tape;
    std::vector<BlockRecord> blocks;
    /// Summed spline parameters, rows h * (1 + L): gamma_i then beta_i,1..L.
    nn::Matrix outputs;
    /// x^{[K+1]}, the input left over after the last block's backcast.
    nn::Matrix residual;
  };

  struct BlockOutput {
    std::vector<double> backcast;
    std::vector<SplineQF> partials;
  };

  /// Fan-in uniform initialization from `seed`.
  SQFModel(SQFConfig config, std::uint64_t seed);
  SQFModel(SQFConfig config, std::vector<double> params);

  static nn::ParamLayout make_layout(const SQFConfig& config);

  const SQFConfig& config() const { return config_; }
  const nn::ParamStore& params() const { return params_; }
  nn::ParamStore& mutable_params() { return params_; }
  const BlockLayers& block(std::size_t k) const { return blocks_.at(k); }

  /// Batched forward over T x B lookbacks.
  Pass forward(const nn::Matrix& lookbacks) const;

  /// Accumulates dL/dtheta into `grads` from dL/d(outputs) of `pass`.
  void backward(const Pass& pass, const nn::Matrix& d_outputs, std::span<double> grads) const;

  BlockOutput block_forward(std::size_t k, std::span<const double> input) const;

  /// h splines, one per horizon, for a single (standardized) lookback.
  std::vector<SplineQF> forward(std::span<const double> lookback) const;

  /// Splits output column `col` into h splines.
  std::vector<SplineQF> splines_from_outputs(const nn::Matrix& outputs, Eigen::Index col) const;

 private:
  void apply_slope_relu(nn::Matrix& projection_out) const;

  SQFConfig config_;
  std::vector<BlockLayers> blocks_;
  nn::ParamStore params_;
};

std::vector<SplineQF> model_forward(const SQFModel& model, std::span<const double> lookback);

/// Evaluates every horizon on `grid` (h x M). Lookbacks are in data units:
/// when `stats` is given they are standardized before the network and the
/// quantiles de-standardized after. `clip` applies clip_nonnegative.
nn::Matrix forecast_quantiles(const SQFModel& model, std::span<const double> lookback,
                              const QuantileGrid& grid, bool clip,
                              const std::optional<Standardization>& stats = std::nullopt);

/// Last `length` values of `history`, front-padded with `pad` when short.
std::vector<double> padded_window(std::span<const double> history, std::size_t length,
                                  double pad = 0.0);

}  // namespace stablesqf
