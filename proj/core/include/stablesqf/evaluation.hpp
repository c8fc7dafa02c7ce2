#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stablesqf/forecaster.hpp"
#include "stablesqf/metrics.hpp"
#include "stablesqf/netcore.hpp"

namespace stablesqf {

/// Quantile forecasts issued at `origin`: row i holds the quantiles for
/// target origin + i + 1 on the evaluation grid.
struct ForecastTrace {
  std::string series_id;
  std::size_t origin = 0;
  nn::Matrix quantiles;
};

/// Maps the observations up to and including the origin to an h x M matrix.
using QuantileForecaster = std::function<nn::Matrix(std::span<const double> history)>;

/// `n_origins` consecutive origins whose h-step targets end at `region_end`
/// (exclusive), i.e. origins region_end - (n_origins + h - 1) - 1 + j.
/// Throws std::invalid_argument when the series is too short.
std::vector<ForecastTrace> rolling_forecasts(const QuantileForecaster& forecaster,
                                             std::span<const double> series,
                                             const std::string& series_id, std::size_t region_end,
                                             std::size_t n_origins, std::size_t horizon,
                                             const QuantileGrid& grid);

/// Index of the first origin used by rolling_forecasts.
std::size_t first_origin(std::size_t region_end, std::size_t n_origins, std::size_t horizon);

struct EvalReport {
  double scrps = 0.0;
  double scrps_c = 0.0;
  double scrps_t = 0.0;
  /// Absent when fewer than two origins or a one-step horizon were evaluated.
  std::optional<double> sw1;
  std::optional<double> sw1_c;
  std::optional<double> sw1_t;

  /// Mean sCRPS per horizon (index i = horizon i + 1) and per origin position.
  std::vector<double> scrps_by_horizon;
  std::vector<double> scrps_by_origin;
  /// Mean sW1 per horizon of the newer forecast (index i = horizon i + 1) and
  /// per origin position (index 0 unused, left at 0).
  std::vector<double> sw1_by_horizon;
  std::vector<double> sw1_by_origin;

  std::size_t n_crps_terms = 0;
  std::size_t n_w1_terms = 0;
};

/// Pools per-item scaled metrics across series into flat means.
class EvalAccumulator {
 public:
  explicit EvalAccumulator(QuantileGrid grid = QuantileGrid::midpoints(100));

  /// `traces` must come from one series, ordered by consecutive origin.
  /// `actuals` is indexed by time and must cover every target; the scaling
  /// constants come from `full_history`.
  void add(std::span<const ForecastTrace> traces, std::span<const double> actuals,
           std::span<const double> full_history);

  EvalReport report() const;

 private:
  struct Sum {
    double value = 0.0;
    std::size_t count = 0;
  };
  static void bump(std::vector<Sum>& v, std::size_t idx, double x);

  QuantileGrid grid_;
  Sum crps_[3];
  Sum w1_[3];
  std::vector<Sum> crps_h_, crps_o_, w1_h_, w1_o_;
};

EvalReport evaluate(std::span<const ForecastTrace> traces, std::span<const double> actuals,
                    std::span<const double> full_history,
                    const QuantileGrid& grid = QuantileGrid::midpoints(100));

/// Forecaster backed by a trained model. Lookbacks shorter than T are padded
/// with the series mean, which maps to 0 after standardization.
QuantileForecaster sqf_forecaster(const SQFModel& model, Standardization stats,
                                  const QuantileGrid& grid, bool clip = true);

}  // namespace stablesqf
