#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace stablesqf {

/// Lower bound applied to every naive-error scaling denominator and to
/// standardization deviations.
inline constexpr double kScaleFloor = 1e-8;

enum class WeightKind { Uniform, Center, Tail };

/// Quantile weighting v(a): 1, a(1-a) or (2a-1)^2.
struct WeightFunction {
  WeightKind kind = WeightKind::Uniform;

  double operator()(double alpha) const;
};

WeightKind parse_weight_kind(std::string_view name);
std::string_view to_string(WeightKind kind);

/// Strictly increasing quantile levels in (0, 1) used to discretize the CRPS
/// and Wasserstein integrals.
class QuantileGrid {
 public:
  explicit QuantileGrid(std::vector<double> levels);

  /// a_k = (k + 0.5) / m, k = 0..m-1. The default m = 100 gives 0.005 + 0.01k.
  static QuantileGrid midpoints(std::size_t m = 100);

  std::size_t size() const { return levels_.size(); }
  std::span<const double> levels() const { return levels_; }
  double operator[](std::size_t k) const { return levels_[k]; }

  /// v(a_k) for every level, cached per kind.
  std::span<const double> weights(WeightKind kind) const;

  friend bool operator==(const QuantileGrid& a, const QuantileGrid& b) {
    return a.levels_ == b.levels_;
  }

 private:
  std::vector<double> levels_;
  std::vector<double> weights_[3];
};

/// 2 (1{y <= q} - a)(q - y). Throws std::domain_error unless 0 < a < 1.
double quantile_score(double q, double y, double alpha);

/// (1/M) sum_k v(a_k) QS_{a_k}(q_k, y).
double crps_discrete(std::span<const double> quantiles, double y, const QuantileGrid& grid,
                     WeightFunction weight = {});

/// ((1/M) sum_k v(a_k) |qF_k - qG_k|^p)^(1/p).
double wasserstein_discrete(std::span<const double> q_f, std::span<const double> q_g,
                            const QuantileGrid& grid, double p = 1.0,
                            WeightFunction weight = {});

/// In-sample MAE of the one-step naive method over `window`, floored.
double naive_mae_scale(std::span<const double> window);

/// In-sample root mean p-th power error of the naive method, floored.
double naive_power_scale(std::span<const double> window, double p);

std::vector<double> clip_nonnegative(std::span<const double> quantiles);

/// Linearly interpolated sample quantiles (the "type 7" estimator) of
/// already sorted `sorted` at each level in [0, 1].
std::vector<double> sorted_sample_quantiles(std::span<const double> sorted,
                                            std::span<const double> levels);

/// Sorts a copy of `samples` and calls sorted_sample_quantiles.
std::vector<double> sample_quantiles(std::span<const double> samples,
                                     std::span<const double> levels);

}  // namespace stablesqf
