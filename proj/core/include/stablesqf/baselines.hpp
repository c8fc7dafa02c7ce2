#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "stablesqf/evaluation.hpp"
#include "stablesqf/metrics.hpp"
#include "stablesqf/netcore.hpp"

namespace stablesqf {

/// Inverse standard normal CDF, accurate to about 1e-15 after one Halley step.
/// Throws std::domain_error unless 0 < alpha < 1.
double std_normal_quantile(double alpha);

enum class BaselineMethod { MeanG, MeanB, SnaiveG, SnaiveB };

BaselineMethod parse_baseline_method(std::string_view name);
std::string_view to_string(BaselineMethod method);

enum class Variant { Gaussian, Bootstrap };

struct BootstrapOptions {
  std::size_t n_paths = 5000;
  std::uint64_t seed = 0;
};

/// Mean of the window with a horizon-independent spread. Gaussian uses the
/// sample standard deviation inflated by sqrt(1 + 1/T); Bootstrap adds
/// residuals resampled from the window to the mean.
nn::Matrix mean_forecast(std::span<const double> window, std::size_t horizon,
                         const QuantileGrid& grid, Variant variant,
                         const BootstrapOptions& boot = {});

/// Seasonal naive: horizon i repeats the last observation from the same
/// season. Errors y_s - y_{s-m} are taken from the first `error_end`
/// observations (all of them by default); Gaussian spreads them by
/// sqrt(floor((i-1)/m) + 1), Bootstrap builds paths recursively from
/// resampled errors. Throws std::invalid_argument when the series (or the
/// error sample) is shorter than m + 1.
nn::Matrix snaive_forecast(std::span<const double> series, std::size_t season,
                           std::size_t horizon, const QuantileGrid& grid, Variant variant,
                           const BootstrapOptions& boot = {},
                           std::optional<std::size_t> error_end = std::nullopt);

struct BaselineConfig {
  BaselineMethod method = BaselineMethod::SnaiveG;
  std::size_t window_len = 48;
  std::size_t season_len = 12;
  std::size_t n_paths = 5000;
  std::uint64_t seed = 0;
  /// Seasonal naive only: estimate the error spread on this many leading
  /// observations so it stays fixed across rolling origins.
  std::optional<std::size_t> error_end;

  void validate() const;
};

/// Rolling-origin adapter. Bootstrap draws are seeded per origin from
/// `seed` and the history length, so reruns are reproducible.
QuantileForecaster baseline_forecaster(const BaselineConfig& config, std::size_t horizon,
                                       const QuantileGrid& grid, bool clip = true);

}  // namespace stablesqf
