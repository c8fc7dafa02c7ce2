#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "stablesqf/io/dataset.hpp"

namespace stablesqf::io {

/// Panel of level + trend + seasonal + AR(1) series, clamped at zero and
/// optionally zero-inflated to mimic intermittent demand.
struct SyntheticSpec {
  std::size_t n_series = 200;
  std::size_t length = 120;
  std::size_t season = 12;
  double level_min = 20.0;
  double level_max = 200.0;
  /// Per-period drift as a fraction of the level, drawn from N(0, trend_sd).
  double trend_sd = 0.003;
  /// Seasonal amplitude as a fraction of the level, drawn from U(0, max).
  double seasonal_amplitude = 0.3;
  double ar_coef = 0.5;
  /// Innovation standard deviation as a fraction of the level.
  double noise_scale = 0.1;
  /// Probability that an observation is replaced by zero.
  double zero_inflation = 0.0;

  void validate() const;
};

Dataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Average interval between consecutive nonzero observations; 0 when fewer
/// than two are nonzero.
double aibnzo(std::span<const double> values);

}  // namespace stablesqf::io
