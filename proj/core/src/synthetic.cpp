#include "stablesqf/io/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace stablesqf::io {

void SyntheticSpec::validate() const {
  if (n_series < 1 || length < 2) throw std::invalid_argument("need series of length >= 2");
  if (season < 1) throw std::invalid_argument("season must be >= 1");
  if (!(level_min > 0.0 && level_min <= level_max)) {
    throw std::invalid_argument("level range must be positive and ordered");
  }
  if (!(std::abs(ar_coef) < 1.0)) throw std::invalid_argument("AR coefficient must lie in (-1, 1)");
  if (!(zero_inflation >= 0.0 && zero_inflation < 1.0)) {
    throw std::invalid_argument("zero-inflation rate must lie in [0, 1)");
  }
  if (trend_sd < 0.0 || seasonal_amplitude < 0.0 || noise_scale < 0.0) {
    throw std::invalid_argument("scales must be nonnegative");
  }
}

Dataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Dataset data;
  data.series.reserve(spec.n_series);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t j = 0; j < spec.n_series; ++j) {
    // Log-uniform levels spread the panel across scales.
    const double level = spec.level_min * std::pow(spec.level_max / spec.level_min, unit(rng));
    const double drift = spec.trend_sd * normal(rng) * level;
    const double amp = spec.seasonal_amplitude * unit(rng) * level;
    const double phase = two_pi * unit(rng);
    const double sigma = spec.noise_scale * level;

    Series s;
    s.id = "S" + std::to_string(j + 1);
    s.season = spec.season;
    s.values.resize(spec.length);
    double ar = sigma * normal(rng) / std::sqrt(1.0 - spec.ar_coef * spec.ar_coef);
    for (std::size_t t = 0; t < spec.length; ++t) {
      const double season_term =
          spec.season > 1
              ? amp * std::sin(two_pi * static_cast<double>(t) / static_cast<double>(spec.season) + phase)
              : 0.0;
      double y = level + drift * static_cast<double>(t) + season_term + ar;
      ar = spec.ar_coef * ar + sigma * normal(rng);
      y = std::max(y, 0.0);
      if (spec.zero_inflation > 0.0 && unit(rng) < spec.zero_inflation) y = 0.0;
      // Three decimals keep the CSV compact.
      s.values[t] = std::round(y * 1000.0) / 1000.0;
    }
    data.series.push_back(std::move(s));
  }
  return data;
}

double aibnzo(std::span<const double> values) {
  std::size_t count = 0, first = 0, last = 0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (values[t] != 0.0) {
      if (count == 0) first = t;
      last = t;
      ++count;
    }
  }
  if (count < 2) return 0.0;
  return static_cast<double>(last - first) / static_cast<double>(count - 1);
}

}  // namespace stablesqf::io
