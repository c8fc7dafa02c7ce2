#include "stablesqf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stablesqf {

double WeightFunction::operator()(double alpha) const {
  switch (kind) {
    case WeightKind::Uniform:
      return 1.0;
    case WeightKind::Center:
      return alpha * (1.0 - alpha);
    case WeightKind::Tail: {
      const double c = 2.0 * alpha - 1.0;
      return c * c;
    }
  }
  return 1.0;
}

WeightKind parse_weight_kind(std::string_view name) {
  if (name == "uniform") return WeightKind::Uniform;
  if (name == "center") return WeightKind::Center;
  if (name == "tail") return WeightKind::Tail;
  throw std::invalid_argument("unknown weight function '" + std::string(name) +
                              "' (expected uniform, center or tail)");
}

std::string_view to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::Uniform:
      return "uniform";
    case WeightKind::Center:
      return "center";
    case WeightKind::Tail:
      return "tail";
  }
  return "uniform";
}

QuantileGrid::QuantileGrid(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw std::invalid_argument("quantile grid must not be empty");
  for (std::size_t k = 0; k < levels_.size(); ++k) {
    if (!(levels_[k] > 0.0 && levels_[k] < 1.0)) {
      throw std::invalid_argument("quantile levels must lie in (0, 1)");
    }
    if (k > 0 && !(levels_[k - 1] < levels_[k])) {
      throw std::invalid_argument("quantile levels must be strictly increasing");
    }
  }
  for (int kind = 0; kind < 3; ++kind) {
    const WeightFunction v{static_cast<WeightKind>(kind)};
    weights_[kind].reserve(levels_.size());
    for (double a : levels_) weights_[kind].push_back(v(a));
  }
}

QuantileGrid QuantileGrid::midpoints(std::size_t m) {
  if (m == 0) throw std::invalid_argument("quantile grid must not be empty");
  std::vector<double> levels(m);
  for (std::size_t k = 0; k < m; ++k) {
    levels[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
  }
  return QuantileGrid(std::move(levels));
}

std::span<const double> QuantileGrid::weights(WeightKind kind) const {
  return weights_[static_cast<int>(kind)];
}

double quantile_score(double q, double y, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("quantile level " + std::to_string(alpha) + " outside (0, 1)");
  }
  const double indicator = y <= q ? 1.0 : 0.0;
  return 2.0 * (indicator - alpha) * (q - y);
}

namespace {

void check_length(std::size_t got, const QuantileGrid& grid) {
  if (got != grid.size()) {
    throw std::invalid_argument("expected " + std::to_string(grid.size()) +
                                " quantiles, got " + std::to_string(got));
  }
}

double naive_abs_power_mean(std::span<const double> window, double p) {
  if (window.size() < 2) {
    throw std::invalid_argument("naive scaling needs at least 2 observations");
  }
  double sum = 0.0;
  for (std::size_t s = 1; s < window.size(); ++s) {
    const double diff = std::abs(window[s] - window[s - 1]);
    sum += p == 1.0 ? diff : std::pow(diff, p);
  }
  return sum / static_cast<double>(window.size() - 1);
}

}  // namespace

double crps_discrete(std::span<const double> quantiles, double y, const QuantileGrid& grid,
                     WeightFunction weight) {
  check_length(quantiles.size(), grid);
  const auto v = grid.weights(weight.kind);
  double sum = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    sum += v[k] * quantile_score(quantiles[k], y, grid[k]);
  }
  return sum / static_cast<double>(grid.size());
}

double wasserstein_discrete(std::span<const double> q_f, std::span<const double> q_g,
                            const QuantileGrid& grid, double p, WeightFunction weight) {
  check_length(q_f.size(), grid);
  check_length(q_g.size(), grid);
  if (!(p >= 1.0)) throw std::invalid_argument("Wasserstein order must be >= 1");
  const auto v = grid.weights(weight.kind);
  double sum = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double diff = std::abs(q_f[k] - q_g[k]);
    sum += v[k] * (p == 1.0 ? diff : std::pow(diff, p));
  }
  const double mean = sum / static_cast<double>(grid.size());
  return p == 1.0 ? mean : std::pow(mean, 1.0 / p);
}

double naive_mae_scale(std::span<const double> window) {
  return std::max(naive_abs_power_mean(window, 1.0), kScaleFloor);
}

double naive_power_scale(std::span<const double> window, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("naive power scale order must be >= 1");
  const double mean = naive_abs_power_mean(window, p);
  return std::max(p == 1.0 ? mean : std::pow(mean, 1.0 / p), kScaleFloor);
}

std::vector<double> clip_nonnegative(std::span<const double> quantiles) {
  std::vector<double> out(quantiles.begin(), quantiles.end());
  for (double& q : out) q = std::max(q, 0.0);
  return out;
}

std::vector<double> sorted_sample_quantiles(std::span<const double> sorted,
                                            std::span<const double> levels) {
  if (sorted.empty()) throw std::invalid_argument("sample quantiles need at least one sample");
  std::vector<double> out;
  out.reserve(levels.size());
  const double last = static_cast<double>(sorted.size() - 1);
  for (double a : levels) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::domain_error("quantile level outside [0, 1]");
    const double pos = a * last;
    const auto lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    const double upper = lo + 1 < sorted.size() ? sorted[lo + 1] : sorted[lo];
    out.push_back(sorted[lo] + frac * (upper - sorted[lo]));
  }
  return out;
}

std::vector<double> sample_quantiles(std::span<const double> samples,
                                     std::span<const double> levels) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted_sample_quantiles(sorted, levels);
}

}  // namespace stablesqf
