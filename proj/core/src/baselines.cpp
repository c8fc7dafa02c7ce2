#include "stablesqf/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace stablesqf {

using nn::Matrix;

double std_normal_quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("normal quantile level must lie in (0, 1)");
  }
  // Acklam's rational approximation.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double lo = 0.02425;
  double x;
  if (alpha < lo) {
    const double q = std::sqrt(-2.0 * std::log(alpha));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (alpha <= 1.0 - lo) {
    const double q = alpha - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-alpha));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement against erfc.
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - alpha;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

BaselineMethod parse_baseline_method(std::string_view name) {
  if (name == "mean-g") return BaselineMethod::MeanG;
  if (name == "mean-b") return BaselineMethod::MeanB;
  if (name == "snaive-g") return BaselineMethod::SnaiveG;
  if (name == "snaive-b") return BaselineMethod::SnaiveB;
  throw std::invalid_argument("unknown baseline '" + std::string(name) +
                              "' (expected mean-g, mean-b, snaive-g or snaive-b)");
}

std::string_view to_string(BaselineMethod method) {
  switch (method) {
    case BaselineMethod::MeanG:
      return "mean-g";
    case BaselineMethod::MeanB:
      return "mean-b";
    case BaselineMethod::SnaiveG:
      return "snaive-g";
    case BaselineMethod::SnaiveB:
      return "snaive-b";
  }
  return "snaive-g";
}

namespace {

void check_boot(const BootstrapOptions& boot) {
  if (boot.n_paths < 1) throw std::invalid_argument("bootstrap needs at least one path");
}

void fill_row(Matrix& q, Eigen::Index i, std::vector<double>& samples, const QuantileGrid& grid) {
  std::sort(samples.begin(), samples.end());
  const auto row = sorted_sample_quantiles(samples, grid.levels());
  for (std::size_t k = 0; k < row.size(); ++k) q(i, static_cast<Eigen::Index>(k)) = row[k];
}

}  // namespace

Matrix mean_forecast(std::span<const double> window, std::size_t horizon, const QuantileGrid& grid,
                     Variant variant, const BootstrapOptions& boot) {
  const std::size_t T = window.size();
  if (T < 2) throw std::invalid_argument("mean forecast needs a window of at least 2");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  double mean = 0.0;
  for (double y : window) mean += y;
  mean /= static_cast<double>(T);

  const auto h = static_cast<Eigen::Index>(horizon);
  const auto M = static_cast<Eigen::Index>(grid.size());
  Matrix q(h, M);
  if (variant == Variant::Gaussian) {
    double ss = 0.0;
    for (double y : window) ss += (y - mean) * (y - mean);
    const double sd = std::sqrt(ss / static_cast<double>(T - 1));
    const double spread = sd * std::sqrt(1.0 + 1.0 / static_cast<double>(T));
    for (Eigen::Index k = 0; k < M; ++k) {
      const double v = mean + spread * std_normal_quantile(grid[static_cast<std::size_t>(k)]);
      q.col(k).setConstant(v);
    }
    return q;
  }

  check_boot(boot);
  std::vector<double> resid(T);
  for (std::size_t s = 0; s < T; ++s) resid[s] = window[s] - mean;
  std::mt19937_64 rng(boot.seed);
  std::uniform_int_distribution<std::size_t> pick(0, T - 1);
  std::vector<double> samples(boot.n_paths);
  for (Eigen::Index i = 0; i < h; ++i) {
    for (auto& v : samples) v = mean + resid[pick(rng)];
    fill_row(q, i, samples, grid);
  }
  return q;
}

Matrix snaive_forecast(std::span<const double> series, std::size_t season, std::size_t horizon,
                       const QuantileGrid& grid, Variant variant, const BootstrapOptions& boot,
                       std::optional<std::size_t> error_end) {
  const std::size_t n = series.size();
  if (season < 1) throw std::invalid_argument("season length must be >= 1");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (n < season + 1) {
    throw std::invalid_argument("seasonal naive needs at least m + 1 = " +
                                std::to_string(season + 1) + " observations");
  }
  const std::size_t err_n = std::min(error_end.value_or(n), n);
  if (err_n < season + 1) {
    throw std::invalid_argument("seasonal naive error sample shorter than m + 1");
  }
  std::vector<double> errors;
  errors.reserve(err_n - season);
  for (std::size_t s = season; s < err_n; ++s) errors.push_back(series[s] - series[s - season]);

  const auto h = static_cast<Eigen::Index>(horizon);
  const auto M = static_cast<Eigen::Index>(grid.size());
  Matrix q(h, M);
  auto anchor = [&](std::size_t i) { return series[n - season + (i - 1) % season]; };

  if (variant == Variant::Gaussian) {
    double ss = 0.0;
    for (double e : errors) ss += e * e;
    const double sd = std::sqrt(ss / static_cast<double>(errors.size()));
    for (std::size_t i = 1; i <= horizon; ++i) {
      const double spread = sd * std::sqrt(static_cast<double>((i - 1) / season + 1));
      for (Eigen::Index k = 0; k < M; ++k) {
        q(static_cast<Eigen::Index>(i - 1), k) =
            anchor(i) + spread * std_normal_quantile(grid[static_cast<std::size_t>(k)]);
      }
    }
    return q;
  }

  check_boot(boot);
  std::mt19937_64 rng(boot.seed);
  std::uniform_int_distribution<std::size_t> pick(0, errors.size() - 1);
  // paths(p, i - 1) holds the simulated value at horizon i.
  Matrix paths(static_cast<Eigen::Index>(boot.n_paths), h);
  for (Eigen::Index p = 0; p < paths.rows(); ++p) {
    for (std::size_t i = 1; i <= horizon; ++i) {
      const double base = i <= season ? anchor(i)
                                       : paths(p, static_cast<Eigen::Index>(i - 1 - season));
      paths(p, static_cast<Eigen::Index>(i - 1)) = base + errors[pick(rng)];
    }
  }
  std::vector<double> samples(boot.n_paths);
  for (Eigen::Index i = 0; i < h; ++i) {
    for (std::size_t p = 0; p < boot.n_paths; ++p) samples[p] = paths(static_cast<Eigen::Index>(p), i);
    fill_row(q, i, samples, grid);
  }
  return q;
}

void BaselineConfig::validate() const {
  if (window_len < 2) throw std::invalid_argument("window length must be >= 2");
  if (season_len < 1) throw std::invalid_argument("season length must be >= 1");
  if (n_paths < 1) throw std::invalid_argument("bootstrap needs at least one path");
}

QuantileForecaster baseline_forecaster(const BaselineConfig& config, std::size_t horizon,
                                       const QuantileGrid& grid, bool clip) {
  config.validate();
  return [config, horizon, grid, clip](std::span<const double> history) {
    BootstrapOptions boot{config.n_paths, config.seed ^ (0x9e3779b97f4a7c15ULL * (history.size() + 1))};
    Matrix q;
    switch (config.method) {
      case BaselineMethod::MeanG:
      case BaselineMethod::MeanB: {
        const std::size_t take = std::min(config.window_len, history.size());
        const auto variant = config.method == BaselineMethod::MeanG ? Variant::Gaussian
                                                                    : Variant::Bootstrap;
        q = mean_forecast(history.last(take), horizon, grid, variant, boot);
        break;
      }
      case BaselineMethod::SnaiveG:
      case BaselineMethod::SnaiveB: {
        const auto variant = config.method == BaselineMethod::SnaiveG ? Variant::Gaussian
                                                                      : Variant::Bootstrap;
        q = snaive_forecast(history, config.season_len, horizon, grid, variant, boot,
                            config.error_end);
        break;
      }
    }
    if (clip) q = q.cwiseMax(0.0);
    return q;
  };
}

}  // namespace stablesqf
