#include "stablesqf/training.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "stablesqf/netcore.hpp"

namespace stablesqf {

using nn::Matrix;

void TrainConfig::validate(const SQFConfig& model) const {
  model.validate();
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in [0, 1]");
  if (lambda > 0.0 && model.horizon < 2) {
    throw std::invalid_argument("an instability penalty (lambda > 0) needs horizon >= 2");
  }
  if (!(wasserstein_order >= 1.0)) throw std::invalid_argument("Wasserstein order must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(ema_phi >= 0.0 && ema_phi <= 1.0)) throw std::invalid_argument("EMA phi must be in [0, 1]");
  if (origin_range && *origin_range < 1) throw std::invalid_argument("origin range must be >= 1");
}

Standardization fit_standardization(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("cannot standardize an empty series");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::max(std::sqrt(var), kScaleFloor)};
}

StandardizedPanel standardize_dataset(std::span<const std::vector<double>> series,
                                      std::span<const std::size_t> fit_lengths) {
  if (!fit_lengths.empty() && fit_lengths.size() != series.size()) {
    throw std::invalid_argument("one fit length per series is required");
  }
  StandardizedPanel panel;
  panel.series.reserve(series.size());
  panel.stats.reserve(series.size());
  for (std::size_t j = 0; j < series.size(); ++j) {
    const auto& s = series[j];
    if (s.empty()) throw std::invalid_argument("series " + std::to_string(j) + " is empty");
    const std::size_t n_fit = fit_lengths.empty() ? s.size() : fit_lengths[j];
    if (n_fit < 2 || n_fit > s.size()) {
      throw std::invalid_argument("series " + std::to_string(j) +
                                  " needs at least 2 non-test observations");
    }
    const Standardization st = fit_standardization(std::span(s).first(n_fit));
    std::vector<double> z(s.size());
    std::transform(s.begin(), s.end(), z.begin(), [&](double v) { return st.apply(v); });
    panel.series.push_back(std::move(z));
    panel.stats.push_back(st);
  }
  return panel;
}

OriginRange valid_origins(std::size_t series_length, std::size_t lookback, std::size_t horizon,
                          std::optional<std::size_t> range) {
  const std::size_t needed = lookback + horizon + 1;
  const std::size_t padded = std::max(series_length, needed);
  OriginRange r;
  r.pad = padded - series_length;
  r.last = padded - 1 - horizon;
  r.first = lookback;
  if (range && r.last + 1 >= *range) r.first = std::max(r.first, r.last + 1 - *range);
  return r;
}

TrainingSample make_sample(std::span<const double> series, std::size_t pad, std::size_t origin,
                           std::size_t lookback, std::size_t horizon) {
  if (origin < lookback || origin + horizon >= series.size() + pad) {
    throw std::out_of_range("origin " + std::to_string(origin) + " has no complete windows");
  }
  auto value = [&](std::size_t j) { return j < pad ? 0.0 : series[j - pad]; };
  TrainingSample s;
  s.lookback.resize(lookback);
  s.lagged_lookback.resize(lookback);
  for (std::size_t j = 0; j < lookback; ++j) {
    s.lookback[j] = value(origin + 1 - lookback + j);
    s.lagged_lookback[j] = value(origin - lookback + j);
  }
  s.targets.resize(horizon);
  s.lagged_targets.resize(horizon);
  for (std::size_t i = 0; i < horizon; ++i) {
    s.targets[i] = value(origin + 1 + i);
    s.lagged_targets[i] = value(origin + i);
  }
  s.origin = static_cast<std::ptrdiff_t>(origin) - static_cast<std::ptrdiff_t>(pad);
  return s;
}

std::vector<TrainingSample> sample_batch(std::span<const std::vector<double>> dataset,
                                         const SQFConfig& model, const TrainConfig& config,
                                         std::mt19937_64& rng) {
  if (dataset.empty()) throw std::invalid_argument("cannot sample from an empty dataset");
  std::uniform_int_distribution<std::size_t> pick_series(0, dataset.size() - 1);
  std::vector<TrainingSample> batch;
  batch.reserve(config.batch_size);
  for (std::size_t b = 0; b < config.batch_size; ++b) {
    const std::size_t j = pick_series(rng);
    const auto r = valid_origins(dataset[j].size(), model.lookback, model.horizon, config.origin_range);
    std::uniform_int_distribution<std::size_t> pick_origin(r.first, r.last);
    TrainingSample s = make_sample(dataset[j], r.pad, pick_origin(rng), model.lookback, model.horizon);
    s.series = j;
    batch.push_back(std::move(s));
  }
  return batch;
}

void augment_sample(TrainingSample& sample, double shift, double scale) {
  for (auto* window : {&sample.lookback, &sample.lagged_lookback, &sample.targets, &sample.lagged_targets}) {
    for (double& v : *window) v = (v + shift) * scale;
  }
}

void augment(std::vector<TrainingSample>& batch, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> shift_dist(-1.0, 1.0);
  std::uniform_real_distribution<double> scale_dist(0.5, 1.5);
  for (auto& s : batch) {
    double shift = shift_dist(rng);
    while (shift == -1.0) shift = shift_dist(rng);  // open interval
    const double scale = scale_dist(rng);
    augment_sample(s, shift, scale);
  }
}

CompositeLoss::CompositeLoss(const SQFConfig& model, const TrainConfig& config)
    : model_(model), config_(config), basis_(*model.knots, config.training_grid.levels()) {
  config_.validate(model_);
}

LossTerms CompositeLoss::operator()(const SQFModel& model, std::span<const TrainingSample> batch,
                                    std::vector<double>* grad) const {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const auto& cfg = model.config();
  if (cfg.lookback != model_.lookback || cfg.horizon != model_.horizon ||
      cfg.n_knots() != model_.n_knots()) {
    throw std::invalid_argument("model does not match the loss configuration");
  }
  const auto B = static_cast<Eigen::Index>(batch.size());
  const auto T = static_cast<Eigen::Index>(cfg.lookback);
  const std::size_t h = cfg.horizon;
  const auto per = static_cast<Eigen::Index>(cfg.outputs_per_horizon());
  const auto L = per - 1;
  const auto& grid = config_.training_grid;
  const auto M = static_cast<Eigen::Index>(grid.size());
  const double inv_m = 1.0 / static_cast<double>(M);
  const double lambda = config_.lambda;
  const double p = config_.wasserstein_order;
  const auto levels = grid.levels();
  const auto v = grid.weights(config_.instability_weight);

  // Columns [0, B) hold origin t, columns [B, 2B) origin t-1.
  Matrix x(T, 2 * B);
  std::vector<double> crps_scale(2 * static_cast<std::size_t>(B));
  std::vector<double> w_scale(static_cast<std::size_t>(B));
  for (Eigen::Index c = 0; c < B; ++c) {
    const auto& s = batch[static_cast<std::size_t>(c)];
    if (static_cast<Eigen::Index>(s.lookback.size()) != T || s.targets.size() != h ||
        s.lagged_lookback.size() != s.lookback.size() || s.lagged_targets.size() != h) {
      throw std::invalid_argument("training sample does not match the model shape");
    }
    x.col(c) = Eigen::Map<const nn::Vector>(s.lookback.data(), T);
    x.col(B + c) = Eigen::Map<const nn::Vector>(s.lagged_lookback.data(), T);
    crps_scale[static_cast<std::size_t>(c)] = naive_mae_scale(s.lookback);
    crps_scale[static_cast<std::size_t>(B + c)] = naive_mae_scale(s.lagged_lookback);
    if (h >= 2) w_scale[static_cast<std::size_t>(c)] = naive_power_scale(s.lookback, p);
  }

  const auto pass = model.forward(x);
  const Matrix& out = pass.outputs;

  // Quantiles per horizon: M x 2B.
  std::vector<Matrix> q(h);
  for (std::size_t i = 0; i < h; ++i) {
    const auto row = static_cast<Eigen::Index>(i) * per;
    q[i].noalias() = basis_.matrix() * out.middleRows(row + 1, L);
    q[i].rowwise() += out.row(row);
  }

  std::vector<Matrix> dq;
  if (grad) dq.assign(h, Matrix::Zero(M, 2 * B));

  const double inv_b = 1.0 / static_cast<double>(B);
  double quality = 0.0;
  const double quality_norm = 1.0 / (2.0 * static_cast<double>(h));
  for (std::size_t i = 0; i < h; ++i) {
    for (Eigen::Index c = 0; c < 2 * B; ++c) {
      const auto& s = batch[static_cast<std::size_t>(c % B)];
      const double y = c < B ? s.targets[i] : s.lagged_targets[i];
      const double scale = crps_scale[static_cast<std::size_t>(c)];
      double crps = 0.0;
      const double dweight = grad ? (1.0 - lambda) * quality_norm * inv_b * 2.0 * inv_m / scale : 0.0;
      for (Eigen::Index k = 0; k < M; ++k) {
        const double qk = q[i](k, c);
        const double ind = y <= qk ? 1.0 : 0.0;
        crps += (ind - levels[static_cast<std::size_t>(k)]) * (qk - y);
        if (grad) dq[i](k, c) += dweight * (ind - levels[static_cast<std::size_t>(k)]);
      }
      quality += 2.0 * crps * inv_m / scale;
    }
  }
  quality *= quality_norm * inv_b;

  double instability = 0.0;
  if (h >= 2) {
    const double inst_norm = 1.0 / static_cast<double>(h - 1);
    std::vector<double> diff(static_cast<std::size_t>(M));
    for (std::size_t i = 0; i + 1 < h; ++i) {
      for (Eigen::Index c = 0; c < B; ++c) {
        // Target t+i+1: horizon i+1 from origin t vs horizon i+2 from t-1.
        double acc = 0.0;
        for (Eigen::Index k = 0; k < M; ++k) {
          const double d = q[i](k, c) - q[i + 1](k, B + c);
          diff[static_cast<std::size_t>(k)] = d;
          const double a = std::abs(d);
          acc += v[static_cast<std::size_t>(k)] * (p == 1.0 ? a : std::pow(a, p));
        }
        const double mean = acc * inv_m;
        const double w = p == 1.0 ? mean : std::pow(mean, 1.0 / p);
        const double scale = w_scale[static_cast<std::size_t>(c)];
        instability += w / scale;
        if (grad && lambda > 0.0 && w > 0.0) {
          const double outer = lambda * inst_norm * inv_b / scale;
          const double chain = p == 1.0 ? 1.0 : std::pow(w, 1.0 - p);
          for (Eigen::Index k = 0; k < M; ++k) {
            const double d = diff[static_cast<std::size_t>(k)];
            if (d == 0.0) continue;
            const double a = std::abs(d);
            const double dd = outer * chain * inv_m * v[static_cast<std::size_t>(k)] *
                              (p == 1.0 ? 1.0 : std::pow(a, p - 1.0)) * (d > 0.0 ? 1.0 : -1.0);
            dq[i](k, c) += dd;
            dq[i + 1](k, B + c) -= dd;
          }
        }
      }
    }
    instability *= inst_norm * inv_b;
  }

  LossTerms terms;
  terms.quality = quality;
  terms.instability = instability;
  terms.total = (1.0 - lambda) * quality + lambda * instability;

  if (grad) {
    Matrix d_out = Matrix::Zero(out.rows(), out.cols());
    for (std::size_t i = 0; i < h; ++i) {
      const auto row = static_cast<Eigen::Index>(i) * per;
      d_out.row(row) = dq[i].colwise().sum();
      d_out.middleRows(row + 1, L).noalias() = basis_.matrix().transpose() * dq[i];
    }
    grad->assign(model.params().size(), 0.0);
    model.backward(pass, d_out, *grad);
  }
  return terms;
}

LossTerms composite_loss(const SQFModel& model, const TrainingSample& sample,
                         const TrainConfig& config) {
  const CompositeLoss loss(model.config(), config);
  return loss(model, std::span(&sample, 1));
}

TrainResult train(std::span<const std::vector<double>> dataset, const SQFConfig& model_config,
                  const TrainConfig& config, const TrainProgress& progress) {
  config.validate(model_config);
  if (dataset.empty()) throw std::invalid_argument("cannot train on an empty dataset");

  SQFModel model(model_config, config.seed);
  nn::AdamState adam(model.params().size(), nn::AdamConfig{config.learning_rate});
  nn::EmaState ema(model.params().values(), config.ema_phi);
  const CompositeLoss loss(model_config, config);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<LossRecord> trace;
  trace.reserve(config.iterations);
  std::vector<double> grad;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    auto batch = sample_batch(dataset, model_config, config, rng);
    if (config.augment) augment(batch, rng);
    const LossTerms terms = loss(model, batch, &grad);
    if (!std::isfinite(terms.total)) {
      throw std::runtime_error("training diverged at iteration " + std::to_string(it) +
                               " (quality " + std::to_string(terms.quality) + ", instability " +
                               std::to_string(terms.instability) + ")");
    }
    nn::adam_step(model.mutable_params(), grad, adam);
    nn::ema_update(ema, model.params());
    trace.push_back({it, terms.quality, terms.instability, terms.total});
    if (progress) progress(trace.back());
  }

  std::vector<double> raw(model.params().values().begin(), model.params().values().end());
  SQFModel served(model_config, std::vector<double>(ema.shadow().begin(), ema.shadow().end()));
  return TrainResult{std::move(served), std::move(raw), std::move(trace)};
}

}  // namespace stablesqf
