#include "stablesqf/forecaster.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace stablesqf {

using nn::Matrix;

void SQFConfig::validate() const {
  if (!knots) throw std::invalid_argument("model config needs a knot grid");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (lookback < horizon) throw std::invalid_argument("lookback must be >= horizon");
  if (lookback < 2) throw std::invalid_argument("lookback must be >= 2");
  if (n_blocks < 1) throw std::invalid_argument("need at least one block");
  if (hidden_width < 1) throw std::invalid_argument("hidden width must be >= 1");
}

nn::ParamLayout SQFModel::make_layout(const SQFConfig& config) {
  config.validate();
  nn::ParamLayout layout;
  const auto relu = nn::Activation::ReLU;
  for (std::size_t k = 0; k < config.n_blocks; ++k) {
    layout.add_dense(config.lookback, config.hidden_width, relu);
    for (int j = 1; j < 4; ++j) layout.add_dense(config.hidden_width, config.hidden_width, relu);
    layout.add_dense(config.hidden_width, config.lookback,
                     config.backcast_relu ? relu : nn::Activation::None);
    layout.add_dense(config.hidden_width, config.hidden_width, relu);
    layout.add_dense(config.hidden_width, config.n_outputs(), nn::Activation::None);
  }
  return layout;
}

namespace {

std::vector<SQFModel::BlockLayers> block_indices(std::size_t n_blocks) {
  std::vector<SQFModel::BlockLayers> blocks(n_blocks);
  std::size_t next = 0;
  for (auto& b : blocks) {
    for (auto& t : b.trunk) t = next++;
    b.backcast = next++;
    b.head = next++;
    b.projection = next++;
  }
  return blocks;
}

}  // namespace

SQFModel::SQFModel(SQFConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      blocks_(block_indices(config_.n_blocks)),
      params_(make_layout(config_)) {
  std::mt19937_64 rng(seed);
  nn::init_fan_in(params_, rng);
}

SQFModel::SQFModel(SQFConfig config, std::vector<double> params)
    : config_(std::move(config)),
      blocks_(block_indices(config_.n_blocks)),
      params_(make_layout(config_), std::move(params)) {}

void SQFModel::apply_slope_relu(Matrix& out) const {
  const Eigen::Index per = static_cast<Eigen::Index>(config_.outputs_per_horizon());
  const Eigen::Index L = per - 1;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(config_.horizon); ++i) {
    auto betas = out.middleRows(i * per + 1, L);
    betas = betas.cwiseMax(0.0);
  }
}

SQFModel::Pass SQFModel::forward(const Matrix& lookbacks) const {
  if (static_cast<std::size_t>(lookbacks.rows()) != config_.lookback) {
    throw std::invalid_argument("lookback windows must have length " +
                                std::to_string(config_.lookback));
  }
  Pass pass(params_);
  pass.blocks.reserve(blocks_.size());
  pass.outputs = Matrix::Zero(static_cast<Eigen::Index>(config_.n_outputs()), lookbacks.cols());
  Matrix x = lookbacks;
  for (const auto& b : blocks_) {
    Pass::BlockRecord rec;
    Matrix hidden = x;
    for (int j = 0; j < 4; ++j) {
      rec.trunk[j] = pass.tape.forward(params_, b.trunk[j], std::move(hidden));
      hidden = pass.tape.output(rec.trunk[j]);
    }
    const Matrix& trunk_out = pass.tape.output(rec.trunk[3]);
    rec.backcast = pass.tape.forward(params_, b.backcast, trunk_out);
    rec.head = pass.tape.forward(params_, b.head, trunk_out);
    rec.projection = pass.tape.forward(params_, b.projection, pass.tape.output(rec.head));

    Matrix partial = pass.tape.output(rec.projection);
    apply_slope_relu(partial);
    pass.outputs += partial;
    x -= pass.tape.output(rec.backcast);
    pass.blocks.push_back(rec);
  }
  pass.residual = std::move(x);
  return pass;
}

void SQFModel::backward(const Pass& pass, const Matrix& d_outputs, std::span<double> grads) const {
  pass.tape.check_fresh(params_);
  if (d_outputs.rows() != pass.outputs.rows() || d_outputs.cols() != pass.outputs.cols()) {
    throw std::invalid_argument("output gradient shape mismatch");
  }
  const Eigen::Index per = static_cast<Eigen::Index>(config_.outputs_per_horizon());
  const Eigen::Index L = per - 1;

  // Gradient with respect to the input of the block after the current one.
  Matrix g_next = Matrix::Zero(static_cast<Eigen::Index>(config_.lookback), d_outputs.cols());
  for (std::size_t k = blocks_.size(); k-- > 0;) {
    const auto& rec = pass.blocks[k];
    Matrix d_proj = d_outputs;
    const Matrix& proj_pre = pass.tape.record(rec.projection).pre;
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(config_.horizon); ++i) {
      auto d_betas = d_proj.middleRows(i * per + 1, L);
      d_betas = (proj_pre.middleRows(i * per + 1, L).array() > 0.0).select(d_betas, 0.0);
    }
    Matrix d_head = pass.tape.backward(params_, rec.projection, d_proj, grads);
    Matrix d_trunk = pass.tape.backward(params_, rec.head, d_head, grads);
    if (k + 1 < blocks_.size()) {
      // x^{[k+1]} = x^{[k]} - backcast, so the backcast receives -g_next.
      d_trunk += pass.tape.backward(params_, rec.backcast, -g_next, grads);
    }
    for (int j = 3; j >= 0; --j) d_trunk = pass.tape.backward(params_, rec.trunk[j], d_trunk, grads);
    g_next += d_trunk;
  }
}

std::vector<SplineQF> SQFModel::splines_from_outputs(const Matrix& outputs, Eigen::Index col) const {
  const std::size_t per = config_.outputs_per_horizon();
  std::vector<SplineQF> out;
  out.reserve(config_.horizon);
  for (std::size_t i = 0; i < config_.horizon; ++i) {
    const auto row = static_cast<Eigen::Index>(i * per);
    std::vector<double> betas(per - 1);
    for (std::size_t l = 0; l + 1 < per; ++l) {
      betas[l] = outputs(row + 1 + static_cast<Eigen::Index>(l), col);
    }
    out.emplace_back(config_.knots, outputs(row, col), std::move(betas));
  }
  return out;
}

SQFModel::BlockOutput SQFModel::block_forward(std::size_t k, std::span<const double> input) const {
  if (input.size() != config_.lookback) {
    throw std::invalid_argument("block input must have length " + std::to_string(config_.lookback));
  }
  const auto& b = blocks_.at(k);
  nn::Vector x = Eigen::Map<const nn::Vector>(input.data(), static_cast<Eigen::Index>(input.size()));
  auto layer = [&](std::size_t id, const nn::Vector& in) {
    return nn::dense_forward(in, params_.weights(id), params_.bias(id),
                             params_.layout().layer(id).activation);
  };
  nn::Vector hidden = x;
  for (std::size_t id : b.trunk) hidden = layer(id, hidden);
  const nn::Vector backcast = layer(b.backcast, hidden);
  Matrix proj = layer(b.projection, layer(b.head, hidden));
  apply_slope_relu(proj);

  BlockOutput out;
  out.backcast.assign(backcast.data(), backcast.data() + backcast.size());
  out.partials = splines_from_outputs(proj, 0);
  return out;
}

std::vector<SplineQF> SQFModel::forward(std::span<const double> lookback) const {
  if (lookback.size() != config_.lookback) {
    throw std::invalid_argument("lookback must have length " + std::to_string(config_.lookback));
  }
  const Matrix x = Eigen::Map<const Matrix>(lookback.data(), static_cast<Eigen::Index>(lookback.size()), 1);
  const Pass pass = forward(x);
  return splines_from_outputs(pass.outputs, 0);
}

std::vector<SplineQF> model_forward(const SQFModel& model, std::span<const double> lookback) {
  return model.forward(lookback);
}

std::vector<double> padded_window(std::span<const double> history, std::size_t length, double pad) {
  std::vector<double> window(length, pad);
  const std::size_t take = std::min(length, history.size());
  std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(),
            window.end() - static_cast<std::ptrdiff_t>(take));
  return window;
}

nn::Matrix forecast_quantiles(const SQFModel& model, std::span<const double> lookback,
                              const QuantileGrid& grid, bool clip,
                              const std::optional<Standardization>& stats) {
  std::vector<double> input(lookback.begin(), lookback.end());
  if (stats) {
    for (double& v : input) v = stats->apply(v);
  }
  const auto splines = model.forward(input);
  Matrix q(static_cast<Eigen::Index>(splines.size()), static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < splines.size(); ++i) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      double v = splines[i](grid[k]);
      if (stats) v = stats->invert(v);
      if (clip) v = std::max(v, 0.0);
      q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
    }
  }
  return q;
}

}  // namespace stablesqf
