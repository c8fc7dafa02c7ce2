#include "stablesqf/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace stablesqf::nn {

std::size_t ParamLayout::add_dense(std::size_t in, std::size_t out, Activation activation) {
  if (in == 0 || out == 0) throw std::invalid_argument("dense layer dimensions must be positive");
  layers_.push_back(DenseShape{in, out, activation, size_});
  size_ += layers_.back().param_count();
  return layers_.size() - 1;
}

ParamStore::ParamStore(ParamLayout layout)
    : layout_(std::move(layout)), values_(layout_.size(), 0.0) {}

ParamStore::ParamStore(ParamLayout layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  if (values_.size() != layout_.size()) {
    throw std::invalid_argument("parameter vector has " + std::to_string(values_.size()) +
                                " entries, layout needs " + std::to_string(layout_.size()));
  }
}

std::span<double> ParamStore::mutable_values() {
  ++generation_;
  return values_;
}

void ParamStore::assign(std::span<const double> values) {
  if (values.size() != values_.size()) {
    throw std::invalid_argument("parameter length mismatch in assign");
  }
  std::copy(values.begin(), values.end(), mutable_values().begin());
}

ConstMatrixMap ParamStore::weights(std::size_t layer) const {
  const auto& s = layout_.layer(layer);
  return ConstMatrixMap(values_.data() + s.offset, static_cast<Eigen::Index>(s.out),
                        static_cast<Eigen::Index>(s.in));
}

ConstVectorMap ParamStore::bias(std::size_t layer) const {
  const auto& s = layout_.layer(layer);
  return ConstVectorMap(values_.data() + s.offset + s.weight_count(),
                        static_cast<Eigen::Index>(s.out));
}

void init_fan_in(ParamStore& params, std::mt19937_64& rng) {
  auto values = params.mutable_values();
  const auto& layout = params.layout();
  for (std::size_t i = 0; i < layout.n_layers(); ++i) {
    const auto& s = layout.layer(i);
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t j = 0; j < s.param_count(); ++j) values[s.offset + j] = dist(rng);
  }
}

Vector dense_forward(const Vector& input, const Matrix& weights, const Vector& bias,
                     Activation activation) {
  if (weights.cols() != input.size() || weights.rows() != bias.size()) {
    throw std::invalid_argument("dense layer shape mismatch");
  }
  Vector out = weights * input + bias;
  if (activation == Activation::ReLU) out = out.cwiseMax(0.0);
  return out;
}

Tape::Tape(const ParamStore& params) : generation_(params.generation()), owner_(&params) {}

std::size_t Tape::forward(const ParamStore& params, std::size_t layer, const Matrix& input) {
  return forward(params, layer, Matrix(input));
}

std::size_t Tape::forward(const ParamStore& params, std::size_t layer, Matrix&& input) {
  check_fresh(params);
  const auto& s = params.layout().layer(layer);
  if (static_cast<std::size_t>(input.rows()) != s.in) {
    throw std::invalid_argument("layer " + std::to_string(layer) + " expects " +
                                std::to_string(s.in) + " inputs, got " +
                                std::to_string(input.rows()));
  }
  Record rec;
  rec.layer = layer;
  rec.input = std::move(input);
  rec.pre.noalias() = params.weights(layer) * rec.input;
  rec.pre.colwise() += params.bias(layer);
  rec.output = s.activation == Activation::ReLU ? Matrix(rec.pre.cwiseMax(0.0)) : rec.pre;
  records_.push_back(std::move(rec));
  return records_.size() - 1;
}

Matrix Tape::backward(const ParamStore& params, std::size_t index, const Matrix& d_output,
                      std::span<double> grads) const {
  check_fresh(params);
  const Record& rec = records_.at(index);
  const auto& s = params.layout().layer(rec.layer);
  if (grads.size() != params.size()) throw std::invalid_argument("gradient buffer size mismatch");

  Matrix d_pre = s.activation == Activation::ReLU
                     ? Matrix((rec.pre.array() > 0.0).select(d_output, 0.0))
                     : d_output;
  MatrixMap d_w(grads.data() + s.offset, static_cast<Eigen::Index>(s.out),
                static_cast<Eigen::Index>(s.in));
  VectorMap d_b(grads.data() + s.offset + s.weight_count(), static_cast<Eigen::Index>(s.out));
  d_w.noalias() += d_pre * rec.input.transpose();
  d_b += d_pre.rowwise().sum();
  return params.weights(rec.layer).transpose() * d_pre;
}

void Tape::check_fresh(const ParamStore& params) const {
  if (&params != owner_ || params.generation() != generation_) {
    throw std::logic_error("stale tape: parameters changed since the forward pass");
  }
}

Matrix forward_chain(const ParamStore& params, std::span<const std::size_t> layers,
                     const Matrix& input, Tape& tape) {
  Matrix x = input;
  for (std::size_t layer : layers) {
    const std::size_t rec = tape.forward(params, layer, std::move(x));
    x = tape.output(rec);
  }
  return x;
}

std::vector<double> backward(const Tape& tape, const ParamStore& params, const Matrix& output_grad) {
  std::vector<double> grads(params.size(), 0.0);
  Matrix d = output_grad;
  for (std::size_t i = tape.size(); i-- > 0;) d = tape.backward(params, i, d, grads);
  return grads;
}

AdamState::AdamState(std::size_t n, AdamConfig config_)
    : config(config_), m(n, 0.0), vv(n, 0.0) {}

void adam_step(ParamStore& params, std::span<const double> grads, AdamState& state) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.m.size() != n || state.vv.size() != n) {
    throw std::invalid_argument("Adam: parameter, gradient and moment lengths differ");
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  auto theta = params.mutable_values();
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.vv[i] = c.beta2 * state.vv[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = state.m[i] / bias1;
    const double v_hat = state.vv[i] / bias2;
    theta[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.eps);
  }
}

EmaState::EmaState(std::span<const double> initial, double phi)
    : shadow_(initial.begin(), initial.end()), phi_(phi) {
  if (!(phi >= 0.0 && phi <= 1.0)) throw std::invalid_argument("EMA coefficient must be in [0, 1]");
}

void EmaState::update(std::span<const double> params) {
  if (params.size() != shadow_.size()) throw std::invalid_argument("EMA length mismatch");
  for (std::size_t i = 0; i < shadow_.size(); ++i) {
    shadow_[i] = phi_ * shadow_[i] + (1.0 - phi_) * params[i];
  }
}

void ema_update(EmaState& ema, const ParamStore& params) { ema.update(params.values()); }

GradCheckReport grad_check(const Objective& objective, std::span<const double> params,
                           std::size_t n_probes, const GradCheckOptions& options) {
  std::vector<double> theta(params.begin(), params.end());
  std::vector<double> analytic;
  const double f0 = objective(theta, &analytic);
  if (analytic.size() != theta.size()) {
    throw std::invalid_argument("objective returned a gradient of the wrong length");
  }

  std::vector<std::size_t> order(theta.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);

  const double h = options.step;
  auto at = [&](std::size_t i, double delta) {
    const double saved = theta[i];
    theta[i] = saved + delta;
    const double f = objective(theta, nullptr);
    theta[i] = saved;
    return f;
  };

  GradCheckReport report;
  for (std::size_t i : order) {
    if (report.probes >= n_probes) break;
    const double f_plus = at(i, h);
    const double f_minus = at(i, -h);
    const double fwd = (f_plus - f0) / h;
    const double bwd = (f0 - f_minus) / h;
    const double scale = std::max({std::abs(fwd), std::abs(bwd), options.abs_floor});
    if (std::abs(fwd - bwd) > options.kink_tol * scale) {
      // Smooth curvature makes the second difference shrink 4x when the step
      // halves; a kink inside the stencil does not.
      const double d_full = f_plus + f_minus - 2.0 * f0;
      const double d_half = at(i, h / 2) + at(i, -h / 2) - 2.0 * f0;
      if (std::abs(d_full - 4.0 * d_half) > 0.1 * std::abs(d_full)) {
        ++report.redrawn;
        continue;
      }
    }
    const double numeric = (f_plus - f_minus) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), options.abs_floor});
    const double rel = std::abs(analytic[i] - numeric) / denom;
    if (rel > report.max_rel_error || report.probes == 0) {
      report.max_rel_error = std::max(rel, report.max_rel_error);
      report.worst_index = i;
    }
    ++report.probes;
  }
  return report;
}

}  // namespace stablesqf::nn
