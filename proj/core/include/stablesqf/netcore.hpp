#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace stablesqf::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using ConstVectorMap = Eigen::Map<const Vector>;
using MatrixMap = Eigen::Map<Matrix>;
using VectorMap = Eigen::Map<Vector>;

enum class Activation { ReLU, None };

/// Placement of one dense layer inside a flat parameter vector: an
/// out x in column-major weight block followed by `out` biases.
struct DenseShape {
  std::size_t in = 0;
  std::size_t out = 0;
  Activation activation = Activation::ReLU;
  std::size_t offset = 0;

  std::size_t weight_count() const { return in * out; }
  std::size_t param_count() const { return in * out + out; }
};

class ParamLayout {
 public:
  /// Appends a layer and returns its index.
  std::size_t add_dense(std::size_t in, std::size_t out, Activation activation);

  const DenseShape& layer(std::size_t index) const { return layers_.at(index); }
  std::size_t n_layers() const { return layers_.size(); }
  std::size_t size() const { return size_; }

  friend bool operator==(const ParamLayout&, const ParamLayout&) = default;

 private:
  std::vector<DenseShape> layers_;
  std::size_t size_ = 0;
};

/// All learnable weights of a network in one flat vector of doubles. Every
/// mutable access bumps `generation()`, which tapes use to detect staleness.
class ParamStore {
 public:
  ParamStore() = default;
  explicit ParamStore(ParamLayout layout);
  ParamStore(ParamLayout layout, std::vector<double> values);

  const ParamLayout& layout() const { return layout_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values();
  void assign(std::span<const double> values);
  std::uint64_t generation() const { return generation_; }

  ConstMatrixMap weights(std::size_t layer) const;
  ConstVectorMap bias(std::size_t layer) const;

 private:
  ParamLayout layout_;
  std::vector<double> values_;
  std::uint64_t generation_ = 0;
};

/// Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer.
void init_fan_in(ParamStore& params, std::mt19937_64& rng);

/// act(W x + b) for a single input vector.
Vector dense_forward(const Vector& input, const Matrix& weights, const Vector& bias,
                     Activation activation);

/// Recorded forward pass over a batch (one column per example). Records are
/// appended in execution order; backward over a pure chain of layers walks
/// them in reverse.
class Tape {
 public:
  struct Record {
    std::size_t layer = 0;
    Matrix input;
    Matrix pre;
    Matrix output;
  };

  explicit Tape(const ParamStore& params);

  /// Runs layer `layer` on `input` and returns the index of the new record.
  std::size_t forward(const ParamStore& params, std::size_t layer, const Matrix& input);
  std::size_t forward(const ParamStore& params, std::size_t layer, Matrix&& input);

  const Record& record(std::size_t index) const { return records_.at(index); }
  const Matrix& output(std::size_t index) const { return records_.at(index).output; }
  std::size_t size() const { return records_.size(); }

  /// Accumulates dL/dW and dL/db of the record's layer into `grads` and returns
  /// dL/d(input). ReLU passes no gradient where the pre-activation is <= 0.
  Matrix backward(const ParamStore& params, std::size_t index, const Matrix& d_output,
                  std::span<double> grads) const;

  /// Throws std::logic_error if `params` changed since this tape was recorded.
  void check_fresh(const ParamStore& params) const;

 private:
  std::uint64_t generation_;
  const ParamStore* owner_;
  std::vector<Record> records_;
};

/// Feeds `input` through `layers` in order, recording into `tape`.
Matrix forward_chain(const ParamStore& params, std::span<const std::size_t> layers,
                     const Matrix& input, Tape& tape);

/// Gradient of a loss with respect to every parameter, given dL/d(output) of a
/// tape produced by forward_chain.
std::vector<double> backward(const Tape& tape, const ParamStore& params, const Matrix& output_grad);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamState(std::size_t n, AdamConfig config = {});

  AdamConfig config;
  std::vector<double> m;
  std::vector<double> vv;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(ParamStore& params, std::span<const double> grads, AdamState& state);

/// Shadow weights theta_ema <- phi * theta_ema + (1 - phi) * theta.
class EmaState {
 public:
  EmaState(std::span<const double> initial, double phi);

  void update(std::span<const double> params);
  std::span<const double> shadow() const { return shadow_; }
  double phi() const { return phi_; }

 private:
  std::vector<double> shadow_;
  double phi_;
};

void ema_update(EmaState& ema, const ParamStore& params);

/// Loss at `params`; when `grad` is non-null it receives the analytic gradient.
using Objective = std::function<double(std::span<const double> params, std::vector<double>* grad)>;

struct GradCheckOptions {
  double step = 1e-5;
  /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor).
  double abs_floor = 1e-6;
  /// A probe straddles a kink when its one-sided slopes disagree by more
  /// than this fraction and the disagreement does not shrink like h^2.
  double kink_tol = 1e-6;
  std::uint64_t seed = 0x5eed;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t probes = 0;
  std::size_t redrawn = 0;
};

/// Compares the analytic gradient against central differences at `n_probes`
/// random coordinates; probes that land next to a kink are re-drawn.
GradCheckReport grad_check(const Objective& objective, std::span<const double> params,
                           std::size_t n_probes, const GradCheckOptions& options = {});

}  // namespace stablesqf::nn
