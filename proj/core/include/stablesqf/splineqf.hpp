#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace stablesqf {

/// Ordered starting points d_1..d_L of the spline pieces, with d_1 = 0 and
/// d_L < 1. Grids are immutable and shared by every spline of a model.
class KnotGrid {
 public:
  explicit KnotGrid(std::vector<double> knots);

  std::size_t size() const { return knots_.size(); }
  std::span<const double> knots() const { return knots_; }
  double operator[](std::size_t l) const { return knots_[l]; }

  friend bool operator==(const KnotGrid&, const KnotGrid&) = default;

 private:
  std::vector<double> knots_;
};

using KnotGridPtr = std::shared_ptr<const KnotGrid>;

/// The 30-knot grid that is denser near both tails:
/// 0, 0.01, 0.025 .. 0.1 (step 0.025), 0.1 .. 0.4 (step 0.0375),
/// 0.4 .. 0.6 (step 0.05), then the 0.01 .. 0.4 spacing mirrored up to 0.99.
KnotGridPtr make_default_knots();

/// Evenly spaced grid 0, 1/L, .., (L-1)/L.
KnotGridPtr make_uniform_knots(std::size_t n_knots);

/// Linear isotonic regression spline quantile function
///   q(a) = gamma + sum_l (beta_l - beta_{l-1}) * max(a - d_l, 0),  beta_0 = 0.
/// The slope on [d_l, d_{l+1}) is beta_l >= 0, so q is nondecreasing.
class SplineQF {
 public:
  SplineQF(KnotGridPtr grid, double gamma, std::vector<double> betas);

  /// Point mass at zero on `grid`.
  static SplineQF zero(KnotGridPtr grid);

  double gamma() const { return gamma_; }
  std::span<const double> betas() const { return betas_; }
  const KnotGridPtr& grid() const { return grid_; }

  /// Throws std::domain_error for alpha outside [0, 1]. alpha = 1 extends the
  /// last piece.
  double operator()(double alpha) const;

 private:
  KnotGridPtr grid_;
  double gamma_;
  std::vector<double> betas_;
};

double eval(const SplineQF& sqf, double alpha);
std::vector<double> eval_grid(const SplineQF& sqf, std::span<const double> levels);

/// Pointwise sum of two quantile functions on the same knot grid. Throws
/// std::invalid_argument when the grids differ.
SplineQF add(const SplineQF& a, const SplineQF& b);
SplineQF operator+(const SplineQF& a, const SplineQF& b);

/// Linear map from (gamma, betas) to quantiles at fixed levels:
///   q = gamma * 1 + A * betas,   A(k, l) = (a_k - d_l)_+ - (a_k - d_{l+1})_+
/// with (a - d_{L+1})_+ taken as 0. Used wherever many splines are evaluated
/// on the same levels (training loss, batched inference).
class SplineBasis {
 public:
  SplineBasis(const KnotGrid& knots, std::span<const double> levels);

  const Eigen::MatrixXd& matrix() const { return basis_; }
  std::size_t n_levels() const { return static_cast<std::size_t>(basis_.rows()); }
  std::size_t n_knots() const { return static_cast<std::size_t>(basis_.cols()); }

 private:
  Eigen::MatrixXd basis_;
};

}  // namespace stablesqf
