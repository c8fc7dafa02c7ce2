#include "stablesqf/splineqf.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace stablesqf {

KnotGrid::KnotGrid(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw std::invalid_argument("knot grid must hold at least one knot");
  if (knots_.front() != 0.0) throw std::invalid_argument("first knot must be 0");
  if (!(knots_.back() < 1.0)) throw std::invalid_argument("last knot must be < 1");
  for (std::size_t l = 1; l < knots_.size(); ++l) {
    if (!(knots_[l - 1] < knots_[l])) {
      throw std::invalid_argument("knots must be strictly increasing (index " +
                                  std::to_string(l) + ")");
    }
  }
}

KnotGridPtr make_default_knots() {
  // Work in integer ticks of 1/8000 so that the mirrored half is exact.
  constexpr int kTicks = 8000;
  std::vector<int> lower = {80, 200, 400, 600, 800};  // 0.01, 0.025 .. 0.1
  for (int t = 800 + 300; t <= 3200; t += 300) lower.push_back(t);  // .. 0.4

  std::vector<int> ticks = {0};
  ticks.insert(ticks.end(), lower.begin(), lower.end());
  for (int t = 3200 + 400; t < 4800; t += 400) ticks.push_back(t);  // 0.45 .. 0.55
  for (auto it = lower.rbegin(); it != lower.rend(); ++it) ticks.push_back(kTicks - *it);

  std::vector<double> knots;
  knots.reserve(ticks.size());
  for (int t : ticks) knots.push_back(static_cast<double>(t) / kTicks);
  return std::make_shared<const KnotGrid>(std::move(knots));
}

KnotGridPtr make_uniform_knots(std::size_t n_knots) {
  if (n_knots == 0) throw std::invalid_argument("knot grid must hold at least one knot");
  std::vector<double> knots(n_knots);
  for (std::size_t l = 0; l < n_knots; ++l) {
    knots[l] = static_cast<double>(l) / static_cast<double>(n_knots);
  }
  return std::make_shared<const KnotGrid>(std::move(knots));
}

SplineQF::SplineQF(KnotGridPtr grid, double gamma, std::vector<double> betas)
    : grid_(std::move(grid)), gamma_(gamma), betas_(std::move(betas)) {
  if (!grid_) throw std::invalid_argument("spline requires a knot grid");
  if (betas_.size() != grid_->size()) {
    throw std::invalid_argument("spline has " + std::to_string(betas_.size()) +
                                " slopes for " + std::to_string(grid_->size()) + " knots");
  }
  for (double b : betas_) {
    if (!(b >= 0.0)) throw std::invalid_argument("spline slopes must be nonnegative");
  }
}

SplineQF SplineQF::zero(KnotGridPtr grid) {
  const std::size_t n = grid ? grid->size() : 0;
  return SplineQF(std::move(grid), 0.0, std::vector<double>(n, 0.0));
}

double SplineQF::operator()(double alpha) const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::domain_error("quantile level " + std::to_string(alpha) + " outside [0, 1]");
  }
  // Per-piece form of the hinge sum: every term is nondecreasing in alpha,
  // so the rounded result cannot cross either.
  const auto& d = grid_->knots();
  const std::size_t n = betas_.size();
  double q = gamma_;
  for (std::size_t l = 0; l < n && alpha > d[l]; ++l) {
    const double end = l + 1 < n ? std::min(alpha, d[l + 1]) : alpha;
    q += betas_[l] * (end - d[l]);
  }
  return q;
}

double eval(const SplineQF& sqf, double alpha) { return sqf(alpha); }

std::vector<double> eval_grid(const SplineQF& sqf, std::span<const double> levels) {
  std::vector<double> out;
  out.reserve(levels.size());
  for (double a : levels) out.push_back(sqf(a));
  return out;
}

SplineQF add(const SplineQF& a, const SplineQF& b) {
  if (a.grid() != b.grid() && !(*a.grid() == *b.grid())) {
    throw std::invalid_argument("cannot add splines defined on different knot grids");
  }
  std::vector<double> betas(a.betas().begin(), a.betas().end());
  for (std::size_t l = 0; l < betas.size(); ++l) betas[l] += b.betas()[l];
  return SplineQF(a.grid(), a.gamma() + b.gamma(), std::move(betas));
}

SplineQF operator+(const SplineQF& a, const SplineQF& b) { return add(a, b); }

SplineBasis::SplineBasis(const KnotGrid& knots, std::span<const double> levels)
    : basis_(static_cast<Eigen::Index>(levels.size()), static_cast<Eigen::Index>(knots.size())) {
  const auto& d = knots.knots();
  const std::size_t n_knots = d.size();
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const double a = levels[k];
    if (!(a >= 0.0 && a <= 1.0)) throw std::domain_error("quantile level outside [0, 1]");
    for (std::size_t l = 0; l < n_knots; ++l) {
      const double end = l + 1 < n_knots ? std::min(a, d[l + 1]) : a;
      basis_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = std::max(end - d[l], 0.0);
    }
  }
}

}  // namespace stablesqf
