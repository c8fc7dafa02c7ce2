#include "stablesqf/evaluation.hpp"

#include <stdexcept>

namespace stablesqf {

using nn::Matrix;

std::size_t first_origin(std::size_t region_end, std::size_t n_origins, std::size_t horizon) {
  if (n_origins < 1) throw std::invalid_argument("need at least one origin");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  const std::size_t span = n_origins + horizon - 1;
  if (region_end < span + 1) {
    throw std::invalid_argument("series of length " + std::to_string(region_end) +
                                " too short for " + std::to_string(n_origins) +
                                " origins at horizon " + std::to_string(horizon));
  }
  return region_end - span - 1;
}

std::vector<ForecastTrace> rolling_forecasts(const QuantileForecaster& forecaster,
                                             std::span<const double> series,
                                             const std::string& series_id, std::size_t region_end,
                                             std::size_t n_origins, std::size_t horizon,
                                             const QuantileGrid& grid) {
  if (region_end > series.size()) {
    throw std::invalid_argument("evaluation region extends past the end of series " + series_id);
  }
  const std::size_t first = first_origin(region_end, n_origins, horizon);
  std::vector<ForecastTrace> traces;
  traces.reserve(n_origins);
  for (std::size_t j = 0; j < n_origins; ++j) {
    const std::size_t origin = first + j;
    Matrix q = forecaster(series.first(origin + 1));
    if (static_cast<std::size_t>(q.rows()) != horizon ||
        static_cast<std::size_t>(q.cols()) != grid.size()) {
      throw std::logic_error("forecaster returned a matrix of the wrong shape");
    }
    traces.push_back({series_id, origin, std::move(q)});
  }
  return traces;
}

EvalAccumulator::EvalAccumulator(QuantileGrid grid) : grid_(std::move(grid)) {}

void EvalAccumulator::bump(std::vector<Sum>& v, std::size_t idx, double x) {
  if (v.size() <= idx) v.resize(idx + 1);
  v[idx].value += x;
  ++v[idx].count;
}

void EvalAccumulator::add(std::span<const ForecastTrace> traces, std::span<const double> actuals,
                          std::span<const double> full_history) {
  if (traces.empty()) throw std::invalid_argument("no forecast traces to evaluate");
  const double crps_scale = naive_mae_scale(full_history);
  const double w1_scale = naive_power_scale(full_history, 1.0);
  const std::size_t M = grid_.size();
  const Eigen::Index h = traces.front().quantiles.rows();
  const WeightFunction weights[3] = {{WeightKind::Uniform}, {WeightKind::Center}, {WeightKind::Tail}};

  std::vector<double> row(M), prev(M);
  auto copy_row = [&](const Matrix& q, Eigen::Index i, std::vector<double>& out) {
    for (std::size_t k = 0; k < M; ++k) out[k] = q(i, static_cast<Eigen::Index>(k));
  };

  for (std::size_t j = 0; j < traces.size(); ++j) {
    const auto& tr = traces[j];
    if (tr.quantiles.rows() != h || static_cast<std::size_t>(tr.quantiles.cols()) != M) {
      throw std::invalid_argument("trace shape does not match the evaluation grid");
    }
    if (j > 0 && (tr.origin != traces[j - 1].origin + 1 || tr.series_id != traces[j - 1].series_id)) {
      throw std::invalid_argument("traces must come from one series with consecutive origins");
    }
    for (Eigen::Index i = 0; i < h; ++i) {
      const std::size_t target = tr.origin + static_cast<std::size_t>(i) + 1;
      if (target >= actuals.size()) {
        throw std::invalid_argument("missing actual for target " + std::to_string(target) +
                                    " of series " + tr.series_id);
      }
      copy_row(tr.quantiles, i, row);
      for (int w = 0; w < 3; ++w) {
        const double s = crps_discrete(row, actuals[target], grid_, weights[w]) / crps_scale;
        crps_[w].value += s;
        ++crps_[w].count;
        if (w == 0) {
          bump(crps_h_, static_cast<std::size_t>(i), s);
          bump(crps_o_, j, s);
        }
      }
      if (j == 0 || i + 1 >= h) continue;
      // The previous origin's forecast for the same target has horizon i + 2.
      copy_row(traces[j - 1].quantiles, i + 1, prev);
      for (int w = 0; w < 3; ++w) {
        const double s = wasserstein_discrete(row, prev, grid_, 1.0, weights[w]) / w1_scale;
        w1_[w].value += s;
        ++w1_[w].count;
        if (w == 0) {
          bump(w1_h_, static_cast<std::size_t>(i), s);
          bump(w1_o_, j, s);
        }
      }
    }
  }
}

EvalReport EvalAccumulator::report() const {
  if (crps_[0].count == 0) throw std::logic_error("nothing has been evaluated");
  auto mean = [](const Sum& s) { return s.count ? s.value / static_cast<double>(s.count) : 0.0; };
  auto means = [&](const std::vector<Sum>& v) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& s : v) out.push_back(mean(s));
    return out;
  };
  EvalReport r;
  r.scrps = mean(crps_[0]);
  r.scrps_c = mean(crps_[1]);
  r.scrps_t = mean(crps_[2]);
  r.n_crps_terms = crps_[0].count;
  r.n_w1_terms = w1_[0].count;
  if (w1_[0].count > 0) {
    r.sw1 = mean(w1_[0]);
    r.sw1_c = mean(w1_[1]);
    r.sw1_t = mean(w1_[2]);
  }
  r.scrps_by_horizon = means(crps_h_);
  r.scrps_by_origin = means(crps_o_);
  r.sw1_by_horizon = means(w1_h_);
  r.sw1_by_origin = means(w1_o_);
  return r;
}

EvalReport evaluate(std::span<const ForecastTrace> traces, std::span<const double> actuals,
                    std::span<const double> full_history, const QuantileGrid& grid) {
  EvalAccumulator acc(grid);
  acc.add(traces, actuals, full_history);
  return acc.report();
}

QuantileForecaster sqf_forecaster(const SQFModel& model, Standardization stats,
                                  const QuantileGrid& grid, bool clip) {
  return [&model, stats, grid, clip](std::span<const double> history) {
    const auto window = padded_window(history, model.config().lookback, stats.mean);
    return forecast_quantiles(model, window, grid, clip, stats);
  };
}

}  // namespace stablesqf
