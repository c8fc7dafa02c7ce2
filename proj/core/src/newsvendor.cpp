#include "stablesqf/newsvendor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

namespace stablesqf::newsvendor {

std::string_view to_string(ForecasterKind kind) {
  return kind == ForecasterKind::Stable ? "stable" : "unstable";
}

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::OptimalMyopic:
      return "optimal-myopic";
    case Strategy::Anticipation:
      return "anticipation";
    case Strategy::Procrastination:
      return "procrastination";
  }
  return "optimal-myopic";
}

Composition parse_composition(std::string_view name) {
  if (name == "average") return Composition::Average;
  if (name == "mixture") return Composition::Mixture;
  throw std::invalid_argument("unknown composition '" + std::string(name) +
                              "' (expected average or mixture)");
}

Accounting parse_accounting(std::string_view name) {
  if (name == "void") return Accounting::Void;
  if (name == "sunk") return Accounting::Sunk;
  throw std::invalid_argument("unknown cancellation accounting '" + std::string(name) +
                              "' (expected void or sunk)");
}

void DGPConfig::validate() const {
  if (n_periods < 1) throw std::invalid_argument("need at least one period");
  if (n_samples < 100) throw std::invalid_argument("need at least 100 samples per distribution");
  if (!(mu_sd >= 0.0) || !(noise_sd > 0.0)) {
    throw std::invalid_argument("prior and noise deviations must be nonnegative / positive");
  }
  for (double d : dispersions) {
    if (!(d > 0.0)) throw std::invalid_argument("dispersions must be positive");
  }
}

std::array<double, 3> bias_path(ForecasterKind kind, double tau0) {
  const double flip = kind == ForecasterKind::Stable ? 1.0 : -1.0;
  const double t2 = flip * 0.5 * tau0;
  return {tau0, t2, flip * 0.5 * t2};
}

CostStructure CostStructure::draw(double price, std::mt19937_64& rng) {
  CostStructure c;
  c.price = price;
  c.base = std::uniform_real_distribution<double>(1.0, 2.0)(rng);
  c.expedite2 = std::uniform_real_distribution<double>(0.2 * c.base, 0.3 * c.base)(rng);
  c.expedite1 = 2.0 * c.expedite2;
  c.cancel2 = std::uniform_real_distribution<double>(0.3 * c.base, 0.5 * c.base)(rng);
  c.cancel1 = 2.0 * c.cancel2;
  return c;
}

CostStructure CostStructure::with_price(double p) const {
  CostStructure c = *this;
  c.price = p;
  return c;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

PeriodQuantiles simulate_period(const DGPConfig& config, std::size_t period,
                                const QuantileGrid& grid) {
  std::mt19937_64 rng(splitmix64(config.seed ^ splitmix64(period)));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  PeriodQuantiles out;
  auto& d = out.draw;
  d.mu = config.mu_mean + config.mu_sd * normal(rng);
  d.tau0 = unit(rng) < 0.5 ? -config.tau0 : config.tau0;
  d.demand = d.mu + config.noise_sd * normal(rng);
  d.costs = CostStructure::draw(0.0, rng);

  const std::array<std::array<double, 3>, 2> taus = {bias_path(ForecasterKind::Stable, d.tau0),
                                                     bias_path(ForecasterKind::Unstable, d.tau0)};
  const std::size_t n = config.n_samples;
  std::vector<double> truth(n), shock(n), pick(n), samples(n);
  for (std::size_t o = 0; o < 3; ++o) {
    const double s = config.dispersion_is_variance ? std::sqrt(config.dispersions[o])
                                                   : config.dispersions[o];
    for (std::size_t j = 0; j < n; ++j) {
      truth[j] = d.mu + config.noise_sd * normal(rng);
      shock[j] = normal(rng);
      if (config.composition == Composition::Mixture) pick[j] = unit(rng);
    }
    for (std::size_t k = 0; k < 2; ++k) {
      const double center = d.mu + taus[k][o];
      for (std::size_t j = 0; j < n; ++j) {
        const double biased = center + s * shock[j];
        samples[j] = config.composition == Composition::Average
                         ? 0.5 * (truth[j] + biased)
                         : (pick[j] < 0.5 ? truth[j] : biased);
      }
      out.forecasts[k][o] = sample_quantiles(samples, grid.levels());
    }
  }
  return out;
}

std::vector<PeriodQuantiles> simulate_dgp(const DGPConfig& config, const QuantileGrid& grid) {
  config.validate();
  std::vector<PeriodQuantiles> out;
  out.reserve(config.n_periods);
  for (std::size_t t = 0; t < config.n_periods; ++t) out.push_back(simulate_period(config, t, grid));
  return out;
}

namespace {

struct PeriodMetrics {
  double crps[2][3] = {};
  double w1_adjacent[2][2] = {};
  double w1_nonadjacent[2] = {};
};

PeriodMetrics period_metrics(const PeriodQuantiles& pq, const QuantileGrid& grid) {
  PeriodMetrics m;
  for (int k = 0; k < 2; ++k) {
    const auto& f = pq.forecasts[k];
    for (int o = 0; o < 3; ++o) m.crps[k][o] = crps_discrete(f[o], pq.draw.demand, grid);
    m.w1_adjacent[k][0] = wasserstein_discrete(f[0], f[1], grid);
    m.w1_adjacent[k][1] = wasserstein_discrete(f[1], f[2], grid);
    m.w1_nonadjacent[k] = wasserstein_discrete(f[0], f[2], grid);
  }
  return m;
}

std::vector<ForecastMetricsRow> metrics_rows(std::span<const PeriodMetrics> metrics) {
  const double n = static_cast<double>(metrics.size());
  std::vector<ForecastMetricsRow> rows;
  for (int k = 0; k < 2; ++k) {
    double crps[3] = {}, adj[2] = {}, non = 0.0;
    for (const auto& m : metrics) {
      for (int o = 0; o < 3; ++o) crps[o] += m.crps[k][o];
      adj[0] += m.w1_adjacent[k][0];
      adj[1] += m.w1_adjacent[k][1];
      non += m.w1_nonadjacent[k];
    }
    for (int o = 0; o < 3; ++o) {
      ForecastMetricsRow r;
      r.kind = k == 0 ? ForecasterKind::Stable : ForecasterKind::Unstable;
      r.lag = kLags[static_cast<std::size_t>(o)];
      r.crps = crps[o] / n;
      if (o > 0) r.w1_adjacent = adj[o - 1] / n;
      if (o == 2) r.w1_nonadjacent = non / n;
      rows.push_back(r);
    }
  }
  return rows;
}

}  // namespace

std::vector<ForecastMetricsRow> toy_metrics(std::span<const PeriodQuantiles> periods,
                                   const QuantileGrid& grid) {
  if (periods.empty()) throw std::invalid_argument("no simulated periods");
  std::vector<PeriodMetrics> metrics;
  metrics.reserve(periods.size());
  for (const auto& pq : periods) metrics.push_back(period_metrics(pq, grid));
  return metrics_rows(metrics);
}

double interpolate_quantile(std::span<const double> quantiles, const QuantileGrid& grid,
                            double level) {
  if (quantiles.size() != grid.size()) {
    throw std::invalid_argument("quantile vector does not match the grid");
  }
  const auto levels = grid.levels();
  if (!(level > levels.front())) return quantiles.front();
  if (!(level < levels.back())) return quantiles.back();
  const auto it = std::upper_bound(levels.begin(), levels.end(), level);
  const auto hi = static_cast<std::size_t>(it - levels.begin());
  const std::size_t lo = hi - 1;
  const double w = (level - levels[lo]) / (levels[hi] - levels[lo]);
  return quantiles[lo] + w * (quantiles[hi] - quantiles[lo]);
}

namespace {

// Buy up to `up` when short of it, cancel down to `down` when above it.
double band_adjustment(double on_order, double up, double down) {
  up = std::max(up, 0.0);
  down = std::max(down, 0.0);
  if (up > on_order) return up - on_order;
  if (on_order > down) return down - on_order;
  return 0.0;
}

}  // namespace

double decide_orders(Strategy strategy, int lag, std::span<const double> quantiles,
                     const QuantileGrid& grid, const CostStructure& costs,
                     const OrderState& state) {
  if (lag < 1 || lag > 3) throw std::invalid_argument("lag must be 1, 2 or 3");
  const double p = costs.price;
  const double c = costs.base;
  auto q = [&](double level) { return interpolate_quantile(quantiles, grid, level); };
  const double on = state.on_order;

  if (strategy == Strategy::Procrastination) {
    if (lag > 1) return 0.0;
    return std::max(q((p - c - costs.expedite1) / p), 0.0) - on;
  }
  if (lag == 1) {
    return band_adjustment(on, q((p - c - costs.expedite1) / p),
                           q((p - state.unit_cost + costs.cancel1) / p));
  }
  if (strategy == Strategy::Anticipation) {
    return band_adjustment(on, q(0.5), q(0.5));
  }
  if (lag == 3) return band_adjustment(on, q((p - c) / p), q((p - c) / p));
  return band_adjustment(on, q((p - c - costs.expedite2) / p), q((p - c + costs.cancel2) / p));
}

void apply_adjustment(OrderState& state, double adjustment, int lag, const CostStructure& costs,
                      Accounting accounting) {
  if (adjustment > 0.0) {
    const double unit = costs.base + (lag == 2 ? costs.expedite2 : lag == 1 ? costs.expedite1 : 0.0);
    const double total = state.on_order + adjustment;
    state.unit_cost = (state.on_order * state.unit_cost + adjustment * unit) / total;
    state.on_order = total;
    state.paid += adjustment * unit;
  } else if (adjustment < 0.0) {
    const double units = std::min(-adjustment, state.on_order);
    const double penalty = lag == 1 ? costs.cancel1 : costs.cancel2;
    state.on_order -= units;
    state.penalties += units * penalty;
    if (accounting == Accounting::Void) state.paid -= units * state.unit_cost;
    if (state.on_order <= 0.0) state.on_order = 0.0;
  }
}

double realized_profit(const OrderState& state, double price, double demand) {
  return price * std::min(state.on_order, std::max(demand, 0.0)) - state.paid - state.penalties;
}

double period_profit(Strategy strategy, const std::array<std::vector<double>, 3>& quantiles,
                     const QuantileGrid& grid, const CostStructure& costs, double demand,
                     Accounting accounting) {
  OrderState state;
  for (std::size_t o = 0; o < 3; ++o) {
    const int lag = kLags[o];
    const double adj = decide_orders(strategy, lag, quantiles[o], grid, costs, state);
    apply_adjustment(state, adj, lag, costs, accounting);
  }
  return realized_profit(state, costs.price, demand);
}

namespace {

ProfitComparison compare(std::span<const double> unstable, std::span<const double> stable) {
  ProfitComparison r;
  double wins = 0.0;
  for (std::size_t t = 0; t < stable.size(); ++t) {
    r.profit_unstable += unstable[t];
    r.profit_stable += stable[t];
    if (stable[t] > unstable[t]) {
      wins += 1.0;
    } else if (stable[t] == unstable[t]) {
      wins += 0.5;
    }
  }
  const double n = static_cast<double>(stable.size());
  r.profit_unstable /= n;
  r.profit_stable /= n;
  r.delta_pct = 100.0 * (r.profit_stable - r.profit_unstable) / r.profit_unstable;
  r.s_gt_u_pct = 100.0 * wins / n;
  return r;
}

constexpr std::array<Strategy, 3> kStrategies = {Strategy::OptimalMyopic, Strategy::Anticipation,
                                                 Strategy::Procrastination};

}  // namespace

ProfitComparison simulate_profit(std::span<const PeriodQuantiles> periods, Strategy strategy,
                                 double price, const QuantileGrid& grid, Accounting accounting) {
  if (periods.empty()) throw std::invalid_argument("no simulated periods");
  std::vector<double> stable, unstable;
  stable.reserve(periods.size());
  unstable.reserve(periods.size());
  for (const auto& pq : periods) {
    const auto costs = pq.draw.costs.with_price(price);
    stable.push_back(period_profit(strategy, pq.forecasts[0], grid, costs, pq.draw.demand, accounting));
    unstable.push_back(period_profit(strategy, pq.forecasts[1], grid, costs, pq.draw.demand, accounting));
  }
  return compare(unstable, stable);
}

ExperimentResult run_experiment(const DGPConfig& config, const ExperimentOptions& options) {
  config.validate();
  if (options.prices.empty()) throw std::invalid_argument("need at least one price");
  const QuantileGrid grid = QuantileGrid::midpoints(100);
  const std::size_t n = config.n_periods;
  const std::size_t n_prices = options.prices.size();
  const std::size_t per_period = n_prices * kStrategies.size() * 2;

  std::vector<PeriodMetrics> metrics(n);
  std::vector<double> profits(n * per_period);
  auto work = [&](std::size_t t) {
    const auto pq = simulate_period(config, t, grid);
    metrics[t] = period_metrics(pq, grid);
    double* out = &profits[t * per_period];
    for (std::size_t pi = 0; pi < n_prices; ++pi) {
      const auto costs = pq.draw.costs.with_price(options.prices[pi]);
      for (std::size_t s = 0; s < kStrategies.size(); ++s) {
        for (std::size_t k = 0; k < 2; ++k) {
          *out++ = period_profit(kStrategies[s], pq.forecasts[k], grid, costs, pq.draw.demand,
                                 options.accounting);
        }
      }
    }
  };

  std::size_t threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, n);
  if (threads == 1) {
    for (std::size_t t = 0; t < n; ++t) work(t);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < n; t += threads) work(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  ExperimentResult result;
  result.forecast_metrics = metrics_rows(metrics);
  std::vector<double> stable(n), unstable(n);
  for (std::size_t pi = 0; pi < n_prices; ++pi) {
    for (std::size_t s = 0; s < kStrategies.size(); ++s) {
      for (std::size_t t = 0; t < n; ++t) {
        const double* row = &profits[t * per_period + (pi * kStrategies.size() + s) * 2];
        stable[t] = row[0];
        unstable[t] = row[1];
      }
      result.profits.push_back({options.prices[pi], kStrategies[s], compare(unstable, stable)});
    }
  }
  return result;
}

}  // namespace stablesqf::newsvendor
