#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "stablesqf/metrics.hpp"

namespace stablesqf::newsvendor {

enum class ForecasterKind { Stable, Unstable };

/// How the truth law and the biased Gaussian combine into a forecast.
/// Average: F is the law of (Y + N(mu + tau, s)) / 2. Mixture: each sample
/// comes from either component with probability 1/2.
enum class Composition { Average, Mixture };

enum class Accounting {
  /// Cancelled units are refunded at the average on-order cost; only the
  /// penalty is paid.
  Void,
  /// Cancelled units stay paid for and the penalty comes on top.
  Sunk,
};

enum class Strategy { OptimalMyopic, Anticipation, Procrastination };

std::string_view to_string(ForecasterKind kind);
std::string_view to_string(Strategy strategy);
Composition parse_composition(std::string_view name);
Accounting parse_accounting(std::string_view name);

/// Lags are counted in periods before the target: index 0 is t-3, 1 is t-2
/// and 2 is t-1.
inline constexpr std::array<int, 3> kLags = {3, 2, 1};

struct DGPConfig {
  std::size_t n_periods = 10000;
  std::size_t n_samples = 10000;
  double mu_mean = 20.0;
  double mu_sd = 1.0;
  double noise_sd = 1.0;
  double tau0 = 8.0;
  std::array<double, 3> dispersions = {4.0, 2.5, 1.75};
  bool dispersion_is_variance = false;
  Composition composition = Composition::Average;
  std::uint64_t seed = 20240501;

  void validate() const;
};

/// Signed bias per lag: Stable keeps the sign while halving, Unstable flips it.
std::array<double, 3> bias_path(ForecasterKind kind, double tau0);

struct CostStructure {
  double price = 10.0;
  double base = 1.5;
  double expedite2 = 0.375;
  double expedite1 = 0.75;
  double cancel2 = 0.6;
  double cancel1 = 1.2;

  /// c ~ U(1, 2), c_e2 ~ U(0.2c, 0.3c), c_e1 = 2 c_e2, c_c2 ~ U(0.3c, 0.5c),
  /// c_c1 = 2 c_c2.
  static CostStructure draw(double price, std::mt19937_64& rng);
  CostStructure with_price(double p) const;
};

/// Shared random inputs of one period (common to both forecasters).
struct PeriodDraw {
  double mu = 0.0;
  double tau0 = 0.0;
  double demand = 0.0;
  CostStructure costs;
};

struct PeriodQuantiles {
  PeriodDraw draw;
  /// forecasts[kind][lag index] on the quantile grid.
  std::array<std::array<std::vector<double>, 3>, 2> forecasts;
};

/// Period `period` under per-period seeding, so periods can be simulated in
/// any order or in parallel.
PeriodQuantiles simulate_period(const DGPConfig& config, std::size_t period,
                                const QuantileGrid& grid);

std::vector<PeriodQuantiles> simulate_dgp(const DGPConfig& config, const QuantileGrid& grid);

struct ForecastMetricsRow {
  ForecasterKind kind = ForecasterKind::Stable;
  int lag = 3;
  double crps = 0.0;
  /// W1 against the previous origin (absent at t-3).
  std::optional<double> w1_adjacent;
  /// W1 between t-3 and t-1 (t-1 row only).
  std::optional<double> w1_nonadjacent;
};

/// Average unscaled CRPS per origin and W1 between origins.
std::vector<ForecastMetricsRow> toy_metrics(std::span<const PeriodQuantiles> periods,
                                   const QuantileGrid& grid);

struct OrderState {
  double on_order = 0.0;
  /// Weighted average unit cost of the units on order.
  double unit_cost = 0.0;
  double paid = 0.0;
  double penalties = 0.0;
};

/// F^{-1}(level) by linear interpolation between grid levels, with the level
/// clamped to the grid's range.
double interpolate_quantile(std::span<const double> quantiles, const QuantileGrid& grid,
                            double level);

/// Signed order change at `lag` (3, 2 or 1). Positive buys, negative cancels.
double decide_orders(Strategy strategy, int lag, std::span<const double> quantiles,
                     const QuantileGrid& grid, const CostStructure& costs,
                     const OrderState& state);

/// Books an order change: purchases at c (t-3), c + c_e2 (t-2) or c + c_e1
/// (t-1); cancellations pay c_c2 or c_c1 per unit.
void apply_adjustment(OrderState& state, double adjustment, int lag, const CostStructure& costs,
                      Accounting accounting);

/// p min(on-order, demand) - purchases - penalties.
double realized_profit(const OrderState& state, double price, double demand);

/// One period's profit for a strategy fed with the three origins' quantiles.
double period_profit(Strategy strategy, const std::array<std::vector<double>, 3>& quantiles,
                     const QuantileGrid& grid, const CostStructure& costs, double demand,
                     Accounting accounting);

struct ProfitComparison {
  double profit_unstable = 0.0;
  double profit_stable = 0.0;
  double delta_pct = 0.0;
  /// Share of periods in which Stable beats Unstable, ties counted as half.
  double s_gt_u_pct = 0.0;
};

ProfitComparison simulate_profit(std::span<const PeriodQuantiles> periods, Strategy strategy,
                                 double price, const QuantileGrid& grid, Accounting accounting);

struct ProfitRow {
  double price = 10.0;
  Strategy strategy = Strategy::OptimalMyopic;
  ProfitComparison result;
};

struct ExperimentResult {
  std::vector<ForecastMetricsRow> forecast_metrics;
  std::vector<ProfitRow> profits;
};

struct ExperimentOptions {
  std::vector<double> prices = {10.0, 5.0};
  Accounting accounting = Accounting::Void;
  /// Worker threads; 0 picks the hardware concurrency.
  std::size_t threads = 0;
};

/// Streams every period once, so memory stays flat at full scale. Results do
/// not depend on the thread count.
ExperimentResult run_experiment(const DGPConfig& config, const ExperimentOptions& options = {});

}  // namespace stablesqf::newsvendor
