#include <cmath>

#include <gtest/gtest.h>

#include "stablesqf/newsvendor.hpp"

using namespace stablesqf;
using namespace stablesqf::newsvendor;

namespace {

const QuantileGrid kGrid = QuantileGrid::midpoints(100);

// F^{-1}(a) = 100 a on the grid.
std::vector<double> linear_quantiles(double offset = 0.0) {
  std::vector<double> q;
  for (double a : kGrid.levels()) q.push_back(offset + 100.0 * a);
  return q;
}

CostStructure fixed_costs() { return CostStructure{}; }

DGPConfig small_dgp() {
  DGPConfig c;
  c.n_periods = 40;
  c.n_samples = 400;
  return c;
}

}  // namespace

TEST(Newsvendor, BiasPathsHalveAndFlip) {
  const auto s = bias_path(ForecasterKind::Stable, 8.0);
  const auto u = bias_path(ForecasterKind::Unstable, 8.0);
  EXPECT_EQ(s, (std::array<double, 3>{8, 4, 2}));
  EXPECT_EQ(u, (std::array<double, 3>{8, -4, 2}));
  const auto neg = bias_path(ForecasterKind::Unstable, -8.0);
  EXPECT_EQ(neg, (std::array<double, 3>{-8, 4, -2}));
}

TEST(Newsvendor, CostDrawsStayInRange) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto c = CostStructure::draw(10.0, rng);
    ASSERT_GE(c.base, 1.0);
    ASSERT_LT(c.base, 2.0);
    ASSERT_GE(c.expedite2, 0.2 * c.base);
    ASSERT_LE(c.expedite2, 0.3 * c.base);
    ASSERT_EQ(c.expedite1, 2.0 * c.expedite2);
    ASSERT_GE(c.cancel2, 0.3 * c.base);
    ASSERT_LE(c.cancel2, 0.5 * c.base);
    ASSERT_EQ(c.cancel1, 2.0 * c.cancel2);
  }
}

TEST(Newsvendor, InterpolatesAndClamps) {
  const auto q = linear_quantiles();
  EXPECT_NEAR(interpolate_quantile(q, kGrid, 0.85), 85.0, 1e-9);
  EXPECT_NEAR(interpolate_quantile(q, kGrid, 0.8125), 81.25, 1e-9);
  EXPECT_EQ(interpolate_quantile(q, kGrid, 0.001), q.front());
  EXPECT_EQ(interpolate_quantile(q, kGrid, 0.999), q.back());
  EXPECT_THROW(interpolate_quantile(std::vector<double>(3), kGrid, 0.5), std::invalid_argument);
}

TEST(Newsvendor, OptimalMyopicThresholds) {
  const auto q = linear_quantiles();
  const auto costs = fixed_costs();  // p 10, c 1.5, ce2 0.375, ce1 0.75, cc2 0.6, cc1 1.2
  OrderState st;
  EXPECT_NEAR(decide_orders(Strategy::OptimalMyopic, 3, q, kGrid, costs, st), 85.0, 1e-9);

  st.on_order = 85.0;
  st.unit_cost = 1.5;
  // Between the expedite level 0.8125 and the cancel level 0.91 nothing changes.
  EXPECT_EQ(decide_orders(Strategy::OptimalMyopic, 2, q, kGrid, costs, st), 0.0);
  st.on_order = 80.0;
  EXPECT_NEAR(decide_orders(Strategy::OptimalMyopic, 2, q, kGrid, costs, st), 1.25, 1e-9);
  st.on_order = 95.0;
  EXPECT_NEAR(decide_orders(Strategy::OptimalMyopic, 2, q, kGrid, costs, st), -4.0, 1e-9);

  // At t-1 the cancel level uses the average on-order cost: (10 - 1.5 + 1.2) / 10.
  EXPECT_EQ(decide_orders(Strategy::OptimalMyopic, 1, q, kGrid, costs, st), 0.0);
  st.on_order = 99.0;
  EXPECT_NEAR(decide_orders(Strategy::OptimalMyopic, 1, q, kGrid, costs, st), -2.0, 1e-9);
  st.unit_cost = 2.0;
  EXPECT_NEAR(decide_orders(Strategy::OptimalMyopic, 1, q, kGrid, costs, st), -7.0, 1e-9);
  EXPECT_THROW(decide_orders(Strategy::OptimalMyopic, 4, q, kGrid, costs, st), std::invalid_argument);
}

TEST(Newsvendor, AnticipationAndProcrastination) {
  const auto q = linear_quantiles();
  const auto costs = fixed_costs();
  OrderState st;
  EXPECT_NEAR(decide_orders(Strategy::Anticipation, 3, q, kGrid, costs, st), 50.0, 1e-9);
  st.on_order = 60.0;
  EXPECT_NEAR(decide_orders(Strategy::Anticipation, 2, q, kGrid, costs, st), -10.0, 1e-9);
  EXPECT_EQ(decide_orders(Strategy::Procrastination, 3, q, kGrid, costs, OrderState{}), 0.0);
  EXPECT_EQ(decide_orders(Strategy::Procrastination, 2, q, kGrid, costs, OrderState{}), 0.0);
  EXPECT_NEAR(decide_orders(Strategy::Procrastination, 1, q, kGrid, costs, OrderState{}), 77.5, 1e-9);
}

TEST(Newsvendor, OrderTargetsAreFlooredAtZero) {
  const auto q = linear_quantiles(-200.0);
  OrderState st;
  st.on_order = 5.0;
  st.unit_cost = 1.5;
  EXPECT_EQ(decide_orders(Strategy::OptimalMyopic, 3, q, kGrid, fixed_costs(), st), -5.0);
}

TEST(Newsvendor, BookkeepingVoidAndSunk) {
  const auto costs = fixed_costs();
  OrderState v;
  apply_adjustment(v, 10.0, 3, costs, Accounting::Void);
  apply_adjustment(v, 10.0, 2, costs, Accounting::Void);
  EXPECT_DOUBLE_EQ(v.paid, 15.0 + 18.75);
  EXPECT_DOUBLE_EQ(v.unit_cost, (15.0 + 18.75) / 20.0);
  OrderState s = v;
  apply_adjustment(v, -4.0, 1, costs, Accounting::Void);
  apply_adjustment(s, -4.0, 1, costs, Accounting::Sunk);
  EXPECT_DOUBLE_EQ(v.on_order, 16.0);
  EXPECT_DOUBLE_EQ(v.penalties, 4.8);
  EXPECT_DOUBLE_EQ(v.paid, 33.75 - 4.0 * 33.75 / 20.0);
  EXPECT_DOUBLE_EQ(s.paid, 33.75);
  EXPECT_DOUBLE_EQ(s.penalties, 4.8);
  EXPECT_DOUBLE_EQ(realized_profit(v, 10.0, 12.0), 120.0 - v.paid - 4.8);
  EXPECT_DOUBLE_EQ(realized_profit(v, 10.0, -3.0), -v.paid - 4.8);

  OrderState over;
  apply_adjustment(over, 3.0, 3, costs, Accounting::Void);
  apply_adjustment(over, -10.0, 2, costs, Accounting::Void);
  EXPECT_EQ(over.on_order, 0.0);
  EXPECT_DOUBLE_EQ(over.penalties, 3.0 * 0.6);
}

TEST(Newsvendor, OnOrderNeverNegativeAlongSimulation) {
  const auto periods = simulate_dgp(small_dgp(), kGrid);
  for (const auto& pq : periods) {
    for (auto strategy : {Strategy::OptimalMyopic, Strategy::Anticipation, Strategy::Procrastination}) {
      for (int kind = 0; kind < 2; ++kind) {
        OrderState st;
        const auto costs = pq.draw.costs.with_price(10.0);
        for (std::size_t o = 0; o < 3; ++o) {
          const int lag = kLags[o];
          apply_adjustment(st, decide_orders(strategy, lag, pq.forecasts[kind][o], kGrid, costs, st),
                           lag, costs, Accounting::Void);
          ASSERT_GE(st.on_order, 0.0);
        }
      }
    }
  }
}

TEST(Newsvendor, IdenticalForecastersTie) {
  auto periods = simulate_dgp(small_dgp(), kGrid);
  for (auto& pq : periods) pq.forecasts[1] = pq.forecasts[0];
  const auto r = simulate_profit(periods, Strategy::OptimalMyopic, 10.0, kGrid, Accounting::Void);
  EXPECT_EQ(r.profit_stable, r.profit_unstable);
  EXPECT_EQ(r.delta_pct, 0.0);
  EXPECT_EQ(r.s_gt_u_pct, 50.0);
}

TEST(Newsvendor, ForecastersShareTheFirstOrigin) {
  const auto pq = simulate_period(small_dgp(), 3, kGrid);
  EXPECT_EQ(pq.forecasts[0][0], pq.forecasts[1][0]);
  EXPECT_NE(pq.forecasts[0][1], pq.forecasts[1][1]);
  for (const auto& kind : pq.forecasts) {
    for (const auto& q : kind) EXPECT_TRUE(std::is_sorted(q.begin(), q.end()));
  }
}

TEST(Newsvendor, AverageCompositionMedianSitsHalfwayToTheBias) {
  auto cfg = small_dgp();
  cfg.n_samples = 40000;
  for (std::size_t t = 0; t < 5; ++t) {
    const auto pq = simulate_period(cfg, t, kGrid);
    const double median = interpolate_quantile(pq.forecasts[0][0], kGrid, 0.5);
    EXPECT_NEAR(median, pq.draw.mu + 0.5 * pq.draw.tau0, 0.1);
    EXPECT_EQ(std::abs(pq.draw.tau0), 8.0);
  }
}

TEST(Newsvendor, PeriodsAreOrderIndependent) {
  const auto cfg = small_dgp();
  const auto all = simulate_dgp(cfg, kGrid);
  const auto single = simulate_period(cfg, 17, kGrid);
  EXPECT_EQ(all[17].forecasts, single.forecasts);
  EXPECT_EQ(all[17].draw.demand, single.draw.demand);
}

TEST(Newsvendor, ResultsDoNotDependOnThreadCount) {
  const auto cfg = small_dgp();
  ExperimentOptions one, three;
  one.threads = 1;
  three.threads = 3;
  const auto a = run_experiment(cfg, one), b = run_experiment(cfg, three);
  ASSERT_EQ(a.forecast_metrics.size(), b.forecast_metrics.size());
  for (std::size_t i = 0; i < a.forecast_metrics.size(); ++i) EXPECT_EQ(a.forecast_metrics[i].crps, b.forecast_metrics[i].crps);
  ASSERT_EQ(a.profits.size(), 6u);
  for (std::size_t i = 0; i < a.profits.size(); ++i) {
    EXPECT_EQ(a.profits[i].result.profit_stable, b.profits[i].result.profit_stable);
    EXPECT_EQ(a.profits[i].result.s_gt_u_pct, b.profits[i].result.s_gt_u_pct);
  }
}

TEST(Newsvendor, ToyMetricsShape) {
  const auto periods = simulate_dgp(small_dgp(), kGrid);
  const auto rows = toy_metrics(periods, kGrid);
  ASSERT_EQ(rows.size(), 6u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.w1_adjacent.has_value(), r.lag != 3);
    EXPECT_EQ(r.w1_nonadjacent.has_value(), r.lag == 1);
    EXPECT_GT(r.crps, 0.0);
  }
}

TEST(Newsvendor, ParsesNames) {
  EXPECT_EQ(parse_composition("mixture"), Composition::Mixture);
  EXPECT_EQ(parse_accounting("sunk"), Accounting::Sunk);
  EXPECT_THROW(parse_composition("blend"), std::invalid_argument);
  EXPECT_EQ(to_string(Strategy::Procrastination), "procrastination");
  DGPConfig bad;
  bad.n_samples = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
