#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stablesqf/evaluation.hpp"
#include "stablesqf/metrics.hpp"
#include "stablesqf/newsvendor.hpp"

namespace stablesqf::io {

/// One row of `model,lambda,weight,sCRPS,sCRPS_c,sCRPS_t,sW1,sW1_c,sW1_t`.
/// Absent stability values are written as NA.
struct EvalRow {
  std::string model;
  double lambda = 0.0;
  std::string weight = "uniform";
  EvalReport report;
};

void write_eval_csv(std::ostream& out, std::span<const EvalRow> rows);
void write_eval_csv(const std::filesystem::path& path, std::span<const EvalRow> rows);

/// `series_id,origin,horizon,level,quantile`, one line per matrix entry.
void write_traces_csv(std::ostream& out, std::span<const ForecastTrace> traces,
                      const QuantileGrid& grid);
void write_traces_csv(const std::filesystem::path& path, std::span<const ForecastTrace> traces,
                      const QuantileGrid& grid);

/// Inverse of write_traces_csv. Levels must match `grid`; traces are
/// returned grouped by series (first appearance) and sorted by origin.
std::vector<ForecastTrace> read_traces_csv(std::istream& in, const QuantileGrid& grid);
std::vector<ForecastTrace> read_traces_csv(const std::filesystem::path& path,
                                           const QuantileGrid& grid);

/// `forecaster,origin,crps,w1_adjacent,w1_nonadjacent`, origin as t-3 etc.
void write_forecast_metrics_csv(std::ostream& out, std::span<const newsvendor::ForecastMetricsRow> rows);
/// `margin,strategy,profit_unstable,profit_stable,delta_pct,s_gt_u_pct`.
void write_profit_csv(std::ostream& out, std::span<const newsvendor::ProfitRow> rows);

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  std::string label;
  std::string series;
};

/// Minimal SVG scatter plot with axes, ticks and point labels. Points that
/// share `series` are joined by a line in input order.
std::string render_scatter_svg(std::span<const ScatterPoint> points, const std::string& x_label,
                               const std::string& y_label, const std::string& title);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace stablesqf::io
