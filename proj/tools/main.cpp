// stablesqf command-line front end.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "stablesqf/baselines.hpp"
#include "stablesqf/evaluation.hpp"
#include "stablesqf/io/checkpoint.hpp"
#include "stablesqf/io/config.hpp"
#include "stablesqf/io/dataset.hpp"
#include "stablesqf/io/pipeline.hpp"
#include "stablesqf/io/report.hpp"
#include "stablesqf/io/synthetic.hpp"
#include "stablesqf/newsvendor.hpp"
#include "stablesqf/stabilize.hpp"

namespace fs = std::filesystem;
using namespace stablesqf;

namespace {

struct CommonFlags {
  std::string data;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<std::string> weight;
  std::optional<std::size_t> origins;
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> iterations;
  std::size_t season = 12;
  bool desk = false;
  std::string out;
};

void add_data_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--data", f.data, "Dataset CSV (series_id,time_index,value)")->required();
  app->add_option("--season", f.season, "Seasonal period of every series")->capture_default_str();
}

void add_experiment_flags(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON experiment config");
  app->add_flag("--desk", f.desk, "Start from the small desk preset instead of the full defaults");
  app->add_option("--seed", f.seed, "Training seed");
  app->add_option("--lambda", f.lambda, "Instability weight in [0, 1]");
  app->add_option("--weight", f.weight, "Quantile weighting of the instability term")
      ->check(CLI::IsMember({"uniform", "center", "tail"}));
  app->add_option("--origins", f.origins, "Number of rolling evaluation origins");
  app->add_option("--horizon", f.horizon, "Forecast horizon h");
  app->add_option("--iterations", f.iterations, "Training iterations");
}

// Config file first, then flags on top.
io::ExperimentConfig resolve_config(const CommonFlags& f) {
  io::ExperimentConfig cfg = f.config.empty() ? (f.desk ? io::desk_preset() : io::ExperimentConfig{})
                                              : io::load_experiment_config(f.config);
  if (f.seed) cfg.train.seed = *f.seed;
  if (f.lambda) cfg.train.lambda = *f.lambda;
  if (f.weight) cfg.train.instability_weight = parse_weight_kind(*f.weight);
  if (f.origins) cfg.n_origins = *f.origins;
  if (f.horizon) cfg.model.horizon = *f.horizon;
  if (f.iterations) cfg.train.iterations = *f.iterations;
  cfg.validate();
  return cfg;
}

io::Dataset load_data(const CommonFlags& f) { return io::load_dataset(f.data, f.season); }

io::Region parse_region(const std::string& s) {
  if (s == "test") return io::Region::Test;
  if (s == "validation") return io::Region::Validation;
  throw std::invalid_argument("unknown region '" + s + "' (expected test or validation)");
}

std::vector<ForecastTrace> flatten(const std::vector<std::vector<ForecastTrace>>& grouped) {
  std::vector<ForecastTrace> out;
  for (const auto& g : grouped) out.insert(out.end(), g.begin(), g.end());
  return out;
}

void progress_printer(const LossRecord& r, std::size_t total) {
  if ((r.iteration + 1) % 100 == 0 || r.iteration + 1 == total) {
    std::cerr << "iter " << r.iteration + 1 << "/" << total << "  Q " << r.quality << "  S "
              << r.instability << "  total " << r.total << '\n';
  }
}

int cmd_gen_synthetic(const io::SyntheticSpec& spec, std::uint64_t seed, const std::string& out) {
  const auto data = io::gen_synthetic(spec, seed);
  io::save_dataset(out, data);
  double gap = 0.0;
  for (const auto& s : data.series) gap += io::aibnzo(s.values);
  std::cerr << "wrote " << data.series.size() << " series to " << out << " (mean AIBNZO "
            << gap / static_cast<double>(data.series.size()) << ")\n";
  return 0;
}

int cmd_train(const CommonFlags& f, bool quiet) {
  const auto data = load_data(f);
  const auto cfg = resolve_config(f);
  const auto ckpt = io::train_checkpoint(data, cfg, [&](const LossRecord& r) {
    if (!quiet) progress_printer(r, cfg.train.iterations);
  });
  io::save_checkpoint(f.out, ckpt);
  std::cerr << "checkpoint written to " << f.out << '\n';
  return 0;
}

struct EvalFlags {
  std::string checkpoint;
  std::string baseline;
  std::string traces;
  std::string traces_out;
  std::string region = "test";
  std::string label;
  std::size_t window = 48;
  std::size_t n_paths = 5000;
};

int cmd_evaluate(const CommonFlags& f, const EvalFlags& e) {
  const auto data = load_data(f);
  const auto grid = QuantileGrid::midpoints(100);
  const int sources = !e.checkpoint.empty() + !e.baseline.empty() + !e.traces.empty();
  if (sources != 1) throw std::invalid_argument("give exactly one of --checkpoint, --baseline, --traces");

  io::EvalRow row;
  std::vector<std::vector<ForecastTrace>> traces;
  io::RegionSpec spec{parse_region(e.region), f.origins.value_or(13), f.horizon.value_or(6)};
  if (!e.checkpoint.empty()) {
    const auto ckpt = io::load_checkpoint(e.checkpoint);
    if (ckpt.series_ids.size() != data.series.size()) {
      throw std::invalid_argument("checkpoint was trained on a different dataset");
    }
    for (std::size_t j = 0; j < data.series.size(); ++j) {
      if (ckpt.series_ids[j] != data.series[j].id) {
        throw std::invalid_argument("checkpoint series '" + ckpt.series_ids[j] +
                                    "' does not match dataset series '" + data.series[j].id + "'");
      }
    }
    spec.horizon = ckpt.config.model.horizon;
    spec.n_origins = f.origins.value_or(ckpt.config.n_origins);
    const auto model = ckpt.model();
    traces = io::panel_forecasts(data, io::model_forecasters(model, ckpt, grid), spec, grid);
    row.model = "sqf";
    row.lambda = ckpt.config.train.lambda;
    row.weight = std::string(to_string(ckpt.config.train.instability_weight));
  } else if (!e.baseline.empty()) {
    BaselineConfig b;
    b.method = parse_baseline_method(e.baseline);
    b.window_len = e.window;
    b.n_paths = e.n_paths;
    b.seed = f.seed.value_or(0);
    traces = io::panel_forecasts(data, io::baseline_forecasters(data, b, spec, grid), spec, grid);
    row.model = e.baseline;
  } else {
    traces = io::group_traces(data, io::read_traces_csv(e.traces, grid));
    spec.horizon = static_cast<std::size_t>(traces.front().front().quantiles.rows());
    spec.n_origins = traces.front().size();
    row.model = "traces";
  }
  if (!e.label.empty()) row.model = e.label;
  row.report = io::evaluate_panel(data, traces, spec, grid);
  if (!e.traces_out.empty()) io::write_traces_csv(e.traces_out, flatten(traces), grid);
  io::write_eval_csv(f.out, std::span(&row, 1));
  io::write_eval_csv(std::cout, std::span(&row, 1));
  return 0;
}

int cmd_forecast(const CommonFlags& f, const std::string& checkpoint, const std::string& series,
                 std::optional<std::size_t> origin) {
  const auto data = load_data(f);
  const auto ckpt = io::load_checkpoint(checkpoint);
  const auto model = ckpt.model();
  const auto grid = QuantileGrid::midpoints(100);
  std::vector<ForecastTrace> traces;
  for (std::size_t j = 0; j < data.series.size(); ++j) {
    const auto& s = data.series[j];
    if (!series.empty() && s.id != series) continue;
    const auto idx = std::find(ckpt.series_ids.begin(), ckpt.series_ids.end(), s.id);
    if (idx == ckpt.series_ids.end()) throw std::invalid_argument("series " + s.id + " not in checkpoint");
    const auto stats = ckpt.stats[static_cast<std::size_t>(idx - ckpt.series_ids.begin())];
    const std::size_t t = origin.value_or(s.values.size() - 1);
    if (t >= s.values.size()) throw std::invalid_argument("origin beyond the end of series " + s.id);
    const auto fc = sqf_forecaster(model, stats, grid, true);
    traces.push_back({s.id, t, fc(std::span(s.values).first(t + 1))});
  }
  if (traces.empty()) throw std::invalid_argument("no series matched '" + series + "'");
  if (f.out.empty() || f.out == "-") {
    io::write_traces_csv(std::cout, traces, grid);
  } else {
    io::write_traces_csv(f.out, traces, grid);
  }
  return 0;
}

int cmd_stabilize(const std::string& in, const std::string& scheme, double ws, const std::string& out) {
  const auto grid = QuantileGrid::midpoints(100);
  const auto traces = io::read_traces_csv(in, grid);
  const StabilizeConfig cfg{parse_stabilize_scheme(scheme), ws};
  std::vector<ForecastTrace> result;
  std::size_t start = 0;
  for (std::size_t j = 1; j <= traces.size(); ++j) {
    if (j == traces.size() || traces[j].series_id != traces[start].series_id) {
      const auto part = stabilize_traces(std::span(traces).subspan(start, j - start), cfg);
      result.insert(result.end(), part.begin(), part.end());
      start = j;
    }
  }
  io::write_traces_csv(out, result, grid);
  return 0;
}

struct NewsvendorFlags {
  newsvendor::DGPConfig dgp;
  std::string composition = "average";
  std::string accounting = "void";
  std::size_t threads = 0;
  std::string out = ".";
};

int cmd_newsvendor(NewsvendorFlags n) {
  n.dgp.composition = newsvendor::parse_composition(n.composition);
  newsvendor::ExperimentOptions opt;
  opt.accounting = newsvendor::parse_accounting(n.accounting);
  opt.threads = n.threads;
  const auto result = newsvendor::run_experiment(n.dgp, opt);
  fs::create_directories(n.out);
  std::ofstream t2(fs::path(n.out) / "forecast_metrics.csv", std::ios::binary);
  std::ofstream t3(fs::path(n.out) / "profits.csv", std::ios::binary);
  io::write_forecast_metrics_csv(t2, result.forecast_metrics);
  io::write_profit_csv(t3, result.profits);
  io::write_forecast_metrics_csv(std::cout, result.forecast_metrics);
  io::write_profit_csv(std::cout, result.profits);
  return 0;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad grid value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty grid");
  return out;
}

int cmd_pareto(const CommonFlags& f, const std::string& lambdas, const std::string& ws_grid,
               const std::string& scheme) {
  const auto data = load_data(f);
  const auto base = resolve_config(f);
  const auto grid = QuantileGrid::midpoints(100);
  const io::RegionSpec spec{io::Region::Test, base.n_origins, base.model.horizon};
  fs::create_directories(f.out);

  std::vector<io::EvalRow> rows;
  std::vector<io::ScatterPoint> points;
  std::vector<std::vector<ForecastTrace>> unpenalized;
  for (double lambda : parse_grid(lambdas)) {
    auto cfg = base;
    cfg.train.lambda = lambda;
    const auto ckpt = io::train_checkpoint(data, cfg);
    const auto model = ckpt.model();
    auto traces = io::panel_forecasts(data, io::model_forecasters(model, ckpt, grid), spec, grid);
    io::EvalRow row{"sqf", lambda, std::string(to_string(cfg.train.instability_weight)),
                    io::evaluate_panel(data, traces, spec, grid)};
    std::cerr << "lambda " << lambda << ": sCRPS " << row.report.scrps << " sW1 "
              << row.report.sw1.value_or(0.0) << '\n';
    points.push_back({row.report.sw1.value_or(0.0), row.report.scrps,
                      "λ=" + io::format_number(lambda), "StableSQF"});
    rows.push_back(std::move(row));
    if (lambda == 0.0) unpenalized = std::move(traces);
  }
  if (!ws_grid.empty()) {
    if (unpenalized.empty()) throw std::invalid_argument("stabilizer sweep needs lambda 0 in the grid");
    const auto sch = parse_stabilize_scheme(scheme);
    for (double ws : parse_grid(ws_grid)) {
      std::vector<std::vector<ForecastTrace>> stab;
      for (const auto& t : unpenalized) stab.push_back(stabilize_traces(t, {sch, ws}));
      io::EvalRow row{"sqf-stabilized-" + std::string(to_string(sch)) + "-ws" + io::format_number(ws),
                      0.0, "uniform", io::evaluate_panel(data, stab, spec, grid)};
      points.push_back({row.report.sw1.value_or(0.0), row.report.scrps,
                        "w=" + io::format_number(ws), "stabilized-" + std::string(to_string(sch))});
      rows.push_back(std::move(row));
    }
  }
  io::write_eval_csv(fs::path(f.out) / "frontier.csv", rows);
  io::write_text(fs::path(f.out) / "frontier.svg",
                 io::render_scatter_svg(points, "sW1 (instability)", "sCRPS (quality)",
                                        "Quality versus stability"));
  io::write_eval_csv(std::cout, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stable spline quantile forecasting: training, evaluation and simulation"};
  app.require_subcommand(1);
  CommonFlags common;

  io::SyntheticSpec synth;
  std::uint64_t synth_seed = 1;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a seeded synthetic panel");
  gen->add_option("--series", synth.n_series)->capture_default_str();
  gen->add_option("--length", synth.length)->capture_default_str();
  gen->add_option("--season", synth.season)->capture_default_str();
  gen->add_option("--zero-inflation", synth.zero_inflation)->capture_default_str();
  gen->add_option("--seed", synth_seed)->capture_default_str();
  gen->add_option("--out", common.out, "Output CSV")->required();

  bool quiet = false;
  auto* tr = app.add_subcommand("train", "Fit a model and write a checkpoint");
  add_data_flags(tr, common);
  add_experiment_flags(tr, common);
  tr->add_flag("--quiet", quiet, "Suppress the loss trace");
  tr->add_option("--out", common.out, "Checkpoint path (a .json sidecar is written next to it)")
      ->required();

  EvalFlags ev;
  auto* evc = app.add_subcommand("evaluate", "Rolling-origin evaluation of a model, baseline or traces");
  add_data_flags(evc, common);
  evc->add_option("--checkpoint", ev.checkpoint);
  evc->add_option("--baseline", ev.baseline)
      ->check(CLI::IsMember({"mean-g", "mean-b", "snaive-g", "snaive-b"}));
  evc->add_option("--traces", ev.traces, "Traces CSV, e.g. from stabilize");
  evc->add_option("--origins", common.origins);
  evc->add_option("--horizon", common.horizon);
  evc->add_option("--seed", common.seed, "Bootstrap seed");
  evc->add_option("--region", ev.region)->check(CLI::IsMember({"test", "validation"}))->capture_default_str();
  evc->add_option("--window", ev.window, "Mean baseline window")->capture_default_str();
  evc->add_option("--paths", ev.n_paths, "Bootstrap paths")->capture_default_str();
  evc->add_option("--label", ev.label, "Model name in the report");
  evc->add_option("--traces-out", ev.traces_out, "Also write the forecast traces");
  evc->add_option("--out", common.out, "Report CSV")->required();

  std::string fc_ckpt, fc_series;
  std::optional<std::size_t> fc_origin;
  auto* fc = app.add_subcommand("forecast", "Quantile forecasts from a checkpoint");
  add_data_flags(fc, common);
  fc->add_option("--checkpoint", fc_ckpt)->required();
  fc->add_option("--series", fc_series, "Only this series id");
  fc->add_option("--origin", fc_origin, "Origin index (default: last observation)");
  fc->add_option("--out", common.out, "Traces CSV (default: stdout)");

  std::string st_in, st_scheme = "partial";
  double st_ws = 0.5;
  auto* st = app.add_subcommand("stabilize", "Interpolate stored traces with earlier origins");
  st->add_option("--traces", st_in)->required();
  st->add_option("--scheme", st_scheme)->check(CLI::IsMember({"partial", "full", "mean"}))->capture_default_str();
  st->add_option("--ws", st_ws, "Strength in [0, 1]")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  st->add_option("--out", common.out)->required();

  NewsvendorFlags nv;
  auto* nvc = app.add_subcommand("newsvendor", "Simulate the stable/unstable ordering experiment");
  nvc->add_option("--periods", nv.dgp.n_periods)->capture_default_str();
  nvc->add_option("--samples", nv.dgp.n_samples)->capture_default_str();
  nvc->add_option("--seed", nv.dgp.seed)->capture_default_str();
  nvc->add_option("--composition", nv.composition)->check(CLI::IsMember({"average", "mixture"}))->capture_default_str();
  nvc->add_flag("--variance", nv.dgp.dispersion_is_variance, "Read dispersions as variances");
  nvc->add_option("--accounting", nv.accounting)->check(CLI::IsMember({"void", "sunk"}))->capture_default_str();
  nvc->add_option("--threads", nv.threads, "Worker threads (0 = all cores)")->capture_default_str();
  nvc->add_option("--out", nv.out, "Output directory for forecast_metrics.csv and profits.csv")->capture_default_str();

  std::string lambdas = "0,0.25,0.5", ws_grid, pa_scheme = "full";
  auto* pa = app.add_subcommand("pareto", "Sweep lambda (and optionally w_s) and write a frontier");
  add_data_flags(pa, common);
  add_experiment_flags(pa, common);
  pa->add_option("--lambdas", lambdas, "Comma-separated lambda grid")->capture_default_str();
  pa->add_option("--ws-grid", ws_grid, "Comma-separated stabilizer strengths");
  pa->add_option("--scheme", pa_scheme)->check(CLI::IsMember({"partial", "full", "mean"}))->capture_default_str();
  pa->add_option("--out", common.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen->parsed()) return cmd_gen_synthetic(synth, synth_seed, common.out);
    if (tr->parsed()) return cmd_train(common, quiet);
    if (evc->parsed()) return cmd_evaluate(common, ev);
    if (fc->parsed()) return cmd_forecast(common, fc_ckpt, fc_series, fc_origin);
    if (st->parsed()) return cmd_stabilize(st_in, st_scheme, st_ws, common.out);
    if (nvc->parsed()) return cmd_newsvendor(nv);
    if (pa->parsed()) return cmd_pareto(common, lambdas, ws_grid, pa_scheme);
  } catch (const std::exception& e) {
    std::cerr << "stablesqf: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
