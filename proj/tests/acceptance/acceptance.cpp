// One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stablesqf/baselines.hpp"
#include "stablesqf/evaluation.hpp"
#include "stablesqf/io/checkpoint.hpp"
#include "stablesqf/io/pipeline.hpp"
#include "stablesqf/io/synthetic.hpp"
#include "stablesqf/metrics.hpp"
#include "stablesqf/newsvendor.hpp"
#include "stablesqf/stabilize.hpp"
#include "stablesqf/training.hpp"

using namespace stablesqf;
namespace nv = stablesqf::newsvendor;

namespace {

// Newsvendor: full scale, relative tolerance on the toy metrics.
constexpr std::size_t kPeriods = 10000;
constexpr std::size_t kSamples = 10000;
constexpr double kToyTol = 0.02;
constexpr double kWinShareTol = 5.0;
constexpr double kTieShareTol = 3.0;

// Gradient check.
constexpr std::size_t kMinProbes = 200;
constexpr double kGradTol = 1e-4;

// Lambda trade-off on the synthetic panel.
constexpr std::uint64_t kPanelSeed = 7;
constexpr std::size_t kPanelSeries = 200;
constexpr std::size_t kPanelLength = 120;
constexpr double kCrpsNoiseBand = 0.01;
constexpr double kMinReductionAtQuarter = 0.20;
constexpr double kMatchedDegradation = 0.025;

// Metric and structural checks.
constexpr double kIdentityCrpsTol = 1e-3;
constexpr double kTriangleTol = 1e-12;
constexpr std::size_t kParamDraws = 10000;
constexpr double kTelescopeTol = 1e-10;
constexpr double kAdditivityTol = 1e-12;

// Printed in criterion order once everything has run.
std::map<int, std::string> lines;
int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  lines[id] = "CRITERION " + std::to_string(id) + (pass ? " PASS: " : " FAIL: ") + detail;
  std::fprintf(stderr, "%s\n", lines[id].c_str());
  if (!pass) ++failures;
}

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

bool within_rel(double got, double want, double tol) { return std::abs(got - want) <= tol * std::abs(want); }

void log(const std::string& msg) {
  std::fprintf(stderr, "%s\n", msg.c_str());
  std::fflush(stderr);
}

// ---------------------------------------------------------------- newsvendor

void newsvendor_criteria() {
  const auto t0 = std::chrono::steady_clock::now();
  nv::DGPConfig cfg;
  cfg.n_periods = kPeriods;
  cfg.n_samples = kSamples;
  const auto result = nv::run_experiment(cfg);
  log("newsvendor: " + fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1) + " s");

  // Reference values per forecaster and origin: crps, adjacent W1, non-adjacent W1.
  struct Want {
    double crps;
    double adjacent;
    double nonadjacent;
  };
  const std::map<std::pair<nv::ForecasterKind, int>, Want> want = {
      {{nv::ForecasterKind::Stable, 3}, {2.91, 0, 0}},   {{nv::ForecasterKind::Stable, 2}, {1.43, 2.0, 0}},
      {{nv::ForecasterKind::Stable, 1}, {0.83, 1.0, 3.0}}, {{nv::ForecasterKind::Unstable, 3}, {2.91, 0, 0}},
      {{nv::ForecasterKind::Unstable, 2}, {1.44, 6.0, 0}}, {{nv::ForecasterKind::Unstable, 1}, {0.83, 3.0, 3.0}},
  };
  bool ok = result.forecast_metrics.size() == 6;
  std::string detail;
  for (const auto& row : result.forecast_metrics) {
    const auto& w = want.at({row.kind, row.lag});
    bool row_ok = within_rel(row.crps, w.crps, kToyTol);
    if (row.w1_adjacent) row_ok = row_ok && within_rel(*row.w1_adjacent, w.adjacent, kToyTol);
    if (row.w1_nonadjacent) row_ok = row_ok && within_rel(*row.w1_nonadjacent, w.nonadjacent, kToyTol);
    ok = ok && row_ok;
    detail += std::string(nv::to_string(row.kind)) + " t-" + std::to_string(row.lag) + " crps " + fmt(row.crps, 3);
    if (row.w1_adjacent) detail += " w1 " + fmt(*row.w1_adjacent, 3);
    if (row.w1_nonadjacent) detail += " w1n " + fmt(*row.w1_nonadjacent, 3);
    detail += row_ok ? "; " : " (off); ";
  }
  report(1, ok, detail + "tol " + fmt(100 * kToyTol, 0) + "%");

  // Reference S>U shares per margin and strategy.
  const std::map<std::pair<double, nv::Strategy>, double> share = {
      {{10.0, nv::Strategy::OptimalMyopic}, 81.29}, {{10.0, nv::Strategy::Anticipation}, 76.95},
      {{10.0, nv::Strategy::Procrastination}, 50.36}, {{5.0, nv::Strategy::OptimalMyopic}, 79.67},
      {{5.0, nv::Strategy::Anticipation}, 76.22}, {{5.0, nv::Strategy::Procrastination}, 49.90},
  };
  ok = result.profits.size() == 6;
  detail.clear();
  for (const auto& row : result.profits) {
    const auto& r = row.result;
    bool row_ok;
    if (row.strategy == nv::Strategy::Procrastination) {
      row_ok = r.delta_pct == 0.0 && r.profit_stable == r.profit_unstable &&
               std::abs(r.s_gt_u_pct - 50.0) <= kTieShareTol;
    } else {
      row_ok = r.profit_stable >= r.profit_unstable &&
               std::abs(r.s_gt_u_pct - share.at({row.price, row.strategy})) <= kWinShareTol;
    }
    ok = ok && row_ok;
    detail += "p=" + fmt(row.price, 0) + " " + std::string(nv::to_string(row.strategy)) + " U " +
              fmt(r.profit_unstable, 2) + " S " + fmt(r.profit_stable, 2) + " d% " + fmt(r.delta_pct, 2) +
              " S>U " + fmt(r.s_gt_u_pct, 2) + (row_ok ? "; " : " (off); ");
  }
  report(2, ok, detail);
}

// -------------------------------------------------------------- grad check

void gradient_criterion() {
  SQFConfig model;
  model.lookback = 8;
  model.horizon = 3;
  model.n_blocks = 2;
  model.hidden_width = 8;
  model.knots = make_uniform_knots(5);

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd;
  std::vector<TrainingSample> batch(6);
  for (auto& s : batch) {
    for (auto* w : {&s.lookback, &s.lagged_lookback}) {
      w->resize(8);
      for (auto& v : *w) v = nd(rng);
    }
    for (auto* w : {&s.targets, &s.lagged_targets}) {
      w->resize(3);
      for (auto& v : *w) v = nd(rng);
    }
  }
  const SQFModel init(model, 99);

  bool ok = true;
  std::string detail;
  for (auto weight : {WeightKind::Uniform, WeightKind::Center, WeightKind::Tail}) {
    TrainConfig tc;
    tc.lambda = 0.5;
    tc.wasserstein_order = 1.0;
    tc.instability_weight = weight;
    const CompositeLoss loss(model, tc);
    const nn::Objective obj = [&](std::span<const double> theta, std::vector<double>* g) {
      const SQFModel probe(model, std::vector<double>(theta.begin(), theta.end()));
      return loss(probe, batch, g).total;
    };
    const auto r = nn::grad_check(obj, init.params().values(), 400);
    const bool pass = r.probes >= kMinProbes && r.max_rel_error < kGradTol;
    ok = ok && pass;
    detail += std::string(to_string(weight)) + " max rel " + sci(r.max_rel_error) + " over " +
              std::to_string(r.probes) + " probes (" + std::to_string(r.redrawn) + " kink-adjacent skipped); ";
  }
  report(4, ok, detail + "tol 1e-4");
}

// ------------------------------------------------------------ lambda grid

struct RunResult {
  double lambda = 0.0;
  EvalReport report;
};

double sw1(const EvalReport& r) { return r.sw1.value_or(NAN); }
double sw1_t(const EvalReport& r) { return r.sw1_t.value_or(NAN); }

// sW1_t at the point where sCRPS first reaches (1 + degradation) times the
// lambda = 0 value, linearly interpolated between grid neighbours.
std::optional<double> matched_reduction(const std::vector<RunResult>& runs, double degradation) {
  const double base = runs.front().report.scrps;
  const double target = base * (1.0 + degradation);
  for (std::size_t k = 1; k < runs.size(); ++k) {
    const auto& a = runs[k - 1].report;
    const auto& b = runs[k].report;
    if (b.scrps >= target && a.scrps < target) {
      const double f = (target - a.scrps) / (b.scrps - a.scrps);
      const double at = sw1_t(a) + f * (sw1_t(b) - sw1_t(a));
      return 1.0 - at / sw1_t(runs.front().report);
    }
  }
  return std::nullopt;
}

void panel_criteria() {
  io::SyntheticSpec spec;
  spec.n_series = kPanelSeries;
  spec.length = kPanelLength;
  const auto data = io::gen_synthetic(spec, kPanelSeed);
  const auto grid = QuantileGrid::midpoints(100);
  auto cfg = io::desk_preset();
  const io::RegionSpec region{io::Region::Test, cfg.n_origins, cfg.model.horizon};

  // Criterion 9 on the same panel: h = 6 <= m = 12.
  {
    BaselineConfig b;
    b.method = BaselineMethod::SnaiveG;
    const auto traces = io::panel_forecasts(data, io::baseline_forecasters(data, b, region, grid), region, grid);
    const auto r = io::evaluate_panel(data, traces, region, grid);
    const bool pass = r.sw1 && *r.sw1 == 0.0 && *r.sw1_c == 0.0 && *r.sw1_t == 0.0;
    report(9, pass, "snaive-g on " + std::to_string(kPanelSeries) + " series, h=6, m=12: sCRPS " + fmt(r.scrps) +
                        " sW1 " + fmt(sw1(r), 6) + " over " + std::to_string(r.n_w1_terms) + " pairs");
  }

  std::optional<std::vector<std::vector<ForecastTrace>>> raw_traces;
  auto run = [&](double lambda, WeightKind weight) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.train.lambda = lambda;
    cfg.train.instability_weight = weight;
    const auto ckpt = io::train_checkpoint(data, cfg);
    const auto model = ckpt.model();
    auto traces = io::panel_forecasts(data, io::model_forecasters(model, ckpt, grid), region, grid);
    RunResult r{lambda, io::evaluate_panel(data, traces, region, grid)};
    if (lambda == 0.0 && !raw_traces) raw_traces = std::move(traces);
    log(std::string(to_string(weight)) + " lambda " + fmt(lambda, 2) + ": sCRPS " + fmt(r.report.scrps) + " sW1 " +
        fmt(sw1(r.report)) + " sW1_t " + fmt(sw1_t(r.report)) + " (" +
        fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1) + " s)");
    return r;
  };

  std::vector<RunResult> uniform;
  for (double l : {0.0, 0.1, 0.15, 0.25, 0.5, 0.75}) uniform.push_back(run(l, WeightKind::Uniform));

  // Criterion 3 on the unpenalized model's test traces.
  {
    std::vector<std::vector<ForecastTrace>> stable;
    for (const auto& t : *raw_traces) stable.push_back(stabilize_traces(t, {StabilizeScheme::Full, 1.0}));
    const auto before = io::evaluate_panel(data, *raw_traces, region, grid);
    const auto after = io::evaluate_panel(data, stable, region, grid);
    const bool pass = after.sw1 && *after.sw1 == 0.0 && *after.sw1_c == 0.0 && *after.sw1_t == 0.0;
    report(3, pass, "full w_s=1: sW1 " + fmt(sw1(before)) + " -> " + fmt(sw1(after), 6) + ", sW1_c -> " +
                        fmt(after.sw1_c.value_or(NAN), 6) + ", sW1_t -> " + fmt(sw1_t(after), 6) + "; sCRPS " +
                        fmt(before.scrps) + " -> " + fmt(after.scrps));
  }

  // Criterion 5 on the grid {0, 0.1, 0.25, 0.5, 0.75}.
  {
    std::vector<RunResult> grid5;
    for (const auto& r : uniform) {
      if (r.lambda != 0.15) grid5.push_back(r);
    }
    bool decreasing = true, crps_ok = true;
    std::string detail;
    for (std::size_t k = 0; k < grid5.size(); ++k) {
      detail += "l=" + fmt(grid5[k].lambda, 2) + " sCRPS " + fmt(grid5[k].report.scrps) + " sW1 " +
                fmt(sw1(grid5[k].report)) + "; ";
      if (k == 0) continue;
      decreasing = decreasing && sw1(grid5[k].report) < sw1(grid5[k - 1].report);
      crps_ok = crps_ok && grid5[k].report.scrps >= grid5[k - 1].report.scrps * (1.0 - kCrpsNoiseBand);
    }
    const double cut = 1.0 - sw1(grid5[2].report) / sw1(grid5[0].report);
    const bool pass = decreasing && crps_ok && cut >= kMinReductionAtQuarter;
    report(5, pass, detail + "spearman " + std::string(decreasing ? "-1" : "> -1") + ", sW1 cut at 0.25 " +
                        fmt(100 * cut, 1) + "%");
  }

  // Criterion 6: tail and center grids share the lambda = 0 run.
  {
    std::vector<RunResult> tail = {uniform.front()}, center = {uniform.front()};
    for (double l : {0.25, 0.35, 0.5}) tail.push_back(run(l, WeightKind::Tail));
    for (double l : {0.5, 0.6, 0.75}) center.push_back(run(l, WeightKind::Center));
    const auto ru = matched_reduction(uniform, kMatchedDegradation);
    const auto rt = matched_reduction(tail, kMatchedDegradation);
    const auto rc = matched_reduction(center, kMatchedDegradation);
    auto show = [](const std::optional<double>& r) { return r ? fmt(100 * *r, 1) + "%" : std::string("not reached"); };
    const bool pass = ru && rt && rc && *rt > *rc && *rc < *ru;
    report(6, pass, "sW1_t reduction at +2.5% sCRPS: tail " + show(rt) + ", uniform " + show(ru) + ", center " +
                        show(rc));
  }
}

// ------------------------------------------------------------------ metrics

void metric_criterion() {
  const auto grid = QuantileGrid::midpoints(100);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::vector<double> identity(grid.levels().begin(), grid.levels().end());
  const double crps = crps_discrete(identity, 0.5, grid);
  const bool crps_ok = std::abs(crps - 1.0 / 12.0) <= kIdentityCrpsTol;

  auto random_qf = [&] {
    std::vector<double> q(grid.size());
    double v = 3.0 * nd(rng);
    for (auto& x : q) x = (v += std::abs(nd(rng)));
    return q;
  };
  bool symmetric = true;
  double worst_triangle = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_qf(), b = random_qf(), c = random_qf();
    for (auto w : {WeightKind::Uniform, WeightKind::Center, WeightKind::Tail}) {
      const WeightFunction v{w};
      const double ab = wasserstein_discrete(a, b, grid, 1.0, v);
      symmetric = symmetric && ab == wasserstein_discrete(b, a, grid, 1.0, v);
      const double ac = wasserstein_discrete(a, c, grid, 1.0, v);
      const double cb = wasserstein_discrete(c, b, grid, 1.0, v);
      worst_triangle = std::max(worst_triangle, ab - (ac + cb));
    }
  }
  const bool identity_ok = wasserstein_discrete(identity, identity, grid) == 0.0;

  double min_qs = 0.0;
  std::size_t n_qs = 0;
  for (int i = 0; i < 200000; ++i) {
    const double a = std::clamp(unit(rng), 1e-9, 1.0 - 1e-9);
    const double q = 10.0 * nd(rng), y = i % 7 == 0 ? q : 10.0 * nd(rng);
    min_qs = std::min(min_qs, quantile_score(q, y, a));
    ++n_qs;
  }
  for (double a : grid.levels()) {
    for (int q = -5; q <= 5; ++q) {
      for (int y = -5; y <= 5; ++y) {
        min_qs = std::min(min_qs, quantile_score(q, y, a));
        ++n_qs;
      }
    }
  }
  const bool pass = crps_ok && symmetric && identity_ok && worst_triangle <= kTriangleTol && min_qs >= 0.0;
  report(7, pass, "identity CRPS vs 0.5 = " + fmt(crps, 6) + " (1/12 = " + fmt(1.0 / 12.0, 6) + "); W1 symmetric " +
                      (symmetric ? "exact" : "broken") + ", worst triangle excess " + sci(worst_triangle) +
                      " over 3000 triples; min QS " + fmt(min_qs, 3) + " over " + std::to_string(n_qs) + " cases");
}

// --------------------------------------------------------------- structure

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

bool reports_equal(const EvalReport& a, const EvalReport& b) {
  return a.scrps == b.scrps && a.scrps_c == b.scrps_c && a.scrps_t == b.scrps_t && a.sw1 == b.sw1 &&
         a.sw1_c == b.sw1_c && a.sw1_t == b.sw1_t && a.scrps_by_horizon == b.scrps_by_horizon &&
         a.sw1_by_origin == b.sw1_by_origin;
}

void structure_criterion() {
  SQFConfig model;
  model.lookback = 12;
  model.horizon = 4;
  model.n_blocks = 3;
  model.hidden_width = 8;
  const auto grid = QuantileGrid::midpoints(100);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> scale_dist(0.1, 3.0);

  // Crossing, telescoping and additivity over random parameter draws.
  std::size_t crossings = 0;
  double telescope = 0.0, additivity = 0.0;
  const std::size_t n_params = SQFModel::make_layout(model).size();
  std::vector<double> theta(n_params);
  for (std::size_t d = 0; d < kParamDraws; ++d) {
    const double s = scale_dist(rng);
    for (auto& v : theta) v = s * nd(rng);
    const SQFModel m(model, theta);
    std::vector<double> x(model.lookback);
    for (auto& v : x) v = 2.0 * nd(rng);
    const auto q = forecast_quantiles(m, x, grid, false, Standardization{nd(rng), scale_dist(rng)});
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      for (Eigen::Index k = 1; k < q.cols(); ++k) crossings += q(i, k) < q(i, k - 1);
    }
    if (d % 10 != 0) continue;
    const nn::Matrix in = Eigen::Map<const nn::Matrix>(x.data(), static_cast<Eigen::Index>(x.size()), 1);
    const auto pass = m.forward(in);
    // Rounding error scales with the operands, so the identity is measured
    // relative to the input plus every backcast.
    nn::Matrix backs = nn::Matrix::Zero(in.rows(), 1);
    double operand = std::max(1.0, in.cwiseAbs().maxCoeff());
    for (const auto& rec : pass.blocks) {
      backs += pass.tape.output(rec.backcast);
      operand += pass.tape.output(rec.backcast).cwiseAbs().maxCoeff();
    }
    telescope = std::max(telescope, (pass.residual - (in - backs)).cwiseAbs().maxCoeff() / operand);
    auto residual = x;
    std::vector<SplineQF> sum;
    for (std::size_t k = 0; k < model.n_blocks; ++k) {
      const auto out = m.block_forward(k, residual);
      if (sum.empty()) {
        sum = out.partials;
      } else {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = sum[i] + out.partials[i];
      }
      for (std::size_t t = 0; t < residual.size(); ++t) residual[t] -= out.backcast[t];
    }
    const auto total = m.forward(x);
    for (std::size_t i = 0; i < total.size(); ++i) {
      for (double a : grid.levels()) {
        const double ref = std::max(1.0, std::abs(total[i](a)));
        additivity = std::max(additivity, std::abs(sum[i](a) - total[i](a)) / ref);
      }
    }
  }

  // Checkpoint round trip and seeded train + evaluate twice.
  io::SyntheticSpec spec;
  spec.n_series = 12;
  spec.length = 80;
  const auto data = io::gen_synthetic(spec, 5);
  auto cfg = io::desk_preset();
  cfg.train.iterations = 30;
  cfg.train.lambda = 0.3;
  cfg.train.seed = 9;
  const io::RegionSpec region{io::Region::Test, cfg.n_origins, cfg.model.horizon};
  const auto dir = std::filesystem::temp_directory_path() / "stablesqf_acceptance";
  std::filesystem::create_directories(dir);

  std::vector<EvalReport> reports;
  std::vector<io::Checkpoint> ckpts;
  for (int rep = 0; rep < 2; ++rep) {
    ckpts.push_back(io::train_checkpoint(data, cfg));
    const auto m = ckpts.back().model();
    const auto traces = io::panel_forecasts(data, io::model_forecasters(m, ckpts.back(), grid), region, grid);
    reports.push_back(io::evaluate_panel(data, traces, region, grid));
  }
  io::save_checkpoint(dir / "a.bin", ckpts[0]);
  const auto loaded = io::load_checkpoint(dir / "a.bin");
  io::save_checkpoint(dir / "b.bin", loaded);
  const bool roundtrip = loaded.params == ckpts[0].params && loaded.ema == ckpts[0].ema &&
                         loaded.seed == ckpts[0].seed && loaded.digest.hash == ckpts[0].digest.hash &&
                         read_bytes(dir / "a.bin") == read_bytes(dir / "b.bin") &&
                         read_bytes(io::sidecar_path(dir / "a.bin")) == read_bytes(io::sidecar_path(dir / "b.bin"));
  const auto reloaded_model = loaded.model();
  const auto reloaded = io::evaluate_panel(
      data, io::panel_forecasts(data, io::model_forecasters(reloaded_model, loaded, grid), region, grid), region, grid);
  const bool deterministic = ckpts[0].params == ckpts[1].params && reports_equal(reports[0], reports[1]) &&
                             reports_equal(reports[0], reloaded);
  std::filesystem::remove_all(dir);

  const bool pass = crossings == 0 && telescope <= kTelescopeTol && additivity <= kAdditivityTol && roundtrip &&
                    deterministic;
  report(8, pass, std::to_string(crossings) + " crossings over " + std::to_string(kParamDraws) +
                      " parameter draws; telescoping error " + sci(telescope) + " (relative to operands); additivity error " +
                      sci(additivity) + "; checkpoint round trip " + (roundtrip ? "bit-exact" : "differs") +
                      "; train+evaluate twice " + (deterministic ? "identical" : "differs") + " (sCRPS " +
                      fmt(reports[0].scrps, 6) + ")");
}

}  // namespace

// Optional arguments pick criteria by number; sections run when any of
// their criteria is selected.
int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto wanted = [&](std::initializer_list<int> ids) {
    if (only.empty()) return true;
    for (int id : ids) {
      if (std::find(only.begin(), only.end(), id) != only.end()) return true;
    }
    return false;
  };
  try {
    if (wanted({1, 2})) newsvendor_criteria();
    if (wanted({3, 5, 6, 9})) panel_criteria();
    if (wanted({4})) gradient_criterion();
    if (wanted({7})) metric_criterion();
    if (wanted({8})) structure_criterion();
  } catch (const std::exception& e) {
    for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
