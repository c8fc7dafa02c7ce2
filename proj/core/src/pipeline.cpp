#include "stablesqf/io/pipeline.hpp"

#include <stdexcept>
#include <unordered_map>

namespace stablesqf::io {

std::size_t RegionSpec::end(std::size_t n) const {
  const std::size_t back = region == Region::Test ? 0 : length();
  if (n < back + length() + 2) {
    throw std::invalid_argument("series of length " + std::to_string(n) +
                                " too short for the evaluation regions");
  }
  return n - back;
}

Checkpoint train_checkpoint(const Dataset& data, const ExperimentConfig& config,
                            const TrainProgress& progress) {
  config.validate();
  const std::size_t region = config.region_length();
  const auto splits = data.splits(region, region);

  std::vector<std::vector<double>> history;
  std::vector<std::size_t> lengths;
  history.reserve(data.series.size());
  for (std::size_t j = 0; j < data.series.size(); ++j) {
    const auto& v = data.series[j].values;
    history.emplace_back(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(splits[j].train_end));
    lengths.push_back(splits[j].train_end);
  }
  const auto panel = standardize_dataset(history, lengths);
  auto result = train(panel.series, config.model, config.train, progress);

  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.params = std::move(result.raw_params);
  const auto ema = result.model.params().values();
  ckpt.ema.assign(ema.begin(), ema.end());
  for (const auto& s : data.series) ckpt.series_ids.push_back(s.id);
  ckpt.stats = panel.stats;
  ckpt.seed = config.train.seed;
  ckpt.digest = digest_trace(result.trace);
  return ckpt;
}

ForecasterFactory model_forecasters(const SQFModel& model, const Checkpoint& ckpt,
                                    const QuantileGrid& grid) {
  return [&model, &ckpt, grid](std::size_t j) {
    return sqf_forecaster(model, ckpt.stats.at(j), grid, true);
  };
}

ForecasterFactory baseline_forecasters(const Dataset& data, BaselineConfig config,
                                       const RegionSpec& spec, const QuantileGrid& grid) {
  config.validate();
  return [&data, config, spec, grid](std::size_t j) {
    BaselineConfig c = config;
    c.season_len = data.series.at(j).season;
    const std::size_t n = data.series.at(j).values.size();
    c.error_end = spec.end(n) - spec.length();
    c.seed = config.seed + j;
    return baseline_forecaster(c, spec.horizon, grid, true);
  };
}

std::vector<std::vector<ForecastTrace>> panel_forecasts(const Dataset& data,
                                                        const ForecasterFactory& factory,
                                                        const RegionSpec& spec,
                                                        const QuantileGrid& grid) {
  std::vector<std::vector<ForecastTrace>> out;
  out.reserve(data.series.size());
  for (std::size_t j = 0; j < data.series.size(); ++j) {
    const auto& s = data.series[j];
    const auto f = factory(j);
    out.push_back(rolling_forecasts(f, s.values, s.id, spec.end(s.values.size()), spec.n_origins,
                                    spec.horizon, grid));
  }
  return out;
}

EvalReport evaluate_panel(const Dataset& data,
                          std::span<const std::vector<ForecastTrace>> traces,
                          const RegionSpec& spec, const QuantileGrid& grid) {
  if (traces.size() != data.series.size()) {
    throw std::invalid_argument("need one trace list per series");
  }
  EvalAccumulator acc(grid);
  for (std::size_t j = 0; j < traces.size(); ++j) {
    const auto& v = data.series[j].values;
    const std::span<const double> history(v.data(), spec.end(v.size()));
    acc.add(traces[j], history, history);
  }
  return acc.report();
}

std::vector<std::vector<ForecastTrace>> group_traces(const Dataset& data,
                                                     std::span<const ForecastTrace> traces) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < data.series.size(); ++j) index.emplace(data.series[j].id, j);
  std::vector<std::vector<ForecastTrace>> out(data.series.size());
  for (const auto& tr : traces) {
    const auto it = index.find(tr.series_id);
    if (it == index.end()) throw std::invalid_argument("trace for unknown series " + tr.series_id);
    out[it->second].push_back(tr);
  }
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (out[j].empty()) throw std::invalid_argument("no traces for series " + data.series[j].id);
  }
  return out;
}

}  // namespace stablesqf::io
