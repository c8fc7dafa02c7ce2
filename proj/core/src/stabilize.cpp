#include "stablesqf/stabilize.hpp"

#include <stdexcept>
#include <string>

namespace stablesqf {

StabilizeScheme parse_stabilize_scheme(std::string_view name) {
  if (name == "partial") return StabilizeScheme::Partial;
  if (name == "full") return StabilizeScheme::Full;
  if (name == "mean") return StabilizeScheme::Mean;
  throw std::invalid_argument("unknown stabilization scheme '" + std::string(name) +
                              "' (expected partial, full or mean)");
}

std::string_view to_string(StabilizeScheme scheme) {
  switch (scheme) {
    case StabilizeScheme::Partial:
      return "partial";
    case StabilizeScheme::Full:
      return "full";
    case StabilizeScheme::Mean:
      return "mean";
  }
  return "partial";
}

void StabilizeConfig::validate() const {
  if (!(strength >= 0.0 && strength <= 1.0)) {
    throw std::invalid_argument("stabilization strength must lie in [0, 1]");
  }
}

namespace {

void check_traces(std::span<const ForecastTrace> traces) {
  for (std::size_t j = 1; j < traces.size(); ++j) {
    const auto& a = traces[j - 1];
    const auto& b = traces[j];
    if (b.origin != a.origin + 1 || b.series_id != a.series_id) {
      throw std::invalid_argument("stabilization needs consecutive origins of one series");
    }
    if (b.quantiles.rows() != a.quantiles.rows() || b.quantiles.cols() != a.quantiles.cols()) {
      throw std::invalid_argument("stabilization needs traces on a common grid and horizon");
    }
  }
}

std::vector<ForecastTrace> mean_scheme(std::span<const ForecastTrace> traces) {
  std::vector<ForecastTrace> out(traces.begin(), traces.end());
  const Eigen::Index h = traces.front().quantiles.rows();
  for (std::size_t j = 1; j < traces.size(); ++j) {
    for (Eigen::Index i = 0; i + 1 < h; ++i) {
      // Earlier origins j - d forecast this target at horizon i + d.
      nn::Vector sum = traces[j].quantiles.row(i).transpose();
      double n = 1.0;
      for (Eigen::Index d = 1; i + d < h && static_cast<std::size_t>(d) <= j; ++d) {
        sum += traces[j - static_cast<std::size_t>(d)].quantiles.row(i + d).transpose();
        n += 1.0;
      }
      out[j].quantiles.row(i) = (sum / n).transpose();
    }
  }
  return out;
}

}  // namespace

std::vector<ForecastTrace> stabilize_traces(std::span<const ForecastTrace> traces,
                                            const StabilizeConfig& config) {
  config.validate();
  if (traces.empty()) return {};
  check_traces(traces);
  if (config.scheme == StabilizeScheme::Mean) return mean_scheme(traces);

  const double w = config.strength;
  std::vector<ForecastTrace> out(traces.begin(), traces.end());
  const Eigen::Index h = traces.front().quantiles.rows();
  for (std::size_t j = 1; j < traces.size(); ++j) {
    const auto& prev = config.scheme == StabilizeScheme::Full ? out[j - 1] : traces[j - 1];
    for (Eigen::Index i = 0; i + 1 < h; ++i) {
      out[j].quantiles.row(i) = (1.0 - w) * traces[j].quantiles.row(i) + w * prev.quantiles.row(i + 1);
    }
  }
  return out;
}

}  // namespace stablesqf
