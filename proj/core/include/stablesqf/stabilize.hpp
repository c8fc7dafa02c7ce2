#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "stablesqf/evaluation.hpp"

namespace stablesqf {

/// Partial blends with the previous raw forecast for the same target, Full
/// with the previous stabilized one. Mean (experimental) averages every
/// available raw forecast for the target and ignores the strength.
enum class StabilizeScheme { Partial, Full, Mean };

StabilizeScheme parse_stabilize_scheme(std::string_view name);
std::string_view to_string(StabilizeScheme scheme);

struct StabilizeConfig {
  StabilizeScheme scheme = StabilizeScheme::Partial;
  double strength = 0.0;

  void validate() const;
};

/// Traces of one series ordered by consecutive origin. The first trace and
/// the newest horizon of each trace pass through unchanged.
std::vector<ForecastTrace> stabilize_traces(std::span<const ForecastTrace> traces,
                                            const StabilizeConfig& config);

}  // namespace stablesqf
