#pragma once

#include <span>
#include <vector>

#include "bessd/rng.hpp"

namespace bessd {

/// Per-step forecast-error statistics and confidence bounds of the net
/// injection over a lookahead horizon.
struct ScenarioPool {
  std::vector<double> mean;      ///< kW
  std::vector<double> variance;  ///< kW^2
  std::vector<double> lower;     ///< kW
  std::vector<double> upper;     ///< kW
  double confidence_level = 0.95;

  std::size_t horizon() const noexcept { return mean.size(); }
  void validate() const;
};

struct ScenarioTrajectory {
  std::vector<double> values;  ///< realized p_sum per step, kW
  std::size_t scenario_index = 0;
};

/// Two-sided standard normal quantile for a central confidence level.
double confidence_z(double confidence_level);

/// Fits the pool from forecast-error samples (`history[k]` holds the samples
/// for step k) around point forecasts. Throws InsufficientData when a step
/// has fewer than two samples.
ScenarioPool fit_pool(const std::vector<std::vector<double>>& history,
                      std::span<const double> forecasts, double confidence_level);

/// Draws one value from Normal(mean, variance) truncated to [lower, upper]
/// by inverse-CDF sampling on the truncated support.
double sample_truncated_normal(double mean, double variance, double lower, double upper,
                               RngStream& rng);

/// Independent per-step truncated-normal draws.
ScenarioTrajectory sample_trajectory(const ScenarioPool& pool, RngStream& rng,
                                     std::size_t scenario_index = 0);

}  // namespace bessd
