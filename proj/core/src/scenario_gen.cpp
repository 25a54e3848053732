#include "bessd/scenario_gen.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "bessd/errors.hpp"

namespace bessd {

namespace {
const boost::math::normal_distribution<double> kStdNormal{0.0, 1.0};
}

void ScenarioPool::validate() const {
  const std::size_t n = mean.size();
  if (n == 0) throw InvalidArgument("ScenarioPool: empty horizon");
  if (variance.size() != n || lower.size() != n || upper.size() != n) {
    throw InvalidArgument("ScenarioPool: per-step vectors differ in length");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!(variance[k] >= 0.0)) throw InvalidArgument("ScenarioPool: negative variance");
    if (!(lower[k] <= mean[k] && mean[k] <= upper[k])) {
      throw InvalidArgument(fmt::format("ScenarioPool: step {} violates lower <= mean <= upper", k));
    }
  }
}

double confidence_z(double confidence_level) {
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
    throw InvalidArgument(fmt::format("confidence level {} outside (0, 1)", confidence_level));
  }
  return boost::math::quantile(kStdNormal, 0.5 + 0.5 * confidence_level);
}

ScenarioPool fit_pool(const std::vector<std::vector<double>>& history,
                      std::span<const double> forecasts, double confidence_level) {
  if (history.size() != forecasts.size() || forecasts.empty()) {
    throw InvalidArgument("fit_pool: need one error-sample list per forecast step");
  }
  const double z = confidence_z(confidence_level);
  ScenarioPool pool;
  pool.confidence_level = confidence_level;
  for (std::size_t k = 0; k < forecasts.size(); ++k) {
    const auto& samples = history[k];
    if (samples.size() < 2) {
      throw InsufficientData(fmt::format("fit_pool: step {} has {} error samples, need 2", k,
                                         samples.size()));
    }
    const double count = static_cast<double>(samples.size());
    double sum = 0.0;
    for (double e : samples) sum += e;
    const double err_mean = sum / count;
    double ss = 0.0;
    for (double e : samples) ss += (e - err_mean) * (e - err_mean);
    const double var = ss / (count - 1.0);
    const double m = forecasts[k] + err_mean;
    const double half = z * std::sqrt(var);
    pool.mean.push_back(m);
    pool.variance.push_back(var);
    pool.lower.push_back(m - half);
    pool.upper.push_back(m + half);
  }
  return pool;
}

double sample_truncated_normal(double mean, double variance, double lower, double upper,
                               RngStream& rng) {
  const double u = rng.uniform_open();
  if (!(variance > 0.0) || !(lower < upper)) return std::clamp(mean, lower, upper);
  const double sd = std::sqrt(variance);
  double a = (lower - mean) / sd;
  double b = (upper - mean) / sd;
  // sample the lower tail side for precision and mirror back
  const bool mirrored = a > 0.0;
  if (mirrored) {
    const double t = a;
    a = -b;
    b = -t;
  }
  const double fa = boost::math::cdf(kStdNormal, a);
  const double fb = boost::math::cdf(kStdNormal, b);
  double z;
  if (fb - fa > 0.0) {
    const double p = std::clamp(fa + u * (fb - fa), fa, fb);
    z = p <= 0.0 ? a : (p >= 1.0 ? b : boost::math::quantile(kStdNormal, p));
  } else {
    z = a + u * (b - a);
  }
  z = std::clamp(z, a, b);
  if (mirrored) z = -z;
  return std::clamp(mean + sd * z, lower, upper);
}

ScenarioTrajectory sample_trajectory(const ScenarioPool& pool, RngStream& rng,
                                     std::size_t scenario_index) {
  ScenarioTrajectory traj;
  traj.scenario_index = scenario_index;
  traj.values.reserve(pool.horizon());
  for (std::size_t k = 0; k < pool.horizon(); ++k) {
    traj.values.push_back(
        sample_truncated_normal(pool.mean[k], pool.variance[k], pool.lower[k], pool.upper[k], rng));
  }
  return traj;
}

}  // namespace bessd
