#include "bessd/dispatch_env.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bessd/errors.hpp"
#include "bessd/network_model.hpp"

namespace bessd {

ActionSpace::ActionSpace(std::vector<double> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw InvalidArgument("ActionSpace: no levels");
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    if (!(levels_[i - 1] < levels_[i])) {
      throw InvalidArgument("ActionSpace: levels must be strictly increasing");
    }
  }
  if (std::find(levels_.begin(), levels_.end(), 0.0) == levels_.end()) {
    throw InvalidArgument("ActionSpace: levels must contain 0");
  }
}

ActionSpace ActionSpace::uniform(double p_min, double p_max, int count) {
  if (count < 2 || !(p_min < 0.0 && 0.0 < p_max)) {
    throw InvalidArgument(
        fmt::format("ActionSpace::uniform: need count >= 2 and p_min < 0 < p_max (got {}, [{}, {}])",
                    count, p_min, p_max));
  }
  std::vector<double> levels;
  levels.reserve(static_cast<std::size_t>(count) + 1);
  const double step = (p_max - p_min) / static_cast<double>(count - 1);
  for (int i = 0; i < count; ++i) {
    double v = i == count - 1 ? p_max : p_min + step * i;
    if (std::abs(v) < 1e-9 * step) v = 0.0;
    levels.push_back(v);
  }
  if (std::find(levels.begin(), levels.end(), 0.0) == levels.end()) {
    levels.insert(std::upper_bound(levels.begin(), levels.end(), 0.0), 0.0);
  }
  return ActionSpace(std::move(levels));
}

std::size_t ActionSpace::index_of_zero() const {
  return static_cast<std::size_t>(std::find(levels_.begin(), levels_.end(), 0.0) - levels_.begin());
}

void RewardWeights::validate() const {
  if (w1 < 0.0 || w2 < 0.0 || w3 < 0.0) throw InvalidArgument("RewardWeights: negative weight");
  if (w1 == 0.0 && w2 == 0.0 && w3 == 0.0) throw InvalidArgument("RewardWeights: all zero");
}

RewardBreakdown reward(const DispatchState& state, double p_b, const BatteryParams& batt,
                       const RewardWeights& w) {
  RewardBreakdown r;
  const double tariff = p_b >= 0.0 ? state.tariff_sell : state.tariff_buy;
  r.revenue = tariff * p_b * batt.step_hours;
  r.degradation = degradation_cost(p_b, state.soc, batt);
  r.tracking = -std::abs(pcc_power(state.p_sum, p_b) - state.p_pcc_set);
  r.total = w.w1 * r.revenue + w.w2 * r.degradation + w.w3 * r.tracking;
  return r;
}

DispatchState transition(const DispatchState& state, double p_b, const ExogenousStep& next,
                         const BatteryParams& batt) {
  DispatchState out;
  out.soc = soc_step(SocState{state.soc}, p_b, batt).soc;
  out.p_sum = next.p_sum;
  out.tariff_sell = next.tariff_sell;
  out.tariff_buy = next.tariff_buy;
  out.p_pcc_set = next.p_pcc_set;
  out.p_pcc = pcc_power(next.p_sum, p_b);
  out.t = state.t + 1;
  return out;
}

RewardBreakdown step_reward(const DispatchState& state, double p_b, const DispatchState& next,
                            const BatteryParams& batt, const RewardWeights& w) {
  DispatchState interval = next;
  interval.soc = state.soc;
  return reward(interval, p_b, batt, w);
}

double episode_return(std::span<const double> rewards, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw InvalidArgument(fmt::format("episode_return: gamma {} outside [0, 1]", gamma));
  }
  // Horner form keeps G_t = R + gamma * G_{t+1} exact
  double g = 0.0;
  for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) g = *it + gamma * g;
  return g;
}

bool physically_admissible(const DispatchState& state, double p_b, const BatteryParams& batt) {
  if (p_b < batt.p_min_kw - kBoundTolerance || p_b > batt.p_max_kw + kBoundTolerance) return false;
  const double next = soc_after(state.soc, p_b, batt);
  if (next < batt.soc_min - kBoundTolerance || next > batt.soc_max + kBoundTolerance) return false;
  return p_b == 0.0 || state.soc < 1.0;
}

std::vector<std::size_t> admissible_actions(const DispatchState& state, const ActionSpace& space,
                                            const BatteryParams& batt) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (physically_admissible(state, space[i], batt)) out.push_back(i);
  }
  return out;
}

}  // namespace bessd
