#pragma once

#include <span>
#include <vector>

#include "bessd/battery_model.hpp"

namespace bessd {

/// Observation at a decision time. `p_pcc` is the PCC power realized over
/// the interval that ended at `t` and anchors the ramp rule.
struct DispatchState {
  double soc = 0.5;
  double p_sum = 0.0;        ///< kW, generation minus EV and other load
  double tariff_sell = 0.0;  ///< c_1, applied to discharge
  double tariff_buy = 0.0;   ///< c_2, applied to charge
  double p_pcc_set = 0.0;    ///< kW
  double p_pcc = 0.0;        ///< kW
  int t = 0;
};

/// Exogenous values of one interval: only `p_sum` is stochastic.
struct ExogenousStep {
  double p_sum = 0.0;
  double tariff_sell = 0.0;
  double tariff_buy = 0.0;
  double p_pcc_set = 0.0;
};

/// Ordered battery power levels in kW.
class ActionSpace {
 public:
  ActionSpace() = default;
  /// Throws InvalidArgument unless levels are strictly increasing and contain 0.
  explicit ActionSpace(std::vector<double> levels);

  /// `count` evenly spaced levels over [p_min, p_max]; 0 is inserted if the
  /// grid misses it.
  static ActionSpace uniform(double p_min, double p_max, int count);

  std::span<const double> levels() const noexcept { return levels_; }
  std::size_t size() const noexcept { return levels_.size(); }
  double operator[](std::size_t i) const { return levels_[i]; }
  std::size_t index_of_zero() const;

 private:
  std::vector<double> levels_;
};

struct RewardWeights {
  double w1 = 1.0;
  double w2 = 1.0;
  double w3 = 1.0;

  void validate() const;
};

struct RewardBreakdown {
  double revenue = 0.0;      ///< R_1
  double degradation = 0.0;  ///< R_2, non-positive
  double tracking = 0.0;     ///< R_3, non-positive
  double total = 0.0;        ///< weighted sum
};

/// Three-factor reward of battery power `p_b` evaluated against `state`:
/// TOU revenue, degradation at `state.soc`, and PCC tracking error against
/// `state.p_sum`/`state.p_pcc_set`.
RewardBreakdown reward(const DispatchState& state, double p_b, const BatteryParams& batt,
                       const RewardWeights& w);

/// Deterministic successor given the realized interval. Throws OutOfBounds
/// for a physically infeasible action.
DispatchState transition(const DispatchState& state, double p_b, const ExogenousStep& next,
                         const BatteryParams& batt);

/// Reward R_{t+1} earned by `p_b` over the interval from `state` to `next`:
/// degradation at the pre-action SOC, revenue and tracking at the interval's
/// realized injection, tariffs and setpoint.
RewardBreakdown step_reward(const DispatchState& state, double p_b, const DispatchState& next,
                            const BatteryParams& batt, const RewardWeights& w);

/// Discounted sum of `rewards` (first element undiscounted).
double episode_return(std::span<const double> rewards, double gamma);

/// True if `p_b` passes the battery power and SOC limits from `state`.
bool physically_admissible(const DispatchState& state, double p_b, const BatteryParams& batt);

/// Indices of the physically admissible levels.
std::vector<std::size_t> admissible_actions(const DispatchState& state, const ActionSpace& space,
                                            const BatteryParams& batt);

}  // namespace bessd
