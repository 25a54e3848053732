#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bessd/battery_model.hpp"
#include "bessd/dispatch_env.hpp"

namespace bessd {

/// Truth value in [0, 1].
class Potential {
 public:
  constexpr Potential() = default;
  /// Values outside [0, 1] are clamped.
  constexpr explicit Potential(double v) : value_(v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v)) {}
  constexpr double value() const noexcept { return value_; }

 private:
  double value_ = 0.0;
};

// Lukasiewicz connectives
constexpr Potential luk_and(Potential a, Potential b) noexcept {
  return Potential(std::max(a.value() + b.value() - 1.0, 0.0));
}
constexpr Potential luk_or(Potential a, Potential b) noexcept {
  return Potential(std::min(a.value() + b.value(), 1.0));
}
constexpr Potential luk_not(Potential a) noexcept { return Potential(1.0 - a.value()); }

inline Potential hard_potential(bool condition_holds) noexcept {
  return Potential(condition_holds ? 1.0 : 0.0);
}

/// exp(-|delta| / threshold); threshold must be positive.
Potential soft_potential(double delta_pcc_kw, double p_threshold_kw);

enum class RuleKind { Hard, Soft };

/// The predicate a rule evaluates on the (state, successor) pair.
enum class RulePredicate {
  SocBand,  ///< soc_inf <= SOC_{t+1} <= soc_sup
  PccBand,  ///< pcc_inf <= P_PCC,t+1 <= pcc_sup
  PccRamp,  ///< |P_PCC,t+1 - P_PCC,t| against p_threshold
};

struct Rule {
  std::string name;
  double weight = 1.0;  ///< carried but not used by the logic combination
  RuleKind kind = RuleKind::Hard;
  RulePredicate predicate = RulePredicate::SocBand;
};

struct RuleSet {
  std::vector<Rule> rules;
  double soc_inf = 0.30;
  double soc_sup = 0.90;
  double pcc_inf = 0.0;
  double pcc_sup = 100.0;
  double p_threshold = 50.0;
  double sigma_k = std::exp(-1.0);

  /// The three dispatch rules: SOC band and PCC band (hard), PCC ramp (soft).
  static RuleSet standard();
  void validate() const;
};

/// Potential of a single rule for the transition state -> successor.
Potential rule_potential(const Rule& rule, const RuleSet& rules, const DispatchState& state,
                         const DispatchState& successor);

/// Conjunction of all hard rules, conjoined with the conjunction of all soft
/// rules. An empty rule list yields 1.
Potential total_potential(double action, const DispatchState& state,
                          const DispatchState& successor, const RuleSet& rules);

/// Conjunction of the hard rules only.
Potential hard_potential_of(const DispatchState& state, const DispatchState& successor,
                            const RuleSet& rules);

/// Successor used for rule evaluation: SOC advanced by the action (unchecked)
/// and P_PCC at the next interval's injection.
DispatchState rule_successor(const DispatchState& state, double action, double next_p_sum,
                             const BatteryParams& batt);

/// Indices into `candidates` whose total potential reaches sigma_k.
/// Physically inadmissible actions are never returned. Throws
/// EmptyFeasibleSet when nothing passes.
std::vector<std::size_t> feasible_actions(const DispatchState& state, const ActionSpace& candidates,
                                          double next_p_sum, const RuleSet& rules,
                                          const BatteryParams& batt);

enum class FilterLevel {
  Full,         ///< total potential >= sigma_k
  SoftRelaxed,  ///< soft rules dropped, hard rules still hold
  HardRelaxed,  ///< hard rules conflict: trailing hard rules dropped until an action passes
  Unfiltered,   ///< rules disabled by configuration
};

struct FilterResult {
  std::vector<std::size_t> actions;
  FilterLevel level = FilterLevel::Full;
};

/// Feasible set with the fallback chain Full -> SoftRelaxed -> HardRelaxed.
/// HardRelaxed keeps the actions that satisfy the longest prefix of the hard
/// rules in declaration order (with no prefix satisfiable, every physically
/// admissible action).
/// `rules == nullptr` means rules are disabled. Throws DeadEnd when even the
/// physical limits admit nothing.
FilterResult filter_with_fallback(const DispatchState& state, const ActionSpace& candidates,
                                  double next_p_sum, const RuleSet* rules,
                                  const BatteryParams& batt);

}  // namespace bessd
