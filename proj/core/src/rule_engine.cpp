#include "bessd/rule_engine.hpp"

#include <fmt/format.h>

#include "bessd/errors.hpp"
#include "bessd/network_model.hpp"

namespace bessd {

Potential soft_potential(double delta_pcc_kw, double p_threshold_kw) {
  if (!(p_threshold_kw > 0.0)) {
    throw InvalidArgument(fmt::format("soft_potential: threshold {} must be positive", p_threshold_kw));
  }
  return Potential(std::exp(-std::abs(delta_pcc_kw) / p_threshold_kw));
}

RuleSet RuleSet::standard() {
  RuleSet set;
  set.rules = {
      Rule{"soc_band", 1.0, RuleKind::Hard, RulePredicate::SocBand},
      Rule{"pcc_band", 1.0, RuleKind::Hard, RulePredicate::PccBand},
      Rule{"pcc_ramp", 1.0, RuleKind::Soft, RulePredicate::PccRamp},
  };
  return set;
}

void RuleSet::validate() const {
  if (!(sigma_k >= 0.0 && sigma_k <= 1.0)) throw InvalidArgument("RuleSet: sigma_k outside [0, 1]");
  if (!(p_threshold > 0.0)) throw InvalidArgument("RuleSet: p_threshold must be positive");
  if (!(soc_inf < soc_sup)) throw InvalidArgument("RuleSet: need soc_inf < soc_sup");
  if (!(pcc_inf < pcc_sup)) throw InvalidArgument("RuleSet: need pcc_inf < pcc_sup");
}

Potential rule_potential(const Rule& rule, const RuleSet& rules, const DispatchState& state,
                         const DispatchState& successor) {
  switch (rule.predicate) {
    case RulePredicate::SocBand:
      if (rule.kind == RuleKind::Hard) {
        return hard_potential(rules.soc_inf <= successor.soc && successor.soc <= rules.soc_sup);
      } else {
        const double gap = std::max({rules.soc_inf - successor.soc, successor.soc - rules.soc_sup, 0.0});
        return Potential(std::exp(-gap / (rules.soc_sup - rules.soc_inf)));
      }
    case RulePredicate::PccBand:
      if (rule.kind == RuleKind::Hard) {
        return hard_potential(rules.pcc_inf <= successor.p_pcc && successor.p_pcc <= rules.pcc_sup);
      } else {
        const double gap = std::max({rules.pcc_inf - successor.p_pcc, successor.p_pcc - rules.pcc_sup, 0.0});
        return soft_potential(gap, rules.p_threshold);
      }
    case RulePredicate::PccRamp:
      if (rule.kind == RuleKind::Hard) {
        return hard_potential(std::abs(successor.p_pcc - state.p_pcc) <= rules.p_threshold);
      }
      return soft_potential(successor.p_pcc - state.p_pcc, rules.p_threshold);
  }
  return Potential(0.0);
}

namespace {

struct Conjunctions {
  Potential hard{1.0};
  Potential soft{1.0};
};

Conjunctions combine(const DispatchState& state, const DispatchState& successor,
                     const RuleSet& rules) {
  Conjunctions c;
  for (const auto& rule : rules.rules) {
    const Potential p = rule_potential(rule, rules, state, successor);
    if (rule.kind == RuleKind::Hard) {
      c.hard = luk_and(c.hard, p);
    } else {
      c.soft = luk_and(c.soft, p);
    }
  }
  return c;
}

}  // namespace

Potential total_potential(double /*action*/, const DispatchState& state,
                          const DispatchState& successor, const RuleSet& rules) {
  const Conjunctions c = combine(state, successor, rules);
  return luk_and(c.hard, c.soft);
}

Potential hard_potential_of(const DispatchState& state, const DispatchState& successor,
                            const RuleSet& rules) {
  return combine(state, successor, rules).hard;
}

DispatchState rule_successor(const DispatchState& state, double action, double next_p_sum,
                             const BatteryParams& batt) {
  DispatchState next = state;
  next.soc = soc_after(state.soc, action, batt);
  next.p_sum = next_p_sum;
  next.p_pcc = pcc_power(next_p_sum, action);
  next.t = state.t + 1;
  return next;
}

std::vector<std::size_t> feasible_actions(const DispatchState& state, const ActionSpace& candidates,
                                          double next_p_sum, const RuleSet& rules,
                                          const BatteryParams& batt) {
  if (candidates.size() == 0) throw InvalidArgument("feasible_actions: no candidates");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double a = candidates[i];
    if (!physically_admissible(state, a, batt)) continue;
    const DispatchState next = rule_successor(state, a, next_p_sum, batt);
    if (total_potential(a, state, next, rules).value() >= rules.sigma_k) out.push_back(i);
  }
  if (out.empty()) {
    throw EmptyFeasibleSet(fmt::format(
        "no action passes the rule threshold {} at t={} (soc={}, next p_sum={})", rules.sigma_k,
        state.t, state.soc, next_p_sum));
  }
  return out;
}

FilterResult filter_with_fallback(const DispatchState& state, const ActionSpace& candidates,
                                  double next_p_sum, const RuleSet* rules,
                                  const BatteryParams& batt) {
  FilterResult result;
  if (rules == nullptr) {
    result.actions = admissible_actions(state, candidates, batt);
    result.level = FilterLevel::Unfiltered;
  } else {
    std::vector<std::size_t> hard_ok;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double a = candidates[i];
      if (!physically_admissible(state, a, batt)) continue;
      const DispatchState next = rule_successor(state, a, next_p_sum, batt);
      const Conjunctions c = combine(state, next, *rules);
      if (luk_and(c.hard, c.soft).value() >= rules->sigma_k) result.actions.push_back(i);
      if (c.hard.value() >= 1.0) hard_ok.push_back(i);
    }
    if (!result.actions.empty()) {
      result.level = FilterLevel::Full;
    } else if (!hard_ok.empty()) {
      result.actions = std::move(hard_ok);
      result.level = FilterLevel::SoftRelaxed;
    } else {
      // hard rules conflict: drop them from the last declared one until some
      // action passes, so earlier rules (the SOC band by default) win
      result.level = FilterLevel::HardRelaxed;
      std::vector<const Rule*> hard;
      for (const auto& rule : rules->rules) {
        if (rule.kind == RuleKind::Hard) hard.push_back(&rule);
      }
      for (std::size_t keep = hard.size(); keep-- > 0 && result.actions.empty();) {
        for (std::size_t i = 0; i < candidates.size(); ++i) {
          const double a = candidates[i];
          if (!physically_admissible(state, a, batt)) continue;
          const DispatchState next = rule_successor(state, a, next_p_sum, batt);
          bool ok = true;
          for (std::size_t h = 0; h < keep && ok; ++h) {
            ok = rule_potential(*hard[h], *rules, state, next).value() >= 1.0;
          }
          if (ok) result.actions.push_back(i);
        }
      }
      if (result.actions.empty()) result.actions = admissible_actions(state, candidates, batt);
    }
  }
  if (result.actions.empty()) {
    throw DeadEnd(fmt::format("no physically admissible action at t={} (soc={})", state.t, state.soc));
  }
  return result;
}

}  // namespace bessd
