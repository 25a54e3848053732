#pragma once
// Shared toy instances for the unit and acceptance tests.

#include <cstdint>
#include <vector>

#include "bessd/network_model.hpp"
#include "bessd/rng.hpp"
#include "bessd/scenario_gen.hpp"
#include "bessd/tree_search.hpp"

namespace bessd::fixtures {

/// The 100 kWh / +-10 kW toy pack with kappa = -1 and a modest investment cost.
inline BatteryParams toy_battery() {
  BatteryParams b;
  b.kappa = -1.0;
  b.investment_cost = 20000.0;
  return b;
}

struct ToyInstance {
  DispatchModel model;
  DispatchState state;
  std::size_t action = 0;
  ScenarioPool pool;
  std::vector<ExogenousStep> deterministic;  ///< tariffs and setpoint; p_sum is the pool mean
};

/// `b` evenly spaced actions over the toy pack's power range, an `n`-step
/// pool around a feeder importing roughly 50 kW, alternating tariffs, the
/// standard rules and a_t = the lowest level.
inline ToyInstance toy_instance(int b, int n, bool rules = true) {
  ToyInstance t;
  t.model.batt = toy_battery();
  t.model.actions = ActionSpace::uniform(-10.0, 10.0, b);
  if (rules) t.model.rules = RuleSet::standard();
  t.state.soc = 0.5;
  t.state.p_sum = -50.0;
  t.state.tariff_sell = 1.02;
  t.state.tariff_buy = 0.51;
  t.state.p_pcc_set = 50.0;
  t.state.p_pcc = 50.0;
  t.action = 0;
  for (int k = 0; k < n; ++k) {
    const double mean = -50.0 + 6.0 * ((k % 3) - 1);
    const bool peak = k % 2 == 1;
    t.pool.mean.push_back(mean);
    t.pool.variance.push_back(16.0);
    t.pool.lower.push_back(mean - 1.96 * 4.0);
    t.pool.upper.push_back(mean + 1.96 * 4.0);
    t.deterministic.push_back(ExogenousStep{mean, peak ? 1.02 : 0.51, 0.51, 50.0});
  }
  return t;
}

/// The scenario lists expected_max_value draws for `seed`: scenario m comes
/// from the stream (seed, {m}) and is the first draw on it.
inline std::vector<std::vector<ExogenousStep>> scenarios_for_seed(const ScenarioPool& pool,
                                                                  std::span<const ExogenousStep> deterministic,
                                                                  int count, std::uint64_t seed) {
  std::vector<std::vector<ExogenousStep>> out;
  for (int m = 0; m < count; ++m) {
    RngStream rng(seed, {static_cast<std::uint64_t>(m)});
    out.push_back(scenario_steps(sample_trajectory(pool, rng, static_cast<std::size_t>(m)), deterministic));
  }
  return out;
}

/// One line from the PCC to a single load bus; loads in per unit of the 1 MVA base.
inline RadialNetwork two_bus(double p_pu, double q_pu) {
  RadialNetwork net;
  net.nodes = {NetworkNode{0}, NetworkNode{1, p_pu * 1000.0, q_pu * 1000.0, 0.0, 0.0}};
  net.branches = {NetworkBranch{0, 1, 0.01, 0.02, 1.0}};
  net.v_min = 0.9;
  net.v_max = 1.1;
  return net;
}

/// The demo feeder with seeded random loads of up to 50 kW / 50 kvar per node.
inline RadialNetwork seven_node(std::uint64_t seed) {
  RadialNetwork net = demo_feeder().network;
  RngStream rng(seed, {5});
  for (auto& n : net.nodes) {
    if (n.id == net.root) continue;
    n.p_demand_kw = 50.0 * rng.uniform();
    n.q_demand_kvar = 50.0 * rng.uniform();
  }
  return net;
}

}  // namespace bessd::fixtures
