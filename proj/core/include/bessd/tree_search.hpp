#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "bessd/battery_model.hpp"
#include "bessd/dispatch_env.hpp"
#include "bessd/rng.hpp"
#include "bessd/rule_engine.hpp"
#include "bessd/scenario_gen.hpp"

namespace bessd {

/// Dynamics, reward and action set shared by every planner.
struct DispatchModel {
  BatteryParams batt;
  RewardWeights weights;
  ActionSpace actions;
  std::optional<RuleSet> rules;  ///< disengaged when rules are switched off

  const RuleSet* rules_ptr() const noexcept { return rules ? &*rules : nullptr; }
  void validate() const;
};

/// A fixed (s_t, a_t) pair and the exogenous values of the n intervals
/// that follow it under one scenario. `steps[0]` is the interval a_t acts on.
struct ScenarioProblem {
  DispatchState state;
  std::size_t action = 0;  ///< index into DispatchModel::actions
  std::vector<ExogenousStep> steps;

  std::size_t horizon() const noexcept { return steps.size(); }
};

/// Exogenous steps of a scenario: sampled p_sum, deterministic tariffs and setpoints.
std::vector<ExogenousStep> scenario_steps(const ScenarioTrajectory& scenario,
                                          std::span<const ExogenousStep> deterministic);

struct MctsConfig {
  double beta = 0.7;
  int horizon = 4;   ///< n, bootstrap depth
  int scenarios = 4; ///< M
  int budget = 200;  ///< iterations per scenario
  double gamma = 0.95;
  /// Rescale mean values to [0, 1] per depth before adding the exploration
  /// bonus, so beta is independent of the reward's currency scale.
  bool normalize_values = true;
  /// Per-step return charged for each remaining step after a dead end;
  /// derived from the worst single-step reward when unset.
  std::optional<double> dead_end_penalty;

  void validate() const;
};

inline constexpr std::size_t kNoAction = std::numeric_limits<std::size_t>::max();

struct SearchNode {
  DispatchState state;
  int depth = 0;
  int parent = -1;
  std::size_t action = kNoAction;  ///< incoming action index
  double edge_reward = 0.0;        ///< reward of the incoming action
  std::vector<int> children;
  std::vector<std::size_t> untried;
  int visits = 0;
  double value_sum = 0.0;  ///< sum of sampled returns through the incoming edge
  bool dead_end = false;

  double mean() const noexcept { return visits > 0 ? value_sum / visits : 0.0; }
};

/// Running min/max of sampled node values, per depth.
struct ValueBounds {
  std::vector<double> lo;
  std::vector<double> hi;

  void observe(int depth, double value);
  /// Maps `value` at `depth` into [0, 1]; 0.5 while the range is degenerate.
  double normalize(int depth, double value) const;
};

/// Arena of nodes; node 0 is the root once created.
class SearchTree {
 public:
  int add_root(const DispatchState& state, std::vector<std::size_t> untried);
  int add_child(int parent, std::size_t action, double edge_reward, const DispatchState& state,
                std::vector<std::size_t> untried);

  SearchNode& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
  const SearchNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<SearchNode>& nodes() const noexcept { return nodes_; }

  ValueBounds& bounds() noexcept { return bounds_; }
  const ValueBounds& bounds() const noexcept { return bounds_; }

 private:
  std::vector<SearchNode> nodes_;
  ValueBounds bounds_;
};

/// UCT child choice with lowest-action tie-break. With `bounds` the mean
/// term is normalized per depth; without it the raw mean is used. Throws
/// NoChildren for a leaf.
int best_child(const SearchTree& tree, int node, double beta, const ValueBounds* bounds = nullptr);

/// Everything a single-scenario search reads.
struct SearchContext {
  const DispatchModel* model = nullptr;
  std::span<const ExogenousStep> steps;  ///< the n intervals after s_t
  double gamma = 0.95;
  double beta = 0.7;
  bool normalize_values = true;
  double dead_end_penalty = 0.0;  ///< per remaining step

  /// Tree depth at which no further action is taken (n - 1).
  int terminal_depth() const noexcept { return static_cast<int>(steps.size()) - 1; }
};

/// Feasible action indices for a node state at `depth`; empty on a dead end.
std::vector<std::size_t> node_actions(const DispatchState& state, int depth, const SearchContext& ctx);

/// Adds the child reached by the lowest untried action of `node`.
int expand(SearchTree& tree, int node, const SearchContext& ctx);

/// Descends by best_child until a node with untried actions (expanding one
/// child) or a terminal node.
int tree_policy(SearchTree& tree, int root, const SearchContext& ctx);

struct RolloutResult {
  double value = 0.0;                ///< discounted return from the node's state
  std::vector<std::size_t> actions;  ///< rollout action indices
  bool dead_end = false;
};

/// Uniformly random feasible actions from the node to the horizon along
/// the fixed scenario.
RolloutResult default_policy(const SearchTree& tree, int node, const SearchContext& ctx,
                             RngStream& rng);

/// Propagates a rollout return to the root; every node on the path records
/// its own return through its incoming edge. Returns the sample recorded at
/// the root (the return from the root state).
double backup(SearchTree& tree, int node, double rollout_return, double gamma);

struct ValueEstimate {
  double value = 0.0;       ///< best n-step action value found (averaged over scenarios)
  double mean_value = 0.0;  ///< R_{t+1} + gamma * mean of the best root child
  std::vector<double> best_action_sequence;  ///< kW, a_{t+1} .. a_{t+n-1}
  int scenarios_used = 0;
  long iterations_used = 0;
  long dead_ends = 0;
};

/// Per-step penalty used when `MctsConfig::dead_end_penalty` is unset.
double default_dead_end_penalty(const ScenarioProblem& problem, const DispatchModel& model);

/// Monte-Carlo tree search for one scenario. With n = 1 the estimate is the
/// immediate reward and no tree is built.
ValueEstimate search_scenario(const ScenarioProblem& problem, const DispatchModel& model,
                              const MctsConfig& cfg, RngStream& rng);

/// Same as search_scenario but also hands back the tree for inspection.
ValueEstimate search_scenario(const ScenarioProblem& problem, const DispatchModel& model,
                              const MctsConfig& cfg, RngStream& rng, SearchTree& tree_out);

/// Averages search_scenario over M scenarios drawn from `pool`; the
/// horizon is the pool's. Scenario m samples and searches on the substream
/// {m} of `seed`, so scenarios are independent of each other and of M.
ValueEstimate expected_max_value(const DispatchState& state, std::size_t action,
                                 const ScenarioPool& pool,
                                 std::span<const ExogenousStep> deterministic,
                                 const DispatchModel& model, const MctsConfig& cfg,
                                 std::uint64_t seed);

/// Replays a fixed action sequence on a scenario. Actions infeasible at
/// their step are repaired to the nearest feasible index (ties to the lower
/// index). Returns the n-step discounted return.
/// A dead end charges `dead_end_penalty` per remaining step.
double evaluate_sequence(const ScenarioProblem& problem, const DispatchModel& model, double gamma,
                         std::span<const std::size_t> sequence, double dead_end_penalty,
                         std::vector<std::size_t>* repaired = nullptr);

}  // namespace bessd
