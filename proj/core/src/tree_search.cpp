#include "bessd/tree_search.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bessd/errors.hpp"

namespace bessd {

void DispatchModel::validate() const {
  batt.validate();
  weights.validate();
  if (actions.size() == 0) throw InvalidArgument("DispatchModel: empty action space");
  if (rules) rules->validate();
}

void MctsConfig::validate() const {
  if (!(beta >= 0.0)) throw InvalidArgument("MctsConfig: beta must be non-negative");
  if (horizon < 1) throw InvalidArgument("MctsConfig: horizon must be >= 1");
  if (scenarios < 1) throw InvalidArgument("MctsConfig: scenarios must be >= 1");
  if (budget < 1) throw InvalidArgument("MctsConfig: budget must be >= 1");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("MctsConfig: gamma outside [0, 1]");
}

std::vector<ExogenousStep> scenario_steps(const ScenarioTrajectory& scenario,
                                          std::span<const ExogenousStep> deterministic) {
  if (deterministic.size() < scenario.values.size()) {
    throw InvalidArgument("scenario_steps: fewer deterministic steps than scenario values");
  }
  std::vector<ExogenousStep> out(deterministic.begin(),
                                 deterministic.begin() + static_cast<std::ptrdiff_t>(scenario.values.size()));
  for (std::size_t k = 0; k < out.size(); ++k) out[k].p_sum = scenario.values[k];
  return out;
}

void ValueBounds::observe(int depth, double value) {
  const auto d = static_cast<std::size_t>(depth);
  if (lo.size() <= d) {
    lo.resize(d + 1, std::numeric_limits<double>::infinity());
    hi.resize(d + 1, -std::numeric_limits<double>::infinity());
  }
  lo[d] = std::min(lo[d], value);
  hi[d] = std::max(hi[d], value);
}

double ValueBounds::normalize(int depth, double value) const {
  const auto d = static_cast<std::size_t>(depth);
  if (d >= lo.size() || !(hi[d] > lo[d])) return 0.5;
  return (value - lo[d]) / (hi[d] - lo[d]);
}

int SearchTree::add_root(const DispatchState& state, std::vector<std::size_t> untried) {
  nodes_.clear();
  bounds_ = ValueBounds{};
  SearchNode root;
  root.state = state;
  root.untried = std::move(untried);
  nodes_.push_back(std::move(root));
  return 0;
}

int SearchTree::add_child(int parent, std::size_t action, double edge_reward,
                          const DispatchState& state, std::vector<std::size_t> untried) {
  SearchNode child;
  child.state = state;
  child.depth = node(parent).depth + 1;
  child.parent = parent;
  child.action = action;
  child.edge_reward = edge_reward;
  child.untried = std::move(untried);
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(child));
  node(parent).children.push_back(id);
  return id;
}

int best_child(const SearchTree& tree, int node, double beta, const ValueBounds* bounds) {
  const SearchNode& parent = tree.node(node);
  if (parent.children.empty()) {
    throw NoChildren(fmt::format("best_child: node {} has no children", node));
  }
  const double log_n = std::log(static_cast<double>(std::max(parent.visits, 1)));
  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int id : parent.children) {
    const SearchNode& c = tree.node(id);
    if (c.visits == 0) {
      // unvisited children take priority, lowest action first
      if (best < 0 || tree.node(best).visits != 0 || c.action < tree.node(best).action) {
        best = id;
        best_score = std::numeric_limits<double>::infinity();
      }
      continue;
    }
    if (best >= 0 && tree.node(best).visits == 0) continue;
    const double exploit = bounds ? bounds->normalize(c.depth, c.mean()) : c.mean();
    const double score = exploit + beta * std::sqrt(log_n / c.visits);
    if (score > best_score ||
        (score == best_score && best >= 0 && c.action < tree.node(best).action)) {
      best = id;
      best_score = score;
    }
  }
  return best;
}

std::vector<std::size_t> node_actions(const DispatchState& state, int depth,
                                      const SearchContext& ctx) {
  if (depth >= ctx.terminal_depth()) return {};
  const auto& step = ctx.steps[static_cast<std::size_t>(depth + 1)];
  try {
    return filter_with_fallback(state, ctx.model->actions, step.p_sum, ctx.model->rules_ptr(),
                                ctx.model->batt)
        .actions;
  } catch (const DeadEnd&) {
    return {};
  }
}

int expand(SearchTree& tree, int node, const SearchContext& ctx) {
  SearchNode& parent = tree.node(node);
  if (parent.untried.empty()) {
    throw InvalidArgument(fmt::format("expand: node {} has no untried actions", node));
  }
  const std::size_t action = parent.untried.front();
  parent.untried.erase(parent.untried.begin());
  const DispatchState from = parent.state;
  const int depth = parent.depth;

  const auto& step = ctx.steps[static_cast<std::size_t>(depth + 1)];
  const double p_b = ctx.model->actions[action];
  const DispatchState next = transition(from, p_b, step, ctx.model->batt);
  const double r = step_reward(from, p_b, next, ctx.model->batt, ctx.model->weights).total;

  std::vector<std::size_t> untried = node_actions(next, depth + 1, ctx);
  const bool dead = depth + 1 < ctx.terminal_depth() && untried.empty();
  const int child = tree.add_child(node, action, r, next, std::move(untried));
  tree.node(child).dead_end = dead;
  return child;
}

int tree_policy(SearchTree& tree, int root, const SearchContext& ctx) {
  int id = root;
  const ValueBounds* bounds = ctx.normalize_values ? &tree.bounds() : nullptr;
  while (tree.node(id).depth < ctx.terminal_depth() && !tree.node(id).dead_end) {
    if (!tree.node(id).untried.empty()) return expand(tree, id, ctx);
    id = best_child(tree, id, ctx.beta, bounds);
  }
  return id;
}

namespace {

double penalty_tail(double per_step, int remaining, double gamma) {
  double total = 0.0;
  double discount = 1.0;
  for (int j = 0; j < remaining; ++j) {
    total += discount * per_step;
    discount *= gamma;
  }
  return total;
}

}  // namespace

RolloutResult default_policy(const SearchTree& tree, int node, const SearchContext& ctx,
                             RngStream& rng) {
  RolloutResult out;
  const SearchNode& start = tree.node(node);
  int depth = start.depth;
  const int terminal = ctx.terminal_depth();
  if (start.dead_end) {
    out.dead_end = true;
    out.value = penalty_tail(ctx.dead_end_penalty, terminal - depth, ctx.gamma);
    return out;
  }
  DispatchState state = start.state;
  double discount = 1.0;
  while (depth < terminal) {
    const std::vector<std::size_t> acts = node_actions(state, depth, ctx);
    if (acts.empty()) {
      out.dead_end = true;
      out.value += discount * penalty_tail(ctx.dead_end_penalty, terminal - depth, ctx.gamma);
      break;
    }
    const std::size_t a = acts[rng.index(acts.size())];
    const double p_b = ctx.model->actions[a];
    const DispatchState next =
        transition(state, p_b, ctx.steps[static_cast<std::size_t>(depth + 1)], ctx.model->batt);
    out.value += discount * step_reward(state, p_b, next, ctx.model->batt, ctx.model->weights).total;
    out.actions.push_back(a);
    discount *= ctx.gamma;
    state = next;
    ++depth;
  }
  return out;
}

double backup(SearchTree& tree, int node, double rollout_return, double gamma) {
  double ret = rollout_return;
  int id = node;
  while (id >= 0) {
    SearchNode& n = tree.node(id);
    if (n.parent >= 0) {
      ret = n.edge_reward + gamma * ret;
      tree.bounds().observe(n.depth, ret);
    }
    n.visits += 1;
    n.value_sum += ret;
    id = n.parent;
  }
  return ret;
}

double default_dead_end_penalty(const ScenarioProblem& problem, const DispatchModel& model) {
  double worst = 0.0;
  DispatchState probe = problem.state;
  probe.soc = std::min(probe.soc, model.batt.soc_max);
  if (probe.soc >= 1.0) probe.soc = 1.0 - 1e-9;
  for (std::size_t k = 1; k < problem.steps.size(); ++k) {
    const auto& step = problem.steps[k];
    probe.p_sum = step.p_sum;
    probe.tariff_sell = step.tariff_sell;
    probe.tariff_buy = step.tariff_buy;
    probe.p_pcc_set = step.p_pcc_set;
    for (double a : model.actions.levels()) {
      worst = std::min(worst, reward(probe, a, model.batt, model.weights).total);
    }
  }
  return worst;
}

namespace {

struct Root {
  DispatchState state;
  double reward = 0.0;
};

Root first_step(const ScenarioProblem& problem, const DispatchModel& model) {
  if (problem.steps.empty()) throw InvalidArgument("search: scenario has no steps");
  if (problem.action >= model.actions.size()) throw InvalidArgument("search: action index out of range");
  const double p_b = model.actions[problem.action];
  Root root;
  root.state = transition(problem.state, p_b, problem.steps[0], model.batt);
  root.reward = step_reward(problem.state, p_b, root.state, model.batt, model.weights).total;
  return root;
}

}  // namespace

ValueEstimate search_scenario(const ScenarioProblem& problem, const DispatchModel& model,
                              const MctsConfig& cfg, RngStream& rng, SearchTree& tree) {
  cfg.validate();
  const Root root = first_step(problem, model);
  ValueEstimate est;
  est.scenarios_used = 1;
  if (problem.horizon() == 1) {
    est.value = root.reward;
    est.mean_value = root.reward;
    tree.add_root(root.state, {});
    return est;
  }

  SearchContext ctx;
  ctx.model = &model;
  ctx.steps = problem.steps;
  ctx.gamma = cfg.gamma;
  ctx.beta = cfg.beta;
  ctx.normalize_values = cfg.normalize_values;
  ctx.dead_end_penalty = cfg.dead_end_penalty ? *cfg.dead_end_penalty
                                              : default_dead_end_penalty(problem, model);

  tree.add_root(root.state, node_actions(root.state, 0, ctx));
  tree.node(0).dead_end = tree.node(0).untried.empty();

  double best_return = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_path;
  std::vector<std::size_t> path;
  for (int it = 0; it < cfg.budget; ++it) {
    const int leaf = tree_policy(tree, 0, ctx);
    const RolloutResult roll = default_policy(tree, leaf, ctx, rng);
    if (roll.dead_end) ++est.dead_ends;
    const double ret = backup(tree, leaf, roll.value, cfg.gamma);
    if (ret > best_return) {
      best_return = ret;
      path.clear();
      for (int id = leaf; id > 0; id = tree.node(id).parent) path.push_back(tree.node(id).action);
      std::reverse(path.begin(), path.end());
      path.insert(path.end(), roll.actions.begin(), roll.actions.end());
      best_path = path;
    }
  }
  est.iterations_used = cfg.budget;
  est.value = root.reward + cfg.gamma * best_return;
  for (std::size_t a : best_path) est.best_action_sequence.push_back(model.actions[a]);

  const SearchNode& r = tree.node(0);
  if (r.children.empty()) {
    est.mean_value = root.reward + cfg.gamma * r.mean();
  } else {
    const int greedy = best_child(tree, 0, 0.0);
    est.mean_value = root.reward + cfg.gamma * tree.node(greedy).mean();
  }
  return est;
}

ValueEstimate search_scenario(const ScenarioProblem& problem, const DispatchModel& model,
                              const MctsConfig& cfg, RngStream& rng) {
  SearchTree tree;
  return search_scenario(problem, model, cfg, rng, tree);
}

ValueEstimate expected_max_value(const DispatchState& state, std::size_t action,
                                 const ScenarioPool& pool,
                                 std::span<const ExogenousStep> deterministic,
                                 const DispatchModel& model, const MctsConfig& cfg,
                                 std::uint64_t seed) {
  pool.validate();
  cfg.validate();
  ValueEstimate total;
  for (int m = 0; m < cfg.scenarios; ++m) {
    RngStream rng(seed, {static_cast<std::uint64_t>(m)});
    const ScenarioTrajectory traj = sample_trajectory(pool, rng, static_cast<std::size_t>(m));
    ScenarioProblem problem{state, action, scenario_steps(traj, deterministic)};
    const ValueEstimate est = search_scenario(problem, model, cfg, rng);
    total.value += est.value;
    total.mean_value += est.mean_value;
    total.iterations_used += est.iterations_used;
    total.dead_ends += est.dead_ends;
    if (m == 0) total.best_action_sequence = est.best_action_sequence;
  }
  total.scenarios_used = cfg.scenarios;
  total.value /= cfg.scenarios;
  total.mean_value /= cfg.scenarios;
  return total;
}

double evaluate_sequence(const ScenarioProblem& problem, const DispatchModel& model, double gamma,
                         std::span<const std::size_t> sequence, double dead_end_penalty,
                         std::vector<std::size_t>* repaired) {
  const Root root = first_step(problem, model);
  const int n = static_cast<int>(problem.horizon());
  if (static_cast<int>(sequence.size()) < n - 1) {
    throw InvalidArgument(fmt::format("evaluate_sequence: need {} actions, got {}", n - 1,
                                      sequence.size()));
  }
  if (repaired) repaired->clear();
  double ret = root.reward;
  double discount = gamma;
  DispatchState state = root.state;
  for (int k = 1; k < n; ++k) {
    std::vector<std::size_t> acts;
    try {
      acts = filter_with_fallback(state, model.actions, problem.steps[static_cast<std::size_t>(k)].p_sum,
                                  model.rules_ptr(), model.batt)
                 .actions;
    } catch (const DeadEnd&) {
      ret += discount * penalty_tail(dead_end_penalty, n - k, gamma);
      break;
    }
    const std::size_t want = sequence[static_cast<std::size_t>(k - 1)];
    std::size_t chosen = acts.front();
    std::size_t best_gap = std::numeric_limits<std::size_t>::max();
    for (std::size_t a : acts) {
      const std::size_t gap = a > want ? a - want : want - a;
      if (gap < best_gap) {
        best_gap = gap;
        chosen = a;
      }
    }
    if (repaired) repaired->push_back(chosen);
    const double p_b = model.actions[chosen];
    const DispatchState next =
        transition(state, p_b, problem.steps[static_cast<std::size_t>(k)], model.batt);
    ret += discount * step_reward(state, p_b, next, model.batt, model.weights).total;
    discount *= gamma;
    state = next;
  }
  return ret;
}

}  // namespace bessd
