#include "bessd/baseline_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "bessd/errors.hpp"

namespace bessd {

void EstimatorBudget::validate() const {
  if (iterations < 1) throw InvalidArgument("EstimatorBudget: iterations must be >= 1");
  if (repeats < 1) throw InvalidArgument("EstimatorBudget: repeats must be >= 1");
}

void GaConfig::validate() const {
  if (population < 2) throw InvalidArgument("GaConfig: population must be >= 2");
  if (tournament < 1 || tournament > population) throw InvalidArgument("GaConfig: bad tournament size");
  if (!(crossover >= 0.0 && crossover <= 1.0)) throw InvalidArgument("GaConfig: crossover outside [0, 1]");
  if (!(mutation >= 0.0 && mutation <= 1.0)) throw InvalidArgument("GaConfig: mutation outside [0, 1]");
  if (elitism < 0 || elitism >= population) throw InvalidArgument("GaConfig: bad elitism");
}

namespace {

struct Walker {
  const ScenarioProblem& problem;
  const DispatchModel& model;
  double gamma;
  double penalty;
  DispatchState first;
  double r1;

  Walker(const ScenarioProblem& p, const DispatchModel& m, double g)
      : problem(p), model(m), gamma(g), penalty(default_dead_end_penalty(p, m)) {
    if (p.steps.empty()) throw InvalidArgument("estimator: scenario has no steps");
    if (p.action >= m.actions.size()) throw InvalidArgument("estimator: action index out of range");
    const double p_b = m.actions[p.action];
    first = transition(p.state, p_b, p.steps[0], m.batt);
    r1 = step_reward(p.state, p_b, first, m.batt, m.weights).total;
  }

  int length() const { return static_cast<int>(problem.steps.size()) - 1; }

  std::vector<std::size_t> feasible(const DispatchState& s, int k) const {
    try {
      return filter_with_fallback(s, model.actions, problem.steps[static_cast<std::size_t>(k)].p_sum,
                                  model.rules_ptr(), model.batt)
          .actions;
    } catch (const DeadEnd&) {
      return {};
    }
  }

  double tail_penalty(int remaining) const {
    double total = 0.0, d = 1.0;
    for (int j = 0; j < remaining; ++j) {
      total += d * penalty;
      d *= gamma;
    }
    return total;
  }
};

}  // namespace

SearchOutcome random_search(const ScenarioProblem& problem, const DispatchModel& model, double gamma,
                            long budget, RngStream& rng, std::vector<double>* trace) {
  if (budget < 1) throw InvalidArgument("random_search: budget must be >= 1");
  const Walker w(problem, model, gamma);
  SearchOutcome best;
  best.value = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> seq;
  for (long it = 0; it < budget; ++it) {
    seq.clear();
    DispatchState s = w.first;
    double ret = w.r1;
    double d = gamma;
    for (int k = 1; k <= w.length(); ++k) {
      const auto acts = w.feasible(s, k);
      if (acts.empty()) {
        ret += d * w.tail_penalty(w.length() - k + 1);
        break;
      }
      const std::size_t a = acts[rng.index(acts.size())];
      const double p_b = model.actions[a];
      const DispatchState next = transition(s, p_b, problem.steps[static_cast<std::size_t>(k)], model.batt);
      ret += d * step_reward(s, p_b, next, model.batt, model.weights).total;
      d *= gamma;
      s = next;
      seq.push_back(a);
    }
    ++best.evaluations;
    if (trace) trace->push_back(ret);
    if (ret > best.value) {
      best.value = ret;
      best.sequence = seq;
    }
  }
  return best;
}

SearchOutcome exhaustive_search(const ScenarioProblem& problem, const DispatchModel& model,
                                double gamma, long limit) {
  const Walker w(problem, model, gamma);
  if (limit <= 0 &&
      std::pow(static_cast<double>(model.actions.size()), w.length()) > kExhaustiveGuard) {
    throw TooLarge(fmt::format("exhaustive_search: {}^{} sequences exceed the guard of {:g}",
                               model.actions.size(), w.length(), kExhaustiveGuard));
  }
  SearchOutcome best;
  best.value = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> seq;

  // returns false once the limit is reached
  auto dfs = [&](auto&& self, const DispatchState& s, int k, double ret, double d) -> bool {
    if (k > w.length()) {
      ++best.evaluations;
      if (ret > best.value) {
        best.value = ret;
        best.sequence = seq;
      }
      return limit <= 0 || best.evaluations < limit;
    }
    const auto acts = w.feasible(s, k);
    if (acts.empty()) {
      ++best.evaluations;
      const double v = ret + d * w.tail_penalty(w.length() - k + 1);
      if (v > best.value) {
        best.value = v;
        best.sequence = seq;
      }
      return limit <= 0 || best.evaluations < limit;
    }
    for (std::size_t a : acts) {
      const double p_b = model.actions[a];
      const DispatchState next = transition(s, p_b, problem.steps[static_cast<std::size_t>(k)], model.batt);
      const double r = step_reward(s, p_b, next, model.batt, model.weights).total;
      seq.push_back(a);
      const bool more = self(self, next, k + 1, ret + d * r, d * gamma);
      seq.pop_back();
      if (!more) return false;
    }
    return true;
  };
  dfs(dfs, w.first, 1, w.r1, gamma);
  return best;
}

SearchOutcome genetic_search(const ScenarioProblem& problem, const DispatchModel& model, double gamma,
                             long budget, const GaConfig& ga, RngStream& rng,
                             std::vector<double>* trace) {
  ga.validate();
  if (budget < ga.population) {
    throw InvalidArgument(fmt::format("genetic_search: budget {} below population {}", budget, ga.population));
  }
  const Walker w(problem, model, gamma);
  const std::size_t len = static_cast<std::size_t>(w.length());
  const std::size_t b = model.actions.size();

  SearchOutcome best;
  best.value = -std::numeric_limits<double>::infinity();
  if (len == 0) {
    best.value = w.r1;
    best.evaluations = 1;
    if (trace) trace->push_back(w.r1);
    return best;
  }

  struct Individual {
    std::vector<std::size_t> genes;
    double fitness = 0.0;
  };
  auto evaluate = [&](Individual& ind) {
    std::vector<std::size_t> repaired;
    ind.fitness = evaluate_sequence(problem, model, gamma, ind.genes, w.penalty, &repaired);
    // keep the repaired prefix; genes after a dead end stay as they were
    std::copy(repaired.begin(), repaired.end(), ind.genes.begin());
    ++best.evaluations;
    if (trace) trace->push_back(ind.fitness);
    if (ind.fitness > best.value) {
      best.value = ind.fitness;
      best.sequence = ind.genes;
    }
  };

  std::vector<Individual> pop(static_cast<std::size_t>(ga.population));
  for (auto& ind : pop) {
    ind.genes.resize(len);
    for (auto& g : ind.genes) g = rng.index(b);
    evaluate(ind);
  }

  auto tournament = [&]() -> const Individual& {
    std::size_t pick = rng.index(pop.size());
    for (int k = 1; k < ga.tournament; ++k) {
      const std::size_t c = rng.index(pop.size());
      if (pop[c].fitness > pop[pick].fitness) pick = c;
    }
    return pop[pick];
  };

  while (best.evaluations < budget) {
    std::vector<Individual> ranked = pop;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Individual& a, const Individual& c) { return a.fitness > c.fitness; });
    std::vector<Individual> next(ranked.begin(), ranked.begin() + ga.elitism);
    while (next.size() < pop.size() && best.evaluations < budget) {
      Individual child = tournament();
      const Individual& mate = tournament();
      if (len > 1 && rng.uniform() < ga.crossover) {
        const std::size_t cut = 1 + rng.index(len - 1);
        std::copy(mate.genes.begin() + static_cast<std::ptrdiff_t>(cut), mate.genes.end(),
                  child.genes.begin() + static_cast<std::ptrdiff_t>(cut));
      }
      for (auto& g : child.genes) {
        if (rng.uniform() < ga.mutation) g = rng.index(b);
      }
      evaluate(child);
      next.push_back(std::move(child));
    }
    if (next.size() < pop.size()) break;  // budget exhausted mid-generation
    pop = std::move(next);
  }
  return best;
}

// -------------------------------------------------------------------- race

const RaceCell& RaceTable::cell(const std::string& estimator, long budget) const {
  for (const auto& c : cells) {
    if (c.estimator == estimator && c.budget == budget) return c;
  }
  throw InvalidArgument(fmt::format("RaceTable: no cell for {} at budget {}", estimator, budget));
}

RaceTable estimator_race(const ScenarioProblem& problem, const DispatchModel& model, double gamma,
                         const RaceConfig& cfg, std::uint64_t seed) {
  if (cfg.budgets.empty() || cfg.repeats < 1) throw InvalidArgument("estimator_race: empty budgets or repeats");
  for (long b : cfg.budgets) EstimatorBudget{b, cfg.repeats}.validate();

  const std::vector<std::string> names{"MCTS", "RS", "GA", "ES"};
  RaceTable table;
  for (std::size_t e = 0; e < names.size(); ++e) {
    for (long budget : cfg.budgets) {
      std::vector<double> values;
      for (int r = 0; r < cfg.repeats; ++r) {
        RngStream rng(seed, {static_cast<std::uint64_t>(e), static_cast<std::uint64_t>(r)});
        double v = 0.0;
        if (names[e] == "MCTS") {
          MctsConfig m = cfg.mcts;
          m.budget = static_cast<int>(budget);
          m.gamma = gamma;
          v = search_scenario(problem, model, m, rng).value;
        } else if (names[e] == "RS") {
          v = random_search(problem, model, gamma, budget, rng).value;
        } else if (names[e] == "GA") {
          GaConfig ga = cfg.ga;
          ga.population = static_cast<int>(std::min<long>(ga.population, budget));
          ga.elitism = std::min(ga.elitism, ga.population - 1);
          ga.tournament = std::min(ga.tournament, ga.population);
          v = genetic_search(problem, model, gamma, budget, ga, rng).value;
        } else {
          v = exhaustive_search(problem, model, gamma, cfg.es_budget_limited ? budget : 0).value;
        }
        values.push_back(v);
        table.rows.push_back(RaceRow{names[e], budget, r, v});
      }
      RaceCell cell{names[e], budget, 0.0, 0.0, 0.0};
      // Shifted-data moments: identical repeats give exactly their value and zero variance.
      const double shift = values.front();
      const double n = static_cast<double>(values.size());
      double sum = 0.0, sum_sq = 0.0;
      for (double v : values) {
        sum += v - shift;
        sum_sq += (v - shift) * (v - shift);
      }
      cell.mean = shift + sum / n;
      if (values.size() > 1) cell.variance = std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
      table.cells.push_back(cell);
    }
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : table.cells) {
    lo = std::min(lo, c.mean);
    hi = std::max(hi, c.mean);
  }
  for (auto& c : table.cells) c.normalized_mean = hi > lo ? (c.mean - lo) / (hi - lo) : 1.0;
  return table;
}

void write_race_csv(const RaceTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << "estimator,budget,repeat,raw_value,mean,variance,normalized_mean\n";
  for (const auto& row : table.rows) {
    const RaceCell& c = table.cell(row.estimator, row.budget);
    out << fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", row.estimator, row.budget,
                       row.repeat, row.raw_value, c.mean, c.variance, c.normalized_mean);
  }
}

}  // namespace bessd
