#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bessd/rng.hpp"
#include "bessd/tree_search.hpp"

namespace bessd {

/// Iterations are objective evaluations (complete action sequences) for
/// every estimator, so budgets are comparable.
struct EstimatorBudget {
  long iterations = 100;
  int repeats = 10;

  void validate() const;
};

struct SearchOutcome {
  double value = 0.0;                  ///< best n-step return found
  std::vector<std::size_t> sequence;   ///< action indices a_{t+1} .. a_{t+n-1}
  long evaluations = 0;
};

/// Best of `budget` sequences drawn step by step uniformly from the
/// feasible set along the fixed scenario. `trace`, if given, receives every
/// sampled return in draw order.
SearchOutcome random_search(const ScenarioProblem& problem, const DispatchModel& model, double gamma,
                            long budget, RngStream& rng, std::vector<double>* trace = nullptr);

/// Number of feasible sequences above which exhaustive search refuses.
inline constexpr double kExhaustiveGuard = 1e7;

/// Exact maximum by depth-first enumeration of all feasible sequences in
/// lexicographic index order. `limit > 0` stops after that many complete
/// sequences (the budget-limited variant used in the race). Throws TooLarge
/// when b^(n-1) exceeds the guard and no limit is given.
SearchOutcome exhaustive_search(const ScenarioProblem& problem, const DispatchModel& model,
                                double gamma, long limit = 0);

struct GaConfig {
  int population = 20;
  int tournament = 2;
  double crossover = 0.8;  ///< one-point crossover probability
  double mutation = 0.05;  ///< per-gene probability of a uniform redraw
  int elitism = 1;

  void validate() const;
};

/// Generational GA over length-(n-1) index chromosomes. Infeasible genes are
/// repaired to the nearest feasible index during evaluation and written
/// back. Stops after `budget` evaluations; `budget` must cover the initial
/// population. `trace` receives every evaluated return in order.
SearchOutcome genetic_search(const ScenarioProblem& problem, const DispatchModel& model, double gamma,
                             long budget, const GaConfig& ga, RngStream& rng,
                             std::vector<double>* trace = nullptr);

struct RaceConfig {
  std::vector<long> budgets{10, 100, 1000, 10000};
  int repeats = 10;
  MctsConfig mcts;   ///< budget and gamma are overridden per run
  GaConfig ga;       ///< population is capped at the budget
  /// Enumerate only `budget` sequences per ES run; otherwise ES is exact at
  /// every budget.
  bool es_budget_limited = true;
};

struct RaceRow {
  std::string estimator;
  long budget = 0;
  int repeat = 0;
  double raw_value = 0.0;
};

struct RaceCell {
  std::string estimator;
  long budget = 0;
  double mean = 0.0;
  double variance = 0.0;  ///< sample variance over repeats
  double normalized_mean = 0.0;
};

struct RaceTable {
  std::vector<RaceRow> rows;
  std::vector<RaceCell> cells;

  const RaceCell& cell(const std::string& estimator, long budget) const;
};

/// Runs MCTS, RS, GA and ES on one fixed instance over every budget and
/// repeat; means are min-max normalized across the whole table. Repeat r
/// of estimator e uses the substream {e, r} of `seed` at every budget.
RaceTable estimator_race(const ScenarioProblem& problem, const DispatchModel& model, double gamma,
                         const RaceConfig& cfg, std::uint64_t seed);

/// Columns: estimator, budget, repeat, raw_value, mean, variance, normalized_mean.
void write_race_csv(const RaceTable& table, const std::filesystem::path& path);

}  // namespace bessd
