#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "bessd/baseline_estimators.hpp"
#include "bessd/errors.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bessd;

namespace {

ScenarioProblem problem_of(const fixtures::ToyInstance& t, std::uint64_t seed = 1) {
  return ScenarioProblem{t.state, t.action, fixtures::scenarios_for_seed(t.pool, t.deterministic, 1, seed)[0]};
}

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST(RandomSearch, CoversTinyInstanceAndMatchesExhaustive) {
  const auto toy = fixtures::toy_instance(2, 2, false);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ScenarioProblem p = problem_of(toy, seed);
    RngStream rng(seed);
    EXPECT_DOUBLE_EQ(random_search(p, toy.model, 0.9, 10000, rng).value, exhaustive_search(p, toy.model, 0.9).value);
  }
}

TEST(RandomSearch, SingleFeasibleSequenceIsExact) {
  auto toy = fixtures::toy_instance(3, 4, false);
  toy.model.actions = ActionSpace({0.0});
  const ScenarioProblem p = problem_of(toy);
  const double exact = exhaustive_search(p, toy.model, 0.9).value;
  for (long budget : {1L, 10L, 100L}) {
    RngStream rng(budget);
    EXPECT_DOUBLE_EQ(random_search(p, toy.model, 0.9, budget, rng).value, exact);
  }
}

TEST(RandomSearch, BestSoFarIsMonotoneInBudget) {
  const auto toy = fixtures::toy_instance(5, 4);
  const ScenarioProblem p = problem_of(toy);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream rng(seed);
    std::vector<double> trace;
    random_search(p, toy.model, 0.9, 500, rng, &trace);
    ASSERT_EQ(trace.size(), 500u);
    double prev = -1e300;
    double best = -1e300;
    for (double v : trace) {
      best = std::max(best, v);
      EXPECT_GE(best, prev);
      prev = best;
    }
    // a prefix of the same stream is the smaller-budget run
    RngStream again(seed);
    EXPECT_DOUBLE_EQ(random_search(p, toy.model, 0.9, 50, again).value,
                     *std::max_element(trace.begin(), trace.begin() + 50));
  }
}

TEST(ExhaustiveSearch, SingleStepIsImmediateReward) {
  const auto toy = fixtures::toy_instance(3, 1);
  const ScenarioProblem p = problem_of(toy);
  const DispatchState next = transition(p.state, toy.model.actions[p.action], p.steps[0], toy.model.batt);
  const SearchOutcome out = exhaustive_search(p, toy.model, 0.9);
  EXPECT_EQ(out.value, step_reward(p.state, toy.model.actions[p.action], next, toy.model.batt, toy.model.weights).total);
  EXPECT_TRUE(out.sequence.empty());
}

TEST(ExhaustiveSearch, NineSequenceToyMatchesEnumerationOracle) {
  const auto toy = fixtures::toy_instance(3, 3, false);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ScenarioProblem p = problem_of(toy, seed);
    const SearchOutcome out = exhaustive_search(p, toy.model, 0.9);
    EXPECT_EQ(out.evaluations, 9);
    EXPECT_NEAR(out.value, oracle::enumerate_optimum(p.state, p.action, {p.steps}, toy.model, 0.9), 1e-9);
    // every sequence's value, computed independently, is bounded by the optimum
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 3; ++b) {
        const std::vector<std::size_t> seq{a, b};
        EXPECT_LE(evaluate_sequence(p, toy.model, 0.9, seq, 0.0), out.value + 1e-12);
      }
    }
  }
}

TEST(ExhaustiveSearch, ConstantLandscapeReturnsTheCommonValue) {
  auto toy = fixtures::toy_instance(3, 3, false);
  toy.model.weights = RewardWeights{0.0, 0.0, 0.0};
  const ScenarioProblem p = problem_of(toy);
  EXPECT_EQ(exhaustive_search(p, toy.model, 0.9).value, 0.0);
}

TEST(ExhaustiveSearch, GuardAndLimit) {
  const auto toy = fixtures::toy_instance(41, 6, false);  // 41^5 > 1e7
  const ScenarioProblem p = problem_of(toy);
  EXPECT_THROW(exhaustive_search(p, toy.model, 0.9), TooLarge);
  EXPECT_EQ(exhaustive_search(p, toy.model, 0.9, 100).evaluations, 100);
}

TEST(GeneticSearch, CloseToOptimumOnMostSeeds) {
  const auto toy = fixtures::toy_instance(3, 3);
  int within = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ScenarioProblem p = problem_of(toy, seed);
    const double exact = exhaustive_search(p, toy.model, 0.9).value;
    RngStream rng(seed, {5});
    const double ga = genetic_search(p, toy.model, 0.9, 10000, GaConfig{}, rng).value;
    EXPECT_LE(ga, exact + 1e-12);
    within += std::abs(ga - exact) <= 0.05 * std::abs(exact);
  }
  EXPECT_GE(within, 8);
}

TEST(GeneticSearch, FullMutationIsRandomSearchInDistribution) {
  // no rules and a charge state far from both SOC limits: every level is feasible everywhere
  const auto toy = fixtures::toy_instance(5, 4, false);
  const ScenarioProblem p = problem_of(toy);
  GaConfig ga;
  ga.mutation = 1.0;
  ga.elitism = 0;
  std::vector<double> ga_trace, rs_trace;
  RngStream a(1), b(2);
  genetic_search(p, toy.model, 0.9, 1000, ga, a, &ga_trace);
  random_search(p, toy.model, 0.9, 1000, b, &rs_trace);
  ASSERT_EQ(ga_trace.size(), 1000u);
  ASSERT_EQ(rs_trace.size(), 1000u);
  // critical value of the two-sample test at the 1% level
  const double crit = 1.628 * std::sqrt(2.0 / 1000.0);
  EXPECT_LT(ks_statistic(ga_trace, rs_trace), crit);
}

TEST(GeneticSearch, BudgetBelowPopulationRejected) {
  const auto toy = fixtures::toy_instance(3, 3);
  RngStream rng(1);
  EXPECT_THROW(genetic_search(problem_of(toy), toy.model, 0.9, 5, GaConfig{}, rng), InvalidArgument);
  GaConfig bad;
  bad.crossover = 2.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Estimators, RespectTheRuleFilter) {
  const auto toy = fixtures::toy_instance(5, 4);
  const ScenarioProblem p = problem_of(toy);
  RngStream rng(4);
  const SearchOutcome rs = random_search(p, toy.model, 0.9, 200, rng);
  const SearchOutcome es = exhaustive_search(p, toy.model, 0.9);
  RngStream g(5);
  const SearchOutcome gs = genetic_search(p, toy.model, 0.9, 200, GaConfig{}, g);
  for (const SearchOutcome* out : {&rs, &es, &gs}) {
    // replaying the reported sequence needs no repair
    std::vector<std::size_t> repaired;
    const double v = evaluate_sequence(p, toy.model, 0.9, out->sequence, 0.0, &repaired);
    EXPECT_EQ(repaired, out->sequence);
    EXPECT_DOUBLE_EQ(v, out->value);
    EXPECT_LE(out->value, es.value + 1e-12);
  }
}

TEST(EstimatorRace, TableProperties) {
  const auto toy = fixtures::toy_instance(5, 4);
  const ScenarioProblem p = problem_of(toy);
  RaceConfig cfg;
  cfg.budgets = {10, 100, 1000};
  cfg.repeats = 5;
  const RaceTable table = estimator_race(p, toy.model, 0.9, cfg, 42);
  EXPECT_EQ(table.rows.size(), 4u * 3u * 5u);
  double lo = 2.0, hi = -1.0;
  for (const RaceCell& c : table.cells) {
    lo = std::min(lo, c.normalized_mean);
    hi = std::max(hi, c.normalized_mean);
  }
  EXPECT_EQ(lo, 0.0);
  EXPECT_EQ(hi, 1.0);
  const double exact = exhaustive_search(p, toy.model, 0.9).value;
  for (long budget : cfg.budgets) {
    EXPECT_EQ(table.cell("ES", budget).variance, 0.0);
    for (const char* e : {"MCTS", "RS", "GA", "ES"}) EXPECT_LE(table.cell(e, budget).mean, exact + 1e-9);
  }
  EXPECT_THROW(table.cell("ES", 7), InvalidArgument);

  const auto dir = std::filesystem::path(BESSD_TEST_ARTIFACTS) / "baselines";
  std::filesystem::create_directories(dir);
  write_race_csv(table, dir / "race.csv");
  std::ifstream in(dir / "race.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "estimator,budget,repeat,raw_value,mean,variance,normalized_mean");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 60);
}

TEST(EstimatorRace, DeterministicForSeed) {
  const auto toy = fixtures::toy_instance(5, 4);
  const ScenarioProblem p = problem_of(toy);
  RaceConfig cfg;
  cfg.budgets = {10, 100};
  cfg.repeats = 3;
  const RaceTable a = estimator_race(p, toy.model, 0.9, cfg, 7);
  const RaceTable b = estimator_race(p, toy.model, 0.9, cfg, 7);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].raw_value, b.rows[i].raw_value);
}
