// Micro benchmarks of the hot paths: single-scenario tree search, the
// distribution power flow and the rule filter.

#include <benchmark/benchmark.h>

#include "bessd/config.hpp"
#include "bessd/experiment.hpp"
#include "bessd/network_model.hpp"
#include "bessd/rule_engine.hpp"
#include "bessd/tree_search.hpp"

namespace {

void BM_SearchScenario(benchmark::State& state) {
  const bessd::ExperimentConfig cfg = bessd::config_from_json(bessd::preset_json("baseline-race"));
  const bessd::ScenarioProblem problem = bessd::race_problem(cfg);
  const bessd::DispatchModel model = cfg.model();
  bessd::MctsConfig mcts = cfg.mcts;
  mcts.budget = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    bessd::RngStream rng(seed++);
    benchmark::DoNotOptimize(bessd::search_scenario(problem, model, mcts, rng).value);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SearchScenario)->Arg(100)->Arg(1000)->Arg(10000);

void BM_Distflow(benchmark::State& state) {
  const bessd::FeederLayout layout = bessd::demo_feeder();
  const bessd::RadialNetwork net = bessd::apply_dispatch(layout, 40.0, 35.0, 60.0, -50.0);
  for (auto _ : state) benchmark::DoNotOptimize(bessd::solve_distflow(net).v_pu.back());
}
BENCHMARK(BM_Distflow);

void BM_RuleFilter(benchmark::State& state) {
  const bessd::ExperimentConfig cfg = bessd::config_from_json(bessd::preset_json("proposed"));
  const bessd::ActionSpace actions = cfg.actions.build();
  const bessd::RuleSet rules = bessd::RuleSet::standard();
  bessd::DispatchState s;
  s.soc = 0.6;
  s.p_pcc = 50.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        bessd::filter_with_fallback(s, actions, -60.0, &rules, cfg.battery).actions.size());
  }
}
BENCHMARK(BM_RuleFilter);

}  // namespace
BENCHMARK_MAIN();
