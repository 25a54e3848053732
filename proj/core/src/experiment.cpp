#include "bessd/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bessd/errors.hpp"
#include "bessd/network_model.hpp"

#ifndef BESSD_GIT_DESCRIBE
#define BESSD_GIT_DESCRIBE "unknown"
#endif

namespace bessd {

std::string build_version() { return BESSD_GIT_DESCRIBE; }

ProfileTimeline materialize(const ProfileSpec& ps) {
  if (ps.source == "csv") return load_profiles(ps.path);
  return synth_profiles(parse_season(ps.season), ps.days, ps.seed);
}

ErrorHistory materialize_history(const ProfileSpec& ps) {
  if (ps.source == "csv") return load_error_history(ps.path);
  return error_history_of(synth_profiles(parse_season(ps.season), ps.days, ps.seed));
}

namespace {

/// Voltage and branch-loading violations of applying `p_b` at `row`.
int flow_violations(const FeederLayout& layout, const ProfileRow& row, double p_b,
                    const ExperimentConfig& cfg) {
  const RadialNetwork net = apply_dispatch(layout, row.p_pv, row.p_ev, row.p_other_load, p_b);
  FlowSolution sol;
  try {
    sol = solve_distflow(net, SolverOptions{});
  } catch (const NonConvergence&) {
    return 1;
  }
  const FeasibilityReport report =
      check_operational(sol, net, cfg.grid, pcc_power(row.p_sum(), p_b), row.p_pv, p_b, cfg.battery);
  return static_cast<int>(std::count_if(report.begin(), report.end(), [](const Violation& v) {
    return v.kind == ConstraintKind::Voltage || v.kind == ConstraintKind::ApparentPower;
  }));
}

}  // namespace

EvaluationResult roll_out(const ActionScorer& scorer, const ProfileTimeline& profile,
                          const ErrorHistory& history, const ExperimentConfig& cfg, int lookahead) {
  const DispatchModel model = cfg.model();
  const TrainingTimeline tl = make_training_timeline(profile, history, cfg.initial_soc, cfg.confidence_level);
  const FeederLayout layout = demo_feeder();
  EvaluationResult out;
  DispatchState state = tl.initial_state();
  for (std::size_t t = 0; t + 1 < tl.size(); ++t) {
    const ScenarioPool pool = tl.pool_at(t, lookahead);
    const std::vector<std::size_t> feasible =
        filter_with_fallback(state, model.actions, pool.mean[0], model.rules_ptr(), model.batt).actions;
    const std::vector<double> scores = scorer(state, feasible, pool);
    if (scores.size() != feasible.size()) throw InvalidArgument("roll_out: scorer returned the wrong count");

    std::vector<std::size_t> order(feasible.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::size_t chosen = feasible[order.front()];
    int violations = 0;
    if (cfg.flow_gate) {
      violations = -1;
      for (std::size_t k : order) {
        const int v = flow_violations(layout, profile.rows[t + 1], model.actions[feasible[k]], cfg);
        if (v == 0) {
          chosen = feasible[k];
          violations = 0;
          break;
        }
      }
      if (violations < 0) {
        violations = flow_violations(layout, profile.rows[t + 1], model.actions[chosen], cfg);
      }
      if (chosen != feasible[order.front()] || violations > 0) ++out.gate_overrides;
    }

    const double p_b = model.actions[chosen];
    const DispatchState next = transition(state, p_b, tl.realized[t + 1], model.batt);
    const RewardBreakdown r = step_reward(state, p_b, next, model.batt, model.weights);
    out.trace.push_back(TraceRow{static_cast<int>(t), state.soc, p_b, next.p_pcc, next.p_pcc_set, r.revenue,
                                 r.degradation, r.tracking, r.total, violations});
    state = next;
  }
  out.metrics = compute_metrics(out.trace);
  return out;
}

EvaluationResult evaluate_policy(const QNetwork& net, const ProfileTimeline& profile,
                                 const ErrorHistory& history, const ExperimentConfig& cfg) {
  const ActionSpace actions = cfg.actions.build();
  auto scorer = [&](const DispatchState& s, std::span<const std::size_t> feasible, const ScenarioPool& pool) {
    std::vector<double> q;
    q.reserve(feasible.size());
    for (std::size_t a : feasible) q.push_back(q_value(net, s, actions[a], pool));
    return q;
  };
  return roll_out(scorer, profile, history, cfg, net.encoder().lookahead());
}

EvaluationResult simulate_constant(double p_b_kw, const ProfileTimeline& profile,
                                   const ErrorHistory& history, const ExperimentConfig& cfg) {
  const ActionSpace actions = cfg.actions.build();
  auto scorer = [&](const DispatchState&, std::span<const std::size_t> feasible, const ScenarioPool&) {
    std::vector<double> s;
    for (std::size_t a : feasible) s.push_back(-std::abs(actions[a] - p_b_kw));
    return s;
  };
  return roll_out(scorer, profile, history, cfg, 1);
}

ScenarioProblem race_problem(const ExperimentConfig& cfg) {
  const DispatchModel model = cfg.model();
  const ProfileTimeline profile = materialize(cfg.train_profile);
  const TrainingTimeline tl =
      make_training_timeline(profile, materialize_history(cfg.history), cfg.initial_soc, cfg.confidence_level);
  const auto row = static_cast<std::size_t>(cfg.race_instance.decision_row);
  const auto n = static_cast<std::size_t>(cfg.race_instance.horizon);
  if (row + n >= tl.size()) {
    throw ConfigError(fmt::format("[race] decision_row {} + horizon {} exceeds the {}-row profile", row, n, tl.size()));
  }
  ScenarioProblem p;
  p.state = tl.initial_state();
  const ExogenousStep& ex = tl.realized[row];
  p.state.soc = cfg.race_instance.soc;
  p.state.p_sum = ex.p_sum;
  p.state.tariff_sell = ex.tariff_sell;
  p.state.tariff_buy = ex.tariff_buy;
  p.state.p_pcc_set = ex.p_pcc_set;
  p.state.p_pcc = pcc_power(ex.p_sum, 0.0);
  p.state.t = static_cast<int>(row);
  p.action = cfg.race_instance.action;
  if (!physically_admissible(p.state, model.actions[p.action], model.batt)) {
    throw ConfigError("[race] a_t is not physically admissible at the race state");
  }
  const ScenarioPool pool = tl.pool_at(row, static_cast<int>(n));
  RngStream rng(cfg.seed, {0x7ace});
  p.steps = scenario_steps(sample_trajectory(pool, rng), tl.lookahead(row, n));
  return p;
}

TrainEvalOutcome train_and_evaluate(const ExperimentConfig& cfg) {
  const ErrorHistory history = materialize_history(cfg.history);
  const ProfileTimeline train_profile = materialize(cfg.train_profile);
  const TrainingTimeline tl = make_training_timeline(train_profile, history, cfg.initial_soc, cfg.confidence_level);
  TrainEvalOutcome out;
  out.training = train(tl, cfg.learner, cfg.mcts, cfg.model(), cfg.seed);
  out.evaluation = evaluate_policy(out.training.net, materialize(cfg.eval_profile), history, cfg);
  return out;
}

std::vector<SeasonalRow> seasonal_comparison(const ExperimentConfig& cfg) {
  std::vector<SeasonalRow> rows;
  for (const auto& season : cfg.seasons) {
    for (const auto& method : cfg.seasonal_methods) {
      nlohmann::json doc = preset_json(method);
      nlohmann::json patch = {
          {"seed", cfg.seed},
          {"learner", {{"episodes", cfg.learner.episodes}}},
          {"profiles",
           {{"train", {{"season", season}, {"days", cfg.train_profile.days}, {"seed", cfg.train_profile.seed}}},
            {"eval", {{"season", season}, {"days", cfg.eval_profile.days}, {"seed", cfg.eval_profile.seed}}},
            {"history", {{"season", season}, {"days", cfg.history.days}, {"seed", cfg.history.seed}}}}}};
      doc.merge_patch(patch);
      const ExperimentConfig run = config_from_json(doc);
      rows.push_back(SeasonalRow{season, method, train_and_evaluate(run).evaluation.metrics});
    }
  }
  return rows;
}

void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                    const std::vector<std::string>& files) {
  nlohmann::json m;
  m["preset"] = cfg.preset;
  m["task"] = cfg.task;
  m["seed"] = cfg.seed;
  m["version"] = build_version();
  m["config"] = "config.json";
  const char* command = cfg.task == "race" ? "compare-estimators" : "train";
  m["rerun"] = fmt::format("bessd {} --config config.json --seed {}", command, cfg.seed);
  m["files"] = files;
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw IoError(fmt::format("cannot write manifest in {}", out_dir.string()));
  out << m.dump(2) << '\n';
}

namespace {

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << '\n';
}

void run_task(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  std::vector<std::string> files{"config.json"};
  write_json(config_to_json(cfg), dir / "config.json");

  if (cfg.task == "train") {
    const TrainEvalOutcome r = train_and_evaluate(cfg);
    {
      std::ofstream out(dir / "learning_curve.csv");
      if (!out) throw IoError("cannot write learning_curve.csv");
      out << "episode,cumulative_reward\n";
      for (std::size_t e = 0; e < r.training.learning_curve.size(); ++e) {
        out << fmt::format("{},{:.17g}\n", e, r.training.learning_curve[e]);
      }
    }
    save_weights(r.training.net, dir / "weights.json");
    write_trace_csv(r.evaluation.trace, dir / "trace.csv");
    write_metrics_csv(r.evaluation.metrics, cfg.preset, dir / "metrics.csv");
    files.insert(files.end(), {"learning_curve.csv", "weights.json", "trace.csv", "metrics.csv"});
  } else if (cfg.task == "race") {
    const ScenarioProblem problem = race_problem(cfg);
    RaceConfig race = cfg.race;
    race.mcts = cfg.mcts;
    race.ga = cfg.ga;
    const RaceTable table = estimator_race(problem, cfg.model(), cfg.learner.gamma, race, cfg.seed);
    write_race_csv(table, dir / "race.csv");
    std::ofstream out(dir / "race_summary.csv");
    if (!out) throw IoError("cannot write race_summary.csv");
    out << "estimator,budget,mean,variance,normalized_mean\n";
    for (const auto& c : table.cells) {
      out << fmt::format("{},{},{:.17g},{:.17g},{:.17g}\n", c.estimator, c.budget, c.mean, c.variance,
                         c.normalized_mean);
    }
    files.insert(files.end(), {"race.csv", "race_summary.csv"});
  } else {
    const auto rows = seasonal_comparison(cfg);
    std::ofstream out(dir / "seasonal_summary.csv");
    if (!out) throw IoError("cannot write seasonal_summary.csv");
    out << "season,method,net_revenue,pcc_sd,electricity_revenue,degradation_cost\n";
    for (const auto& r : rows) {
      out << fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.season, r.method, r.metrics.net_revenue,
                         r.metrics.pcc_sd, r.metrics.electricity_revenue, r.metrics.degradation_cost);
    }
    files.push_back("seasonal_summary.csv");
  }
  files.push_back("manifest.json");
  write_manifest(cfg, dir, files);
}

}  // namespace

void run_preset(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", out_dir.string(), ec.message()));
  try {
    run_task(cfg, out_dir);
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("preset '{}' task '{}' seed {}: {}", cfg.preset, cfg.task, cfg.seed, e.what()));
  }
}

}  // namespace bessd
