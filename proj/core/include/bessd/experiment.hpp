#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bessd/baseline_estimators.hpp"
#include "bessd/config.hpp"
#include "bessd/metrics.hpp"
#include "bessd/profiles.hpp"
#include "bessd/q_learner.hpp"

namespace bessd {

/// Scores for the feasible actions (same order as `feasible`); the rollout
/// takes the highest score that passes the flow gate.
using ActionScorer = std::function<std::vector<double>(
    const DispatchState& state, std::span<const std::size_t> feasible, const ScenarioPool& pool)>;

struct EvaluationResult {
  DispatchMetrics metrics;
  std::vector<TraceRow> trace;
  int gate_overrides = 0;  ///< steps where the top-scored action failed the flow gate
};

/// Rolls a scorer over the realized profile. Each decision filters the
/// actions with the rules (if enabled) against the forecast pool mean, and
/// with the flow gate on, rejects actions whose power flow on the demo
/// feeder breaks a voltage or branch limit.
EvaluationResult roll_out(const ActionScorer& scorer, const ProfileTimeline& profile,
                          const ErrorHistory& history, const ExperimentConfig& cfg, int lookahead);

/// Greedy (epsilon = 0) rollout of a trained network.
EvaluationResult evaluate_policy(const QNetwork& net, const ProfileTimeline& profile,
                                 const ErrorHistory& history, const ExperimentConfig& cfg);

/// Rollout of a fixed battery power: the feasible level closest to `p_b_kw`.
EvaluationResult simulate_constant(double p_b_kw, const ProfileTimeline& profile,
                                   const ErrorHistory& history, const ExperimentConfig& cfg);

/// Builds the profile a ProfileSpec points at (synthetic or CSV).
ProfileTimeline materialize(const ProfileSpec& ps);
ErrorHistory materialize_history(const ProfileSpec& ps);

/// Fixed race instance cut from the training profile: the state at
/// `decision_row`, a_t, and one scenario sampled from the pool there.
ScenarioProblem race_problem(const ExperimentConfig& cfg);

struct TrainEvalOutcome {
  TrainingResult training;
  EvaluationResult evaluation;
};

/// Trains on the config's training profile and evaluates greedily on its
/// evaluation profile.
TrainEvalOutcome train_and_evaluate(const ExperimentConfig& cfg);

struct SeasonalRow {
  std::string season;
  std::string method;
  DispatchMetrics metrics;
};

/// Paired train/evaluate runs per season and method preset.
std::vector<SeasonalRow> seasonal_comparison(const ExperimentConfig& cfg);

/// Executes the config's task and writes its artifacts into `out_dir`:
/// config.json and manifest.json always; learning_curve.csv, weights.json,
/// trace.csv and metrics.csv for training; race.csv and race_summary.csv for
/// the race; seasonal_summary.csv for the seasonal comparison. Module errors
/// are rethrown with the preset and task in the message.
void run_preset(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Writes manifest.json: preset, task, seed, version string and file list.
void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                    const std::vector<std::string>& files);

/// `git describe` of the build.
std::string build_version();

}  // namespace bessd
