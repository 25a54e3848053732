#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bessd/baseline_estimators.hpp"
#include "bessd/battery_model.hpp"
#include "bessd/dispatch_env.hpp"
#include "bessd/network_model.hpp"
#include "bessd/q_learner.hpp"
#include "bessd/rule_engine.hpp"
#include "bessd/tree_search.hpp"

namespace bessd {

/// Where a profile comes from: a CSV file or the synthetic generator.
struct ProfileSpec {
  std::string source = "synthetic";  ///< "synthetic" or "csv"
  std::string path;                  ///< csv only
  std::string season = "summer";
  int days = 3;
  std::uint64_t seed = 1;
};

struct ActionConfig {
  double p_min = -100.0;
  double p_max = 100.0;
  int count = 11;
  std::vector<double> levels;  ///< explicit levels override the uniform grid

  ActionSpace build() const;
};

/// Fixed (s_t, a_t, scenario) instance for the estimator race, cut from the
/// training profile.
struct RaceInstance {
  int decision_row = 17;
  int horizon = 4;
  double soc = 0.6;
  std::size_t action = 5;  ///< index of a_t
};

struct ExperimentConfig {
  std::string preset = "proposed";
  std::string task = "train";  ///< train | race | seasonal
  std::uint64_t seed = 42;
  std::string output_dir = "runs";

  BatteryParams battery;
  double initial_soc = 0.6;
  RewardWeights weights;
  ActionConfig actions;
  RuleSet rules = RuleSet::standard();
  MctsConfig mcts;
  LearnerConfig learner;
  GaConfig ga;
  RaceConfig race;
  RaceInstance race_instance;
  GridLimits grid;
  bool flow_gate = true;

  ProfileSpec train_profile;
  ProfileSpec eval_profile;
  ProfileSpec history;  ///< forecast-error history
  double confidence_level = 0.95;

  std::vector<std::string> seasons{"spring", "summer", "autumn", "winter"};
  std::vector<std::string> seasonal_methods{"proposed", "rules-n1"};

  /// Validates every section; throws ConfigError with the section name.
  void validate() const;
  DispatchModel model() const;
};

/// Names of the built-in presets.
std::vector<std::string> preset_names();

/// Complete JSON document of a built-in preset. Throws ConfigError for an
/// unknown name.
nlohmann::json preset_json(const std::string& name);

/// Resolves `inherits` chains (a preset name) with JSON merge-patch, child
/// keys winning.
nlohmann::json resolve_inheritance(const nlohmann::json& doc);

/// Parses a resolved document; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Loads a config file (or only the preset when `path` is empty); a
/// non-empty `preset` replaces the file's `inherits`.
ExperimentConfig load_config(const std::filesystem::path& path, const std::string& preset);

}  // namespace bessd
