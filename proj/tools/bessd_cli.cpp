// bessd: command-line front end of the dispatch lab.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bessd/config.hpp"
#include "bessd/errors.hpp"
#include "bessd/experiment.hpp"
#include "bessd/profiles.hpp"

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string preset;
};

int emit_error(const std::string& command, const std::string& kind, const std::string& message, int code) {
  nlohmann::json rec = {{"status", "error"}, {"command", command}, {"kind", kind}, {"message", message},
                        {"exit_code", code}};
  std::cerr << rec.dump() << std::endl;
  return code;
}

bessd::ExperimentConfig resolve(const Globals& g, const std::string& default_preset) {
  bessd::ExperimentConfig cfg =
      bessd::load_config(g.config, g.preset.empty() && g.config.empty() ? default_preset : g.preset);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.output_dir = g.out;
  return cfg;
}

fs::path run_dir(const bessd::ExperimentConfig& cfg, const Globals& g) {
  return g.out.empty() ? fs::path(cfg.output_dir) / cfg.preset : fs::path(g.out);
}

void print_ok(const std::string& command, const fs::path& dir, nlohmann::json extra = nlohmann::json::object()) {
  extra["status"] = "ok";
  extra["command"] = command;
  extra["out"] = dir.string();
  std::cout << extra.dump() << std::endl;
}

nlohmann::json metrics_json(const bessd::DispatchMetrics& m) {
  return {{"electricity_revenue", m.electricity_revenue}, {"degradation_cost", m.degradation_cost},
          {"net_revenue", m.net_revenue}, {"pcc_sd", m.pcc_sd}, {"steps", m.steps}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microgrid battery dispatch lab: rule-filtered MCTS n-step Q-learning and baselines"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Globals g;
  app.add_option("--config", g.config, "JSON config file (may name a preset via \"inherits\")");
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--preset", g.preset, "built-in preset: " + [] {
    std::string s;
    for (const auto& n : bessd::preset_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }());

  auto* simulate = app.add_subcommand("simulate", "roll a fixed battery power over the evaluation profile");
  double power = 0.0;
  simulate->add_option("--power", power, "battery power in kW (positive discharges)");

  auto* train = app.add_subcommand("train", "train and evaluate a preset (proposed, ablations, seasonal)");
  auto* evaluate = app.add_subcommand("evaluate", "greedy evaluation of trained weights");
  std::string weights;
  evaluate->add_option("--weights", weights, "weights.json written by train")->required();
  auto* race = app.add_subcommand("compare-estimators", "race MCTS against RS, GA and ES");
  auto* synth = app.add_subcommand("synth", "write a synthetic profile and its forecast-error history");
  std::string season = "summer";
  int days = 3;
  synth->add_option("--season", season, "spring, summer, autumn or winter");
  synth->add_option("--days", days, "number of days");

  std::string command = "bessd";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return emit_error(command, "UsageError", e.what(), 64);
  }
  for (auto* sub : app.get_subcommands()) command = sub->get_name();

  try {
    if (*synth) {
      const std::uint64_t seed = g.seed.value_or(1);
      const fs::path dir = g.out.empty() ? fs::path("synth") : fs::path(g.out);
      fs::create_directories(dir);
      const bessd::Season s = bessd::parse_season(season);
      bessd::write_profiles(bessd::synth_profiles(s, days, seed), dir / "profile.csv");
      // error history from an independent stretch of the same generator
      bessd::write_error_history(
          bessd::error_history_of(bessd::synth_profiles(s, 30, bessd::derive_seed(seed, {1}))),
          dir / "error_history.csv");
      print_ok(command, dir, {{"files", {"profile.csv", "error_history.csv"}}});
    } else if (*simulate) {
      bessd::ExperimentConfig cfg = resolve(g, "proposed");
      const fs::path dir = run_dir(cfg, g);
      fs::create_directories(dir);
      const auto r = bessd::simulate_constant(power, bessd::materialize(cfg.eval_profile),
                                              bessd::materialize_history(cfg.history), cfg);
      bessd::write_trace_csv(r.trace, dir / "trace.csv");
      bessd::write_metrics_csv(r.metrics, "constant", dir / "metrics.csv");
      print_ok(command, dir, {{"metrics", metrics_json(r.metrics)}});
    } else if (*train) {
      bessd::ExperimentConfig cfg = resolve(g, "proposed");
      const fs::path dir = run_dir(cfg, g);
      bessd::run_preset(cfg, dir);
      print_ok(command, dir, {{"preset", cfg.preset}, {"task", cfg.task}});
    } else if (*evaluate) {
      bessd::ExperimentConfig cfg = resolve(g, "proposed");
      const fs::path dir = run_dir(cfg, g);
      fs::create_directories(dir);
      const bessd::QNetwork net = bessd::load_weights(weights);
      const auto r = bessd::evaluate_policy(net, bessd::materialize(cfg.eval_profile),
                                            bessd::materialize_history(cfg.history), cfg);
      bessd::write_trace_csv(r.trace, dir / "trace.csv");
      bessd::write_metrics_csv(r.metrics, cfg.preset, dir / "metrics.csv");
      print_ok(command, dir, {{"metrics", metrics_json(r.metrics)}});
    } else if (*race) {
      bessd::ExperimentConfig cfg = resolve(g, "baseline-race");
      cfg.task = "race";
      const fs::path dir = run_dir(cfg, g);
      bessd::run_preset(cfg, dir);
      print_ok(command, dir, {{"preset", cfg.preset}});
    }
  } catch (const bessd::Error& e) {
    return emit_error(command, std::string(bessd::to_string(e.kind())), e.what(), 2);
  } catch (const std::exception& e) {
    return emit_error(command, "InternalError", e.what(), 1);
  }
  return 0;
}
