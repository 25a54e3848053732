#include "bessd/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

#include "bessd/errors.hpp"

namespace bessd {

using nlohmann::json;

ActionSpace ActionConfig::build() const {
  if (!levels.empty()) return ActionSpace(levels);
  return ActionSpace::uniform(p_min, p_max, count);
}

void ExperimentConfig::validate() const {
  auto section = [](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      throw ConfigError(fmt::format("[{}] {}", name, e.what()));
    }
  };
  if (task != "train" && task != "race" && task != "seasonal") {
    throw ConfigError(fmt::format("[task] unknown task '{}'", task));
  }
  section("battery", [&] { battery.validate(); });
  section("battery", [&] {
    if (!(initial_soc >= battery.soc_min && initial_soc <= battery.soc_max)) {
      throw InvalidArgument("initial_soc outside the battery SOC limits");
    }
  });
  section("weights", [&] { weights.validate(); });
  section("actions", [&] {
    const ActionSpace a = actions.build();
    if (a.levels().front() < battery.p_min_kw - kBoundTolerance ||
        a.levels().back() > battery.p_max_kw + kBoundTolerance) {
      throw InvalidArgument("action levels exceed the battery power limits");
    }
  });
  section("rules", [&] { rules.validate(); });
  section("mcts", [&] { mcts.validate(); });
  section("learner", [&] { learner.validate(); });
  section("ga", [&] { ga.validate(); });
  section("race", [&] {
    if (race.budgets.empty() || race.repeats < 1) throw InvalidArgument("need budgets and repeats >= 1");
    for (long b : race.budgets) EstimatorBudget{b, race.repeats}.validate();
    if (race_instance.horizon < 1 || race_instance.decision_row < 0) {
      throw InvalidArgument("race instance needs horizon >= 1 and decision_row >= 0");
    }
    if (race_instance.action >= actions.build().size()) throw InvalidArgument("race action index out of range");
  });
  section("profiles", [&] {
    for (const ProfileSpec* p : {&train_profile, &eval_profile, &history}) {
      if (p->source != "synthetic" && p->source != "csv") {
        throw InvalidArgument(fmt::format("unknown profile source '{}'", p->source));
      }
      if (p->source == "csv" && p->path.empty()) throw InvalidArgument("csv profile needs a path");
      if (p->days < 1) throw InvalidArgument("profile days must be >= 1");
    }
    if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
      throw InvalidArgument("confidence_level outside (0, 1)");
    }
  });
}

DispatchModel ExperimentConfig::model() const {
  DispatchModel m{battery, weights, actions.build(), std::nullopt};
  if (learner.rules_enabled) m.rules = rules;
  return m;
}

// ------------------------------------------------------------------- json

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(fmt::format("[{}] expected an object", where));
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ConfigError(fmt::format("[{}] unknown key '{}'", where, key));
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("[{}] bad value for '{}': {}", where, key, e.what()));
  }
}

json profile_to_json(const ProfileSpec& p) {
  return {{"source", p.source}, {"path", p.path}, {"season", p.season}, {"days", p.days}, {"seed", p.seed}};
}

ProfileSpec profile_from_json(const json& j, const std::string& where) {
  check_keys(j, {"source", "path", "season", "days", "seed"}, where);
  ProfileSpec p;
  read(j, "source", p.source, where);
  read(j, "path", p.path, where);
  read(j, "season", p.season, where);
  read(j, "days", p.days, where);
  read(j, "seed", p.seed, where);
  return p;
}

std::string kind_name(RuleKind k) { return k == RuleKind::Hard ? "hard" : "soft"; }

std::string predicate_name(RulePredicate p) {
  switch (p) {
    case RulePredicate::SocBand: return "soc_band";
    case RulePredicate::PccBand: return "pcc_band";
    case RulePredicate::PccRamp: return "pcc_ramp";
  }
  return "?";
}

}  // namespace

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["preset"] = c.preset;
  j["task"] = c.task;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  const auto& b = c.battery;
  j["battery"] = {{"self_discharge", b.self_discharge},
                  {"eta_charge", b.eta_charge},
                  {"eta_discharge", b.eta_discharge},
                  {"energy_capacity_kwh", b.energy_capacity_kwh},
                  {"cycles_to_failure", b.cycles_to_failure},
                  {"kappa", b.kappa},
                  {"investment_cost", b.investment_cost},
                  {"soc_min", b.soc_min},
                  {"soc_max", b.soc_max},
                  {"p_min_kw", b.p_min_kw},
                  {"p_max_kw", b.p_max_kw},
                  {"step_hours", b.step_hours}};
  j["initial_soc"] = c.initial_soc;
  j["weights"] = {{"w1", c.weights.w1}, {"w2", c.weights.w2}, {"w3", c.weights.w3}};
  j["actions"] = {{"p_min", c.actions.p_min}, {"p_max", c.actions.p_max},
                  {"count", c.actions.count}, {"levels", c.actions.levels}};
  json rules = json::array();
  for (const auto& r : c.rules.rules) {
    rules.push_back({{"name", r.name}, {"weight", r.weight}, {"kind", kind_name(r.kind)},
                     {"predicate", predicate_name(r.predicate)}});
  }
  j["rules"] = {{"soc_inf", c.rules.soc_inf}, {"soc_sup", c.rules.soc_sup},
                {"pcc_inf", c.rules.pcc_inf}, {"pcc_sup", c.rules.pcc_sup},
                {"p_threshold", c.rules.p_threshold}, {"sigma_k", c.rules.sigma_k},
                {"rules", rules}};
  json mcts = {{"beta", c.mcts.beta},       {"scenarios", c.mcts.scenarios},
               {"budget", c.mcts.budget},   {"normalize_values", c.mcts.normalize_values},
               {"dead_end_penalty", nullptr}};
  if (c.mcts.dead_end_penalty) mcts["dead_end_penalty"] = *c.mcts.dead_end_penalty;
  j["mcts"] = mcts;
  const auto& l = c.learner;
  j["learner"] = {{"epsilon", l.epsilon},
                  {"step_size", l.step_size},
                  {"gamma", l.gamma},
                  {"bootstrap_depth", l.bootstrap_depth},
                  {"episodes", l.episodes},
                  {"rules_enabled", l.rules_enabled},
                  {"warm_start_episodes", l.warm_start_episodes},
                  {"hidden", l.hidden},
                  {"target_scale", l.target_scale},
                  {"weight_limit", l.weight_limit}};
  j["ga"] = {{"population", c.ga.population}, {"tournament", c.ga.tournament},
             {"crossover", c.ga.crossover},   {"mutation", c.ga.mutation},
             {"elitism", c.ga.elitism}};
  j["race"] = {{"budgets", c.race.budgets},
               {"repeats", c.race.repeats},
               {"es_budget_limited", c.race.es_budget_limited},
               {"decision_row", c.race_instance.decision_row},
               {"horizon", c.race_instance.horizon},
               {"soc", c.race_instance.soc},
               {"action", c.race_instance.action}};
  j["grid"] = {{"flow_gate", c.flow_gate},
               {"p_pcc_min_kw", c.grid.p_pcc_min_kw},
               {"p_pcc_max_kw", c.grid.p_pcc_max_kw},
               {"p_dg_min_kw", c.grid.p_dg_min_kw},
               {"p_dg_max_kw", c.grid.p_dg_max_kw}};
  j["profiles"] = {{"train", profile_to_json(c.train_profile)},
                   {"eval", profile_to_json(c.eval_profile)},
                   {"history", profile_to_json(c.history)},
                   {"confidence_level", c.confidence_level}};
  j["seasonal"] = {{"seasons", c.seasons}, {"methods", c.seasonal_methods}};
  return j;
}

ExperimentConfig config_from_json(const json& doc) {
  check_keys(doc, {"preset", "inherits", "task", "seed", "output_dir", "battery", "initial_soc", "weights",
                   "actions", "rules", "mcts", "learner", "ga", "race", "grid", "profiles", "seasonal"},
             "config");
  ExperimentConfig c;
  read(doc, "preset", c.preset, "config");
  read(doc, "task", c.task, "config");
  read(doc, "seed", c.seed, "config");
  read(doc, "output_dir", c.output_dir, "config");
  read(doc, "initial_soc", c.initial_soc, "config");

  if (!doc.contains("battery") || !doc["battery"].contains("kappa")) {
    throw ConfigError("[battery] kappa must be set explicitly");
  }
  {
    const json& j = doc["battery"];
    const std::string w = "battery";
    check_keys(j, {"self_discharge", "eta_charge", "eta_discharge", "energy_capacity_kwh", "cycles_to_failure",
                   "kappa", "investment_cost", "soc_min", "soc_max", "p_min_kw", "p_max_kw", "step_hours"},
               w);
    auto& b = c.battery;
    read(j, "self_discharge", b.self_discharge, w);
    read(j, "eta_charge", b.eta_charge, w);
    read(j, "eta_discharge", b.eta_discharge, w);
    read(j, "energy_capacity_kwh", b.energy_capacity_kwh, w);
    read(j, "cycles_to_failure", b.cycles_to_failure, w);
    read(j, "kappa", b.kappa, w);
    read(j, "investment_cost", b.investment_cost, w);
    read(j, "soc_min", b.soc_min, w);
    read(j, "soc_max", b.soc_max, w);
    read(j, "p_min_kw", b.p_min_kw, w);
    read(j, "p_max_kw", b.p_max_kw, w);
    read(j, "step_hours", b.step_hours, w);
  }
  if (doc.contains("weights")) {
    const json& j = doc["weights"];
    check_keys(j, {"w1", "w2", "w3"}, "weights");
    read(j, "w1", c.weights.w1, "weights");
    read(j, "w2", c.weights.w2, "weights");
    read(j, "w3", c.weights.w3, "weights");
  }
  if (doc.contains("actions")) {
    const json& j = doc["actions"];
    check_keys(j, {"p_min", "p_max", "count", "levels"}, "actions");
    read(j, "p_min", c.actions.p_min, "actions");
    read(j, "p_max", c.actions.p_max, "actions");
    read(j, "count", c.actions.count, "actions");
    read(j, "levels", c.actions.levels, "actions");
  }
  if (doc.contains("rules")) {
    const json& j = doc["rules"];
    const std::string w = "rules";
    check_keys(j, {"soc_inf", "soc_sup", "pcc_inf", "pcc_sup", "p_threshold", "sigma_k", "rules"}, w);
    read(j, "soc_inf", c.rules.soc_inf, w);
    read(j, "soc_sup", c.rules.soc_sup, w);
    read(j, "pcc_inf", c.rules.pcc_inf, w);
    read(j, "pcc_sup", c.rules.pcc_sup, w);
    read(j, "p_threshold", c.rules.p_threshold, w);
    read(j, "sigma_k", c.rules.sigma_k, w);
    if (j.contains("rules")) {
      c.rules.rules.clear();
      for (const auto& r : j["rules"]) {
        check_keys(r, {"name", "weight", "kind", "predicate"}, "rules.rules");
        Rule rule;
        read(r, "name", rule.name, w);
        read(r, "weight", rule.weight, w);
        const std::string kind = r.value("kind", "hard");
        const std::string pred = r.value("predicate", "");
        if (kind != "hard" && kind != "soft") throw ConfigError(fmt::format("[rules] unknown kind '{}'", kind));
        rule.kind = kind == "hard" ? RuleKind::Hard : RuleKind::Soft;
        if (pred == "soc_band") rule.predicate = RulePredicate::SocBand;
        else if (pred == "pcc_band") rule.predicate = RulePredicate::PccBand;
        else if (pred == "pcc_ramp") rule.predicate = RulePredicate::PccRamp;
        else throw ConfigError(fmt::format("[rules] unknown predicate '{}'", pred));
        c.rules.rules.push_back(rule);
      }
    }
  }
  if (doc.contains("mcts")) {
    const json& j = doc["mcts"];
    const std::string w = "mcts";
    check_keys(j, {"beta", "scenarios", "budget", "normalize_values", "dead_end_penalty"}, w);
    read(j, "beta", c.mcts.beta, w);
    read(j, "scenarios", c.mcts.scenarios, w);
    read(j, "budget", c.mcts.budget, w);
    read(j, "normalize_values", c.mcts.normalize_values, w);
    if (j.contains("dead_end_penalty") && !j["dead_end_penalty"].is_null()) {
      double p = 0.0;
      read(j, "dead_end_penalty", p, w);
      c.mcts.dead_end_penalty = p;
    }
  }
  if (doc.contains("learner")) {
    const json& j = doc["learner"];
    const std::string w = "learner";
    check_keys(j, {"epsilon", "step_size", "gamma", "bootstrap_depth", "episodes", "rules_enabled",
                   "warm_start_episodes", "hidden", "target_scale", "weight_limit"},
               w);
    auto& l = c.learner;
    read(j, "epsilon", l.epsilon, w);
    read(j, "step_size", l.step_size, w);
    read(j, "gamma", l.gamma, w);
    read(j, "bootstrap_depth", l.bootstrap_depth, w);
    read(j, "episodes", l.episodes, w);
    read(j, "rules_enabled", l.rules_enabled, w);
    read(j, "warm_start_episodes", l.warm_start_episodes, w);
    read(j, "hidden", l.hidden, w);
    read(j, "target_scale", l.target_scale, w);
    read(j, "weight_limit", l.weight_limit, w);
  }
  // the search horizon and discount follow the learner
  c.mcts.horizon = c.learner.bootstrap_depth;
  c.mcts.gamma = c.learner.gamma;
  if (doc.contains("ga")) {
    const json& j = doc["ga"];
    check_keys(j, {"population", "tournament", "crossover", "mutation", "elitism"}, "ga");
    read(j, "population", c.ga.population, "ga");
    read(j, "tournament", c.ga.tournament, "ga");
    read(j, "crossover", c.ga.crossover, "ga");
    read(j, "mutation", c.ga.mutation, "ga");
    read(j, "elitism", c.ga.elitism, "ga");
  }
  c.race.ga = c.ga;
  c.race.mcts = c.mcts;
  if (doc.contains("race")) {
    const json& j = doc["race"];
    const std::string w = "race";
    check_keys(j, {"budgets", "repeats", "es_budget_limited", "decision_row", "horizon", "soc", "action"}, w);
    read(j, "budgets", c.race.budgets, w);
    read(j, "repeats", c.race.repeats, w);
    read(j, "es_budget_limited", c.race.es_budget_limited, w);
    read(j, "decision_row", c.race_instance.decision_row, w);
    read(j, "horizon", c.race_instance.horizon, w);
    read(j, "soc", c.race_instance.soc, w);
    read(j, "action", c.race_instance.action, w);
  }
  if (doc.contains("grid")) {
    const json& j = doc["grid"];
    const std::string w = "grid";
    check_keys(j, {"flow_gate", "p_pcc_min_kw", "p_pcc_max_kw", "p_dg_min_kw", "p_dg_max_kw"}, w);
    read(j, "flow_gate", c.flow_gate, w);
    read(j, "p_pcc_min_kw", c.grid.p_pcc_min_kw, w);
    read(j, "p_pcc_max_kw", c.grid.p_pcc_max_kw, w);
    read(j, "p_dg_min_kw", c.grid.p_dg_min_kw, w);
    read(j, "p_dg_max_kw", c.grid.p_dg_max_kw, w);
  }
  if (doc.contains("profiles")) {
    const json& j = doc["profiles"];
    check_keys(j, {"train", "eval", "history", "confidence_level"}, "profiles");
    if (j.contains("train")) c.train_profile = profile_from_json(j["train"], "profiles.train");
    if (j.contains("eval")) c.eval_profile = profile_from_json(j["eval"], "profiles.eval");
    if (j.contains("history")) c.history = profile_from_json(j["history"], "profiles.history");
    read(j, "confidence_level", c.confidence_level, "profiles");
  }
  if (doc.contains("seasonal")) {
    const json& j = doc["seasonal"];
    check_keys(j, {"seasons", "methods"}, "seasonal");
    read(j, "seasons", c.seasons, "seasonal");
    read(j, "methods", c.seasonal_methods, "seasonal");
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------- presets

namespace {

ExperimentConfig base_config() {
  ExperimentConfig c;
  auto& b = c.battery;
  b.self_discharge = 0.0;
  b.eta_charge = 0.9;
  b.eta_discharge = 1.0 / 0.9;
  b.energy_capacity_kwh = 500.0;
  // unstated: chosen so a charge-low/sell-high cycle at mid SOC earns more
  // than it costs in degradation under the two-level tariff
  b.cycles_to_failure = 5000.0;
  b.kappa = 3.0;
  b.investment_cost = 1.0e6;  // 2 per Wh on 500 kWh
  b.soc_min = 0.1;
  b.soc_max = 0.95;
  b.p_min_kw = -100.0;
  b.p_max_kw = 100.0;
  b.step_hours = 1.0;
  c.initial_soc = 0.6;
  c.actions = ActionConfig{-100.0, 100.0, 11, {}};
  c.mcts.beta = 0.7;
  c.mcts.scenarios = 4;
  c.mcts.budget = 100;
  c.learner.epsilon = 0.01;
  c.learner.step_size = 0.05;
  c.learner.gamma = 0.95;
  c.learner.bootstrap_depth = 4;
  c.learner.episodes = 60;
  c.learner.warm_start_episodes = 20;
  c.train_profile = ProfileSpec{"synthetic", "", "summer", 3, 1001};
  c.eval_profile = ProfileSpec{"synthetic", "", "summer", 3, 2002};
  c.history = ProfileSpec{"synthetic", "", "summer", 30, 3003};
  c.mcts.horizon = c.learner.bootstrap_depth;
  c.mcts.gamma = c.learner.gamma;
  return c;
}

json patch_for(const std::string& name) {
  if (name == "proposed") return json::object();
  if (name == "no-rules-n4") return {{"inherits", "proposed"}, {"learner", {{"rules_enabled", false}}}};
  if (name == "rules-n1") {
    return {{"inherits", "proposed"}, {"learner", {{"bootstrap_depth", 1}}}};
  }
  if (name == "baseline-race") return {{"inherits", "proposed"}, {"task", "race"}};
  if (name == "seasonal") {
    return {{"inherits", "proposed"},
            {"task", "seasonal"},
            {"learner", {{"episodes", 30}}},
            {"profiles", {{"train", {{"days", 3}}}, {"eval", {{"days", 1}}}}}};
  }
  for (const char* season : {"spring", "summer", "autumn", "winter"}) {
    if (name == std::string("season-") + season) {
      return {{"inherits", "proposed"},
              {"profiles",
               {{"train", {{"season", season}}},
                {"eval", {{"season", season}, {"days", 1}}},
                {"history", {{"season", season}}}}}};
    }
  }
  throw ConfigError(fmt::format("unknown preset '{}'", name));
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"proposed",      "no-rules-n4",   "rules-n1",      "baseline-race", "seasonal",
          "season-spring", "season-summer", "season-autumn", "season-winter"};
}

json resolve_inheritance(const json& doc) {
  json current = doc;
  std::set<std::string> seen;
  while (current.contains("inherits")) {
    const std::string parent = current["inherits"].get<std::string>();
    if (!seen.insert(parent).second) throw ConfigError(fmt::format("inheritance cycle at '{}'", parent));
    json base = parent == "proposed" ? config_to_json(base_config()) : patch_for(parent);
    current.erase("inherits");
    base.merge_patch(current);
    current = std::move(base);
  }
  return current;
}

json preset_json(const std::string& name) {
  json doc = name == "proposed" ? config_to_json(base_config()) : resolve_inheritance(patch_for(name));
  doc["preset"] = name;
  return doc;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::string& preset) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("cannot read config {}", path.string()));
    try {
      in >> doc;
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  if (!preset.empty()) {
    doc["inherits"] = preset;
    doc["preset"] = preset;
  } else if (!doc.contains("inherits")) {
    doc["inherits"] = doc.value("preset", std::string("proposed"));
  }
  const std::string name = doc.contains("preset") ? doc["preset"].get<std::string>()
                                                  : doc["inherits"].get<std::string>();
  // presets other than "proposed" are patches; expand through preset_json
  const std::string parent = doc["inherits"].get<std::string>();
  doc.erase("inherits");
  json base = preset_json(parent);
  base.merge_patch(doc);
  base["preset"] = name;
  return config_from_json(base);
}

}  // namespace bessd
