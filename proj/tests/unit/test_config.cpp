#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "bessd/config.hpp"
#include "bessd/errors.hpp"

using namespace bessd;
using nlohmann::json;

namespace {

std::filesystem::path artifact_dir() {
  const auto dir = std::filesystem::path(BESSD_TEST_ARTIFACTS) / "config";
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path write_json(const std::string& name, const json& j) {
  const auto path = artifact_dir() / name;
  std::ofstream(path) << j.dump(2);
  return path;
}

}  // namespace

TEST(Presets, EveryPresetParsesAndValidates) {
  for (const std::string& name : preset_names()) {
    const ExperimentConfig c = config_from_json(preset_json(name));
    EXPECT_EQ(c.preset, name);
    EXPECT_NO_THROW(c.validate());
    EXPECT_NO_THROW(c.model().validate());
  }
  EXPECT_THROW(preset_json("no-such-preset"), ConfigError);
}

TEST(Presets, AblationsDifferOnlyInTheirSwitch) {
  const ExperimentConfig proposed = config_from_json(preset_json("proposed"));
  const ExperimentConfig no_rules = config_from_json(preset_json("no-rules-n4"));
  const ExperimentConfig one_step = config_from_json(preset_json("rules-n1"));
  EXPECT_TRUE(proposed.learner.rules_enabled);
  EXPECT_EQ(proposed.learner.bootstrap_depth, 4);
  EXPECT_EQ(proposed.learner.epsilon, 0.01);
  EXPECT_EQ(proposed.mcts.beta, 0.7);
  EXPECT_FALSE(no_rules.learner.rules_enabled);
  EXPECT_EQ(no_rules.learner.bootstrap_depth, 4);
  EXPECT_TRUE(one_step.learner.rules_enabled);
  EXPECT_EQ(one_step.learner.bootstrap_depth, 1);
  EXPECT_EQ(no_rules.seed, proposed.seed);
  EXPECT_EQ(one_step.learner.episodes, proposed.learner.episodes);
  EXPECT_EQ(config_from_json(preset_json("baseline-race")).task, "race");
  EXPECT_EQ(config_from_json(preset_json("seasonal")).task, "seasonal");
}

TEST(Config, JsonRoundTrip) {
  for (const std::string& name : preset_names()) {
    const ExperimentConfig c = config_from_json(preset_json(name));
    const json once = config_to_json(c);
    EXPECT_EQ(config_to_json(config_from_json(once)), once) << name;
  }
}

TEST(Config, InheritanceChildKeysWin) {
  const json doc = {{"inherits", "rules-n1"}, {"seed", 7}, {"mcts", {{"budget", 33}}}};
  const ExperimentConfig c = config_from_json(resolve_inheritance(doc));
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.mcts.budget, 33);
  EXPECT_EQ(c.learner.bootstrap_depth, 1);            // from rules-n1
  EXPECT_EQ(c.mcts.beta, 0.7);                         // from proposed
}

TEST(Config, LoadFileWithPresetOverride) {
  const auto path = write_json("override.json", {{"inherits", "proposed"}, {"seed", 99}});
  const ExperimentConfig from_file = load_config(path, "");
  EXPECT_EQ(from_file.seed, 99u);
  EXPECT_TRUE(from_file.learner.rules_enabled);
  const ExperimentConfig overridden = load_config(path, "no-rules-n4");
  EXPECT_EQ(overridden.seed, 99u);
  EXPECT_FALSE(overridden.learner.rules_enabled);
  EXPECT_EQ(overridden.preset, "no-rules-n4");
  EXPECT_EQ(load_config("", "rules-n1").learner.bootstrap_depth, 1);
}

TEST(Config, ErrorsNameTheSection) {
  auto expect_section = [](const json& doc, const std::string& section) {
    try {
      config_from_json(resolve_inheritance(doc));
      ADD_FAILURE() << "accepted " << doc.dump();
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(section), std::string::npos) << e.what();
    }
  };
  expect_section({{"inherits", "proposed"}, {"mcts", {{"bogus", 1}}}}, "mcts");
  expect_section({{"inherits", "proposed"}, {"learner", {{"epsilon", 2.0}}}}, "learner");
  expect_section({{"inherits", "proposed"}, {"battery", {{"soc_min", 0.9}, {"soc_max", 0.2}}}}, "battery");
  expect_section({{"inherits", "proposed"}, {"task", "dance"}}, "task");
  expect_section({{"inherits", "proposed"}, {"mcts", {{"budget", "many"}}}}, "mcts");
  EXPECT_THROW(config_from_json(resolve_inheritance({{"inherits", "nope"}})), ConfigError);
}

TEST(Config, MalformedOrMissingFile) {
  const auto bad = artifact_dir() / "bad.json";
  std::ofstream(bad) << "{ not json";
  EXPECT_THROW(load_config(bad, ""), ConfigError);
  EXPECT_THROW(load_config(artifact_dir() / "absent.json", ""), IoError);
}

TEST(Config, ActionGrid) {
  ActionConfig a{-100.0, 100.0, 11, {}};
  const ActionSpace s = a.build();
  EXPECT_EQ(s.size(), 11u);
  EXPECT_EQ(s[0], -100.0);
  EXPECT_EQ(s[5], 0.0);
  EXPECT_EQ(s[10], 100.0);
  a.levels = {-5.0, 0.0, 5.0};
  EXPECT_EQ(a.build().size(), 3u);
  a.levels = {-5.0, 5.0};  // the idle level is mandatory
  EXPECT_THROW(a.build(), InvalidArgument);
}
