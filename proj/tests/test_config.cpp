#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <functional>

#include "roiedge/config.hpp"

using namespace roiedge;

namespace {

const std::filesystem::path kBundled = std::filesystem::path(ROIEDGE_SOURCE_DIR) / "scenarios" / "bundled";

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, DefaultsValidate) {
  const auto c = default_config();
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(c.scenario.fps, 30);
  EXPECT_EQ(c.policy.rates.values(), (std::vector<double>{0.25, 0.5, 0.75, 1.0}));
}

TEST(Config, UnknownKeysRejected) {
  EXPECT_NE(message_of([] { default_config({"polcy.omega=0.2"}); }).find("polcy"), std::string::npos);
  EXPECT_NE(message_of([] { default_config({"policy.omgea=0.2"}); }).find("policy.omgea"), std::string::npos);
  EXPECT_THROW(default_config({"roi.cost.latency_ms=1"}), ConfigError);
}

TEST(Config, OverridesParseAsJson) {
  const auto c = default_config({"policy.omega=0.25", "policy.solver=brute_force", "policy.rate_override=0.5",
                                 "oracle.f1_mode=\"global\"", "sweep.bandwidths_mbps=[30,10]"});
  EXPECT_DOUBLE_EQ(c.policy.omega, 0.25);
  EXPECT_EQ(c.policy.solver, Solver::kBruteForce);
  EXPECT_EQ(c.policy.rate_override, 0.5);
  EXPECT_EQ(c.oracle.f1_mode, F1Mode::kGlobal);
  EXPECT_EQ(c.sweep.bandwidths_mbps, (std::vector<double>{30, 10}));
  EXPECT_FALSE(default_config({"policy.rate_override=null"}).policy.rate_override);
}

TEST(Config, BadValuesRejected) {
  EXPECT_THROW(default_config({"policy.omega=-1"}), ConfigError);
  EXPECT_THROW(default_config({"roi.heat_threshold=1.5"}), ConfigError);
  EXPECT_THROW(default_config({"policy.solver=annealing"}), ConfigError);
  EXPECT_THROW(default_config({"policy.rates=[0.5,0.25,1.0]"}), Error);
  EXPECT_THROW(default_config({"policy.omega=\"high\""}), ConfigError);
  EXPECT_THROW(default_config({"no_equals_sign"}), ConfigError);
  EXPECT_THROW(default_config({"link.loss_rate=2"}), ConfigError);
}

TEST(Config, MissingFileIsIoError) {
  const auto msg = message_of([] { load_config("/nonexistent/roiedge.json"); });
  EXPECT_NE(msg.find("/nonexistent/roiedge.json"), std::string::npos);
  EXPECT_THROW(load_config("/nonexistent/roiedge.json"), IoError);
}

TEST(Config, RelativePathsResolveAgainstConfigDir) {
  const auto c = load_config(kBundled / "config.json");
  EXPECT_EQ(c.resolve(c.scenario.ground_truth), kBundled / "ground_truth.jsonl");
  EXPECT_EQ(c.resolve(""), std::filesystem::path());
}

TEST(Config, EffectiveConfigRoundTrips) {
  const auto c = load_config(kBundled / "config.json", {"policy.omega=0.3", "link.loss_rate=0.1"});
  const auto j = config_to_json(c, true);
  const auto again = config_from_json(j, "/somewhere/else");
  EXPECT_EQ(config_to_json(again, true), j);
  EXPECT_EQ(again.resolve(again.scenario.ground_truth), kBundled / "ground_truth.jsonl");

  const auto dir = std::filesystem::temp_directory_path() / "roiedge_tests" / "config";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "effective.json") << j.dump(2);
  EXPECT_EQ(config_to_json(load_config(dir / "effective.json"), true), j);
}
