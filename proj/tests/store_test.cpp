#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "abbel/metrics.hpp"
#include "abbel/oracle_agent.hpp"
#include "abbel/store.hpp"
#include "support.hpp"

namespace abbel {
namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& line : lines) out << line << '\n';
}

class StoreTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto config = preset_config("lock-train");
    prompts = default_prompts(config);
    policy = std::make_shared<Gateway>(std::make_shared<OracleAgentBackend>(config, prompts));
    std::vector<Task> tasks;
    for (int i = 0; i < 20; ++i) {
      tasks.push_back({config, 1000 + i * 13, 0});
      tasks.push_back({config, 1000 + i * 13, 1});
    }
    trajectories = run_batch(tasks, prompts, *policy, {Regime::kAbbel}, 1);
    ReferenceBeliefParser parser;
    groups = build_groups_batch(trajectories, *policy, prompts, parser, {}, 1);
    rewards = compute_rewards(trajectories);
  }

  std::string error_of(const std::function<void()>& fn) {
    try {
      fn();
    } catch (const StoreError& e) {
      return e.what();
    }
    return "";
  }

  testing::TempDir dir;
  PromptSet prompts;
  std::shared_ptr<Gateway> policy;
  std::vector<Trajectory> trajectories;
  std::vector<BeliefGroup> groups;
  std::vector<RewardRecord> rewards;
};

TEST_F(StoreTest, TrajectoriesRoundTrip) {
  const auto path = dir / "traj.jsonl";
  save_trajectories(trajectories, path);
  EXPECT_EQ(read_lines(path).size(), 40u);
  EXPECT_EQ(load_trajectories(path), trajectories);
  for (const auto& line : read_lines(path)) {
    const auto record = nlohmann::json::parse(line);
    EXPECT_EQ(record.at("schema_version"), kSchemaVersion);
  }
}

TEST_F(StoreTest, GroupsAndRewardsRoundTrip) {
  save_groups(groups, dir / "groups.jsonl");
  save_rewards(rewards, dir / "rewards.jsonl");
  EXPECT_EQ(load_groups(dir / "groups.jsonl"), groups);
  EXPECT_EQ(load_rewards(dir / "rewards.jsonl"), rewards);
}

TEST_F(StoreTest, RawTextIsStoredVerbatim) {
  auto odd = trajectories;
  odd[0].steps[0].action_raw = "  <think>\ttabs, \"quotes\" and ünïcode </think>\n<action>x</action>  ";
  save_trajectories(odd, dir / "odd.jsonl");
  EXPECT_EQ(load_trajectories(dir / "odd.jsonl")[0].steps[0].action_raw, odd[0].steps[0].action_raw);
}

TEST_F(StoreTest, AggregateAfterLoadMatches) {
  save_trajectories(trajectories, dir / "traj.jsonl");
  EXPECT_EQ(aggregate(load_trajectories(dir / "traj.jsonl")), aggregate(trajectories));
}

TEST_F(StoreTest, CorruptLineIsNamed) {
  const auto path = dir / "traj.jsonl";
  save_trajectories(trajectories, path);
  auto lines = read_lines(path);
  lines[6] = lines[6].substr(0, lines[6].size() / 2);
  write_lines(path, lines);
  const auto message = error_of([&] { load_trajectories(path); });
  EXPECT_NE(message.find(":7"), std::string::npos) << message;
}

TEST_F(StoreTest, MissingFieldIsNamed) {
  const auto path = dir / "traj.jsonl";
  save_trajectories(trajectories, path);
  auto lines = read_lines(path);
  auto record = nlohmann::json::parse(lines[2]);
  record.erase("secret");
  lines[2] = record.dump();
  write_lines(path, lines);
  const auto message = error_of([&] { load_trajectories(path); });
  EXPECT_NE(message.find(":3"), std::string::npos) << message;
}

TEST_F(StoreTest, SchemaVersionMismatch) {
  const auto path = dir / "traj.jsonl";
  save_trajectories(trajectories, path);
  auto lines = read_lines(path);
  auto record = nlohmann::json::parse(lines[0]);
  record["schema_version"] = kSchemaVersion + 1;
  lines[0] = record.dump();
  write_lines(path, lines);
  EXPECT_THROW(load_trajectories(path), SchemaVersionError);
}

TEST_F(StoreTest, InconsistentTrajectoryIsRejected) {
  auto bad = trajectories;
  bad[0].env_steps_taken += 1;
  save_trajectories(bad, dir / "bad.jsonl");
  EXPECT_THROW(load_trajectories(dir / "bad.jsonl"), StoreError);
}

TEST_F(StoreTest, TamperedGroupHashIsRejected) {
  auto bad = groups;
  bad[0].context_hash ^= 1;
  save_groups(bad, dir / "groups.jsonl");
  EXPECT_THROW(load_groups(dir / "groups.jsonl"), StoreError);
}

TEST_F(StoreTest, WrongRecordKindIsRejected) {
  save_rewards(rewards, dir / "rewards.jsonl");
  EXPECT_THROW(load_trajectories(dir / "rewards.jsonl"), StoreError);
}

TEST_F(StoreTest, MissingFileIsAnError) {
  EXPECT_THROW(load_trajectories(dir / "nope.jsonl"), StoreError);
}

TEST_F(StoreTest, ExportGroupsTrajectoriesWithTheirBeliefGroups) {
  const auto path = dir / "batch.jsonl";
  export_training_batch(trajectories, groups, rewards, path);
  const auto summary = read_training_batch(path);
  EXPECT_EQ(summary.trajectory_groups, 20);
  EXPECT_EQ(summary.trajectories, 40);
  EXPECT_EQ(summary.belief_groups, static_cast<int>(groups.size()));

  const auto lines = read_lines(path);
  ASSERT_EQ(lines.size(), 1u + 20u + groups.size());
  EXPECT_EQ(nlohmann::json::parse(lines[0]).at("record"), "header");
  const auto first = nlohmann::json::parse(lines[1]);
  EXPECT_EQ(first.at("record"), "trajectory_group");
  EXPECT_EQ(first.at("members").size(), 2u);
  for (const auto& member : first.at("members")) {
    EXPECT_TRUE(member.contains("advantage"));
    EXPECT_FALSE(member.at("samples").empty());
  }
  const auto second = nlohmann::json::parse(lines[2]);
  EXPECT_EQ(second.at("record"), "belief_group");
  EXPECT_TRUE(second.contains("advantage_a"));
}

TEST_F(StoreTest, ExportIntegrity) {
  const auto path = dir / "batch.jsonl";
  auto missing_reward = rewards;
  missing_reward.pop_back();
  EXPECT_THROW(export_training_batch(trajectories, groups, missing_reward, path), IntegrityError);

  auto dangling = groups;
  dangling[0].trajectory_id = "nobody";
  EXPECT_THROW(export_training_batch(trajectories, dangling, rewards, path), IntegrityError);

  auto duplicate = trajectories;
  duplicate.push_back(trajectories[0]);
  EXPECT_THROW(export_training_batch(duplicate, groups, rewards, path), IntegrityError);

  auto stray = rewards;
  stray[0].trajectory_id = "ghost";
  EXPECT_THROW(export_training_batch(trajectories, groups, stray, path), IntegrityError);
}

TEST_F(StoreTest, EmptyExportIsHeaderOnly) {
  const auto path = dir / "empty.jsonl";
  export_training_batch({}, {}, {}, path);
  EXPECT_EQ(read_lines(path).size(), 1u);
  const auto summary = read_training_batch(path);
  EXPECT_EQ(summary.trajectories, 0);
  EXPECT_EQ(summary.belief_groups, 0);
}

TEST_F(StoreTest, TrainingBatchNeedsAHeader) {
  const auto path = dir / "batch.jsonl";
  export_training_batch(trajectories, groups, rewards, path);
  auto lines = read_lines(path);
  lines.erase(lines.begin());
  write_lines(path, lines);
  EXPECT_THROW(read_training_batch(path), StoreError);
}

}  // namespace
}  // namespace abbel
