#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "abbel/grading.hpp"
#include "abbel/reward.hpp"
#include "abbel/rollout.hpp"

namespace abbel {

inline constexpr int kSchemaVersion = 1;

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A line written under another schema version.
class SchemaVersionError : public StoreError {
 public:
  using StoreError::StoreError;
};

// Dangling references between trajectories, groups and rewards.
class IntegrityError : public StoreError {
 public:
  using StoreError::StoreError;
};

// One JSON record per line, each carrying schema_version. Raw model texts
// and contexts are stored verbatim.
void save_trajectories(const std::vector<Trajectory>& trajectories,
                       const std::filesystem::path& path);
// Errors name the offending line.
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path);

void save_groups(const std::vector<BeliefGroup>& groups, const std::filesystem::path& path);
std::vector<BeliefGroup> load_groups(const std::filesystem::path& path);

void save_rewards(const std::vector<RewardRecord>& rewards, const std::filesystem::path& path);
std::vector<RewardRecord> load_rewards(const std::filesystem::path& path);

// Header line, then per advantage group a "trajectory_group" record followed
// by the "belief_group" records of its members. Every trajectory needs a
// reward record and every reference must resolve (IntegrityError).
void export_training_batch(const std::vector<Trajectory>& trajectories,
                           const std::vector<BeliefGroup>& groups,
                           const std::vector<RewardRecord>& rewards,
                           const std::filesystem::path& path, double epsilon = 1e-6);

struct TrainingBatchSummary {
  int trajectory_groups = 0;
  int trajectories = 0;
  int belief_groups = 0;
};

TrainingBatchSummary read_training_batch(const std::filesystem::path& path);

}  // namespace abbel
