#include "abbel/store.hpp"

#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "json_io.hpp"

namespace abbel {
namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StoreError(fmt::format("cannot write {}", path.string()));
  return out;
}

void write_record(std::ostream& out, json record, std::string_view kind) {
  json line = {{"schema_version", kSchemaVersion}, {"record", kind}};
  line.update(record);
  out << line.dump() << '\n';
}

// Calls fn(record, line_number) for every non-empty line.
template <typename Fn>
void read_records(const std::filesystem::path& path, std::string_view kind, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError(fmt::format("cannot read {}", path.string()));
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto where = fmt::format("{}:{}", path.string(), number);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw StoreError(fmt::format("{}: corrupt record: {}", where, e.what()));
    }
    if (!record.is_object() || !record.contains("schema_version")) {
      throw StoreError(fmt::format("{}: record has no schema_version", where));
    }
    const auto version = record.at("schema_version");
    if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
      throw SchemaVersionError(fmt::format("{}: schema_version {} is incompatible with {}", where,
                                           version.dump(), kSchemaVersion));
    }
    if (record.value("record", "") != kind) {
      throw StoreError(fmt::format("{}: expected a {} record", where, kind));
    }
    try {
      fn(record, where);
    } catch (const StoreError&) {
      throw;
    } catch (const std::exception& e) {
      throw StoreError(fmt::format("{}: invalid {} record: {}", where, kind, e.what()));
    }
  }
}

void check_trajectory(const Trajectory& t, const std::string& where) {
  auto fail = [&](std::string_view what) {
    throw StoreError(fmt::format("{}: trajectory {} {}", where, t.id, what));
  };
  if (t.env_steps_taken != static_cast<int>(t.steps.size())) fail("has a wrong step count");
  if (t.env_steps_taken > t.config.horizon) fail("exceeds the horizon");
  if (t.generation_calls_used > t.generation_budget) fail("exceeds its generation budget");
  if (t.success && (t.steps.empty() || !t.steps.back().guess ||
                    t.steps.back().guess->chars != t.secret)) {
    fail("is marked solved but its last guess is not the secret");
  }
}

}  // namespace

void save_trajectories(const std::vector<Trajectory>& trajectories,
                       const std::filesystem::path& path) {
  auto out = open_for_write(path);
  for (const auto& trajectory : trajectories) {
    write_record(out, trajectory_to_json(trajectory), "trajectory");
  }
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path) {
  std::vector<Trajectory> trajectories;
  read_records(path, "trajectory", [&](const json& record, const std::string& where) {
    auto trajectory = trajectory_from_json(record);
    check_trajectory(trajectory, where);
    trajectories.push_back(std::move(trajectory));
  });
  return trajectories;
}

void save_groups(const std::vector<BeliefGroup>& groups, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  for (const auto& group : groups) write_record(out, belief_group_to_json(group), "belief_group");
}

std::vector<BeliefGroup> load_groups(const std::filesystem::path& path) {
  std::vector<BeliefGroup> groups;
  read_records(path, "belief_group", [&](const json& record, const std::string& where) {
    auto group = belief_group_from_json(record);
    if (hash_context(group.context) != group.context_hash) {
      throw StoreError(fmt::format("{}: context does not match its hash", where));
    }
    groups.push_back(std::move(group));
  });
  return groups;
}

void save_rewards(const std::vector<RewardRecord>& rewards, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  for (const auto& record : rewards) write_record(out, reward_record_to_json(record), "reward");
}

std::vector<RewardRecord> load_rewards(const std::filesystem::path& path) {
  std::vector<RewardRecord> rewards;
  read_records(path, "reward", [&](const json& record, const std::string&) {
    rewards.push_back(reward_record_from_json(record));
  });
  return rewards;
}

void export_training_batch(const std::vector<Trajectory>& trajectories,
                           const std::vector<BeliefGroup>& groups,
                           const std::vector<RewardRecord>& rewards,
                           const std::filesystem::path& path, double epsilon) {
  std::map<std::string, const Trajectory*> by_id;
  for (const auto& trajectory : trajectories) {
    if (!by_id.emplace(trajectory.id, &trajectory).second) {
      throw IntegrityError(fmt::format("duplicate trajectory id {}", trajectory.id));
    }
  }
  std::map<std::string, const RewardRecord*> reward_of;
  for (const auto& record : rewards) {
    if (!by_id.contains(record.trajectory_id)) {
      throw IntegrityError(
          fmt::format("reward row references unknown trajectory {}", record.trajectory_id));
    }
    if (!reward_of.emplace(record.trajectory_id, &record).second) {
      throw IntegrityError(fmt::format("trajectory {} has two reward rows", record.trajectory_id));
    }
  }
  for (const auto& trajectory : trajectories) {
    if (!reward_of.contains(trajectory.id)) {
      throw IntegrityError(fmt::format("trajectory {} has no reward row", trajectory.id));
    }
  }
  std::map<std::string, std::vector<const BeliefGroup*>> groups_of;
  for (const auto& group : groups) {
    if (!by_id.contains(group.trajectory_id)) {
      throw IntegrityError(
          fmt::format("belief group references unknown trajectory {}", group.trajectory_id));
    }
    groups_of[group.trajectory_id].push_back(&group);
  }

  // Advantage groups in order of first appearance.
  std::vector<std::string> group_order;
  std::map<std::string, std::vector<const RewardRecord*>> members;
  for (const auto& trajectory : trajectories) {
    const auto* record = reward_of.at(trajectory.id);
    auto& list = members[record->group_id];
    if (list.empty()) group_order.push_back(record->group_id);
    list.push_back(record);
  }

  auto out = open_for_write(path);
  write_record(out,
               {{"trajectory_groups", group_order.size()},
                {"trajectories", trajectories.size()},
                {"belief_groups", groups.size()}},
               "header");
  for (const auto& group_id : group_order) {
    json rows = json::array();
    for (const auto* record : members.at(group_id)) {
      const auto& trajectory = *by_id.at(record->trajectory_id);
      json samples = json::array();
      auto add_calls = [&](const std::vector<CallRecord>& calls) {
        for (const auto& call : calls) {
          samples.push_back({{"purpose", to_string(call.purpose)},
                             {"context", context_to_json(call.context)},
                             {"completion", call.result.text},
                             {"accepted", call.accepted()}});
        }
      };
      for (const auto& step : trajectory.steps) add_calls(step.calls);
      add_calls(trajectory.pending_calls);
      rows.push_back({{"trajectory_id", record->trajectory_id},
                      {"outcome_reward", record->outcome_reward.str()},
                      {"penalty", record->penalty},
                      {"advantage", record->advantage},
                      {"samples", samples}});
    }
    write_record(out, {{"group_id", group_id}, {"members", rows}}, "trajectory_group");
    for (const auto* record : members.at(group_id)) {
      auto it = groups_of.find(record->trajectory_id);
      if (it == groups_of.end()) continue;
      for (const auto* group : it->second) {
        auto j = belief_group_to_json(*group);
        const auto advantages = belief_group_advantages(*group, epsilon);
        j["advantage_a"] = advantages[0];
        j["advantage_b"] = advantages[1];
        write_record(out, j, "belief_group");
      }
    }
  }
}

TrainingBatchSummary read_training_batch(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError(fmt::format("cannot read {}", path.string()));
  TrainingBatchSummary summary;
  std::set<std::string> seen;
  std::string line;
  int number = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw StoreError(fmt::format("{}:{}: corrupt record: {}", path.string(), number, e.what()));
    }
    if (record.value("schema_version", -1) != kSchemaVersion) {
      throw SchemaVersionError(
          fmt::format("{}:{}: incompatible schema_version", path.string(), number));
    }
    const auto kind = record.value("record", "");
    if (kind == "header") {
      header = true;
    } else if (kind == "trajectory_group") {
      ++summary.trajectory_groups;
      for (const auto& member : record.at("members")) {
        seen.insert(member.at("trajectory_id").get<std::string>());
        ++summary.trajectories;
      }
    } else if (kind == "belief_group") {
      if (!seen.contains(record.at("trajectory_id").get<std::string>())) {
        throw IntegrityError(fmt::format("{}:{}: belief group precedes or lacks its trajectory",
                                         path.string(), number));
      }
      ++summary.belief_groups;
    } else {
      throw StoreError(fmt::format("{}:{}: unknown record '{}'", path.string(), number, kind));
    }
  }
  if (!header) throw StoreError(fmt::format("{}: missing header line", path.string()));
  return summary;
}

}  // namespace abbel
