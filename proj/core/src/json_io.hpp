#pragma once

#include <nlohmann/json.hpp>

#include "abbel/grading.hpp"
#include "abbel/reward.hpp"
#include "abbel/rollout.hpp"

namespace abbel {

using nlohmann::json;

json env_config_to_json(const EnvConfig& config);
// Accepts {"preset": name} with optional overrides, or explicit fields
// kind, vocabulary, code_length, horizon, word_list_path.
EnvConfig env_config_from_json(const json& j);

json trajectory_to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const json& j);

json context_to_json(const Context& context);
Context context_from_json(const json& j);

json belief_group_to_json(const BeliefGroup& group);
BeliefGroup belief_group_from_json(const json& j);

json reward_record_to_json(const RewardRecord& record);
RewardRecord reward_record_from_json(const json& j);

}  // namespace abbel
