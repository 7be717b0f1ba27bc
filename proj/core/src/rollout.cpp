#include "abbel/rollout.hpp"

#include <atomic>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "text_util.hpp"

namespace abbel {
namespace {

struct Generation {
  std::string raw;
  std::string payload;
  std::optional<Guess> guess;
};

class Episode {
 public:
  Episode(const EnvConfig& config, const PromptSet& prompts, Gateway& gateway,
          const RolloutOptions& options, Trajectory& trajectory)
      : config_(config), prompts_(prompts), gateway_(gateway), options_(options), traj_(trajectory) {}

  void run() {
    auto state = sample_task(config_, traj_.seed);
    traj_.secret = state.secret;
    const Regime regime = options_.regime;
    const int horizon = config_.horizon;
    std::string belief = prompts_.initial_belief;
    std::vector<HistoryItem> history;

    for (int t = 1; t <= horizon; ++t) {
      Context action_context;
      switch (regime) {
        case Regime::kAbbel:
          action_context = build_action_context(prompts_, belief, t, horizon);
          break;
        case Regime::kVanilla:
          action_context = build_history_context(prompts_, history, std::nullopt, t, horizon);
          break;
        case Regime::kBeliefPrompting:
          action_context = build_history_context(prompts_, history, belief, t, horizon);
          break;
      }
      auto action = generate(CallPurpose::kActionSelect, action_context);
      if (!action) {
        traj_.termination = Termination::kGenerationBudgetExhausted;
        break;
      }

      const auto result = step(state, *action->guess, config_);
      state = result.state;
      TranscriptStep record;
      record.index = t;
      if (regime != Regime::kVanilla) record.belief_before = belief;
      record.action_raw = action->raw;
      record.action_text = format_action(*action->guess, config_);
      record.guess = action->guess;
      record.observation = result.observation;
      history.push_back({record.action_text, record.observation.text});
      const auto rendered = render_history(prompts_, history);
      record.history_tokens = gateway_.count_tokens(rendered);
      record.history_chars = static_cast<int>(rendered.size());
      traj_.env_steps_taken = t;

      bool belief_missing = false;
      if (regime != Regime::kVanilla) {
        const auto belief_context =
            regime == Regime::kAbbel
                ? build_belief_context(prompts_, belief, record.action_text,
                                       record.observation.text)
                : build_history_belief_context(prompts_, history, belief);
        if (auto update = generate(CallPurpose::kBeliefUpdate, belief_context)) {
          belief = update->payload;
          record.belief_after = belief;
          record.belief_tokens = gateway_.count_tokens(belief, &record.belief_tokens_estimated);
        } else {
          belief_missing = true;
        }
      }
      close_step(record);
      traj_.steps.push_back(std::move(record));

      if (result.success) {
        traj_.success = true;
        traj_.termination = Termination::kSolved;
        break;
      }
      if (result.done) {
        traj_.termination = Termination::kHorizonExhausted;
        break;
      }
      if (belief_missing) {
        traj_.termination = Termination::kGenerationBudgetExhausted;
        break;
      }
    }
    traj_.pending_calls = std::move(calls_);
  }

  std::vector<CallRecord>& calls() { return calls_; }

 private:
  std::uint64_t next_seed_hint() {
    auto h = mix64(static_cast<std::uint64_t>(traj_.seed));
    h = mix64(h ^ static_cast<std::uint64_t>(options_.rollout_index));
    return mix64(h ^ static_cast<std::uint64_t>(call_index_++));
  }

  std::optional<Generation> generate(CallPurpose purpose, const Context& base) {
    const bool is_action = purpose == CallPurpose::kActionSelect;
    const auto tag = is_action ? PayloadTag::kAction : PayloadTag::kBelief;
    const auto& tag_name = is_action ? prompts_.action_tag : prompts_.belief_tag;
    Context context = base;
    bool retry = false;
    while (traj_.generation_calls_used < traj_.generation_budget) {
      CompletionRequest request{context, options_.temperature, options_.max_output_tokens,
                                next_seed_hint()};
      auto result = gateway_.complete(request);
      ++traj_.generation_calls_used;

      CallRecord record;
      record.purpose = retry ? CallPurpose::kRetry : purpose;
      if (retry) record.retry_of = purpose;
      record.context = std::move(context);

      auto tagged = parse_tagged(result.text, tag, tag_name, prompts_.think_tag);
      std::string rejection;
      std::string reason_text;
      Generation generation;
      if (!tagged.ok()) {
        rejection = to_string(tagged.issue);
        reason_text = describe(tagged.issue);
      } else {
        if (tagged.trailing_text) {
          spdlog::debug("{}: ignoring text after the closing {} tag", traj_.id, tag_name);
        }
        generation.payload = *tagged.payload;
        if (is_action) {
          auto parsed = validate_action(generation.payload, config_);
          if (auto* reason = std::get_if<InvalidReason>(&parsed)) {
            rejection = to_string(*reason);
            reason_text = describe(*reason);
          } else {
            generation.guess = std::get<Guess>(parsed);
          }
        }
      }
      generation.raw = result.text;
      record.result = std::move(result);
      record.rejection = rejection;
      calls_.push_back(record);
      if (rejection.empty()) return generation;

      const auto message = is_action ? action_retry_message(prompts_, reason_text)
                                     : belief_retry_message(prompts_, reason_text);
      context = build_retry_context(base, generation.raw, message);
      retry = true;
    }
    return std::nullopt;
  }

  void close_step(TranscriptStep& record) {
    record.calls = std::move(calls_);
    calls_.clear();
    for (const auto& call : record.calls) {
      if (!call.accepted()) ++record.invalid_attempts;
    }
  }

  const EnvConfig& config_;
  const PromptSet& prompts_;
  Gateway& gateway_;
  const RolloutOptions& options_;
  Trajectory& traj_;
  std::vector<CallRecord> calls_;
  int call_index_ = 0;
};

template <typename E>
E from_string(std::string_view name, std::initializer_list<E> values, std::string_view what) {
  for (E value : values) {
    if (to_string(value) == name) return value;
  }
  throw std::invalid_argument(fmt::format("unknown {} '{}'", what, name));
}

}  // namespace

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::kAbbel: return "abbel";
    case Regime::kVanilla: return "vanilla";
    case Regime::kBeliefPrompting: return "belief-prompting";
  }
  return "abbel";
}

Regime regime_from_string(std::string_view name) {
  return from_string(name, {Regime::kAbbel, Regime::kVanilla, Regime::kBeliefPrompting},
                     "regime");
}

int generation_budget(Regime regime, int horizon) {
  return regime == Regime::kVanilla ? horizon : 2 * horizon;
}

std::string_view to_string(CallPurpose purpose) {
  switch (purpose) {
    case CallPurpose::kBeliefUpdate: return "BeliefUpdate";
    case CallPurpose::kActionSelect: return "ActionSelect";
    case CallPurpose::kRetry: return "Retry";
  }
  return "ActionSelect";
}

CallPurpose call_purpose_from_string(std::string_view name) {
  return from_string(
      name, {CallPurpose::kBeliefUpdate, CallPurpose::kActionSelect, CallPurpose::kRetry},
      "call purpose");
}

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::kSolved: return "Solved";
    case Termination::kHorizonExhausted: return "HorizonExhausted";
    case Termination::kGenerationBudgetExhausted: return "GenerationBudgetExhausted";
    case Termination::kTransportFailure: return "TransportFailure";
    case Termination::kContextTooLong: return "ContextTooLong";
    case Termination::kError: return "Error";
  }
  return "Error";
}

Termination termination_from_string(std::string_view name) {
  return from_string(name,
                     {Termination::kSolved, Termination::kHorizonExhausted,
                      Termination::kGenerationBudgetExhausted, Termination::kTransportFailure,
                      Termination::kContextTooLong, Termination::kError},
                     "termination");
}

std::string trajectory_id(const EnvConfig& config, Regime regime, std::int64_t seed,
                          int rollout_index) {
  return fmt::format("{}-{}-s{}-r{}", to_string(config.kind), to_string(regime), seed,
                     rollout_index);
}

Trajectory run_episode(const EnvConfig& config, const PromptSet& prompts, Gateway& gateway,
                       std::int64_t seed, const RolloutOptions& options) {
  config.validate();
  Trajectory traj;
  traj.id = trajectory_id(config, options.regime, seed, options.rollout_index);
  traj.config = config;
  traj.regime = options.regime;
  traj.seed = seed;
  traj.rollout_index = options.rollout_index;
  traj.generation_budget = generation_budget(options.regime, config.horizon);

  Episode episode(config, prompts, gateway, options, traj);
  try {
    episode.run();
  } catch (const ContextTooLongError& e) {
    traj.termination = Termination::kContextTooLong;
    traj.error = e.what();
    traj.pending_calls = std::move(episode.calls());
    spdlog::warn("{}: {}", traj.id, e.what());
  } catch (const GatewayError& e) {
    traj.termination = Termination::kTransportFailure;
    traj.error = e.what();
    traj.pending_calls = std::move(episode.calls());
    spdlog::warn("{}: transport failure: {}", traj.id, e.what());
  }
  return traj;
}

std::vector<Trajectory> run_batch(const std::vector<Task>& tasks, const PromptSet& prompts,
                                  Gateway& gateway, const RolloutOptions& options,
                                  int parallelism) {
  if (parallelism < 1) throw std::invalid_argument("parallelism must be at least 1");
  std::vector<Trajectory> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
      const auto& task = tasks[i];
      RolloutOptions task_options = options;
      task_options.rollout_index = task.rollout_index;
      try {
        results[i] = run_episode(task.config, prompts, gateway, task.seed, task_options);
      } catch (const std::exception& e) {
        auto& traj = results[i];
        traj.id = trajectory_id(task.config, options.regime, task.seed, task.rollout_index);
        traj.config = task.config;
        traj.regime = options.regime;
        traj.seed = task.seed;
        traj.rollout_index = task.rollout_index;
        traj.generation_budget = generation_budget(options.regime, task.config.horizon);
        traj.termination = Termination::kError;
        traj.error = e.what();
        spdlog::error("{}: episode failed: {}", traj.id, e.what());
      }
    }
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism), tasks.size());
  std::vector<std::thread> threads;
  for (std::size_t i = 1; i < workers; ++i) threads.emplace_back(worker);
  worker();
  for (auto& thread : threads) thread.join();
  return results;
}

ReplayResult replay_trajectory(const Trajectory& trajectory) {
  ReplayResult replay;
  auto fail = [&](std::string message) {
    replay.ok = false;
    replay.mismatch = std::move(message);
    return replay;
  };
  SecretState state;
  try {
    state = sample_task(trajectory.config, trajectory.seed);
  } catch (const std::exception& e) {
    return fail(fmt::format("cannot sample the task: {}", e.what()));
  }
  if (state.secret != trajectory.secret) {
    return fail(fmt::format("seed {} yields secret '{}', trajectory recorded '{}'",
                            trajectory.seed, state.secret, trajectory.secret));
  }
  for (const auto& recorded : trajectory.steps) {
    if (!recorded.guess) return fail(fmt::format("step {} has no guess", recorded.index));
    StepResult result;
    try {
      result = step(state, *recorded.guess, trajectory.config);
    } catch (const std::exception& e) {
      return fail(fmt::format("step {} does not replay: {}", recorded.index, e.what()));
    }
    if (result.observation.text != recorded.observation.text) {
      return fail(fmt::format("step {} observation text differs", recorded.index));
    }
    if (!(result.observation == recorded.observation)) {
      return fail(fmt::format("step {} structured feedback differs", recorded.index));
    }
    state = result.state;
    ++replay.steps_checked;
  }
  if (state.solved != trajectory.success) return fail("recorded success flag differs");
  if (replay.steps_checked != trajectory.env_steps_taken) {
    return fail("recorded env_steps_taken differs from the number of steps");
  }
  return replay;
}

}  // namespace abbel
