#include <charconv>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "abbel/config.hpp"
#include "abbel/grading.hpp"
#include "abbel/metrics.hpp"
#include "abbel/reward.hpp"
#include "abbel/rollout.hpp"
#include "abbel/store.hpp"

namespace {

using namespace abbel;

struct SeedRange {
  std::int64_t first = 0;
  std::int64_t last = 0;
};

std::int64_t parse_int(std::string_view text) {
  std::int64_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw CLI::ValidationError(fmt::format("'{}' is not an integer", text));
  }
  return value;
}

// "a..b" inclusive, or a single seed.
SeedRange parse_seeds(std::string_view text) {
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) {
    const auto seed = parse_int(text);
    return {seed, seed};
  }
  SeedRange range{parse_int(text.substr(0, dots)), parse_int(text.substr(dots + 2))};
  if (range.last < range.first) throw CLI::ValidationError("--seeds range is empty");
  return range;
}

// All trajectories of a file must share one environment.
EnvConfig common_env(const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) throw StoreError("no trajectories");
  for (const auto& t : trajectories) {
    if (!(t.config == trajectories.front().config)) {
      throw StoreError("trajectories mix environments; split the file first");
    }
  }
  return trajectories.front().config;
}

struct Globals {
  std::string config_path;
  std::optional<std::int64_t> seed;
  std::optional<int> parallelism;

  AppConfig load() const {
    AppConfig config = config_path.empty() ? AppConfig{} : load_app_config(config_path);
    if (parallelism) config.parallelism = *parallelism;
    if (config.parallelism < 1) throw ConfigError("--parallelism must be at least 1");
    return config;
  }
};

int cmd_run(const Globals& globals, const std::string& env, const std::string& regime,
            const std::string& seeds, int rollouts, const std::string& out) {
  auto config = globals.load();
  if (!env.empty()) config.env = preset_config(env);
  if (!regime.empty()) config.rollout.regime = regime_from_string(regime);
  SeedRange range;
  if (!seeds.empty()) {
    range = parse_seeds(seeds);
  } else {
    const auto seed = globals.seed.value_or(0);
    range = {seed, seed};
  }
  if (rollouts < 1) throw CLI::ValidationError("--rollouts must be at least 1");

  const auto prompts = make_prompts(config);
  auto gateway = make_gateway(config, prompts);
  std::vector<Task> tasks;
  for (auto seed = range.first; seed <= range.last; ++seed) {
    for (int r = 0; r < rollouts; ++r) tasks.push_back({config.env, seed, r});
  }
  spdlog::info("running {} episodes of {} under {} with backend {}", tasks.size(),
               config.env.describe(), to_string(config.rollout.regime),
               gateway->backend().id());
  const auto trajectories =
      run_batch(tasks, prompts, *gateway, config.rollout, config.parallelism);
  save_trajectories(trajectories, out);
  int solved = 0;
  for (const auto& t : trajectories) solved += t.success ? 1 : 0;
  spdlog::info("solved {}/{}; wrote {}", solved, trajectories.size(), out);
  return 0;
}

int cmd_grade(const Globals& globals, const std::string& in, const std::string& out) {
  auto config = globals.load();
  const auto trajectories = load_trajectories(in);
  config.env = common_env(trajectories);
  const auto prompts = make_prompts(config);
  auto gateway = make_gateway(config, prompts);
  std::unique_ptr<BeliefParser> parser;
  if (config.grading.parser == ParserKind::kLlm) {
    parser = std::make_unique<LlmBeliefParser>(*gateway, config.grading.parser_temperature);
  } else {
    parser = std::make_unique<ReferenceBeliefParser>();
  }
  std::vector<std::string> skipped;
  const auto groups = build_groups_batch(trajectories, *gateway, prompts, *parser,
                                         config.grading.grouping, config.parallelism, &skipped);
  for (const auto& reason : skipped) spdlog::warn("grading skipped: {}", reason);
  save_groups(groups, out);
  spdlog::info("wrote {} belief groups to {}", groups.size(), out);
  return 0;
}

int cmd_rewards(const Globals& globals, const std::string& in, const std::string& out) {
  const auto config = globals.load();
  const auto trajectories = load_trajectories(in);
  const auto rewards = compute_rewards(trajectories, config.rewards);
  save_rewards(rewards, out);
  spdlog::info("wrote {} reward rows to {}", rewards.size(), out);
  return 0;
}

int cmd_report(const Globals& globals, const std::string& in, const std::string& out) {
  const auto config = globals.load();
  const auto trajectories = load_trajectories(in);
  const auto report = aggregate(trajectories, config.rewards.regret);
  write_report(report, out);
  std::cout << fmt::format("{} {}: success {:.4f} +/- {:.4f} over {} tasks ({} excluded)\n",
                           report.env, report.regime, report.success_rate, report.sem,
                           report.n_tasks, report.n_excluded);
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b) {
  std::cout << compare(read_report(a), read_report(b));
  return 0;
}

int cmd_export(const Globals& globals, const std::string& trajectories_path,
               const std::string& groups_path, const std::string& rewards_path,
               const std::string& out) {
  const auto config = globals.load();
  const auto trajectories = load_trajectories(trajectories_path);
  const auto groups =
      groups_path.empty() ? std::vector<BeliefGroup>{} : load_groups(groups_path);
  const auto rewards = load_rewards(rewards_path);
  export_training_batch(trajectories, groups, rewards, out, config.rewards.epsilon);
  const auto summary = read_training_batch(out);
  spdlog::info("exported {} trajectory groups, {} belief groups to {}",
               summary.trajectory_groups, summary.belief_groups, out);
  return 0;
}

int cmd_replay(const std::string& in) {
  const auto trajectories = load_trajectories(in);
  int failures = 0;
  for (const auto& t : trajectories) {
    const auto result = replay_trajectory(t);
    if (!result.ok) {
      ++failures;
      std::cout << fmt::format("MISMATCH {}: {}\n", t.id, result.mismatch);
    }
  }
  std::cout << fmt::format("replayed {}/{} trajectories\n", trajectories.size() - failures,
                           trajectories.size());
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief-bottleneck agent harness for guessing games"};
  app.require_subcommand(1);
  Globals globals;
  app.add_option("--config", globals.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", globals.seed, "Seed used when --seeds is not given");
  app.add_option("--parallelism", globals.parallelism, "Worker threads");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  std::string env, regime, seeds, in, out, groups, rewards, report_a, report_b;
  int rollouts = 1;

  auto* run = app.add_subcommand("run", "Roll out episodes and store trajectories");
  run->add_option("--env", env, "Environment preset")->check(CLI::IsMember(preset_names()));
  run->add_option("--regime", regime, "abbel, vanilla or belief-prompting")
      ->check(CLI::IsMember({"abbel", "vanilla", "belief-prompting"}));
  run->add_option("--seeds", seeds, "Seed range a..b (inclusive)");
  run->add_option("--rollouts", rollouts, "Rollouts per seed");
  run->add_option("--out", out, "Trajectory file")->required();

  auto* grade = app.add_subcommand("grade", "Build graded belief groups");
  grade->add_option("--in", in, "Trajectory file")->required()->check(CLI::ExistingFile);
  grade->add_option("--out", out, "Belief group file")->required();

  auto* reward = app.add_subcommand("rewards", "Compute outcome rewards and advantages");
  reward->add_option("--in", in, "Trajectory file")->required()->check(CLI::ExistingFile);
  reward->add_option("--out", out, "Reward file")->required();

  auto* report = app.add_subcommand("report", "Aggregate a batch into report tables");
  report->add_option("--in", in, "Trajectory file")->required()->check(CLI::ExistingFile);
  report->add_option("--out", out, "Report directory")->required();

  auto* cmp = app.add_subcommand("compare", "Diff two report directories");
  cmp->add_option("a", report_a, "First report directory")->required()->check(CLI::ExistingDirectory);
  cmp->add_option("b", report_b, "Second report directory")->required()->check(CLI::ExistingDirectory);

  auto* exp = app.add_subcommand("export", "Write a training batch for an external optimizer");
  exp->add_option("--trajectories", in, "Trajectory file")->required()->check(CLI::ExistingFile);
  exp->add_option("--groups", groups, "Belief group file")->check(CLI::ExistingFile);
  exp->add_option("--rewards", rewards, "Reward file")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", out, "Export file")->required();

  auto* replay = app.add_subcommand("replay", "Re-verify stored trajectories against the env");
  replay->add_option("--in", in, "Trajectory file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*run) return cmd_run(globals, env, regime, seeds, rollouts, out);
    if (*grade) return cmd_grade(globals, in, out);
    if (*reward) return cmd_rewards(globals, in, out);
    if (*report) return cmd_report(globals, in, out);
    if (*cmp) return cmd_compare(report_a, report_b);
    if (*exp) return cmd_export(globals, in, groups, rewards, out);
    if (*replay) return cmd_replay(in);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
