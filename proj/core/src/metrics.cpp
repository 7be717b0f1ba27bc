#include "abbel/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace abbel {
namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool excluded(const Trajectory& trajectory) {
  return trajectory.termination == Termination::kTransportFailure ||
         trajectory.termination == Termination::kError;
}

bool same_value(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same_column(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_value(a[i], b[i])) return false;
  }
  return true;
}

json column_to_json(const std::vector<double>& column) {
  json out = json::array();
  for (double v : column) out.push_back(std::isnan(v) ? json(nullptr) : json(v));
  return out;
}

std::vector<double> column_from_json(const json& column) {
  std::vector<double> out;
  for (const auto& v : column) out.push_back(v.is_null() ? kNaN : v.get<double>());
  return out;
}

std::string cell(double v) { return std::isnan(v) ? "-" : fmt::format("{:.4f}", v); }

std::string delta_cell(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return "-";
  return fmt::format("{:+.4f}", b - a);
}

class Mean {
 public:
  void add(double v) {
    sum_ += v;
    ++n_;
  }
  double value() const { return n_ == 0 ? kNaN : sum_ / n_; }

 private:
  double sum_ = 0.0;
  int n_ = 0;
};

}  // namespace

bool operator==(const BatchReport& a, const BatchReport& b) {
  return a.env == b.env && a.regime == b.regime && a.horizon == b.horizon &&
         a.n_tasks == b.n_tasks && a.n_excluded == b.n_excluded && a.n_success == b.n_success &&
         same_value(a.success_rate, b.success_rate) && same_value(a.sem, b.sem) &&
         same_value(a.mean_final_regret, b.mean_final_regret) &&
         same_column(a.mean_regret_curve, b.mean_regret_curve) &&
         a.alive_by_step == b.alive_by_step &&
         same_column(a.mean_belief_tokens_by_step, b.mean_belief_tokens_by_step) &&
         same_column(a.mean_belief_chars_by_step, b.mean_belief_chars_by_step) &&
         same_column(a.mean_history_tokens_by_step, b.mean_history_tokens_by_step) &&
         same_column(a.mean_history_chars_by_step, b.mean_history_chars_by_step) &&
         same_column(a.mean_memory_by_step, b.mean_memory_by_step);
}

std::vector<StepAccount> step_accounts(const Trajectory& trajectory) {
  std::vector<StepAccount> accounts;
  for (const auto& step : trajectory.steps) {
    StepAccount account;
    account.step = step.index;
    account.has_belief = step.belief_after.has_value();
    account.belief_tokens = step.belief_tokens;
    account.belief_chars = step.belief_after ? static_cast<int>(step.belief_after->size()) : 0;
    account.history_tokens = step.history_tokens;
    account.history_chars = step.history_chars;
    for (const auto& call : step.calls) {
      const int total = call.result.input_tokens + call.result.output_tokens;
      account.memory = std::max(account.memory, total);
      if (!call.accepted()) continue;
      const auto purpose = call.retry_of.value_or(call.purpose);
      if (purpose == CallPurpose::kBeliefUpdate) {
        account.belief_call_in = call.result.input_tokens;
        account.belief_call_out = call.result.output_tokens;
      } else {
        account.action_call_in = call.result.input_tokens;
        account.action_call_out = call.result.output_tokens;
      }
    }
    accounts.push_back(account);
  }
  return accounts;
}

double bernoulli_sem(double p, int n) {
  if (n <= 0) return 0.0;
  return std::sqrt(p * (1.0 - p) / n);
}

BatchReport aggregate(std::span<const Trajectory> trajectories, RegretConvention convention) {
  if (trajectories.empty()) throw MetricsError("cannot aggregate an empty batch");
  const auto& first = trajectories.front();
  BatchReport report;
  report.env = first.config.describe();
  report.regime = std::string(to_string(first.regime));
  report.horizon = first.config.horizon;
  const auto h = static_cast<std::size_t>(report.horizon);

  std::vector<double> regret_sum(h, 0.0);
  std::vector<Mean> belief_tokens(h), belief_chars(h), history_tokens(h), history_chars(h),
      memory(h);
  report.alive_by_step.assign(h, 0);
  double final_regret_sum = 0.0;

  for (const auto& trajectory : trajectories) {
    if (!(trajectory.config == first.config) || trajectory.regime != first.regime) {
      throw MetricsError(fmt::format("{} does not share the env and regime of {}", trajectory.id,
                                     first.id));
    }
    if (excluded(trajectory)) {
      ++report.n_excluded;
      spdlog::warn("{} excluded from metrics: {} ({})", trajectory.id,
                   to_string(trajectory.termination), trajectory.error);
      continue;
    }
    ++report.n_tasks;
    if (trajectory.success) ++report.n_success;
    const auto curve = cumulative_regret(trajectory, convention);
    for (std::size_t t = 0; t < h; ++t) regret_sum[t] += curve[t];
    if (!curve.empty()) final_regret_sum += curve.back();

    for (const auto& account : step_accounts(trajectory)) {
      const auto t = static_cast<std::size_t>(account.step - 1);
      if (t >= h) continue;
      ++report.alive_by_step[t];
      if (account.has_belief) {
        belief_tokens[t].add(account.belief_tokens);
        belief_chars[t].add(account.belief_chars);
      }
      history_tokens[t].add(account.history_tokens);
      history_chars[t].add(account.history_chars);
      memory[t].add(account.memory);
    }
  }

  const int n = report.n_tasks;
  report.success_rate = n == 0 ? 0.0 : static_cast<double>(report.n_success) / n;
  report.sem = bernoulli_sem(report.success_rate, n);
  report.mean_final_regret = n == 0 ? kNaN : final_regret_sum / n;
  for (std::size_t t = 0; t < h; ++t) {
    report.mean_regret_curve.push_back(n == 0 ? kNaN : regret_sum[t] / n);
    report.mean_belief_tokens_by_step.push_back(belief_tokens[t].value());
    report.mean_belief_chars_by_step.push_back(belief_chars[t].value());
    report.mean_history_tokens_by_step.push_back(history_tokens[t].value());
    report.mean_history_chars_by_step.push_back(history_chars[t].value());
    report.mean_memory_by_step.push_back(memory[t].value());
  }
  return report;
}

void write_report(const BatchReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json j = {{"env", report.env},
            {"regime", report.regime},
            {"horizon", report.horizon},
            {"n_tasks", report.n_tasks},
            {"n_excluded", report.n_excluded},
            {"n_success", report.n_success},
            {"success_rate", report.success_rate},
            {"sem", report.sem},
            {"mean_final_regret", std::isnan(report.mean_final_regret)
                                      ? json(nullptr)
                                      : json(report.mean_final_regret)},
            {"mean_regret_curve", column_to_json(report.mean_regret_curve)},
            {"alive_by_step", report.alive_by_step},
            {"mean_belief_tokens_by_step", column_to_json(report.mean_belief_tokens_by_step)},
            {"mean_belief_chars_by_step", column_to_json(report.mean_belief_chars_by_step)},
            {"mean_history_tokens_by_step", column_to_json(report.mean_history_tokens_by_step)},
            {"mean_history_chars_by_step", column_to_json(report.mean_history_chars_by_step)},
            {"mean_memory_by_step", column_to_json(report.mean_memory_by_step)}};
  std::ofstream(dir / "report.json") << j.dump(2) << '\n';

  std::ofstream tsv(dir / "per_step.tsv");
  tsv << "step\talive\tregret\tbelief_tokens\tbelief_chars\thistory_tokens\thistory_chars\t"
         "memory_tokens\n";
  for (int t = 0; t < report.horizon; ++t) {
    auto value = [](double v) { return std::isnan(v) ? std::string("nan") : fmt::format("{}", v); };
    tsv << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", t + 1, report.alive_by_step[t],
                       value(report.mean_regret_curve[t]),
                       value(report.mean_belief_tokens_by_step[t]),
                       value(report.mean_belief_chars_by_step[t]),
                       value(report.mean_history_tokens_by_step[t]),
                       value(report.mean_history_chars_by_step[t]),
                       value(report.mean_memory_by_step[t]));
  }
}

BatchReport read_report(const std::filesystem::path& dir) {
  std::ifstream in(dir / "report.json");
  if (!in) throw MetricsError(fmt::format("no report.json in {}", dir.string()));
  json j;
  try {
    j = json::parse(in);
    BatchReport report;
    report.env = j.at("env").get<std::string>();
    report.regime = j.at("regime").get<std::string>();
    report.horizon = j.at("horizon").get<int>();
    report.n_tasks = j.at("n_tasks").get<int>();
    report.n_excluded = j.at("n_excluded").get<int>();
    report.n_success = j.at("n_success").get<int>();
    report.success_rate = j.at("success_rate").get<double>();
    report.sem = j.at("sem").get<double>();
    report.mean_final_regret =
        j.at("mean_final_regret").is_null() ? kNaN : j.at("mean_final_regret").get<double>();
    report.mean_regret_curve = column_from_json(j.at("mean_regret_curve"));
    report.alive_by_step = j.at("alive_by_step").get<std::vector<int>>();
    report.mean_belief_tokens_by_step = column_from_json(j.at("mean_belief_tokens_by_step"));
    report.mean_belief_chars_by_step = column_from_json(j.at("mean_belief_chars_by_step"));
    report.mean_history_tokens_by_step = column_from_json(j.at("mean_history_tokens_by_step"));
    report.mean_history_chars_by_step = column_from_json(j.at("mean_history_chars_by_step"));
    report.mean_memory_by_step = column_from_json(j.at("mean_memory_by_step"));
    return report;
  } catch (const json::exception& e) {
    throw MetricsError(fmt::format("malformed report in {}: {}", dir.string(), e.what()));
  }
}

std::string compare(const BatchReport& a, const BatchReport& b) {
  if (a.env != b.env) {
    throw MetricsError(fmt::format("reports are for different envs: {} vs {}", a.env, b.env));
  }
  std::string out = fmt::format("env: {}\n", a.env);
  out += fmt::format("{:<24}{:>14}{:>14}{:>12}\n", "metric", a.regime, b.regime, "delta");
  auto row = [&](std::string_view name, double x, double y) {
    out += fmt::format("{:<24}{:>14}{:>14}{:>12}\n", name, cell(x), cell(y), delta_cell(x, y));
  };
  row("n_tasks", a.n_tasks, b.n_tasks);
  row("success_rate", a.success_rate, b.success_rate);
  row("sem", a.sem, b.sem);
  row("mean_final_regret", a.mean_final_regret, b.mean_final_regret);

  const auto steps = std::max(a.horizon, b.horizon);
  auto at = [](const std::vector<double>& column, int t) {
    return t < static_cast<int>(column.size()) ? column[t] : kNaN;
  };
  struct Column {
    std::string_view name;
    const std::vector<double>& a;
    const std::vector<double>& b;
  };
  const Column columns[] = {
      {"regret", a.mean_regret_curve, b.mean_regret_curve},
      {"belief_tokens", a.mean_belief_tokens_by_step, b.mean_belief_tokens_by_step},
      {"belief_chars", a.mean_belief_chars_by_step, b.mean_belief_chars_by_step},
      {"history_tokens", a.mean_history_tokens_by_step, b.mean_history_tokens_by_step},
      {"history_chars", a.mean_history_chars_by_step, b.mean_history_chars_by_step},
      {"memory_tokens", a.mean_memory_by_step, b.mean_memory_by_step},
  };
  for (const auto& column : columns) {
    out += fmt::format("\n{}\n", column.name);
    for (int t = 0; t < steps; ++t) {
      row(fmt::format("  step {}", t + 1), at(column.a, t), at(column.b, t));
    }
  }
  return out;
}

}  // namespace abbel
