#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abbel/reward.hpp"
#include "abbel/rollout.hpp"

namespace abbel {

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Token accounting for one env step.
struct StepAccount {
  int step = 0;
  bool has_belief = false;
  int belief_call_in = 0;  // accepted belief-update call
  int belief_call_out = 0;
  int action_call_in = 0;  // accepted action call
  int action_call_out = 0;
  int belief_tokens = 0;
  int belief_chars = 0;
  int history_tokens = 0;
  int history_chars = 0;
  int memory = 0;  // max over the step's calls of input + output tokens
};

std::vector<StepAccount> step_accounts(const Trajectory& trajectory);

// Per-step columns have one entry per step 1..H and hold NaN where no
// trajectory contributes.
struct BatchReport {
  std::string env;
  std::string regime;
  int horizon = 0;
  int n_tasks = 0;     // trajectories counted
  int n_excluded = 0;  // transport failures and errors, logged and left out
  int n_success = 0;
  double success_rate = 0.0;
  double sem = 0.0;
  double mean_final_regret = 0.0;
  std::vector<double> mean_regret_curve;
  std::vector<int> alive_by_step;
  std::vector<double> mean_belief_tokens_by_step;
  std::vector<double> mean_belief_chars_by_step;
  std::vector<double> mean_history_tokens_by_step;
  std::vector<double> mean_history_chars_by_step;
  std::vector<double> mean_memory_by_step;

  friend bool operator==(const BatchReport&, const BatchReport&);
};

// sqrt(p (1 - p) / n); 0 for n = 0.
double bernoulli_sem(double p, int n);

// Throws MetricsError on an empty batch or one mixing envs or regimes.
BatchReport aggregate(std::span<const Trajectory> trajectories,
                      RegretConvention convention = RegretConvention::kCountSolvingGuess);

// report.json plus per_step.tsv in dir (created if needed).
void write_report(const BatchReport& report, const std::filesystem::path& dir);
BatchReport read_report(const std::filesystem::path& dir);

// Side-by-side table of two reports with per-metric deltas (b - a). Throws
// MetricsError when the reports are for different envs.
std::string compare(const BatchReport& a, const BatchReport& b);

}  // namespace abbel
