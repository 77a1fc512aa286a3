#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "risdet/agents.hpp"
#include "risdet/config.hpp"
#include "risdet/queue_sim.hpp"

namespace risdet {

/// Exit codes shared by the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitNumerical = 2, kExitDominance = 3 };

struct RunOptions {
  std::string out_dir = "out";
  bool strict = false;
  std::size_t workers = 1;
  std::ostream* console = nullptr;  // human-readable summaries; null = quiet
};

/// Shortest text that parses back to the same double.
std::string format_number(double v);

/// First line of every CSV: "# config_hash=<hex> seed=<n>".
std::string provenance_line(const ScenarioConfig& cfg);

/// Fixed allocation from the [analyze] section for a placed scenario.
struct FixedAllocation {
  std::vector<double> power;
  std::vector<double> blocklength;
  PhaseShiftConfig theta;
};
FixedAllocation fixed_allocation(const ScenarioConfig& cfg, const Environment& env);

ServiceModel service_model(const ScenarioConfig& cfg, const LinkStats& stats, double blocklength,
                           const FidelityProfile& profile);

struct UserAnalysis {
  std::size_t user = 0;
  double power = 0.0;
  double blocklength = 0.0;
  LinkStats stats;
  DeterminacyResult result;
};

/// Lemma evaluation for every user at the fixed allocation, with the
/// evaluation profile and no memoisation.
std::vector<UserAnalysis> analyze_scenario(const ScenarioConfig& cfg);
std::string analysis_csv(const ScenarioConfig& cfg, const std::vector<UserAnalysis>& rows);

struct SimulationRow {
  std::size_t user = 0;
  std::uint32_t t = 0;
  ProbabilityEstimate empirical;
  double bound = 1.0;
  bool violation = false;  // empirical lower CI end above the bound
};

struct SimulationReport {
  std::vector<SimulationRow> rows;
  std::vector<DelayDistribution> delays;  // per user
  std::vector<ProbabilityEstimate> window;  // empirical Pr{t_min < T < t_max} per user
  std::vector<double> varpi;                // analytic per user
  std::size_t violations = 0;
};

/// Queue simulation next to the analytic bounds for t = 1..t_max.
SimulationReport simulate_scenario(const ScenarioConfig& cfg);

struct TrainOutcome {
  TrainingLog log;
  EvaluationResult evaluation;
  std::size_t cache_entries = 0;
};

/// Train with the configured agent, then evaluate greedily with the
/// evaluation profile. Writes a checkpoint when `checkpoint_path` is set.
TrainOutcome run_training(const ScenarioConfig& cfg, const std::string& checkpoint_path = "");

/// Greedy evaluation of a saved agent.
EvaluationResult run_evaluation(const ScenarioConfig& cfg, const std::string& checkpoint_path);

std::string training_log_csv(const ScenarioConfig& cfg, const TrainingLog& log);
std::string evaluation_csv(const ScenarioConfig& cfg, const EvaluationResult& eval);

int cmd_analyze(const ScenarioConfig& cfg, const RunOptions& opts);
int cmd_sweep(const ScenarioConfig& cfg, const RunOptions& opts);
int cmd_simulate(const ScenarioConfig& cfg, const RunOptions& opts);
int cmd_train(const ScenarioConfig& cfg, const RunOptions& opts);
int cmd_evaluate(const ScenarioConfig& cfg, const RunOptions& opts);

}  // namespace risdet
