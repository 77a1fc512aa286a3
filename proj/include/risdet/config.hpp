#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "risdet/agents.hpp"
#include "risdet/mdp_env.hpp"

namespace risdet {

/// Fixed allocation used by `analyze` and `simulate`.
struct AnalyzeSettings {
  std::vector<double> power;        // watts per user; empty = equal split of p_max
  std::vector<double> blocklength;  // channel uses per user; empty = equal split of n_max
  std::string phase = "aligned";    // aligned | zeros | random
  std::size_t aligned_user = 0;     // whose LoS cascade the aligned setting matches
};

struct SimulateSettings {
  std::uint64_t packets = 100000;
  std::uint32_t horizon_slots = 64;  // length of the reported CDF
  std::uint64_t warmup_slots = 1000;
  std::string sampler = "analytic";  // analytic | channel
};

struct SweepSettings {
  std::string parameter = "window.t_min";
  std::vector<double> values{2, 4, 6, 8};
  std::string mode = "analyze";        // analyze | train
  std::size_t repetitions = 1;
  std::string seed_policy = "paired";  // paired | distinct
};

struct TrainSettings {
  std::size_t episodes = 500;
  std::size_t steps = 200;
  std::size_t eval_episodes = 1;
  std::size_t eval_steps = 100;
  std::string checkpoint = "";  // evaluate: checkpoint to load ("" = <out>/checkpoint.txt)
};

struct RunSettings {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::size_t workers = 0;  // 0 = hardware concurrency
  double slot_ms = 1.0;     // display only
};

struct ScenarioConfig {
  EnvConfig env;
  AgentConfig agent;
  FidelityProfile train_profile = training_profile();
  FidelityProfile eval_profile = evaluation_profile();
  AnalyzeSettings analyze;
  SimulateSettings simulate;
  SweepSettings sweep;
  TrainSettings train;
  RunSettings run;

  void validate() const;
};

/// Parses the key-value format:
///   [section]
///   key = value        # comment
/// Values are numbers, words, true/false, or lists written [a, b, c].
/// Omitted keys keep their defaults; unknown keys, malformed values and
/// invariant failures raise ConfigError naming the line and section.
ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<string>");
ScenarioConfig load_config(const std::string& path);

/// Every key in canonical order with full-precision values; reparses to
/// the same configuration.
std::string dump_config(const ScenarioConfig& cfg);

/// FNV-1a 64 of dump_config with the [run] seed, out_dir and workers reset
/// to defaults, as 16 hex digits.
std::string config_hash(const ScenarioConfig& cfg);

/// Sets one key ("section.key") from its textual value.
void set_config_value(ScenarioConfig& cfg, const std::string& path, const std::string& value);
std::string get_config_value(const ScenarioConfig& cfg, const std::string& path);
std::vector<std::string> config_keys();

}  // namespace risdet
