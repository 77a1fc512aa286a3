#pragma once

#include <Eigen/Dense>
#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <shared_mutex>
#include <vector>

#include "risdet/fbc_secrecy.hpp"
#include "risdet/geometry_channel.hpp"
#include "risdet/snc.hpp"

namespace risdet {

enum class PhaseMode { quantized, random, aligned };

struct CodebookSpec {
  std::size_t n_power_levels = 4;
  PhaseMode phase_mode = PhaseMode::aligned;
  std::size_t n_codewords = 4;
  unsigned phase_bits = 2;  // quantized mode: 2^bits phase levels per element

  void validate() const;
};

/// Discrete action L = power_index * n_codewords + codeword_index.
struct ActionCodebook {
  std::vector<double> power_levels;
  std::vector<PhaseShiftConfig> codewords;

  std::size_t size() const { return power_levels.size() * codewords.size(); }
  std::size_t power_index(std::size_t l) const { return l / codewords.size(); }
  std::size_t codeword_index(std::size_t l) const { return l % codewords.size(); }
  double power(std::size_t l) const { return power_levels.at(power_index(l)); }
  const PhaseShiftConfig& codeword(std::size_t l) const { return codewords.at(codeword_index(l)); }
};

/// Power levels p_max/L, 2 p_max/L, ..., p_max. Aligned mode puts one
/// codeword matched to each user's LoS cascade first (user order), then
/// fills the rest with uniformly random phases.
ActionCodebook build_codebook(double p_max, const CodebookSpec& spec, const Topology& topo,
                              const FadingParams& fading, Rng& rng);

struct HybridAction {
  std::size_t discrete_index = 0;
  double continuous_param = 0.0;  // in [0, 1]
};

struct Budgets {
  double p_max = 3.0;      // watts, summed over users
  double n_max = 1500.0;   // channel uses, summed over users
  double n_floor = 50.0;   // smallest blocklength a user can get
  double n_ceiling = 0.0;  // largest per-user request; 0 means n_max

  double ceiling() const { return n_ceiling > 0.0 ? n_ceiling : n_max; }
  double blocklength(double param) const { return n_floor + param * (ceiling() - n_floor); }
  void validate(std::size_t n_users) const;
};

struct Allocation {
  std::vector<double> power;
  std::vector<double> blocklength;
  std::size_t codeword = 0;
  bool power_scaled = false;
  bool cbl_scaled = false;

  int violations() const { return static_cast<int>(power_scaled) + static_cast<int>(cbl_scaled); }
};

/// Proportional scaling onto the power and blocklength budgets. The RIS
/// takes the codeword of `first_user`, the first user in this slot's
/// selection order.
Allocation project_actions(const std::vector<HybridAction>& actions, const ActionCodebook& codebook,
                           const Budgets& budgets, std::size_t first_user);

/// Quadrature and search settings for one fidelity level.
struct FidelityProfile {
  QuadratureSpec quadrature;
  SearchSpec search;
  /// Memo quantum: log-domain step for the link statistics and additive
  /// step for the blocklength. Zero disables quantisation (exact keys).
  double log_quantum = 0.0;
  double n_quantum = 0.0;
};

FidelityProfile training_profile();
FidelityProfile evaluation_profile();

struct DeterminacyInputs {
  ArrivalModel arrival;
  SecrecyParams secrecy;  // blocklength overwritten per query
  DelayWindow window;
  ServiceDensity density = ServiceDensity::rician;
};

/// Thread-safe memo of delay_determinacy. Keys are the quantised
/// statistics and the value is computed at the quantised point, so every
/// entry is a pure function of its key whatever the insertion order.
class DeterminacyCache {
 public:
  DeterminacyCache(DeterminacyInputs inputs, FidelityProfile profile);

  DeterminacyResult get(const LinkStats& stats, double blocklength);
  /// The exact point a query is evaluated at.
  std::pair<LinkStats, double> quantise(const LinkStats& stats, double blocklength) const;
  std::size_t size() const;
  std::uint64_t hits() const { return hits_.load(); }
  const FidelityProfile& profile() const { return profile_; }
  const DeterminacyInputs& inputs() const { return inputs_; }

 private:
  using Key = std::array<std::int64_t, 5>;
  Key key(const LinkStats& stats, double blocklength) const;

  DeterminacyInputs inputs_;
  FidelityProfile profile_;
  mutable std::shared_mutex mu_;
  std::map<Key, DeterminacyResult> memo_;
  std::atomic<std::uint64_t> hits_{0};
};

struct EnvConfig {
  Topology topology;
  FadingParams fading;
  SecrecyParams secrecy;
  ArrivalModel arrival;
  DelayWindow window;
  Budgets budgets;
  CodebookSpec codebook;
  std::size_t n_users = 3;
  std::size_t episode_length = 200;
  double violation_penalty = 0.05;
  bool observe_eve = true;
  ServiceDensity density = ServiceDensity::rician;
  std::size_t eve_calibration_draws = 20000;

  void validate() const;
};

/// What user k sees when choosing its action. The last four fields carry
/// the within-slot bookkeeping of users that already chose.
struct Observation {
  double user_snr_db = 0.0;      // |h + f^H Theta g|^2 p_max / noise under the current RIS setting
  double delta_sq_db = 0.0;      // rho_max * delta^2
  double upsilon_db = 0.0;       // rho_max * upsilon under the current RIS setting
  double eve_snr_db = 0.0;
  double eve_mean_db = 0.0;      // rho_max * eve_mean_gain
  double prev_power = 0.0;       // watts
  double prev_codeword = 0.0;    // index
  double prev_blocklength = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  double remaining_power = 0.0;
  double remaining_cbl = 0.0;
  double peers_committed = 0.0;  // users that already chose this slot
  double shared_codeword = -1.0; // codeword fixed by an earlier user, -1 when none
};

inline constexpr std::size_t kStateDim = 15;

struct StepOutcome {
  std::vector<Observation> next_state;
  double reward = 0.0;
  std::vector<double> per_user_varpi;
  std::vector<bool> stability_failure;
  Allocation allocation;
  bool done = false;
};

class Environment {
 public:
  /// Places users, calibrates the Eve gain and builds the codebook from
  /// streams derived from `seed`. Geometry stays fixed for the lifetime of
  /// the environment; fading is redrawn every slot. Without a cache a
  /// private one with the training profile is created.
  Environment(const EnvConfig& config, std::uint64_t seed, std::shared_ptr<DeterminacyCache> cache = nullptr);

  std::vector<Observation> reset();
  StepOutcome step(const std::vector<HybridAction>& actions);

  /// Features fed to the networks.
  Eigen::VectorXd encode(const Observation& obs) const;

  /// Bookkeeping after user `user` picked `action` this slot.
  void commit(Observation& later, const HybridAction& action) const;

  const EnvConfig& config() const { return config_; }
  const ActionCodebook& codebook() const { return codebook_; }
  const Topology& topology() const { return config_.topology; }
  const FadingParams& fading() const { return config_.fading; }
  DeterminacyCache& cache() { return *cache_; }
  std::shared_ptr<DeterminacyCache> shared_cache() const { return cache_; }
  void set_cache(std::shared_ptr<DeterminacyCache> cache) { cache_ = std::move(cache); }
  /// Round-robin selection order for the current slot.
  std::vector<std::size_t> order() const;
  std::size_t slot() const { return slot_; }
  std::size_t episode() const { return episode_; }

  LinkStats stats(std::size_t user, const PhaseShiftConfig& theta, double power) const;

 private:
  std::vector<Observation> observe();

  EnvConfig config_;
  Rng fading_rng_;
  ActionCodebook codebook_;
  std::shared_ptr<DeterminacyCache> cache_;
  ChannelRealization channel_;
  PhaseShiftConfig current_theta_;
  LosComponents los_;
  std::vector<double> prev_power_, prev_cbl_;
  double prev_codeword_ = 0.0;
  std::size_t slot_ = 0;
  std::size_t episode_ = 0;
  bool started_ = false;
};

/// Mean of the per-user determinacies minus the violation penalty,
/// clamped to [0, 1].
double step_reward(const std::vector<double>& varpi, int violations, double penalty);

}  // namespace risdet
