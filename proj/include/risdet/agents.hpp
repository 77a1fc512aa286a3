#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "risdet/mdp_env.hpp"
#include "risdet/neural.hpp"

namespace risdet {

enum class AgentKind { sid_pdqn, dqn, random };
enum class ActorLossMode { paper_literal, standard_pdqn };

struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  std::uint64_t decay_steps = 2000;

  /// Linear decay reaching `end` exactly at decay_steps, flat afterwards.
  double at(std::uint64_t step) const;
};

struct AgentConfig {
  AgentKind kind = AgentKind::sid_pdqn;
  double alpha = 3e-3;  // critic learning rate
  double beta = 1e-4;   // actor learning rate
  double gamma = 0.5;
  EpsilonSchedule epsilon;
  std::size_t n_step = 3;
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = 100000;
  bool use_target = true;
  std::size_t target_sync = 100;
  ActorLossMode actor_loss = ActorLossMode::paper_literal;
  std::vector<std::size_t> actor_hidden{128, 128};
  std::vector<std::size_t> critic_hidden{128, 128};
  OptimizerKind optimizer = OptimizerKind::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double grad_clip = 10.0;
  std::size_t warmup_min = 500;
  bool shared_params = true;
  std::size_t cbl_levels = 8;        // DQN baseline blocklength grid
  bool explore_params = true;        // random continuous parameter on exploratory picks
  std::size_t checkpoint_every = 0;  // episodes, 0 disables

  void validate() const;
  std::size_t warmup() const { return std::max(batch_size, warmup_min); }
};

/// One replayed sample. `params` holds the actor output for every discrete
/// action (empty for the DQN baseline). `discount` is gamma^m for an m-step
/// chain that bootstraps, 0 for one cut by the episode end.
struct Transition {
  Eigen::VectorXd state;
  std::size_t action = 0;
  Eigen::VectorXd params;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  double discount = 0.0;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return data_.at(i); }
  /// `n` distinct indices, uniform without replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<Transition> data_;
};

/// Turns a per-user stream of (state, action, reward) into m-step
/// transitions.
class NStepAccumulator {
 public:
  NStepAccumulator(std::size_t n, double gamma) : n_(n), gamma_(gamma) {}

  /// Called with the state observed at the start of a slot; completes the
  /// chain that started n slots earlier.
  void observe(const Eigen::VectorXd& state, std::vector<Transition>& out);
  /// Called after the slot's reward is known.
  void record(const Eigen::VectorXd& state, std::size_t action, const Eigen::VectorXd& params, double reward);
  /// Episode end: emit every pending chain without bootstrap.
  void flush(const Eigen::VectorXd& terminal_state, std::vector<Transition>& out);
  std::size_t pending() const { return pending_.size(); }

 private:
  struct Pending {
    Eigen::VectorXd state;
    std::size_t action;
    Eigen::VectorXd params;
    double reward;
  };
  Transition emit(std::size_t count, const Eigen::VectorXd& next, bool bootstrap) const;

  std::size_t n_;
  double gamma_;
  std::deque<Pending> pending_;
};

/// Q(s, ., x) for every discrete action, plus the gradient of a weighted
/// sum of Q-values with respect to the parameters x. Columns are samples.
class QFunction {
 public:
  virtual ~QFunction() = default;
  virtual Eigen::MatrixXd q(const Eigen::MatrixXd& states, const Eigen::MatrixXd& params) const = 0;
  /// d/dX of sum_{L,b} W(L,b) Q(L,b).
  virtual Eigen::MatrixXd grad_params(const Eigen::MatrixXd& states, const Eigen::MatrixXd& params,
                                      const Eigen::MatrixXd& weights) const = 0;
};

/// Critic network over the concatenated input [state; params].
class CriticQ : public QFunction {
 public:
  explicit CriticQ(const Mlp& net) : net_(net) {}
  Eigen::MatrixXd q(const Eigen::MatrixXd& states, const Eigen::MatrixXd& params) const override;
  Eigen::MatrixXd grad_params(const Eigen::MatrixXd& states, const Eigen::MatrixXd& params,
                              const Eigen::MatrixXd& weights) const override;

 private:
  const Mlp& net_;
};

Eigen::MatrixXd stack_input(const Eigen::MatrixXd& states, const Eigen::MatrixXd& params);

struct Selection {
  std::size_t user = 0;
  Eigen::VectorXd state;
  std::size_t action = 0;  // agent action (DQN: codebook index * levels + level)
  Eigen::VectorXd params;
  HybridAction hybrid;
};

/// epsilon-greedy hybrid choice from the actor's parameters and the
/// critic's Q-values.
Selection select_action(const Eigen::VectorXd& state, const Mlp& actor, const QFunction& critic, double epsilon,
                        Rng& rng, bool explore_params = true);

/// Target y = R + discount * max_L Q_target(s', L, x_L(s')) for a batch.
Eigen::VectorXd n_step_target(const std::vector<const Transition*>& batch, const QFunction& critic_target,
                              const Mlp& actor);

/// Mean of 0.5 (Q(s, L, x) - y)^2; gradient added into `grad`.
double critic_loss(const Mlp& critic, const std::vector<const Transition*>& batch, const Eigen::VectorXd& targets,
                   Eigen::VectorXd& grad);

/// paper_literal: -mean_b sum_L P(L|s) Q(s, L, x(s)); standard_pdqn:
/// -mean_b sum_L Q(s, L, x(s)). Gradient w.r.t. the actor only.
double actor_loss(const Mlp& actor, const QFunction& critic, const Eigen::MatrixXd& states, ActorLossMode mode,
                  Eigen::VectorXd& grad);

double critic_update(Mlp& critic, const std::vector<const Transition*>& batch, const Eigen::VectorXd& targets,
                     Optimizer& opt, double clip);
double actor_update(Mlp& actor, const QFunction& critic, const Eigen::MatrixXd& states, ActorLossMode mode,
                    Optimizer& opt, double clip);

/// Plain Q-learning targets and loss for the fully discrete baseline.
Eigen::VectorXd dqn_target(const std::vector<const Transition*>& batch, const Mlp& q_target);
double dqn_loss(const Mlp& q, const std::vector<const Transition*>& batch, const Eigen::VectorXd& targets,
                Eigen::VectorXd& grad);

struct LogRow {
  std::size_t episode = 0;
  std::uint64_t step = 0;
  double epsilon = 0.0;
  double reward = 0.0;
  double mean_episode_reward = 0.0;
  double critic_loss = 0.0;  // NaN when no update ran
  double actor_loss = 0.0;
  std::size_t buffer_fill = 0;
};

struct TrainingLog {
  std::vector<LogRow> rows;
  std::vector<double> episode_means;
  std::uint64_t updates = 0;
};

/// The three policies behind one interface. Networks are indexed per user
/// unless parameters are shared.
class Agent {
 public:
  Agent(const AgentConfig& config, std::size_t state_dim, std::size_t n_discrete, std::size_t n_users,
        std::uint64_t seed);

  const AgentConfig& config() const { return config_; }
  std::size_t n_discrete() const { return n_discrete_; }
  std::size_t n_actions() const;  // agent-level action count

  /// Sequential within-slot selection: users choose in env.order(), and
  /// every choice is folded into the observations of the users after it.
  std::vector<Selection> collect_slot(const Environment& env, std::vector<Observation> obs, double epsilon);

  /// One gradient step (critic then actor) on a sampled batch per network.
  /// Returns {critic_loss, actor_loss}.
  std::pair<double, double> learn(const std::vector<ReplayBuffer>& buffers);

  void save(std::ostream& os) const;
  void load(std::istream& is);

  Mlp& actor(std::size_t user = 0) { return nets_[slot(user)].actor; }
  Mlp& critic(std::size_t user = 0) { return nets_[slot(user)].critic; }
  std::size_t n_nets() const { return nets_.size(); }
  std::size_t slot(std::size_t user) const { return config_.shared_params ? 0 : user; }
  Rng& action_rng() { return action_rng_; }

 private:
  struct Nets {
    Mlp actor;
    Mlp critic;  // Q-network for the DQN baseline
    Mlp critic_target;
    Optimizer actor_opt;
    Optimizer critic_opt;
  };
  Selection select(std::size_t user, const Eigen::VectorXd& state, double epsilon);

  AgentConfig config_;
  std::size_t state_dim_;
  std::size_t n_discrete_;
  std::size_t n_users_;
  std::vector<Nets> nets_;
  Rng action_rng_;
  Rng sample_rng_;
  std::uint64_t updates_ = 0;
};

/// Algorithm loop: collect, step, store, learn. `steps` slots per
/// episode. `on_episode` (optional) runs after each episode.
TrainingLog train(Environment& env, Agent& agent, std::size_t episodes, std::size_t steps,
                  const std::function<void(std::size_t)>& on_episode = {});

struct EvaluationResult {
  double mean_reward = 0.0;
  std::vector<double> rewards;               // per step
  std::vector<double> mean_varpi;            // per user
  std::vector<std::vector<double>> varpi;    // per step, per user
  std::vector<Allocation> allocations;       // per step
};

/// Greedy (epsilon = 0) rollouts. Random agents stay random.
EvaluationResult evaluate(Environment& env, Agent& agent, std::size_t episodes, std::size_t steps);

std::string to_string(AgentKind k);
std::string to_string(ActorLossMode m);

}  // namespace risdet
