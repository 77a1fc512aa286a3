#include "risdet/agents.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "risdet/errors.hpp"

namespace risdet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::MatrixXd gather_states(const std::vector<const Transition*>& batch, bool next) {
  const Eigen::Index d = batch.front()->state.size();
  Eigen::MatrixXd s(d, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) s.col(static_cast<Eigen::Index>(b)) = next ? batch[b]->next_state : batch[b]->state;
  return s;
}

Eigen::MatrixXd gather_params(const std::vector<const Transition*>& batch) {
  const Eigen::Index m = batch.front()->params.size();
  Eigen::MatrixXd x(m, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) x.col(static_cast<Eigen::Index>(b)) = batch[b]->params;
  return x;
}

std::size_t argmax(const Eigen::VectorXd& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<std::size_t>(i);
}

std::vector<std::size_t> dims(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> d{in};
  d.insert(d.end(), hidden.begin(), hidden.end());
  d.push_back(out);
  return d;
}

enum Stream : std::uint64_t { kInit = 11, kAction = 12, kSample = 13 };

}  // namespace

double EpsilonSchedule::at(std::uint64_t step) const {
  if (decay_steps == 0 || step >= decay_steps) return end;
  const double f = static_cast<double>(step) / static_cast<double>(decay_steps);
  return start + (end - start) * f;
}

void AgentConfig::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw DomainError("learning rates must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("discount must lie in [0, 1]");
  if (n_step == 0) throw DomainError("n_step must be >= 1");
  if (batch_size == 0) throw DomainError("batch size must be positive");
  if (buffer_capacity < std::max(batch_size, warmup_min)) throw DomainError("buffer capacity below the warmup threshold");
  if (use_target && target_sync == 0) throw DomainError("target sync period must be positive");
  if (!(epsilon.start >= 0.0 && epsilon.start <= 1.0 && epsilon.end >= 0.0 && epsilon.end <= epsilon.start))
    throw DomainError("epsilon schedule must satisfy 0 <= end <= start <= 1");
  if (!(grad_clip > 0.0)) throw DomainError("gradient clip must be positive");
  if (cbl_levels < 2) throw DomainError("DQN baseline needs at least two blocklength levels");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw DomainError("moment decay rates must lie in [0, 1)");
  for (std::size_t h : actor_hidden)
    if (h == 0) throw DomainError("zero hidden width");
  for (std::size_t h : critic_hidden)
    if (h == 0) throw DomainError("zero hidden width");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw DomainError("replay capacity must be positive");
  data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
    return;
  }
  data_[cursor_] = std::move(t);
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (n > data_.size()) throw ContractViolation("sample_indices: batch larger than buffer");
  // Floyd's algorithm, then insertion order for reproducibility.
  std::vector<std::size_t> out;
  std::unordered_set<std::size_t> seen;
  const std::size_t size = data_.size();
  for (std::size_t j = size - n; j < size; ++j) {
    std::uniform_int_distribution<std::size_t> d(0, j);
    const std::size_t t = d(rng);
    const std::size_t pick = seen.count(t) ? j : t;
    seen.insert(pick);
    out.push_back(pick);
  }
  return out;
}

Transition NStepAccumulator::emit(std::size_t count, const Eigen::VectorXd& next, bool bootstrap) const {
  const Pending& head = pending_.front();
  Transition t;
  t.state = head.state;
  t.action = head.action;
  t.params = head.params;
  double g = 1.0;
  for (std::size_t i = 0; i < count; ++i) {
    t.reward += g * pending_[i].reward;
    g *= gamma_;
  }
  t.next_state = next;
  t.discount = bootstrap ? g : 0.0;
  return t;
}

void NStepAccumulator::observe(const Eigen::VectorXd& state, std::vector<Transition>& out) {
  if (pending_.size() == n_) {
    out.push_back(emit(n_, state, true));
    pending_.pop_front();
  }
}

void NStepAccumulator::record(const Eigen::VectorXd& state, std::size_t action, const Eigen::VectorXd& params,
                              double reward) {
  pending_.push_back({state, action, params, reward});
}

void NStepAccumulator::flush(const Eigen::VectorXd& terminal_state, std::vector<Transition>& out) {
  while (!pending_.empty()) {
    out.push_back(emit(pending_.size(), terminal_state, false));
    pending_.pop_front();
  }
}

Eigen::MatrixXd stack_input(const Eigen::MatrixXd& states, const Eigen::MatrixXd& params) {
  if (states.cols() != params.cols()) throw ContractViolation("stack_input: batch size mismatch");
  Eigen::MatrixXd in(states.rows() + params.rows(), states.cols());
  in.topRows(states.rows()) = states;
  in.bottomRows(params.rows()) = params;
  return in;
}

Eigen::MatrixXd CriticQ::q(const Eigen::MatrixXd& states, const Eigen::MatrixXd& params) const {
  return net_.forward(stack_input(states, params));
}

Eigen::MatrixXd CriticQ::grad_params(const Eigen::MatrixXd& states, const Eigen::MatrixXd& params,
                                     const Eigen::MatrixXd& weights) const {
  MlpCache cache;
  net_.forward(stack_input(states, params), &cache);
  Eigen::VectorXd scratch;
  const Eigen::MatrixXd gin = net_.backward(cache, weights, scratch);
  return gin.bottomRows(params.rows());
}

Selection select_action(const Eigen::VectorXd& state, const Mlp& actor, const QFunction& critic, double epsilon,
                        Rng& rng, bool explore_params) {
  const Eigen::VectorXd out = actor.forward(state);
  const Eigen::Index m = out.size() / 2;
  Selection sel;
  sel.state = state;
  sel.params = out.head(m);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(m) - 1);
    sel.action = pick(rng);
    if (explore_params) sel.params[static_cast<Eigen::Index>(sel.action)] = u(rng);
  } else {
    const Eigen::MatrixXd q = critic.q(Eigen::MatrixXd(state), Eigen::MatrixXd(sel.params));
    sel.action = argmax(q.col(0));
  }
  sel.hybrid = {sel.action, sel.params[static_cast<Eigen::Index>(sel.action)]};
  return sel;
}

Eigen::VectorXd n_step_target(const std::vector<const Transition*>& batch, const QFunction& critic_target,
                              const Mlp& actor) {
  const Eigen::MatrixXd next = gather_states(batch, true);
  const Eigen::MatrixXd out = actor.forward(next);
  const Eigen::MatrixXd x = out.topRows(out.rows() / 2);
  const Eigen::MatrixXd q = critic_target.q(next, x);
  Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto bi = static_cast<Eigen::Index>(b);
    y[bi] = batch[b]->reward;
    if (batch[b]->discount != 0.0) y[bi] += batch[b]->discount * q.col(bi).maxCoeff();
  }
  return y;
}

double critic_loss(const Mlp& critic, const std::vector<const Transition*>& batch, const Eigen::VectorXd& targets,
                   Eigen::VectorXd& grad) {
  const Eigen::MatrixXd in = stack_input(gather_states(batch, false), gather_params(batch));
  MlpCache cache;
  const Eigen::MatrixXd q = critic.forward(in, &cache);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto bi = static_cast<Eigen::Index>(b);
    const auto l = static_cast<Eigen::Index>(batch[b]->action);
    const double diff = q(l, bi) - targets[bi];
    loss += 0.5 * diff * diff;
    g(l, bi) = diff * inv_b;
  }
  critic.backward(cache, g, grad);
  return loss * inv_b;
}

double actor_loss(const Mlp& actor, const QFunction& critic, const Eigen::MatrixXd& states, ActorLossMode mode,
                  Eigen::VectorXd& grad) {
  MlpCache cache;
  const Eigen::MatrixXd out = actor.forward(states, &cache);
  const Eigen::Index m = out.rows() / 2;
  const Eigen::MatrixXd x = out.topRows(m);
  const Eigen::MatrixXd q = critic.q(states, x);
  const double inv_b = 1.0 / static_cast<double>(states.cols());
  Eigen::MatrixXd weights;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  double loss = 0.0;
  if (mode == ActorLossMode::paper_literal) {
    weights = out.bottomRows(m);
    loss = -(weights.array() * q.array()).sum() * inv_b;
    g.bottomRows(m) = -q * inv_b;
  } else {
    weights = Eigen::MatrixXd::Ones(m, out.cols());
    loss = -q.sum() * inv_b;
  }
  g.topRows(m) = -critic.grad_params(states, x, weights) * inv_b;
  actor.backward(cache, g, grad);
  return loss;
}

double critic_update(Mlp& critic, const std::vector<const Transition*>& batch, const Eigen::VectorXd& targets,
                     Optimizer& opt, double clip) {
  Eigen::VectorXd grad;
  const double loss = critic_loss(critic, batch, targets, grad);
  clip_global_norm(grad, clip);
  opt.step(critic, grad);
  return loss;
}

double actor_update(Mlp& actor, const QFunction& critic, const Eigen::MatrixXd& states, ActorLossMode mode,
                    Optimizer& opt, double clip) {
  Eigen::VectorXd grad;
  const double loss = actor_loss(actor, critic, states, mode, grad);
  clip_global_norm(grad, clip);
  opt.step(actor, grad);
  return loss;
}

Eigen::VectorXd dqn_target(const std::vector<const Transition*>& batch, const Mlp& q_target) {
  const Eigen::MatrixXd q = q_target.forward(gather_states(batch, true));
  Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto bi = static_cast<Eigen::Index>(b);
    y[bi] = batch[b]->reward;
    if (batch[b]->discount != 0.0) y[bi] += batch[b]->discount * q.col(bi).maxCoeff();
  }
  return y;
}

double dqn_loss(const Mlp& qnet, const std::vector<const Transition*>& batch, const Eigen::VectorXd& targets,
                Eigen::VectorXd& grad) {
  MlpCache cache;
  const Eigen::MatrixXd q = qnet.forward(gather_states(batch, false), &cache);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto bi = static_cast<Eigen::Index>(b);
    const auto a = static_cast<Eigen::Index>(batch[b]->action);
    const double diff = q(a, bi) - targets[bi];
    loss += 0.5 * diff * diff;
    g(a, bi) = diff * inv_b;
  }
  qnet.backward(cache, g, grad);
  return loss * inv_b;
}

Agent::Agent(const AgentConfig& config, std::size_t state_dim, std::size_t n_discrete, std::size_t n_users,
             std::uint64_t seed)
    : config_(config),
      state_dim_(state_dim),
      n_discrete_(n_discrete),
      n_users_(n_users),
      action_rng_(make_stream(seed, kAction)),
      sample_rng_(make_stream(seed, kSample)) {
  config_.validate();
  if (state_dim == 0 || n_discrete == 0 || n_users == 0) throw DomainError("Agent: empty state or action space");
  if (config_.kind == AgentKind::random) return;
  Rng init = make_stream(seed, kInit);
  const std::size_t count = config_.shared_params ? 1 : n_users;
  for (std::size_t i = 0; i < count; ++i) {
    Nets n;
    if (config_.kind == AgentKind::sid_pdqn) {
      n.actor = Mlp(dims(state_dim, config_.actor_hidden, 2 * n_discrete), OutputHead::actor, init);
      n.critic = Mlp(dims(state_dim + n_discrete, config_.critic_hidden, n_discrete), OutputHead::identity, init);
    } else {
      n.critic = Mlp(dims(state_dim, config_.critic_hidden, n_actions()), OutputHead::identity, init);
    }
    n.critic_target = n.critic;
    for (Optimizer* o : {&n.actor_opt, &n.critic_opt}) {
      o->kind = config_.optimizer;
      o->beta1 = config_.adam_beta1;
      o->beta2 = config_.adam_beta2;
    }
    n.actor_opt.lr = config_.beta;
    n.critic_opt.lr = config_.alpha;
    nets_.push_back(std::move(n));
  }
}

std::size_t Agent::n_actions() const {
  return config_.kind == AgentKind::dqn ? n_discrete_ * config_.cbl_levels : n_discrete_;
}

Selection Agent::select(std::size_t user, const Eigen::VectorXd& state, double epsilon) {
  Selection sel;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (config_.kind) {
    case AgentKind::sid_pdqn: {
      const Nets& n = nets_[slot(user)];
      sel = select_action(state, n.actor, CriticQ(n.critic), epsilon, action_rng_, config_.explore_params);
      break;
    }
    case AgentKind::dqn: {
      sel.state = state;
      if (u(action_rng_) < epsilon) {
        std::uniform_int_distribution<std::size_t> pick(0, n_actions() - 1);
        sel.action = pick(action_rng_);
      } else {
        sel.action = argmax(nets_[slot(user)].critic.forward(state));
      }
      const std::size_t level = sel.action % config_.cbl_levels;
      sel.hybrid = {sel.action / config_.cbl_levels,
                    static_cast<double>(level) / static_cast<double>(config_.cbl_levels - 1)};
      break;
    }
    case AgentKind::random: {
      sel.state = state;
      std::uniform_int_distribution<std::size_t> pick(0, n_discrete_ - 1);
      sel.action = pick(action_rng_);
      sel.hybrid = {sel.action, u(action_rng_)};
      break;
    }
  }
  sel.user = user;
  return sel;
}

std::vector<Selection> Agent::collect_slot(const Environment& env, std::vector<Observation> obs, double epsilon) {
  if (obs.size() != n_users_) throw ContractViolation("collect_slot: observation count mismatch");
  const std::vector<std::size_t> order = env.order();
  std::vector<Selection> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t k = order[i];
    Selection sel = select(k, env.encode(obs[k]), epsilon);
    for (std::size_t j = i + 1; j < order.size(); ++j) env.commit(obs[order[j]], sel.hybrid);
    out.push_back(std::move(sel));
  }
  return out;
}

std::pair<double, double> Agent::learn(const std::vector<ReplayBuffer>& buffers) {
  if (config_.kind == AgentKind::random) return {kNaN, kNaN};
  if (buffers.size() != nets_.size()) throw ContractViolation("learn: one buffer per network required");
  double c_loss = kNaN;
  double a_loss = kNaN;
  bool stepped = false;
  for (std::size_t i = 0; i < nets_.size(); ++i) {
    const ReplayBuffer& buf = buffers[i];
    if (buf.size() < config_.warmup()) continue;
    std::vector<const Transition*> batch;
    for (std::size_t idx : buf.sample_indices(config_.batch_size, sample_rng_)) batch.push_back(&buf.at(idx));
    Nets& n = nets_[i];
    const Mlp& boot = config_.use_target ? n.critic_target : n.critic;
    if (config_.kind == AgentKind::sid_pdqn) {
      const Eigen::VectorXd y = n_step_target(batch, CriticQ(boot), n.actor);
      c_loss = critic_update(n.critic, batch, y, n.critic_opt, config_.grad_clip);
      a_loss = actor_update(n.actor, CriticQ(n.critic), gather_states(batch, false), config_.actor_loss,
                            n.actor_opt, config_.grad_clip);
    } else {
      const Eigen::VectorXd y = dqn_target(batch, boot);
      Eigen::VectorXd grad;
      c_loss = dqn_loss(n.critic, batch, y, grad);
      clip_global_norm(grad, config_.grad_clip);
      n.critic_opt.step(n.critic, grad);
    }
    stepped = true;
  }
  if (stepped) {
    ++updates_;
    if (config_.use_target && updates_ % config_.target_sync == 0)
      for (auto& n : nets_) n.critic_target = n.critic;
  }
  return {c_loss, a_loss};
}

std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::sid_pdqn:
      return "sid_pdqn";
    case AgentKind::dqn:
      return "dqn";
    case AgentKind::random:
      return "random";
  }
  return "?";
}

std::string to_string(ActorLossMode m) { return m == ActorLossMode::paper_literal ? "paper_literal" : "standard_pdqn"; }

void Agent::save(std::ostream& os) const {
  os << "risdet-agent 1\n";
  os << "kind " << to_string(config_.kind) << '\n';
  os << "shape " << state_dim_ << ' ' << n_discrete_ << ' ' << n_users_ << ' ' << n_actions() << '\n';
  os << "config alpha=" << hexfloat(config_.alpha) << " beta=" << hexfloat(config_.beta)
     << " gamma=" << hexfloat(config_.gamma) << " n_step=" << config_.n_step << " batch=" << config_.batch_size
     << " actor_loss=" << to_string(config_.actor_loss) << " target=" << (config_.use_target ? 1 : 0) << '\n';
  os << "updates " << updates_ << '\n';
  os << "nets " << nets_.size() << '\n';
  for (std::size_t i = 0; i < nets_.size(); ++i) {
    const Nets& n = nets_[i];
    const std::string tag = std::to_string(i);
    if (config_.kind == AgentKind::sid_pdqn) write_mlp(os, "actor" + tag, n.actor, n.actor_opt);
    write_mlp(os, "critic" + tag, n.critic, n.critic_opt);
    write_mlp(os, "target" + tag, n.critic_target, Optimizer{});
  }
  os << "rng_action " << action_rng_ << '\n';
  os << "rng_sample " << sample_rng_ << '\n';
  os << "end\n";
}

void Agent::load(std::istream& is) {
  auto expect = [&](const std::string& want) {
    std::string w;
    if (!(is >> w) || w != want) throw ConfigError("checkpoint: expected '" + want + "', found '" + w + "'");
  };
  expect("risdet-agent");
  int version = 0;
  if (!(is >> version) || version != 1) throw ConfigError("checkpoint: unsupported version");
  expect("kind");
  std::string kind;
  is >> kind;
  if (kind != to_string(config_.kind)) throw ConfigError("checkpoint: agent kind " + kind + " does not match config");
  expect("shape");
  std::size_t sd = 0, nd = 0, nu = 0, na = 0;
  is >> sd >> nd >> nu >> na;
  if (sd != state_dim_ || nd != n_discrete_ || nu != n_users_ || na != n_actions())
    throw ConfigError("checkpoint: network shape does not match the scenario");
  expect("config");
  std::string line;
  std::getline(is, line);
  expect("updates");
  is >> updates_;
  expect("nets");
  std::size_t count = 0;
  is >> count;
  if (count != nets_.size()) throw ConfigError("checkpoint: network count mismatch");
  for (std::size_t i = 0; i < count; ++i) {
    Nets& n = nets_[i];
    const std::string tag = std::to_string(i);
    if (config_.kind == AgentKind::sid_pdqn) read_mlp(is, "actor" + tag, n.actor, n.actor_opt);
    read_mlp(is, "critic" + tag, n.critic, n.critic_opt);
    Optimizer unused;
    read_mlp(is, "target" + tag, n.critic_target, unused);
  }
  expect("rng_action");
  is >> action_rng_;
  expect("rng_sample");
  is >> sample_rng_;
  expect("end");
  if (!is) throw ConfigError("checkpoint: truncated file");
}

TrainingLog train(Environment& env, Agent& agent, std::size_t episodes, std::size_t steps,
                  const std::function<void(std::size_t)>& on_episode) {
  const AgentConfig& cfg = agent.config();
  const std::size_t n_users = env.config().n_users;
  std::vector<ReplayBuffer> buffers(cfg.kind == AgentKind::random ? 0 : agent.n_nets(),
                                    ReplayBuffer(cfg.buffer_capacity));
  std::vector<NStepAccumulator> acc(n_users, NStepAccumulator(cfg.n_step, cfg.gamma));
  TrainingLog log;
  std::uint64_t global = 0;
  std::vector<Transition> emitted;
  auto store = [&](std::size_t user) {
    if (!buffers.empty())
      for (auto& t : emitted) buffers[agent.slot(user)].push(std::move(t));
    emitted.clear();
  };

  for (std::size_t ep = 0; ep < episodes; ++ep) {
    std::vector<Observation> obs = env.reset();
    double sum = 0.0;
    for (std::size_t t = 0; t < steps; ++t, ++global) {
      const double eps = cfg.kind == AgentKind::random ? 1.0 : cfg.epsilon.at(global);
      const std::vector<Selection> sels = agent.collect_slot(env, obs, eps);
      std::vector<HybridAction> actions(n_users);
      for (const auto& s : sels) {
        acc[s.user].observe(s.state, emitted);
        store(s.user);
        actions[s.user] = s.hybrid;
      }
      StepOutcome out = env.step(actions);
      for (const auto& s : sels) acc[s.user].record(s.state, s.action, s.params, out.reward);
      if (t + 1 == steps) {
        for (std::size_t k = 0; k < n_users; ++k) {
          acc[k].flush(env.encode(out.next_state[k]), emitted);
          store(k);
        }
      }
      const auto [c_loss, a_loss] = agent.learn(buffers);
      sum += out.reward;

      LogRow row;
      row.episode = ep;
      row.step = global;
      row.epsilon = eps;
      row.reward = out.reward;
      row.mean_episode_reward = sum / static_cast<double>(t + 1);
      row.critic_loss = c_loss;
      row.actor_loss = a_loss;
      row.buffer_fill = 0;
      for (const auto& b : buffers) row.buffer_fill += b.size();
      log.rows.push_back(row);
      if (!std::isnan(c_loss)) ++log.updates;
      obs = std::move(out.next_state);
    }
    log.episode_means.push_back(steps ? sum / static_cast<double>(steps) : 0.0);
    if (on_episode) on_episode(ep);
  }
  return log;
}

EvaluationResult evaluate(Environment& env, Agent& agent, std::size_t episodes, std::size_t steps) {
  EvaluationResult r;
  const std::size_t n_users = env.config().n_users;
  r.mean_varpi.assign(n_users, 0.0);
  const double eps = agent.config().kind == AgentKind::random ? 1.0 : 0.0;
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    std::vector<Observation> obs = env.reset();
    for (std::size_t t = 0; t < steps; ++t) {
      const std::vector<Selection> sels = agent.collect_slot(env, obs, eps);
      std::vector<HybridAction> actions(n_users);
      for (const auto& s : sels) actions[s.user] = s.hybrid;
      StepOutcome out = env.step(actions);
      r.rewards.push_back(out.reward);
      r.varpi.push_back(out.per_user_varpi);
      r.allocations.push_back(out.allocation);
      for (std::size_t k = 0; k < n_users; ++k) r.mean_varpi[k] += out.per_user_varpi[k];
      obs = std::move(out.next_state);
    }
  }
  const double n = static_cast<double>(r.rewards.size());
  if (n > 0) {
    for (double v : r.rewards) r.mean_reward += v;
    r.mean_reward /= n;
    for (auto& v : r.mean_varpi) v /= n;
  }
  return r;
}

}  // namespace risdet
