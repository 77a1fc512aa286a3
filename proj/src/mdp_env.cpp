#include "risdet/mdp_env.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <numbers>

#include "risdet/errors.hpp"

namespace risdet {

namespace {

double db(double v) { return 10.0 * std::log10(std::max(v, 1e-30)); }

enum Stream : std::uint64_t { kGeometry = 1, kCalibration = 2, kCodebook = 3, kFading = 4 };

}  // namespace

void CodebookSpec::validate() const {
  if (n_power_levels == 0 || n_codewords == 0) throw DomainError("codebook needs at least one power level and codeword");
  if (phase_mode == PhaseMode::quantized && (phase_bits == 0 || phase_bits > 16))
    throw DomainError("codebook phase_bits must be in [1, 16]");
}

ActionCodebook build_codebook(double p_max, const CodebookSpec& spec, const Topology& topo,
                              const FadingParams& fading, Rng& rng) {
  spec.validate();
  if (!(p_max > 0.0)) throw DomainError("build_codebook: p_max must be positive");
  ActionCodebook cb;
  for (std::size_t i = 1; i <= spec.n_power_levels; ++i)
    cb.power_levels.push_back(p_max * static_cast<double>(i) / static_cast<double>(spec.n_power_levels));

  const std::size_t n_el = topo.n_elements;
  if (spec.phase_mode == PhaseMode::aligned) {
    const LosComponents los = los_components(topo, fading);
    for (std::size_t k = 0; k < topo.n_users() && cb.codewords.size() < spec.n_codewords; ++k)
      cb.codewords.push_back(align_phases(Complex{}, los.f_user[k], los.g_ris));
  }
  const double step = 2.0 * std::numbers::pi / static_cast<double>(1u << spec.phase_bits);
  while (cb.codewords.size() < spec.n_codewords) {
    if (spec.phase_mode == PhaseMode::quantized) {
      std::uniform_int_distribution<unsigned> lvl(0, (1u << spec.phase_bits) - 1);
      PhaseShiftConfig c;
      for (std::size_t n = 0; n < n_el; ++n) c.phases.push_back(step * lvl(rng));
      cb.codewords.push_back(c);
    } else {
      cb.codewords.push_back(PhaseShiftConfig::random(n_el, rng));
    }
  }
  return cb;
}

void Budgets::validate(std::size_t n_users) const {
  if (!(p_max > 0.0)) throw DomainError("budget p_max must be positive");
  if (!(n_floor >= 1.0)) throw DomainError("budget n_floor must be >= 1");
  if (!(n_max >= n_floor * static_cast<double>(n_users)))
    throw DomainError("budget n_max must cover n_floor for every user");
  if (n_ceiling != 0.0 && !(n_ceiling > n_floor)) throw DomainError("budget n_ceiling must exceed n_floor");
  if (!(ceiling() > n_floor)) throw DomainError("budget blocklength range is empty");
}

Allocation project_actions(const std::vector<HybridAction>& actions, const ActionCodebook& codebook,
                           const Budgets& budgets, std::size_t first_user) {
  if (actions.empty() || first_user >= actions.size()) throw ContractViolation("project_actions: bad action list");
  Allocation a;
  double p_sum = 0.0;
  double n_sum = 0.0;
  for (const auto& act : actions) {
    if (act.discrete_index >= codebook.size()) throw ContractViolation("project_actions: discrete index out of range");
    const double x = std::clamp(act.continuous_param, 0.0, 1.0);
    a.power.push_back(codebook.power(act.discrete_index));
    a.blocklength.push_back(budgets.blocklength(x));
    p_sum += a.power.back();
    n_sum += a.blocklength.back();
  }
  if (p_sum > budgets.p_max) {
    a.power_scaled = true;
    for (auto& p : a.power) p *= budgets.p_max / p_sum;
  }
  if (n_sum > budgets.n_max) {
    a.cbl_scaled = true;
    for (auto& n : a.blocklength) n = std::max(budgets.n_floor, n * budgets.n_max / n_sum);
    // The floor can push the sum back over; shave the users above it.
    double total = 0.0;
    double above = 0.0;
    for (double n : a.blocklength) {
      total += n;
      above += n - budgets.n_floor;
    }
    if (total > budgets.n_max && above > 0.0) {
      const double keep = std::max(0.0, 1.0 - (total - budgets.n_max) / above);
      for (auto& n : a.blocklength) n = budgets.n_floor + (n - budgets.n_floor) * keep;
    }
  }
  a.codeword = codebook.codeword_index(actions[first_user].discrete_index);
  return a;
}

FidelityProfile training_profile() {
  FidelityProfile p;
  p.quadrature.rel_tol = 1e-3;
  p.quadrature.fixed_nodes = 32;
  p.search.grid_points = 50;
  p.search.bisection_width = 1e-6;
  p.search.golden_rel_tol = 1e-4;
  p.log_quantum = 0.01;
  p.n_quantum = 10.0;
  return p;
}

FidelityProfile evaluation_profile() {
  FidelityProfile p;
  p.quadrature.rel_tol = 1e-6;
  p.quadrature.fixed_nodes = 96;
  p.search.grid_points = 200;
  p.log_quantum = 1e-3;
  p.n_quantum = 1.0;
  return p;
}

DeterminacyCache::DeterminacyCache(DeterminacyInputs inputs, FidelityProfile profile)
    : inputs_(std::move(inputs)), profile_(std::move(profile)) {
  inputs_.arrival.validate();
  inputs_.window.validate();
  profile_.quadrature.validate();
  if (profile_.log_quantum < 0.0 || profile_.n_quantum < 0.0) throw DomainError("negative memo quantum");
}

std::pair<LinkStats, double> DeterminacyCache::quantise(const LinkStats& s, double n) const {
  const double lq = profile_.log_quantum;
  auto q = [lq](double v) {
    if (lq == 0.0 || !(v > 0.0)) return v;
    return std::exp(std::round(std::log(v) / lq) * lq);
  };
  LinkStats out{q(s.delta_k_sq), q(s.upsilon_k), q(s.rho), q(s.lambda_eve)};
  double nq = n;
  if (profile_.n_quantum > 0.0) nq = std::max(1.0, std::round(n / profile_.n_quantum) * profile_.n_quantum);
  return {out, nq};
}

DeterminacyCache::Key DeterminacyCache::key(const LinkStats& s, double n) const {
  const auto [qs, qn] = quantise(s, n);
  auto bits = [](double v) { return std::bit_cast<std::int64_t>(v); };
  return {bits(qs.delta_k_sq), bits(qs.upsilon_k), bits(qs.rho), bits(qs.lambda_eve), bits(qn)};
}

DeterminacyResult DeterminacyCache::get(const LinkStats& stats, double blocklength) {
  const Key k = key(stats, blocklength);
  {
    std::shared_lock lock(mu_);
    auto it = memo_.find(k);
    if (it != memo_.end()) {
      ++hits_;
      return it->second;
    }
  }
  const auto [qs, qn] = quantise(stats, blocklength);
  ServiceModel sm;
  sm.stats = qs;
  sm.secrecy = inputs_.secrecy;
  sm.secrecy.blocklength = qn;
  sm.quadrature = profile_.quadrature;
  sm.density = inputs_.density;
  DeterminacyResult r;
  try {
    r = delay_determinacy(inputs_.window, inputs_.arrival, sm, profile_.search);
  } catch (const StabilityError&) {
    r = DeterminacyResult{};
    r.vacuous = true;
  }
  std::unique_lock lock(mu_);
  return memo_.emplace(k, r).first->second;
}

std::size_t DeterminacyCache::size() const {
  std::shared_lock lock(mu_);
  return memo_.size();
}

void EnvConfig::validate() const {
  if (n_users == 0) throw DomainError("need at least one user");
  if (episode_length == 0) throw DomainError("episode length must be positive");
  if (violation_penalty < 0.0) throw DomainError("violation penalty must be >= 0");
  if (eve_calibration_draws == 0) throw DomainError("eve calibration needs at least one draw");
  if (!(topology.carrier_wavelength > 0.0)) throw DomainError("carrier wavelength must be positive");
  fading.validate();
  secrecy.validate();
  arrival.validate();
  window.validate();
  budgets.validate(n_users);
  codebook.validate();
}

double step_reward(const std::vector<double>& varpi, int violations, double penalty) {
  if (varpi.empty()) return 0.0;
  double mean = 0.0;
  for (double v : varpi) mean += v;
  mean /= static_cast<double>(varpi.size());
  return std::clamp(mean - penalty * violations, 0.0, 1.0);
}

Environment::Environment(const EnvConfig& config, std::uint64_t seed, std::shared_ptr<DeterminacyCache> cache)
    : config_(config), fading_rng_(make_stream(seed, kFading)), cache_(std::move(cache)) {
  config_.validate();
  Rng geo = make_stream(seed, kGeometry);
  place_users(config_.topology, config_.n_users, geo);
  config_.topology.validate();
  if (!(config_.fading.eve_mean_gain > 0.0)) {
    Rng cal = make_stream(seed, kCalibration);
    config_.fading.eve_mean_gain = calibrate_eve_gain(config_.topology, config_.fading, config_.eve_calibration_draws, cal);
  }
  Rng cbr = make_stream(seed, kCodebook);
  codebook_ = build_codebook(config_.budgets.p_max, config_.codebook, config_.topology, config_.fading, cbr);
  los_ = los_components(config_.topology, config_.fading);
  if (!cache_)
    cache_ = std::make_shared<DeterminacyCache>(
        DeterminacyInputs{config_.arrival, config_.secrecy, config_.window, config_.density}, training_profile());
}

LinkStats Environment::stats(std::size_t user, const PhaseShiftConfig& theta, double power) const {
  return link_stats(config_.topology, config_.fading, theta, user, power);
}

std::vector<std::size_t> Environment::order() const {
  const std::size_t k = config_.n_users;
  std::vector<std::size_t> o(k);
  for (std::size_t i = 0; i < k; ++i) o[i] = (episode_ + i) % k;
  return o;
}

std::vector<Observation> Environment::observe() {
  const double p_max = config_.budgets.p_max;
  const double noise = config_.fading.noise_watts();
  const double rho_max = p_max / noise;
  std::vector<Observation> obs(config_.n_users);
  const double eve_snr = snr(composite_gain(channel_.h_direct_eve, channel_.f_eve, current_theta_, channel_.g_ris), p_max, noise);
  for (std::size_t k = 0; k < config_.n_users; ++k) {
    Observation& o = obs[k];
    o.user_snr_db = db(snr(composite_gain(channel_.h_direct[k], channel_.f_user[k], current_theta_, channel_.g_ris), p_max, noise));
    o.delta_sq_db = db(rho_max * delta_sq(config_.topology, config_.fading, k));
    o.upsilon_db = db(rho_max * std::norm(composite_gain(Complex{}, los_.f_user[k], current_theta_, los_.g_ris)));
    if (config_.observe_eve) {
      o.eve_snr_db = db(eve_snr);
      o.eve_mean_db = db(rho_max * config_.fading.eve_mean_gain);
    }
    o.prev_power = prev_power_[k];
    o.prev_codeword = prev_codeword_;
    o.prev_blocklength = prev_cbl_[k];
    o.t_min = config_.window.t_min;
    o.t_max = config_.window.t_max;
    o.remaining_power = p_max;
    o.remaining_cbl = config_.budgets.n_max;
  }
  return obs;
}

std::vector<Observation> Environment::reset() {
  if (started_) ++episode_;
  started_ = true;
  slot_ = 0;
  prev_power_.assign(config_.n_users, 0.0);
  prev_cbl_.assign(config_.n_users, 0.0);
  prev_codeword_ = 0.0;
  current_theta_ = PhaseShiftConfig::zeros(config_.topology.n_elements);
  channel_ = sample_channels(config_.topology, config_.fading, fading_rng_);
  return observe();
}

void Environment::commit(Observation& later, const HybridAction& action) const {
  later.remaining_power = std::max(0.0, later.remaining_power - codebook_.power(action.discrete_index));
  later.remaining_cbl =
      std::max(0.0, later.remaining_cbl - config_.budgets.blocklength(std::clamp(action.continuous_param, 0.0, 1.0)));
  later.peers_committed += 1.0;
  if (later.shared_codeword < 0.0) later.shared_codeword = static_cast<double>(codebook_.codeword_index(action.discrete_index));
}

Eigen::VectorXd Environment::encode(const Observation& o) const {
  const double p_max = config_.budgets.p_max;
  const double n_max = config_.budgets.n_max;
  const double cw_span = std::max<double>(1.0, static_cast<double>(codebook_.codewords.size() - 1));
  Eigen::VectorXd f(kStateDim);
  f << o.user_snr_db / 50.0, o.delta_sq_db / 50.0, o.upsilon_db / 50.0, o.eve_snr_db / 50.0, o.eve_mean_db / 50.0,
      o.prev_power / p_max, o.prev_codeword / cw_span, o.prev_blocklength / n_max, o.t_min / 10.0, o.t_max / 10.0,
      o.remaining_power / p_max, o.remaining_cbl / n_max, o.peers_committed / static_cast<double>(config_.n_users),
      o.shared_codeword < 0.0 ? 0.0 : o.shared_codeword / cw_span, o.shared_codeword < 0.0 ? 0.0 : 1.0;
  return f;
}

StepOutcome Environment::step(const std::vector<HybridAction>& actions) {
  if (!started_) throw ContractViolation("Environment::step before reset");
  if (actions.size() != config_.n_users) throw ContractViolation("Environment::step: one action per user required");
  StepOutcome out;
  out.allocation = project_actions(actions, codebook_, config_.budgets, order().front());
  const PhaseShiftConfig& theta = codebook_.codewords[out.allocation.codeword];
  for (std::size_t k = 0; k < config_.n_users; ++k) {
    const LinkStats s = stats(k, theta, out.allocation.power[k]);
    const DeterminacyResult r = cache_->get(s, out.allocation.blocklength[k]);
    out.per_user_varpi.push_back(r.vacuous ? 0.0 : r.varpi);
    out.stability_failure.push_back(r.vacuous);
  }
  out.reward = step_reward(out.per_user_varpi, out.allocation.violations(), config_.violation_penalty);

  prev_power_ = out.allocation.power;
  prev_cbl_ = out.allocation.blocklength;
  prev_codeword_ = static_cast<double>(out.allocation.codeword);
  current_theta_ = theta;
  channel_ = sample_channels(config_.topology, config_.fading, fading_rng_);
  ++slot_;
  out.done = slot_ >= config_.episode_length;
  out.next_state = observe();
  return out;
}

}  // namespace risdet
