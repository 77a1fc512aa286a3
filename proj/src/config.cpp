#include "risdet/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "risdet/errors.hpp"

namespace risdet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size())
    throw ConfigError("expected a number, got '" + t + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& s) {
  const std::string t = trim(s);
  std::uint64_t v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size())
    throw ConfigError("expected a non-negative integer, got '" + t + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw ConfigError("expected true or false, got '" + t + "'");
}

std::vector<std::string> parse_list(const std::string& s) {
  const std::string t = trim(s);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']') throw ConfigError("expected a list [a, b, ...], got '" + t + "'");
  std::vector<std::string> out;
  const std::string body = trim(t.substr(1, t.size() - 2));
  if (body.empty()) return out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + f(v[i]);
  return s + "]";
}

struct Entry {
  std::string path;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
  bool numeric = false;
};

template <class F>
auto& ref(F f, const ScenarioConfig& c) {
  return f(const_cast<ScenarioConfig&>(c));
}

std::vector<Entry> build_registry() {
  std::vector<Entry> r;
  auto dbl = [&r](std::string p, auto f) {
    r.push_back({std::move(p), [f](ScenarioConfig& c, const std::string& v) { f(c) = parse_double(v); },
                 [f](const ScenarioConfig& c) { return fmt_double(ref(f, c)); }, true});
  };
  auto uint = [&r](std::string p, auto f) {
    r.push_back({std::move(p),
                 [f](ScenarioConfig& c, const std::string& v) {
                   using T = std::remove_reference_t<decltype(f(c))>;
                   const std::uint64_t x = parse_uint(v);
                   if (x > std::numeric_limits<T>::max()) throw ConfigError("integer out of range");
                   f(c) = static_cast<T>(x);
                 },
                 [f](const ScenarioConfig& c) { return std::to_string(ref(f, c)); }, true});
  };
  auto boolean = [&r](std::string p, auto f) {
    r.push_back({std::move(p), [f](ScenarioConfig& c, const std::string& v) { f(c) = parse_bool(v); },
                 [f](const ScenarioConfig& c) { return std::string(ref(f, c) ? "true" : "false"); }});
  };
  auto word = [&r](std::string p, auto f, std::vector<std::string> allowed) {
    r.push_back({std::move(p),
                 [f, allowed](ScenarioConfig& c, const std::string& v) {
                   const std::string t = trim(v);
                   if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), t) == allowed.end()) {
                     std::string opts;
                     for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
                     throw ConfigError("'" + t + "' is not one of: " + opts);
                   }
                   f(c) = t;
                 },
                 [f](const ScenarioConfig& c) { return ref(f, c); }});
  };
  // Enums stored as typed fields, written through name tables.
  auto enumeration = [&r](std::string p, auto f, auto table) {
    r.push_back({std::move(p),
                 [f, table](ScenarioConfig& c, const std::string& v) {
                   const std::string t = trim(v);
                   std::string opts;
                   for (const auto& [name, val] : table) {
                     if (name == t) {
                       f(c) = val;
                       return;
                     }
                     opts += (opts.empty() ? "" : ", ") + std::string(name);
                   }
                   throw ConfigError("'" + t + "' is not one of: " + opts);
                 },
                 [f, table](const ScenarioConfig& c) {
                   for (const auto& [name, val] : table)
                     if (val == ref(f, c)) return std::string(name);
                   return std::string("?");
                 }});
  };
  auto point = [&r](std::string p, auto f) {
    r.push_back({std::move(p),
                 [f](ScenarioConfig& c, const std::string& v) {
                   const auto items = parse_list(v);
                   if (items.size() != 2) throw ConfigError("expected a coordinate pair [x, y]");
                   f(c) = Point2{parse_double(items[0]), parse_double(items[1])};
                 },
                 [f](const ScenarioConfig& c) {
                   const Point2& q = ref(f, c);
                   return "[" + fmt_double(q.x) + ", " + fmt_double(q.y) + "]";
                 }});
  };
  auto dlist = [&r](std::string p, auto f) {
    r.push_back({std::move(p),
                 [f](ScenarioConfig& c, const std::string& v) {
                   std::vector<double> out;
                   for (const auto& s : parse_list(v)) out.push_back(parse_double(s));
                   f(c) = out;
                 },
                 [f](const ScenarioConfig& c) {
                   return join<double>(ref(f, c), [](const double& x) { return fmt_double(x); });
                 }});
  };
  auto ulist = [&r](std::string p, auto f) {
    r.push_back({std::move(p),
                 [f](ScenarioConfig& c, const std::string& v) {
                   std::vector<std::size_t> out;
                   for (const auto& s : parse_list(v)) out.push_back(static_cast<std::size_t>(parse_uint(s)));
                   f(c) = out;
                 },
                 [f](const ScenarioConfig& c) {
                   return join<std::size_t>(ref(f, c), [](const std::size_t& x) { return std::to_string(x); });
                 }});
  };

  using C = ScenarioConfig;
  point("topology.ap", [](C& c) -> Point2& { return c.env.topology.ap_pos; });
  point("topology.ris", [](C& c) -> Point2& { return c.env.topology.ris_pos; });
  point("topology.eve", [](C& c) -> Point2& { return c.env.topology.eve_pos; });
  uint("topology.n_elements", [](C& c) -> std::size_t& { return c.env.topology.n_elements; });
  dbl("topology.wavelength", [](C& c) -> double& { return c.env.topology.carrier_wavelength; });
  dbl("topology.element_spacing", [](C& c) -> double& { return c.env.topology.element_spacing; });
  dbl("topology.user_radius", [](C& c) -> double& { return c.env.topology.user_radius; });

  dbl("fading.pl0_db", [](C& c) -> double& { return c.env.fading.pl0_db; });
  dbl("fading.alpha_direct", [](C& c) -> double& { return c.env.fading.alpha_direct; });
  dbl("fading.alpha_ris", [](C& c) -> double& { return c.env.fading.alpha_ris; });
  dbl("fading.rician_k_r", [](C& c) -> double& { return c.env.fading.rician_k_r; });
  dbl("fading.rician_k_gk", [](C& c) -> double& { return c.env.fading.rician_k_gk; });
  dbl("fading.noise_dbm", [](C& c) -> double& { return c.env.fading.noise_power_dbm; });
  dbl("fading.eve_mean_gain", [](C& c) -> double& { return c.env.fading.eve_mean_gain; });
  uint("fading.eve_calibration_draws", [](C& c) -> std::size_t& { return c.env.eve_calibration_draws; });

  dbl("secrecy.epsilon_e", [](C& c) -> double& { return c.env.secrecy.epsilon_e; });
  dbl("secrecy.sigma_leak", [](C& c) -> double& { return c.env.secrecy.sigma_leak; });

  dbl("arrival.lambda", [](C& c) -> double& { return c.env.arrival.lambda_pkts; });
  dbl("arrival.pkt_bits", [](C& c) -> double& { return c.env.arrival.pkt_bits; });
  enumeration("arrival.variant", [](C& c) -> ArrivalVariant& { return c.env.arrival.variant; },
              std::vector<std::pair<const char*, ArrivalVariant>>{{"standard_compound", ArrivalVariant::standard_compound},
                                                                  {"paper_literal", ArrivalVariant::paper_literal}});

  uint("window.t_min", [](C& c) -> std::uint32_t& { return c.env.window.t_min; });
  uint("window.t_max", [](C& c) -> std::uint32_t& { return c.env.window.t_max; });

  dbl("budget.p_max", [](C& c) -> double& { return c.env.budgets.p_max; });
  dbl("budget.n_max", [](C& c) -> double& { return c.env.budgets.n_max; });
  dbl("budget.n_floor", [](C& c) -> double& { return c.env.budgets.n_floor; });
  dbl("budget.n_ceiling", [](C& c) -> double& { return c.env.budgets.n_ceiling; });

  uint("codebook.n_power_levels", [](C& c) -> std::size_t& { return c.env.codebook.n_power_levels; });
  enumeration("codebook.phase_mode", [](C& c) -> PhaseMode& { return c.env.codebook.phase_mode; },
              std::vector<std::pair<const char*, PhaseMode>>{
                  {"aligned", PhaseMode::aligned}, {"random", PhaseMode::random}, {"quantized", PhaseMode::quantized}});
  uint("codebook.n_codewords", [](C& c) -> std::size_t& { return c.env.codebook.n_codewords; });
  uint("codebook.phase_bits", [](C& c) -> unsigned& { return c.env.codebook.phase_bits; });

  uint("env.n_users", [](C& c) -> std::size_t& { return c.env.n_users; });
  uint("env.episode_length", [](C& c) -> std::size_t& { return c.env.episode_length; });
  dbl("env.violation_penalty", [](C& c) -> double& { return c.env.violation_penalty; });
  boolean("env.observe_eve", [](C& c) -> bool& { return c.env.observe_eve; });
  enumeration("env.density", [](C& c) -> ServiceDensity& { return c.env.density; },
              std::vector<std::pair<const char*, ServiceDensity>>{{"rician", ServiceDensity::rician},
                                                                  {"paper", ServiceDensity::paper}});

  enumeration("agent.kind", [](C& c) -> AgentKind& { return c.agent.kind; },
              std::vector<std::pair<const char*, AgentKind>>{
                  {"sid_pdqn", AgentKind::sid_pdqn}, {"dqn", AgentKind::dqn}, {"random", AgentKind::random}});
  dbl("agent.alpha", [](C& c) -> double& { return c.agent.alpha; });
  dbl("agent.beta", [](C& c) -> double& { return c.agent.beta; });
  dbl("agent.gamma", [](C& c) -> double& { return c.agent.gamma; });
  dbl("agent.epsilon_start", [](C& c) -> double& { return c.agent.epsilon.start; });
  dbl("agent.epsilon_end", [](C& c) -> double& { return c.agent.epsilon.end; });
  uint("agent.epsilon_decay_steps", [](C& c) -> std::uint64_t& { return c.agent.epsilon.decay_steps; });
  uint("agent.n_step", [](C& c) -> std::size_t& { return c.agent.n_step; });
  uint("agent.batch_size", [](C& c) -> std::size_t& { return c.agent.batch_size; });
  uint("agent.buffer_capacity", [](C& c) -> std::size_t& { return c.agent.buffer_capacity; });
  boolean("agent.use_target", [](C& c) -> bool& { return c.agent.use_target; });
  uint("agent.target_sync", [](C& c) -> std::size_t& { return c.agent.target_sync; });
  enumeration("agent.actor_loss", [](C& c) -> ActorLossMode& { return c.agent.actor_loss; },
              std::vector<std::pair<const char*, ActorLossMode>>{{"paper_literal", ActorLossMode::paper_literal},
                                                                 {"standard_pdqn", ActorLossMode::standard_pdqn}});
  ulist("agent.actor_hidden", [](C& c) -> std::vector<std::size_t>& { return c.agent.actor_hidden; });
  ulist("agent.critic_hidden", [](C& c) -> std::vector<std::size_t>& { return c.agent.critic_hidden; });
  enumeration("agent.optimizer", [](C& c) -> OptimizerKind& { return c.agent.optimizer; },
              std::vector<std::pair<const char*, OptimizerKind>>{{"adam", OptimizerKind::adam},
                                                                 {"plain_sgd", OptimizerKind::plain_sgd}});
  dbl("agent.adam_beta1", [](C& c) -> double& { return c.agent.adam_beta1; });
  dbl("agent.adam_beta2", [](C& c) -> double& { return c.agent.adam_beta2; });
  dbl("agent.grad_clip", [](C& c) -> double& { return c.agent.grad_clip; });
  uint("agent.warmup_min", [](C& c) -> std::size_t& { return c.agent.warmup_min; });
  boolean("agent.shared_params", [](C& c) -> bool& { return c.agent.shared_params; });
  uint("agent.cbl_levels", [](C& c) -> std::size_t& { return c.agent.cbl_levels; });
  boolean("agent.explore_params", [](C& c) -> bool& { return c.agent.explore_params; });
  uint("agent.checkpoint_every", [](C& c) -> std::size_t& { return c.agent.checkpoint_every; });

  for (const char* which : {"train", "eval"}) {
    const bool tr = std::string(which) == "train";
    auto prof = [tr](C& c) -> FidelityProfile& { return tr ? c.train_profile : c.eval_profile; };
    const std::string pre = std::string("quadrature.") + which + ".";
    dbl(pre + "rel_tol", [prof](C& c) -> double& { return prof(c).quadrature.rel_tol; });
    dbl(pre + "abs_tol", [prof](C& c) -> double& { return prof(c).quadrature.abs_tol; });
    dbl(pre + "outer_mult", [prof](C& c) -> double& { return prof(c).quadrature.outer_truncation_mult; });
    dbl(pre + "inner_mult", [prof](C& c) -> double& { return prof(c).quadrature.inner_truncation_mult; });
    uint(pre + "max_subdivisions", [prof](C& c) -> std::size_t& { return prof(c).quadrature.max_subdivisions; });
    uint(pre + "fixed_nodes", [prof](C& c) -> std::size_t& { return prof(c).quadrature.fixed_nodes; });
    uint(pre + "grid_points", [prof](C& c) -> std::size_t& { return prof(c).search.grid_points; });
    dbl(pre + "s_floor", [prof](C& c) -> double& { return prof(c).search.s_floor; });
    dbl(pre + "bisection_width", [prof](C& c) -> double& { return prof(c).search.bisection_width; });
    dbl(pre + "golden_rel_tol", [prof](C& c) -> double& { return prof(c).search.golden_rel_tol; });
    dbl(pre + "log_quantum", [prof](C& c) -> double& { return prof(c).log_quantum; });
    dbl(pre + "n_quantum", [prof](C& c) -> double& { return prof(c).n_quantum; });
  }

  dlist("analyze.power", [](C& c) -> std::vector<double>& { return c.analyze.power; });
  dlist("analyze.blocklength", [](C& c) -> std::vector<double>& { return c.analyze.blocklength; });
  word("analyze.phase", [](C& c) -> std::string& { return c.analyze.phase; }, {"aligned", "zeros", "random"});
  uint("analyze.aligned_user", [](C& c) -> std::size_t& { return c.analyze.aligned_user; });

  uint("simulate.packets", [](C& c) -> std::uint64_t& { return c.simulate.packets; });
  uint("simulate.horizon_slots", [](C& c) -> std::uint32_t& { return c.simulate.horizon_slots; });
  uint("simulate.warmup_slots", [](C& c) -> std::uint64_t& { return c.simulate.warmup_slots; });
  word("simulate.sampler", [](C& c) -> std::string& { return c.simulate.sampler; }, {"analytic", "channel"});

  word("sweep.parameter", [](C& c) -> std::string& { return c.sweep.parameter; }, {});
  dlist("sweep.values", [](C& c) -> std::vector<double>& { return c.sweep.values; });
  word("sweep.mode", [](C& c) -> std::string& { return c.sweep.mode; }, {"analyze", "train"});
  uint("sweep.repetitions", [](C& c) -> std::size_t& { return c.sweep.repetitions; });
  word("sweep.seed_policy", [](C& c) -> std::string& { return c.sweep.seed_policy; }, {"paired", "distinct"});

  uint("train.episodes", [](C& c) -> std::size_t& { return c.train.episodes; });
  uint("train.steps", [](C& c) -> std::size_t& { return c.train.steps; });
  uint("train.eval_episodes", [](C& c) -> std::size_t& { return c.train.eval_episodes; });
  uint("train.eval_steps", [](C& c) -> std::size_t& { return c.train.eval_steps; });
  word("train.checkpoint", [](C& c) -> std::string& { return c.train.checkpoint; }, {});

  uint("run.seed", [](C& c) -> std::uint64_t& { return c.run.seed; });
  word("run.out_dir", [](C& c) -> std::string& { return c.run.out_dir; }, {});
  uint("run.workers", [](C& c) -> std::size_t& { return c.run.workers; });
  dbl("run.slot_ms", [](C& c) -> double& { return c.run.slot_ms; });
  return r;
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> r = build_registry();
  return r;
}

const Entry* find_entry(const std::string& path) {
  for (const auto& e : registry())
    if (e.path == path) return &e;
  return nullptr;
}

void check_profile(const FidelityProfile& p, const char* which) {
  try {
    p.quadrature.validate();
  } catch (const DomainError& e) {
    throw DomainError(std::string(which) + ": " + e.what());
  }
  if (p.search.grid_points < 3) throw DomainError(std::string(which) + ": grid_points must be >= 3");
  if (!(p.search.s_floor > 0.0) || !(p.search.bisection_width > 0.0) || !(p.search.golden_rel_tol > 0.0))
    throw DomainError(std::string(which) + ": search tolerances must be positive");
  if (p.log_quantum < 0.0 || p.n_quantum < 0.0) throw DomainError(std::string(which) + ": memo quanta must be >= 0");
}

}  // namespace

void ScenarioConfig::validate() const {
  env.validate();
  env.topology.validate();  // user positions are placed later; distances between fixed nodes still checked
  agent.validate();
  check_profile(train_profile, "quadrature.train");
  check_profile(eval_profile, "quadrature.eval");
  if (!analyze.power.empty() && analyze.power.size() != env.n_users)
    throw DomainError("analyze.power needs one entry per user");
  for (double p : analyze.power)
    if (!(p > 0.0)) throw DomainError("analyze.power entries must be positive");
  if (!analyze.blocklength.empty() && analyze.blocklength.size() != env.n_users)
    throw DomainError("analyze.blocklength needs one entry per user");
  for (double n : analyze.blocklength)
    if (!(n >= 1.0)) throw DomainError("analyze.blocklength entries must be >= 1");
  if (analyze.aligned_user >= env.n_users) throw DomainError("analyze.aligned_user out of range");
  if (simulate.packets == 0) throw DomainError("simulate.packets must be positive");
  if (simulate.horizon_slots <= env.window.t_max) throw DomainError("simulate.horizon_slots must exceed window.t_max");
  const Entry* e = find_entry(sweep.parameter);
  if (!e || !e->numeric) throw DomainError("sweep.parameter '" + sweep.parameter + "' is not a numeric config key");
  if (sweep.values.empty()) throw DomainError("sweep.values must not be empty");
  if (sweep.repetitions == 0) throw DomainError("sweep.repetitions must be positive");
  if (train.steps == 0 || train.eval_steps == 0 || train.eval_episodes == 0)
    throw DomainError("train step counts must be positive");
  if (!(run.slot_ms > 0.0)) throw DomainError("run.slot_ms must be positive");
}

void set_config_value(ScenarioConfig& cfg, const std::string& path, const std::string& value) {
  const Entry* e = find_entry(path);
  if (!e) throw ConfigError("unknown key '" + path + "'");
  e->set(cfg, value);
}

std::string get_config_value(const ScenarioConfig& cfg, const std::string& path) {
  const Entry* e = find_entry(path);
  if (!e) throw ConfigError("unknown key '" + path + "'");
  return e->get(cfg);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> k;
  for (const auto& e : registry()) k.push_back(e.path);
  return k;
}

ScenarioConfig parse_config(const std::string& text, const std::string& origin) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::set<std::string> seen;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (t.front() == '[' && t.find('=') == std::string::npos) {
      if (t.back() != ']') throw ConfigError(where + "malformed section header '" + t + "'");
      section = trim(t.substr(1, t.size() - 2));
      bool known = false;
      for (const auto& e : registry())
        if (e.path.rfind(section + ".", 0) == 0 && e.path.find('.', section.size() + 1) == std::string::npos)
          known = true;
      if (!known) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value' in [" + section + "]");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key = trim(t.substr(0, eq));
    const std::string path = section + "." + key;
    const Entry* e = find_entry(path);
    if (!e) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    if (!seen.insert(path).second) throw ConfigError(where + "duplicate key '" + key + "' in [" + section + "]");
    try {
      e->set(cfg, t.substr(eq + 1));
    } catch (const ConfigError& err) {
      throw ConfigError(where + "[" + section + "] " + key + ": " + err.what());
    }
  }
  // Half-wavelength spacing unless set explicitly.
  if (!seen.count("topology.element_spacing"))
    cfg.env.topology.element_spacing = 0.5 * cfg.env.topology.carrier_wavelength;
  try {
    cfg.validate();
  } catch (const DomainError& err) {
    throw ConfigError(origin + ": invalid configuration: " + err.what());
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

std::string dump_config(const ScenarioConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& e : registry()) {
    const auto dot = e.path.rfind('.');
    const std::string sec = e.path.substr(0, dot);
    if (sec != section) {
      out += (out.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
      section = sec;
    }
    out += e.path.substr(dot + 1) + " = " + e.get(cfg) + "\n";
  }
  return out;
}

std::string config_hash(const ScenarioConfig& cfg) {
  // Where and with which seed a run happens is not part of the scenario.
  ScenarioConfig c = cfg;
  c.run.seed = RunSettings{}.seed;
  c.run.out_dir = RunSettings{}.out_dir;
  c.run.workers = RunSettings{}.workers;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace risdet
