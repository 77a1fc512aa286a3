#include "risdet/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "risdet/errors.hpp"
#include "risdet/svg.hpp"

namespace risdet {

namespace {

enum Stream : std::uint64_t { kAnalyzePhases = 50, kSimulate = 100 };

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path p = std::filesystem::path(dir) / name;
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << content;
  if (!f) throw ConfigError("write failed for " + p.string());
}

DeterminacyInputs inputs_of(const ScenarioConfig& cfg) {
  return {cfg.env.arrival, cfg.env.secrecy, cfg.env.window, cfg.env.density};
}

std::shared_ptr<DeterminacyCache> make_cache(const ScenarioConfig& cfg, const FidelityProfile& p) {
  return std::make_shared<DeterminacyCache>(inputs_of(cfg), p);
}

std::string checkpoint_path_for(const ScenarioConfig& cfg, const RunOptions& opts) {
  if (!cfg.train.checkpoint.empty()) return cfg.train.checkpoint;
  return (std::filesystem::path(opts.out_dir) / "checkpoint.txt").string();
}

int exit_code_for(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const NumericalError&) {
    return kExitNumerical;
  } catch (...) {
    return kExitValidation;
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string provenance_line(const ScenarioConfig& cfg) {
  return "# config_hash=" + config_hash(cfg) + " seed=" + std::to_string(cfg.run.seed) + "\n";
}

FixedAllocation fixed_allocation(const ScenarioConfig& cfg, const Environment& env) {
  const std::size_t k = cfg.env.n_users;
  FixedAllocation a;
  a.power = cfg.analyze.power.empty() ? std::vector<double>(k, cfg.env.budgets.p_max / static_cast<double>(k))
                                      : cfg.analyze.power;
  a.blocklength = cfg.analyze.blocklength.empty()
                      ? std::vector<double>(k, cfg.env.budgets.n_max / static_cast<double>(k))
                      : cfg.analyze.blocklength;
  const std::size_t n_el = env.topology().n_elements;
  if (cfg.analyze.phase == "aligned") {
    const LosComponents los = los_components(env.topology(), env.fading());
    a.theta = align_phases(Complex{}, los.f_user.at(cfg.analyze.aligned_user), los.g_ris);
  } else if (cfg.analyze.phase == "random") {
    Rng r = make_stream(cfg.run.seed, kAnalyzePhases);
    a.theta = PhaseShiftConfig::random(n_el, r);
  } else {
    a.theta = PhaseShiftConfig::zeros(n_el);
  }
  return a;
}

ServiceModel service_model(const ScenarioConfig& cfg, const LinkStats& stats, double blocklength,
                           const FidelityProfile& profile) {
  ServiceModel sm;
  sm.stats = stats;
  sm.secrecy = cfg.env.secrecy;
  sm.secrecy.blocklength = blocklength;
  sm.quadrature = profile.quadrature;
  sm.density = cfg.env.density;
  return sm;
}

std::vector<UserAnalysis> analyze_scenario(const ScenarioConfig& cfg) {
  const Environment env(cfg.env, cfg.run.seed, make_cache(cfg, cfg.eval_profile));
  const FixedAllocation alloc = fixed_allocation(cfg, env);
  std::vector<UserAnalysis> out;
  for (std::size_t k = 0; k < cfg.env.n_users; ++k) {
    UserAnalysis u;
    u.user = k;
    u.power = alloc.power[k];
    u.blocklength = alloc.blocklength[k];
    u.stats = env.stats(k, alloc.theta, u.power);
    const ServiceModel sm = service_model(cfg, u.stats, u.blocklength, cfg.eval_profile);
    u.result = delay_determinacy(cfg.env.window, cfg.env.arrival, sm, cfg.eval_profile.search);
    out.push_back(u);
  }
  return out;
}

std::string analysis_csv(const ScenarioConfig& cfg, const std::vector<UserAnalysis>& rows) {
  std::string s = provenance_line(cfg);
  s += "user_id,t_min,t_max,varpi,bound_tmin,bound_tmax,s_star_tmin,s_star_tmax,s_max,ordering_ok,clamped_flags,"
       "quadrature_error_estimate\n";
  for (const auto& u : rows) {
    const DeterminacyResult& r = u.result;
    s += std::to_string(u.user) + "," + std::to_string(cfg.env.window.t_min) + "," +
         std::to_string(cfg.env.window.t_max) + "," + format_number(r.varpi) + "," + format_number(r.bound_tmin) + "," +
         format_number(r.bound_tmax) + "," + format_number(r.s_star_tmin) + "," + format_number(r.s_star_tmax) + "," +
         format_number(r.s_max) + "," + (r.ordering_ok ? "true" : "false") + "," + r.clamped_flags() + "," +
         format_number(r.quadrature_error_estimate) + "\n";
  }
  return s;
}

SimulationReport simulate_scenario(const ScenarioConfig& cfg) {
  const Environment env(cfg.env, cfg.run.seed, make_cache(cfg, cfg.eval_profile));
  const FixedAllocation alloc = fixed_allocation(cfg, env);
  std::vector<std::uint32_t> horizons;
  for (std::uint32_t t = 1; t <= cfg.env.window.t_max; ++t) horizons.push_back(t);
  QueueSimOptions qo;
  qo.warmup_slots = cfg.simulate.warmup_slots;

  SimulationReport rep;
  for (std::size_t k = 0; k < cfg.env.n_users; ++k) {
    const LinkStats stats = env.stats(k, alloc.theta, alloc.power[k]);
    const ServiceModel sm = service_model(cfg, stats, alloc.blocklength[k], cfg.eval_profile);
    const std::vector<ViolationBound> vb = violation_bounds(horizons, cfg.env.arrival, sm, cfg.eval_profile.search);
    rep.varpi.push_back(delay_determinacy(cfg.env.window, cfg.env.arrival, sm, cfg.eval_profile.search).varpi);

    const ServiceSampler sampler =
        cfg.simulate.sampler == "channel"
            ? channel_service_sampler(env.topology(), env.fading(), alloc.theta, k, alloc.power[k], sm.secrecy)
            : analytic_service_sampler(sm);
    Rng rng = make_stream(cfg.run.seed, kSimulate + k);
    DelayDistribution d = simulate_queue(cfg.env.arrival, sampler, cfg.simulate.horizon_slots, cfg.simulate.packets, rng, qo);
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      SimulationRow row;
      row.user = k;
      row.t = horizons[i];
      row.empirical = d.exceed(horizons[i]);
      row.bound = vb[i].bound;
      row.violation = row.empirical.lo > row.bound;
      rep.violations += row.violation ? 1 : 0;
      rep.rows.push_back(row);
    }
    rep.window.push_back(d.within(cfg.env.window.t_min, cfg.env.window.t_max));
    rep.delays.push_back(std::move(d));
  }
  return rep;
}

TrainOutcome run_training(const ScenarioConfig& cfg, const std::string& checkpoint_path) {
  const std::uint64_t seed = cfg.run.seed;
  Environment env(cfg.env, seed, make_cache(cfg, cfg.train_profile));
  Agent agent(cfg.agent, kStateDim, env.codebook().size(), cfg.env.n_users, seed);
  auto save = [&](const std::string& path) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write checkpoint " + path);
    agent.save(f);
  };
  std::function<void(std::size_t)> on_episode;
  if (!checkpoint_path.empty() && cfg.agent.checkpoint_every > 0)
    on_episode = [&](std::size_t ep) {
      if ((ep + 1) % cfg.agent.checkpoint_every == 0) save(checkpoint_path);
    };
  TrainOutcome out;
  out.log = train(env, agent, cfg.train.episodes, cfg.train.steps, on_episode);
  out.cache_entries = env.cache().size();
  if (!checkpoint_path.empty()) save(checkpoint_path);
  Environment eval_env(cfg.env, seed, make_cache(cfg, cfg.eval_profile));
  out.evaluation = evaluate(eval_env, agent, cfg.train.eval_episodes, cfg.train.eval_steps);
  return out;
}

EvaluationResult run_evaluation(const ScenarioConfig& cfg, const std::string& checkpoint_path) {
  Environment env(cfg.env, cfg.run.seed, make_cache(cfg, cfg.eval_profile));
  Agent agent(cfg.agent, kStateDim, env.codebook().size(), cfg.env.n_users, cfg.run.seed);
  if (cfg.agent.kind != AgentKind::random) {
    std::ifstream f(checkpoint_path, std::ios::binary);
    if (!f) throw ConfigError("cannot open checkpoint " + checkpoint_path);
    agent.load(f);
  }
  return evaluate(env, agent, cfg.train.eval_episodes, cfg.train.eval_steps);
}

std::string training_log_csv(const ScenarioConfig& cfg, const TrainingLog& log) {
  std::string s = provenance_line(cfg);
  s += "episode,step,epsilon,reward,mean_episode_reward,critic_loss,actor_loss,buffer_fill\n";
  for (const auto& r : log.rows)
    s += std::to_string(r.episode) + "," + std::to_string(r.step) + "," + format_number(r.epsilon) + "," +
         format_number(r.reward) + "," + format_number(r.mean_episode_reward) + "," + format_number(r.critic_loss) +
         "," + format_number(r.actor_loss) + "," + std::to_string(r.buffer_fill) + "\n";
  return s;
}

std::string evaluation_csv(const ScenarioConfig& cfg, const EvaluationResult& eval) {
  const std::size_t k = cfg.env.n_users;
  std::string s = provenance_line(cfg);
  s += "step,reward";
  for (std::size_t u = 0; u < k; ++u) s += ",varpi_" + std::to_string(u);
  for (std::size_t u = 0; u < k; ++u) s += ",power_" + std::to_string(u);
  for (std::size_t u = 0; u < k; ++u) s += ",blocklength_" + std::to_string(u);
  s += ",codeword\n";
  for (std::size_t t = 0; t < eval.rewards.size(); ++t) {
    s += std::to_string(t) + "," + format_number(eval.rewards[t]);
    for (double v : eval.varpi[t]) s += "," + format_number(v);
    for (double p : eval.allocations[t].power) s += "," + format_number(p);
    for (double n : eval.allocations[t].blocklength) s += "," + format_number(n);
    s += "," + std::to_string(eval.allocations[t].codeword) + "\n";
  }
  return s;
}

int cmd_analyze(const ScenarioConfig& cfg, const RunOptions& opts) {
  const auto rows = analyze_scenario(cfg);
  write_file(opts.out_dir, "analyze.csv", analysis_csv(cfg, rows));
  if (opts.console) {
    std::ostream& o = *opts.console;
    o << "window (" << cfg.env.window.t_min << ", " << cfg.env.window.t_max << ") slots = ("
      << cfg.env.window.t_min * cfg.run.slot_ms << ", " << cfg.env.window.t_max * cfg.run.slot_ms << ") ms\n";
    for (const auto& u : rows)
      o << "user " << u.user << ": varpi=" << u.result.varpi << " bound_tmin=" << u.result.bound_tmin
        << " bound_tmax=" << u.result.bound_tmax << " flags=" << u.result.clamped_flags() << "\n";
  }
  return kExitOk;
}

int cmd_simulate(const ScenarioConfig& cfg, const RunOptions& opts) {
  const SimulationReport rep = simulate_scenario(cfg);
  std::string s = provenance_line(cfg);
  s += "user_id,t,t_ms,empirical_exceed,ci_lo,ci_hi,analytic_bound,violation\n";
  for (const auto& r : rep.rows)
    s += std::to_string(r.user) + "," + std::to_string(r.t) + "," + format_number(r.t * cfg.run.slot_ms) + "," +
         format_number(r.empirical.p) + "," + format_number(r.empirical.lo) + "," + format_number(r.empirical.hi) +
         "," + format_number(r.bound) + "," + (r.violation ? "true" : "false") + "\n";
  write_file(opts.out_dir, "simulate.csv", s);

  std::string w = provenance_line(cfg);
  w += "user_id,t_min,t_max,empirical_within,ci_lo,ci_hi,analytic_varpi,packets\n";
  for (std::size_t k = 0; k < rep.window.size(); ++k)
    w += std::to_string(k) + "," + std::to_string(cfg.env.window.t_min) + "," + std::to_string(cfg.env.window.t_max) +
         "," + format_number(rep.window[k].p) + "," + format_number(rep.window[k].lo) + "," +
         format_number(rep.window[k].hi) + "," + format_number(rep.varpi[k]) + "," +
         std::to_string(rep.delays[k].n_packets) + "\n";
  write_file(opts.out_dir, "simulate_window.csv", w);

  std::string c = provenance_line(cfg);
  c += "user_id,t,cdf\n";
  for (std::size_t k = 0; k < rep.delays.size(); ++k) {
    const auto cdf = rep.delays[k].cdf();
    for (std::size_t t = 0; t < cdf.size(); ++t)
      c += std::to_string(k) + "," + std::to_string(t) + "," + format_number(cdf[t]) + "\n";
  }
  write_file(opts.out_dir, "simulate_cdf.csv", c);

  if (opts.console) {
    std::ostream& o = *opts.console;
    for (const auto& r : rep.rows)
      o << "user " << r.user << " t=" << r.t << ": empirical " << r.empirical.p << " [" << r.empirical.lo << ", "
        << r.empirical.hi << "] vs bound " << r.bound << (r.violation ? "  DOMINANCE VIOLATION" : "") << "\n";
    o << rep.violations << " dominance violation(s)\n";
  }
  return (opts.strict && rep.violations > 0) ? kExitDominance : kExitOk;
}

int cmd_train(const ScenarioConfig& cfg, const RunOptions& opts) {
  const std::string ckpt = checkpoint_path_for(cfg, opts);
  const TrainOutcome out = run_training(cfg, ckpt);
  write_file(opts.out_dir, "train_log.csv", training_log_csv(cfg, out.log));
  write_file(opts.out_dir, "train_eval.csv", evaluation_csv(cfg, out.evaluation));
  LineChart chart;
  chart.title = "Training reward (" + to_string(cfg.agent.kind) + ")";
  chart.x_label = "episode";
  chart.y_label = "mean reward";
  Series s;
  s.name = to_string(cfg.agent.kind);
  for (std::size_t i = 0; i < out.log.episode_means.size(); ++i) {
    s.x.push_back(static_cast<double>(i));
    s.y.push_back(out.log.episode_means[i]);
  }
  chart.series.push_back(s);
  write_file(opts.out_dir, "reward.svg", render_svg(chart));
  if (opts.console)
    *opts.console << "trained " << cfg.train.episodes << " episodes x " << cfg.train.steps << " steps, "
                  << out.log.updates << " updates, " << out.cache_entries << " cached evaluations\n"
                  << "greedy evaluation mean reward " << out.evaluation.mean_reward << "\n";
  return kExitOk;
}

int cmd_evaluate(const ScenarioConfig& cfg, const RunOptions& opts) {
  const EvaluationResult eval = run_evaluation(cfg, checkpoint_path_for(cfg, opts));
  write_file(opts.out_dir, "evaluate.csv", evaluation_csv(cfg, eval));
  if (opts.console) {
    *opts.console << "mean reward " << eval.mean_reward << "\n";
    for (std::size_t k = 0; k < eval.mean_varpi.size(); ++k)
      *opts.console << "user " << k << " mean varpi " << eval.mean_varpi[k] << "\n";
  }
  return kExitOk;
}

int cmd_sweep(const ScenarioConfig& cfg, const RunOptions& opts) {
  struct Point {
    double value;
    std::size_t rep;
    std::uint64_t seed;
    std::string rows;  // CSV rows
    std::vector<std::pair<std::string, double>> series;
    std::exception_ptr error;
    std::string error_text;
  };
  std::vector<Point> points;
  for (std::size_t i = 0; i < cfg.sweep.values.size(); ++i)
    for (std::size_t r = 0; r < cfg.sweep.repetitions; ++r) {
      std::uint64_t seed = cfg.run.seed + 1000003ULL * r;
      if (cfg.sweep.seed_policy == "distinct") seed += 7919ULL * i;
      points.push_back({cfg.sweep.values[i], r, seed, {}, {}, nullptr, {}});
    }

  auto run_point = [&](Point& p) {
    ScenarioConfig c = cfg;
    set_config_value(c, cfg.sweep.parameter, format_number(p.value));
    c.run.seed = p.seed;
    try {
      c.validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("sweep point invalid: ") + e.what());
    }
    const std::string head = cfg.sweep.parameter + "," + format_number(p.value) + "," + std::to_string(p.rep) + "," +
                             std::to_string(p.seed) + ",";
    if (cfg.sweep.mode == "analyze") {
      for (const auto& u : analyze_scenario(c)) {
        const std::string series = "user" + std::to_string(u.user);
        p.rows += head + series + ",varpi," + format_number(u.result.varpi) + "\n";
        p.rows += head + series + ",bound_tmin," + format_number(u.result.bound_tmin) + "\n";
        p.rows += head + series + ",bound_tmax," + format_number(u.result.bound_tmax) + "\n";
        p.series.emplace_back(series, u.result.varpi);
      }
    } else {
      const TrainOutcome out = run_training(c);
      const double last = out.log.episode_means.empty() ? 0.0 : out.log.episode_means.back();
      const std::string series = to_string(c.agent.kind);
      p.rows += head + series + ",eval_reward," + format_number(out.evaluation.mean_reward) + "\n";
      p.rows += head + series + ",final_train_reward," + format_number(last) + "\n";
      p.series.emplace_back(series, out.evaluation.mean_reward);
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        run_point(points[i]);
      } catch (const std::exception& e) {
        points[i].error = std::current_exception();
        points[i].error_text = e.what();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(opts.workers, points.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }

  std::string csv = provenance_line(cfg);
  csv += "parameter,value,repetition,seed,series,metric,result\n";
  std::string manifest = provenance_line(cfg);
  manifest += "value,repetition,seed,status,message\n";
  int code = kExitOk;
  for (const auto& p : points) {
    csv += p.rows;
    std::string msg = p.error_text;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    manifest += format_number(p.value) + "," + std::to_string(p.rep) + "," + std::to_string(p.seed) + "," +
                (p.error ? "failed," + msg : "done,") + "\n";
    if (p.error && code == kExitOk) code = exit_code_for(p.error);
  }
  write_file(opts.out_dir, "sweep.csv", csv);
  write_file(opts.out_dir, "sweep_manifest.csv", manifest);

  // Mean over repetitions per series.
  LineChart chart;
  chart.title = "Sweep over " + cfg.sweep.parameter;
  chart.x_label = cfg.sweep.parameter;
  chart.y_label = cfg.sweep.mode == "analyze" ? "delay determinacy" : "evaluation reward";
  std::vector<std::string> names;
  for (const auto& p : points)
    for (const auto& [name, v] : p.series)
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
  for (const auto& name : names) {
    Series s;
    s.name = name;
    for (double value : cfg.sweep.values) {
      double sum = 0.0;
      int n = 0;
      for (const auto& p : points)
        if (p.value == value)
          for (const auto& [nm, v] : p.series)
            if (nm == name) {
              sum += v;
              ++n;
            }
      if (n > 0) {
        s.x.push_back(value);
        s.y.push_back(sum / n);
      }
    }
    chart.series.push_back(s);
  }
  write_file(opts.out_dir, "sweep.svg", render_svg(chart));
  if (opts.console) {
    for (const auto& s : chart.series)
      for (std::size_t i = 0; i < s.x.size(); ++i)
        *opts.console << s.name << " " << cfg.sweep.parameter << "=" << s.x[i] << ": " << s.y[i] << "\n";
    for (const auto& p : points)
      if (p.error) *opts.console << "point " << p.value << " failed: " << p.error_text << "\n";
  }
  return code;
}

}  // namespace risdet
