#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "risdet/experiments.hpp"

using namespace risdet;
namespace fs = std::filesystem;

namespace {

const std::string kBaseConfig =
    "[env]\nn_users = 2\n"
    "[budget]\nn_max = 800\n"
    "[fading]\neve_calibration_draws = 2000\n"
    "[simulate]\npackets = 20000\n"
    "[train]\nepisodes = 1\nsteps = 20\neval_steps = 10\n"
    "[env]\nepisode_length = 20\n";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("risdet_cli_" + std::to_string(::getpid())) / name;
  fs::create_directories(p);
  return p;
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch("cfg") / name;
  std::ofstream(p) << text;
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(RISDET_CLI) + " " + args + " -q > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Rows of a CSV whose first line is the provenance comment.
std::vector<std::map<std::string, std::string>> read_csv(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::getline(f, line);
  REQUIRE(line.rfind("# config_hash=", 0) == 0);
  std::getline(f, line);
  std::vector<std::string> head;
  {
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) head.push_back(c);
  }
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(f, line)) {
    std::stringstream ss(line);
    std::map<std::string, std::string> row;
    std::size_t i = 0;
    for (std::string c; std::getline(ss, c, ',') && i < head.size(); ++i) row[head[i]] = c;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("analyze is byte-reproducible and seed dependent") {
  const fs::path cfg = write_config("a.ini", kBaseConfig);
  const fs::path a = scratch("an_a"), b = scratch("an_b"), c = scratch("an_c");
  REQUIRE(run("analyze --config " + cfg.string() + " --seed 5 --out " + a.string()) == 0);
  REQUIRE(run("analyze --config " + cfg.string() + " --seed 5 --out " + b.string()) == 0);
  REQUIRE(run("analyze --config " + cfg.string() + " --seed 6 --out " + c.string()) == 0);
  CHECK(slurp(a / "analyze.csv") == slurp(b / "analyze.csv"));
  CHECK(slurp(a / "analyze.csv") != slurp(c / "analyze.csv"));
  CHECK(slurp(a / "analyze.csv").find("seed=5") != std::string::npos);
}

TEST_CASE("analyze agrees with direct library calls") {
  const fs::path cfg_path = write_config("lib.ini", kBaseConfig);
  const fs::path out = scratch("an_lib");
  REQUIRE(run("analyze --config " + cfg_path.string() + " --seed 3 --out " + out.string()) == 0);
  const auto rows = read_csv(out / "analyze.csv");

  ScenarioConfig cfg = load_config(cfg_path.string());
  const Environment env(cfg.env, 3);
  const LosComponents los = los_components(env.topology(), env.fading());
  const PhaseShiftConfig theta = align_phases(Complex{}, los.f_user[0], los.g_ris);
  REQUIRE(rows.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    const LinkStats s = link_stats(env.topology(), env.fading(), theta, k, cfg.env.budgets.p_max / 2.0);
    ServiceModel sm;
    sm.stats = s;
    sm.secrecy = cfg.env.secrecy;
    sm.secrecy.blocklength = cfg.env.budgets.n_max / 2.0;
    sm.quadrature = cfg.eval_profile.quadrature;
    sm.density = cfg.env.density;
    const DeterminacyResult r = delay_determinacy(cfg.env.window, cfg.env.arrival, sm, cfg.eval_profile.search);
    CHECK(std::abs(std::stod(rows[k].at("varpi")) - r.varpi) <= 1e-12);
    CHECK(std::abs(std::stod(rows[k].at("bound_tmax")) - r.bound_tmax) <= 1e-12);
  }
}

TEST_CASE("zero lower requirement gives one minus the upper bound") {
  const fs::path cfg = write_config("t0.ini", kBaseConfig + "[window]\nt_min = 0\n");
  const fs::path out = scratch("an_t0");
  REQUIRE(run("analyze --config " + cfg.string() + " --out " + out.string()) == 0);
  for (const auto& r : read_csv(out / "analyze.csv"))
    CHECK(std::stod(r.at("varpi")) == doctest::Approx(1.0 - std::stod(r.at("bound_tmax"))).epsilon(1e-12));
}

TEST_CASE("single-value sweep reproduces analyze") {
  const fs::path cfg =
      write_config("sw.ini", kBaseConfig + "[sweep]\nparameter = window.t_min\nvalues = [2]\nmode = analyze\n");
  const fs::path an = scratch("sw_an"), sw = scratch("sw_sw");
  REQUIRE(run("analyze --config " + cfg.string() + " --out " + an.string()) == 0);
  REQUIRE(run("sweep --config " + cfg.string() + " --out " + sw.string()) == 0);
  const auto a = read_csv(an / "analyze.csv");
  const auto s = read_csv(sw / "sweep.csv");
  for (std::size_t k = 0; k < a.size(); ++k) {
    bool found = false;
    for (const auto& r : s)
      if (r.at("series") == "user" + std::to_string(k) && r.at("metric") == "varpi") {
        CHECK(r.at("result") == a[k].at("varpi"));
        found = true;
      }
    CHECK(found);
  }
  const std::string svg = slurp(sw / "sweep.svg");
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("viewBox=") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(read_csv(sw / "sweep_manifest.csv").size() == 1);
}

TEST_CASE("exit codes") {
  const fs::path out = scratch("codes");
  CHECK(run("analyze --config /nonexistent.ini --out " + out.string()) == 1);
  CHECK(run("--config x.ini") == 1);
  CHECK(run("analyze --config " + write_config("bad.ini", "[window]\nt_min = 5\nt_max = 3\n").string()) == 1);
  CHECK(run("analyze --config " + write_config("unk.ini", "[window]\nfoo = 1\n").string()) == 1);

  const std::string sim = "[env]\nn_users = 1\n[budget]\nn_max = 600\n[fading]\neve_calibration_draws = 2000\n"
                          "[simulate]\npackets = 20000\n";
  const fs::path paper = write_config("paper.ini", sim + "[env]\ndensity = paper\n");
  const fs::path rician = write_config("rician.ini", sim);
  CHECK(run("simulate --config " + paper.string() + " --out " + out.string()) == 0);
  CHECK(run("simulate --config " + paper.string() + " --strict --out " + out.string()) == 3);
  CHECK(run("simulate --config " + rician.string() + " --strict --out " + out.string()) == 0);
  CHECK(run("evaluate --config " + rician.string() + " --out " + scratch("empty").string()) != 0);
}

TEST_CASE("output directory from the environment") {
  const fs::path cfg = write_config("env.ini", kBaseConfig);
  const fs::path out = scratch("from_env");
  const std::string cmd = "RISDET_OUT=" + out.string() + " " + RISDET_CLI + " analyze --config " + cfg.string() +
                          " -q > /dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(out / "analyze.csv"));
}

TEST_CASE("train, evaluate and simulate outputs are reproducible") {
  const fs::path cfg = write_config("tr.ini", kBaseConfig);
  const fs::path a = scratch("tr_a"), b = scratch("tr_b");
  for (const fs::path& d : {a, b}) {
    REQUIRE(run("train --config " + cfg.string() + " --seed 2 --out " + d.string()) == 0);
    REQUIRE(run("evaluate --config " + cfg.string() + " --seed 2 --out " + d.string()) == 0);
    REQUIRE(run("simulate --config " + cfg.string() + " --seed 2 --out " + d.string()) == 0);
  }
  for (const char* f : {"train_log.csv", "train_eval.csv", "evaluate.csv", "simulate.csv", "simulate_window.csv",
                        "simulate_cdf.csv", "reward.svg", "checkpoint.txt"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  // Greedy evaluation of the checkpoint equals the evaluation right after training.
  const auto te = read_csv(a / "train_eval.csv");
  const auto ev = read_csv(a / "evaluate.csv");
  REQUIRE(te.size() == ev.size());
  for (std::size_t i = 0; i < te.size(); ++i) CHECK(te[i].at("reward") == ev[i].at("reward"));
}

TEST_CASE("an untrained agent performs like the random policy") {
  // A fresh network's greedy choice is an arbitrary action, so averaged
  // over initialisations it matches uniform random play.
  ScenarioConfig cfg = load_config(std::string(RISDET_SOURCE_DIR) + "/configs/learnability.ini");
  auto cache = std::make_shared<DeterminacyCache>(
      DeterminacyInputs{cfg.env.arrival, cfg.env.secrecy, cfg.env.window, cfg.env.density}, training_profile());
  Environment env(cfg.env, 1, cache);
  AgentConfig random_cfg = cfg.agent;
  random_cfg.kind = AgentKind::random;
  const int inits = 400;
  double untrained = 0.0, random = 0.0;
  for (int i = 0; i < inits; ++i) {
    Agent a(cfg.agent, kStateDim, env.codebook().size(), 1, 1000 + static_cast<std::uint64_t>(i));
    untrained += evaluate(env, a, 1, 10).mean_reward;
    Agent r(random_cfg, kStateDim, env.codebook().size(), 1, 1000 + static_cast<std::uint64_t>(i));
    random += evaluate(env, r, 1, 10).mean_reward;
  }
  CHECK(untrained / inits == doctest::Approx(random / inits).epsilon(0.10));

}
