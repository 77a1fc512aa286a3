#include <doctest.h>

#include <string>

#include "risdet/config.hpp"

using namespace risdet;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "t.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("empty text yields the defaults") {
  const ScenarioConfig c = parse_config("");
  const ScenarioConfig d;
  CHECK(dump_config(c) == dump_config(d));
  CHECK(c.env.window.t_min == 2);
  CHECK(c.env.window.t_max == 8);
  CHECK(c.agent.kind == AgentKind::sid_pdqn);
  CHECK(c.env.budgets.p_max == 3.0);
}

TEST_CASE("values, comments and lists") {
  const ScenarioConfig c = parse_config(
      "# header\n"
      "[window]\n"
      "t_min = 3   # trailing\n"
      "t_max = 9\n"
      "\n"
      "[agent]\n"
      "kind = dqn\n"
      "actor_hidden = [32, 16]\n"
      "use_target = false\n"
      "[topology]\n"
      "eve = [10, -2.5]\n"
      "[analyze]\n"
      "power = [1, 0.5, 0.25]\n");
  CHECK(c.env.window.t_min == 3);
  CHECK(c.env.window.t_max == 9);
  CHECK(c.agent.kind == AgentKind::dqn);
  CHECK(c.agent.actor_hidden == std::vector<std::size_t>{32, 16});
  CHECK_FALSE(c.agent.use_target);
  CHECK(c.env.topology.eve_pos.y == -2.5);
  CHECK(c.analyze.power == std::vector<double>{1, 0.5, 0.25});
}

TEST_CASE("dump reparses to the same configuration") {
  ScenarioConfig c;
  c.env.fading.pl0_db = -30.123456789012345;
  c.agent.beta = 1.0 / 3.0;
  c.sweep.values = {0.1, 0.2, 0.7};
  const std::string text = dump_config(c);
  const ScenarioConfig back = parse_config(text);
  CHECK(back.env.fading.pl0_db == c.env.fading.pl0_db);
  CHECK(back.agent.beta == c.agent.beta);
  CHECK(dump_config(back) == text);
  CHECK(config_hash(back) == config_hash(c));
  for (const auto& key : config_keys()) CHECK(get_config_value(back, key) == get_config_value(c, key));
}

TEST_CASE("hash ignores run bookkeeping but not the scenario") {
  ScenarioConfig a;
  ScenarioConfig b;
  b.run.seed = 77;
  b.run.out_dir = "elsewhere";
  b.run.workers = 3;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.env.arrival.lambda_pkts = 0.3;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("set and get by key") {
  ScenarioConfig c;
  set_config_value(c, "budget.p_max", "0.5");
  CHECK(c.env.budgets.p_max == 0.5);
  set_config_value(c, "agent.actor_loss", "standard_pdqn");
  CHECK(c.agent.actor_loss == ActorLossMode::standard_pdqn);
  CHECK(get_config_value(c, "budget.p_max") == "0.5");
  CHECK_THROWS_AS(set_config_value(c, "budget.nope", "1"), ConfigError);
  CHECK_THROWS_AS(set_config_value(c, "window.t_min", "abc"), ConfigError);
}

TEST_CASE("errors name the line and the problem") {
  const std::string inverted = error_of("[window]\nt_min = 5\nt_max = 3\n");
  CHECK(inverted.find("t.ini") != std::string::npos);
  CHECK(inverted.find("t_min") != std::string::npos);

  const std::string unknown = error_of("[window]\n\nbogus = 1\n");
  CHECK(unknown.find(":3") != std::string::npos);
  CHECK(unknown.find("bogus") != std::string::npos);

  const std::string type = error_of("[agent]\nn_step = two\n");
  CHECK(type.find(":2") != std::string::npos);
  CHECK(type.find("two") != std::string::npos);

  CHECK_FALSE(error_of("[nosuch]\n").empty());
  CHECK_FALSE(error_of("t_min = 1\n").empty());
  CHECK_FALSE(error_of("[window]\nt_min 1\n").empty());
  CHECK_FALSE(error_of("[window]\nt_min = 1\nt_min = 2\n").empty());
  CHECK_FALSE(error_of("[agent]\nkind = ppo\n").empty());
  CHECK_FALSE(error_of("[agent]\nn_step = -1\n").empty());
  CHECK_FALSE(error_of("[budget]\np_max = 0\n").empty());
  CHECK_FALSE(error_of("[secrecy]\nepsilon_e = 1.5\n").empty());
  CHECK_FALSE(error_of("[topology]\nap = [1, 2, 3]\n").empty());
  CHECK_FALSE(error_of("[quadrature.eval]\nfixed_nodes = 3\n").empty());
}

TEST_CASE("shipped configurations load") {
  for (std::string name : {"default.ini", "learnability.ini", "trend_pmax.ini", "trend_nmax.ini", "sweep_tmin.ini",
                           "sweep_tmax.ini"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_config(std::string(RISDET_SOURCE_DIR) + "/configs/" + name));
  }
  CHECK(dump_config(load_config(std::string(RISDET_SOURCE_DIR) + "/configs/default.ini")) ==
        dump_config(ScenarioConfig{}));
  CHECK_THROWS_AS(load_config("/nonexistent/x.ini"), ConfigError);
}
