// Command-line front end: analyze | sweep | simulate | train | evaluate.
#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "risdet/errors.hpp"
#include "risdet/experiments.hpp"

namespace {

std::optional<std::string> env_var(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace risdet;
  CLI::App app{"Delay-determinacy analysis and learning for RIS-assisted secure short-packet links"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> workers;
  bool strict = false;
  bool quiet = false;

  const std::pair<const char*, const char*> commands[] = {
      {"analyze", "delay determinacy of every user at the fixed allocation"},
      {"sweep", "repeat analyze or train over a list of values of one key"},
      {"simulate", "queue simulation next to the analytic violation bounds"},
      {"train", "train the configured agent, checkpoint, evaluate greedily"},
      {"evaluate", "greedy evaluation of a saved checkpoint"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "scenario file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--out", out_dir, "output directory (default run.out_dir)");
    sub->add_option("--workers", workers, "worker threads for sweeps (0 = all cores)");
    sub->add_flag("--strict", strict, "exit 3 when the simulation exceeds an analytic bound");
    sub->add_flag("-q,--quiet", quiet, "no console summary");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    ScenarioConfig cfg = load_config(config_path);
    if (seed) cfg.run.seed = *seed;

    RunOptions opts;
    opts.out_dir = out_dir ? *out_dir : env_var("RISDET_OUT").value_or(cfg.run.out_dir);
    std::size_t w = cfg.run.workers;
    if (auto e = env_var("RISDET_WORKERS")) w = static_cast<std::size_t>(std::stoul(*e));
    if (workers) w = *workers;
    if (w == 0) w = std::max(1u, std::thread::hardware_concurrency());
    opts.workers = w;
    opts.strict = strict;
    opts.console = quiet ? nullptr : &std::cout;

    if (command == "analyze") return cmd_analyze(cfg, opts);
    if (command == "sweep") return cmd_sweep(cfg, opts);
    if (command == "simulate") return cmd_simulate(cfg, opts);
    if (command == "train") return cmd_train(cfg, opts);
    return cmd_evaluate(cfg, opts);
  } catch (const NumericalError& e) {
    std::cerr << "ris-detnet " << command << ": numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "ris-detnet " << command << ": " << e.what() << "\n";
    return kExitValidation;
  }
}
