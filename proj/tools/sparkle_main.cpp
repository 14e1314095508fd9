#include <charconv>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sparkle/config.hpp"
#include "sparkle/engine.hpp"
#include "sparkle/runner.hpp"
#include "sparkle/strategy.hpp"
#include "sparkle/topology.hpp"

namespace {

// exit codes: 0 success, 1 verify failure or unexpected error,
// 2 bad config or arguments, 3 diverged run

int resolve_threads(sparkle::ExperimentConfig& cfg,
                    const std::optional<int>& flag) {
  if (flag) {
    cfg.run.threads = *flag;
  } else if (const char* env = std::getenv("SPARKLE_THREADS")) {
    std::string s(env);
    int v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw sparkle::ConfigError("SPARKLE_THREADS: not an integer: '" + s +
                                 "'");
    }
    cfg.run.threads = v;
  }
  if (cfg.run.threads < 1) {
    throw sparkle::ConfigError("threads: must be >= 1");
  }
  return cfg.run.threads;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized stochastic bilevel optimization simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config file")
        ->required();
    cmd->add_option("--seed", seed, "override [run] master_seed");
    cmd->add_option("--out", out, "override [run] out prefix");
    cmd->add_option("--threads", threads,
                    "oracle worker threads (SPARKLE_THREADS also works)");
  };

  CLI::App* cmd_run = app.add_subcommand(
      "run", "run all replicates, writing one metrics CSV each");
  CLI::App* cmd_sweep = app.add_subcommand(
      "sweep", "repeat the run across the [sweep] values and summarize");
  CLI::App* cmd_verify = app.add_subcommand(
      "verify", "check the setup against independent references");
  add_common(cmd_run);
  add_common(cmd_sweep);
  add_common(cmd_verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    sparkle::ExperimentConfig cfg = sparkle::load_config(config_path);
    if (seed) cfg.run.master_seed = *seed;
    if (out) cfg.run.out = *out;
    resolve_threads(cfg, threads);

    if (cmd_run->parsed()) {
      sparkle::run_experiment(cfg, std::cout);
      return 0;
    }
    if (cmd_sweep->parsed()) {
      sparkle::run_sweep(cfg, std::cout);
      return 0;
    }
    return sparkle::run_verify(cfg, std::cout) ? 0 : 1;
  } catch (const sparkle::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const sparkle::TopologyError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const sparkle::StrategyError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const sparkle::DivergenceError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
