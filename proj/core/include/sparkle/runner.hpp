#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "sparkle/config.hpp"
#include "sparkle/engine.hpp"
#include "sparkle/metrics.hpp"
#include "sparkle/problems.hpp"
#include "sparkle/strategy.hpp"
#include "sparkle/topology.hpp"

namespace sparkle {

// A config turned into live objects: the problem instance plus one strategy
// triple per coupled level. notes records anything assemble decided on its
// own, currently just identity blending of indefinite mixing matrices.
struct Assembled {
  std::unique_ptr<BilevelProblem> problem;
  StrategyMatrices sx;
  StrategyMatrices sy;
  StrategyMatrices sz;
  Hyperparams hp;
  std::vector<std::string> notes;
};

Assembled assemble(const ExperimentConfig& cfg);

struct RunResult {
  std::vector<std::string> csv_paths;   // one file per replicate
  std::vector<MetricsRow> final_rows;   // last logged row per replicate
  std::vector<std::string> notes;
};

// Runs cfg.run.replicates independent replicates and writes
// {out}_r{i}.csv for each. Throws DivergenceError if an iterate blows up.
RunResult run_experiment(const ExperimentConfig& cfg, std::ostream& log);

// One run per value of the configured sweep axis; per-run CSVs are named
// {out}_{axis}_{value}_r{i}.csv and {out}_summary.csv collects the final
// metrics (averaged over replicates) per value.
std::vector<std::string> run_sweep(const ExperimentConfig& cfg,
                                   std::ostream& log);

// Self checks against independent references: mixing matrix validation,
// generic vs recursive stepper agreement, implicit gradient vs finite
// differences, and collapse to a plain single-level method when the lower
// problem is trivial. Prints one line per check; returns true if none failed.
bool run_verify(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace sparkle
