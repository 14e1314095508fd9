#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparkle/engine.hpp"

namespace sparkle {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string msg, std::vector<std::string> issues = {})
      : std::runtime_error(std::move(msg)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

// [problem]. Keys form one pool shared by the three families; a family reads
// the ones it needs and ignores the rest, so a config can be flipped between
// families without deleting lines.
struct ProblemConfig {
  std::string family = "synthetic";  // synthetic | policy_eval | single_level
  int agents = 10;
  int dim_x = 20;
  int dim_y = 10;
  double sigma_g = 0.001;
  double sigma_h = 0.5;
  double c_reg = 0.001;
  int states = 200;
  int features = 10;
  double discount = 0.95;
  double reward_noise = 0.02;
  double noise_std = 0.1;
  double hetero_std = 1.0;
  std::uint64_t data_seed = 1;

  friend bool operator==(const ProblemConfig&, const ProblemConfig&) = default;
};

// [topology], optionally overridden per level by [topology.x], [topology.y],
// [topology.z]. An override section inherits the base values first. The agent
// count always comes from [problem].
struct TopologyConfig {
  std::string kind = "ring_adjusted";  // complete | ring_adjusted | five_peer
                                       // | torus | custom
  double a = 1.0 / 3.0;  // self weight of the adjusted ring
  double rho = -1.0;     // if set in (0,1), solve the ring weight for it
  int rows = 0;          // torus shape; 0 0 means pick a near-square grid
  int cols = 0;
  std::string file;  // custom: path to a whitespace matrix, n then n*n entries

  friend bool operator==(const TopologyConfig&, const TopologyConfig&) =
      default;
};

// [strategy]. Empty lower/aux inherit the upper choice.
struct StrategyConfig {
  std::string upper = "extra";
  std::string lower;
  std::string aux;
  std::string file;  // required when any level says "custom"

  friend bool operator==(const StrategyConfig&, const StrategyConfig&) =
      default;
};

// [hyperparams]. A step size is either one number (constant) or three numbers
// "c0 c1 c2" meaning c0 / (c1 + c2 * k).
struct HyperConfig {
  StepSchedule alpha{1.0, 1000.0, 0.01};
  StepSchedule beta{1.0, 1000.0, 0.01};
  StepSchedule gamma{1.0, 1000.0, 0.01};
  double theta = 0.1;
  std::int64_t iterations = 3000;
  int batch_size = 10;
  std::string mode = "stochastic";  // stochastic | deterministic

  friend bool operator==(const HyperConfig&, const HyperConfig&) = default;
};

struct RunConfig {
  std::uint64_t master_seed = 42;
  int replicates = 1;
  std::int64_t metrics_stride = 10;
  std::string out = "run";
  std::string engine = "generic";  // generic | recursive
  int threads = 1;
  bool timing = false;   // off keeps the wall_ns column zero so reruns of the
                         // same seed produce byte-identical CSV files
  bool pd_shift = true;  // blend the mixing matrix halfway toward the identity
                         // for the two strategies that need it on indefinite W

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// [sweep]. Optional; only the sweep subcommand requires it.
struct SweepConfig {
  std::string axis;  // n | strategy | theta | rho
  std::vector<std::string> values;

  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct ExperimentConfig {
  ProblemConfig problem;
  TopologyConfig topology;
  std::optional<TopologyConfig> topology_x;
  std::optional<TopologyConfig> topology_y;
  std::optional<TopologyConfig> topology_z;
  StrategyConfig strategy;
  HyperConfig hyper;
  RunConfig run;
  SweepConfig sweep;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) =
      default;
};

// Parses INI-style text. Unknown sections, unknown keys, duplicate keys and
// malformed values are all collected and reported together in one ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Inverse of parse_config: parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace sparkle
