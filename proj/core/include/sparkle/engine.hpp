#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparkle/problems.hpp"
#include "sparkle/strategy.hpp"

namespace sparkle {

struct EngineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when an iterate leaves the trust region (non-finite or huge norm).
struct DivergenceError : std::runtime_error {
  long iteration;
  std::string field;
  DivergenceError(long k, std::string f, double value)
      : std::runtime_error("divergence at iteration " + std::to_string(k) +
                           ": state '" + f + "' reached magnitude " +
                           std::to_string(value)),
        iteration(k),
        field(std::move(f)) {}
};

// Step size c0 / (c1 + c2 * k); c2 = 0 keeps it constant.
struct StepSchedule {
  double c0 = 0.0;
  double c1 = 1.0;
  double c2 = 0.0;

  static StepSchedule constant(double v) { return {v, 1.0, 0.0}; }
  double at(long k) const { return c0 / (c1 + c2 * static_cast<double>(k)); }
  bool is_constant() const { return c2 == 0.0; }

  friend bool operator==(const StepSchedule&, const StepSchedule&) = default;
};

enum class Mode { Stochastic, Deterministic };
enum class StepperKind { Generic, Recursive };

struct Hyperparams {
  StepSchedule alpha;  // upper level
  StepSchedule beta;   // lower level
  StepSchedule gamma;  // auxiliary level
  double theta = 1.0;  // momentum on the upper direction, in (0, 1]
  long iterations = 3000;
  int batch_size = 1;
  Mode mode = Mode::Stochastic;
};

// Per-level memory of the dual-free stepper: previous iterate and gradient
// (two-step forms) or the running tracker (atc-gt).
struct LevelShadow {
  Eigen::MatrixXd s_prev;
  Eigen::MatrixXd g_prev;
  Eigen::MatrixXd tracker;
  double eta_prev = 0.0;
  bool tracker_ready = false;
};

// Scalars and mean directions of the step that produced the current state;
// lets callers check the mean dynamics
//   xbar^{k+1} = xbar^k - alpha_k rbar^{k+1}
//   ybar^{k+1} = ybar^k - beta_k  vbar^k
//   zbar^{k+1} = zbar^k - gamma_k pbar^k
struct StepTrace {
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  Eigen::VectorXd vbar, pbar;
};

// All per-agent iterates, one row per agent. Zero-initialized; e_* are the
// transformed duals (B * raw dual), so column means stay at zero and the
// square root of B^2 never has to exist.
struct SwarmState {
  long k = 0;
  Eigen::MatrixXd x, y, z, r;
  Eigen::MatrixXd e_x, e_y, e_z;
  LevelShadow sh_x, sh_y, sh_z;
  Eigen::VectorXd prev_xbar;  // x column-mean before the latest x update
  StepTrace last;
};

struct EngineOptions {
  StrategyMatrices sx, sy, sz;
  Hyperparams hp;
  std::uint64_t master_seed = 0;
  std::uint32_t replicate = 0;
  StepperKind stepper = StepperKind::Generic;
  int threads = 1;
  double divergence_norm = 1e12;
};

// Single-loop optimizer. Each step() draws fresh oracles at (x^k, y^k), then
// updates y, z, the momentum direction r (which sees the new z), and x.
class Engine {
 public:
  Engine(const BilevelProblem& prob, EngineOptions opt);

  void step();
  const SwarmState& state() const { return st_; }
  const EngineOptions& options() const { return opt_; }

 private:
  void eval_oracles();
  void step_generic();
  void step_recursive();
  void recursive_level(const StrategyMatrices& sm, Eigen::MatrixXd& s,
                       LevelShadow& sh, double eta, const Eigen::MatrixXd& g);
  void compute_p_dir();
  void guard() const;

  const BilevelProblem& prob_;
  EngineOptions opt_;
  SwarmState st_;

  // oracle workspace, one row / block per agent
  Eigen::MatrixXd w_l_, w_b_, w_v_;
  std::vector<Eigen::MatrixXd> w_j_, w_h_;
  Eigen::MatrixXd p_dir_, u_;
};

// Steps `engine` for hp.iterations, invoking on_record at k = 0, every
// `stride` steps, and at the final iteration. DivergenceError propagates
// after the record callback has seen the last healthy state.
void run_engine(Engine& engine, long stride,
                const std::function<void(const SwarmState&)>& on_record);

}  // namespace sparkle
