#pragma once

#include <chrono>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "sparkle/engine.hpp"
#include "sparkle/problems.hpp"

namespace sparkle {

// One logged row of run diagnostics. All quantities are exact (computed from
// closed-form oracles at the current swarm means), not stochastic estimates.
struct MetricsRow {
  std::int64_t k = 0;
  double grad_phi_sq = 0.0;  // squared norm of the implicit gradient at x-bar
  double cons_x = 0.0;       // mean squared deviation of agent copies of x
  double cons_y = 0.0;
  double cons_z = 0.0;
  double err_y = 0.0;        // ||y-bar - y*(previous x-bar)||^2
  double err_z = 0.0;        // ||z-bar - z*(previous x-bar)||^2
  double est_err = 0.0;      // sum_i ||x_i - x-hat||^2 against the true minimizer
  std::int64_t wall_ns = 0;  // elapsed wall clock, 0 when timing is disabled
};

// (1/n) * ||S - 1 * mean(S)||_F^2 where rows of S are agent copies.
double consensus_gap(const Eigen::MatrixXd& s);

// Evaluates MetricsRow fields for a swarm state. The lower-level references
// err_y and err_z are measured against the solution at the previous mean of x,
// because the iterates y^{k+1}, z^{k+1} were produced from oracles queried at
// x^k. The minimizer x-hat is solved once on first use and cached.
class Measurer {
 public:
  explicit Measurer(const BilevelProblem& prob, bool timing = false);

  MetricsRow measure(const SwarmState& st);

  const Eigen::VectorXd& x_hat();

 private:
  const BilevelProblem& prob_;
  bool timing_;
  std::chrono::steady_clock::time_point t0_;
  bool have_x_hat_ = false;
  Eigen::VectorXd x_hat_;
};

// CSV formatting shared by the CLI and the tests. Doubles are printed with
// %.17g so a parse-print round trip is lossless; neither function appends a
// newline.
std::string csv_header();
std::string csv_row(const MetricsRow& row);

}  // namespace sparkle
