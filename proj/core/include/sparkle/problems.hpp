#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparkle/rng.hpp"

namespace sparkle {

struct ProblemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One stochastic (or exact) evaluation of the five oracle quantities agent i
// needs at a point (x, y):
//   l     = grad_x of the upper loss          (p)
//   b     = grad_y of the upper loss          (q)
//   v     = grad_y of the lower loss          (q)
//   j_mat = mixed second derivative of the lower loss   (p x q)
//   h_mat = y-Hessian of the lower loss, symmetric PD   (q x q)
// One upper-level draw serves l and b; one independent lower-level draw
// serves v, j_mat and h_mat.
struct OracleSample {
  Eigen::VectorXd l;
  Eigen::VectorXd b;
  Eigen::VectorXd v;
  Eigen::MatrixXd j_mat;
  Eigen::MatrixXd h_mat;
};

// A bilevel instance over n agents: upper losses f_i(x, y) with x in R^p,
// lower losses g_i(x, y) strongly convex in y in R^q. `sample` must be a pure
// function of (agent, x, y, draws from rng); `exact` returns the expectation
// of `sample` over the draw distribution.
class BilevelProblem {
 public:
  virtual ~BilevelProblem() = default;

  virtual int agents() const = 0;
  virtual int dim_x() const = 0;
  virtual int dim_y() const = 0;

  // Strong-convexity modulus the instance promises for every realized
  // y-Hessian (sample and exact).
  virtual double mu_g() const = 0;

  virtual OracleSample sample(int agent, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y,
                              RngStream& rng) const = 0;
  virtual OracleSample exact(int agent, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& y) const = 0;

  // Expected upper loss f_i(x, y); powers finite-difference probes of the
  // overall objective x -> f(x, y*(x)).
  virtual double exact_upper_value(int agent, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y) const = 0;

  virtual std::string family() const = 0;
};

// Mean of `count` independent draws from one stream. Averaging commutes with
// every oracle field, so the batch mean stays unbiased.
OracleSample sample_batch_mean(const BilevelProblem& prob, int agent,
                               const Eigen::VectorXd& x,
                               const Eigen::VectorXd& y, int count,
                               RngStream& rng);

// Least-squares bilevel family. A shared p x q design A* (entries N(0, 9))
// couples the levels:
//   f_i(x, y) = E || (A* + noise) y - b_i ||^2,  b_i = t_i + noise
//   g_i(x, y) = E || (A* + noise) y - x ||^2 + c_r ||y||^2
// Per-draw noise is N(0, sigma_g^2) entrywise; per-agent targets are
// t_i = t* + N(0, sigma_h^2) so sigma_h dials heterogeneity. With
// c_eff = c_r + p sigma_g^2 the lower solution is
// y*(x) = (A*^T A* + c_eff I)^{-1} A*^T x.
struct SyntheticParams {
  int n = 10;
  int p = 20;
  int q = 10;
  double sigma_g = 0.001;
  double sigma_h = 0.5;
  double c_r = 0.001;
  std::uint64_t seed = 1;
};
std::unique_ptr<BilevelProblem> make_synthetic_bilevel(
    const SyntheticParams& params);

// Policy-evaluation family. Shared features phi_s ~ U[0,1]^m for each of S
// states, a shared random row-stochastic transition matrix P, per-agent mean
// rewards U[0,1]:
//   f_i(x, y) = (1/2S) sum_s (phi_s^T x - y_s)^2
//   g_i(x, y) = sum_s (y_s - E_{s'}[r^i(s,s') + gamma phi_{s'}^T x])^2
// Stochastic rewards are N(mean, reward_noise_std^2); the noise enters g_i
// only through P-weighted row sums, which are drawn directly with the exact
// aggregate law N(0, reward_noise_std^2 ||P_s||^2).
struct PolicyEvalParams {
  int n = 10;
  int num_states = 200;
  int m = 10;
  double gamma = 0.95;
  double reward_noise_std = 0.02;
  std::uint64_t seed = 1;
};
std::unique_ptr<BilevelProblem> make_policy_eval(const PolicyEvalParams& params);

// Degenerate single-level family: g_i(y) = ||y||^2 / 2 decouples the levels,
// so y* = 0, the auxiliary solve is trivial and the optimizer reduces to a
// decentralized single-level method on
//   f_i(x) = E || x - c_i - noise ||^2 / 2,  c_i ~ hetero_std * N(0, I).
struct SingleLevelParams {
  int n = 10;
  int p = 10;
  int q = 1;
  double noise_std = 0.1;
  double hetero_std = 1.0;
  std::uint64_t seed = 1;
};
std::unique_ptr<BilevelProblem> make_single_level(
    const SingleLevelParams& params);

}  // namespace sparkle
