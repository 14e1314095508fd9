#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "sparkle/problems.hpp"

namespace sparkle {

struct HypergradError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact reference quantities at a point x, computed from the agent-averaged
// exact oracles:
//   y* (x)    minimizer of the mean lower loss in y
//   z* (x)    solution of  [mean y-Hessian] z = mean grad_y f  at (x, y*)
//   grad_phi  mean grad_x f - [mean mixed derivative] z*
// Residual fields report how well the solves closed, relative to the size of
// their right-hand sides (1 + ||rhs||), so the scale of x does not matter.
struct ReferenceSolution {
  Eigen::VectorXd y_star;
  Eigen::VectorXd z_star;
  Eigen::VectorXd grad_phi;
  double y_residual = 0.0;
  double z_residual = 0.0;
};

// Newton iterations on the mean lower gradient (one step closes quadratic
// instances); falls back to gradient descent with step 1/L when curvature
// information stops helping. Stops when ||mean grad_y g|| falls below
// tol * (1 + the gradient norm at y = 0).
Eigen::VectorXd solve_lower(const BilevelProblem& prob, const Eigen::VectorXd& x,
                            double tol = 1e-10);

// Solves [mean y-Hessian at (x, y_star)] z = mean grad_y f(x, y_star) to a
// relative residual of tol. Throws if the Hessian is not positive definite.
Eigen::VectorXd solve_aux(const BilevelProblem& prob, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y_star, double tol = 1e-10);

ReferenceSolution hypergradient(const BilevelProblem& prob,
                                const Eigen::VectorXd& x);

// Central finite differences of phi(x) = mean_i f_i(x, y*(x)); the classical
// slow route used to cross-check `hypergradient`.
Eigen::VectorXd fd_hypergradient(const BilevelProblem& prob,
                                 const Eigen::VectorXd& x, double h = 1e-5);

// Minimizer of phi. phi need not be strongly convex in every direction (rank
// deficiency happens when the upper loss only senses a subspace of x), so the
// reported point is the minimum-norm stationary point; iterates started at
// zero live in the same subspace, which keeps distance-to-truth meaningful.
// ||grad_phi|| at the result is driven below `tol`.
Eigen::VectorXd argmin_phi(const BilevelProblem& prob, double tol = 1e-12);

}  // namespace sparkle
