#pragma once

#include <string>

#include "sparkle/topology.hpp"

namespace sparkle {

struct StrategyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Communication strategies for one level of the optimizer. Each corrected
// strategy is a triple (A, B^2, C) of polynomials in the level's mixing
// matrix W; only B^2 is ever stored or applied, which keeps matrix square
// roots out of the implementation entirely.
//
//   ed:          (W,   I - W,       W  )
//   extra:       (I,   I - W,       W  )
//   atc-gt:      (W^2, (I - W)^2,   W^2)
//   semi-atc-gt: (W,   (I - W)^2,   W^2)
//   non-atc-gt:  (I,   (I - W)^2,   W^2)
//   dgd:         (W,   0,           W  )   no dual; plain diffusion baseline
enum class Strategy {
  Ed,
  Extra,
  AtcGt,
  SemiAtcGt,
  NonAtcGt,
  DgdBaseline,
  Custom,
};

// How the dual-free stepper realizes a strategy: a two-step recurrence in the
// iterates, or a gradient tracker.
enum class RecursionForm { TwoStep, Tracker };

struct StrategyMatrices {
  Strategy strategy = Strategy::Ed;
  bool uses_dual = true;
  Eigen::MatrixXd a_mat;
  Eigen::MatrixXd b_sq;
  Eigen::MatrixXd c_mat;
  Eigen::MatrixXd w;  // generator, kept for the recursion stepper
};

// Builds the triple for a named strategy on mixing matrix w. A and C are
// doubly stochastic, B^2 is symmetric PSD with B^2 1 = 0; row sums are
// sharpened to working precision so dual means stay centered over long runs.
StrategyMatrices strategy_matrices(Strategy s, const MixingMatrix& w);

// Reads a user triple: first line n, then three n x n blocks A, B^2, C.
// Validated against the same invariants; no convergence promise attaches.
StrategyMatrices custom_strategy_from_file(const std::string& path,
                                           const MixingMatrix& w);

// The five corrected strategies have a dual-free realization; dgd is plain
// diffusion and has none, so asking for it is an error.
RecursionForm recursion_form(Strategy s);

Strategy strategy_from_name(const std::string& name);
std::string strategy_name(Strategy s);

}  // namespace sparkle
