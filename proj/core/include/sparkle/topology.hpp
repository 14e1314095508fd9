#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparkle {

struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Symmetric doubly stochastic mixing matrix together with its spectral data.
// rho = max(|lambda_2|, |lambda_n|) (eigenvalues sorted descending),
// gap = 1 - rho. Eigenvalues within 1e-10 of magnitude 1 are treated as the
// consensus eigenvalue when checking that it is simple.
struct MixingMatrix {
  int n = 0;
  Eigen::MatrixXd w;
  double rho = 0.0;
  double gap = 1.0;
  double lambda_min = 1.0;

  // Validates and computes spectra; throws TopologyError naming the first
  // failed check.
  static MixingMatrix from_matrix(const Eigen::MatrixXd& w);
};

// Diagnostic checks: symmetry, nonnegativity, row/column stochasticity,
// strong connectivity (simple unit eigenvalue, rho < 1), and positive
// definiteness. The PD entry is informational: it passes whenever the matrix
// is PSD within tolerance and its detail reports whether it is strictly PD
// (the ED/EXTRA shift decision keys off lambda_min <= 0).
std::vector<CheckResult> validate_mixing(const Eigen::MatrixXd& w);

// Named families. All builders validate and return spectral data.
MixingMatrix complete_graph(int n);

// Ring with self-weight a and (1-a)/2 per neighbor; circulant, so the
// spectrum is a + (1-a) cos(2 pi k / n).
MixingMatrix ring_adjusted(int n, double a);

// Self plus offsets {+-1, +-2} around the ring, all weights 1/5. Needs n >= 5.
MixingMatrix five_peer(int n);

// rows x cols wrap-around grid, weight 1/5 on self and the 4 lattice
// neighbors (coinciding neighbors accumulate).
MixingMatrix torus(int rows, int cols);

// Plain text: first line n, then n rows of n entries.
MixingMatrix custom_from_file(const std::string& path);

double spectral_gap(const MixingMatrix& m);

// Closed-form circulant spectrum of ring_adjusted: a + (1-a) cos(2 pi k / n).
double ring_adjusted_eigenvalue(int n, double a, int k);
double ring_adjusted_rho(int n, double a);

// Inverts rho(a) for the adjusted ring. Targets below the family's floor at
// this n (reached as a -> 0) are infeasible and throw with the feasible
// range; nonnegative weights only.
double ring_a_for_rho(int n, double rho_target);

// (I + W)/2, the standard remedy when a strategy's analysis wants W > 0.
MixingMatrix half_shift(const MixingMatrix& m);

// Nudges diagonal entries so each row sums to `target` exactly at working
// precision (two compensated passes). Keeps symmetry; corrections are O(eps),
// far below every validation tolerance. Long dual accumulations rely on this.
void sharpen_row_sums(Eigen::MatrixXd& m, double target);

}  // namespace sparkle
