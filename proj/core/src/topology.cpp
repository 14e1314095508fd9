#include "sparkle/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sparkle {

namespace {

constexpr double kStructTol = 1e-12;   // symmetry / stochasticity
constexpr double kSpectralTol = 1e-10; // unit-eigenvalue simplicity

Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXd& w) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw TopologyError("eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();  // ascending
  return ev;
}

}  // namespace

void sharpen_row_sums(Eigen::MatrixXd& m, double target) {
  const int n = static_cast<int>(m.rows());
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < n; ++i) {
      // compensated row sum
      double s = 0.0, c = 0.0;
      for (int j = 0; j < n; ++j) {
        double y = m(i, j) - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
      }
      m(i, i) -= s - target;
    }
  }
}

std::vector<CheckResult> validate_mixing(const Eigen::MatrixXd& w) {
  std::vector<CheckResult> out;
  const int n = static_cast<int>(w.rows());
  auto add = [&out](std::string name, bool pass, std::string detail) {
    out.push_back({std::move(name), pass, std::move(detail)});
  };

  if (n == 0 || w.cols() != n) {
    add("shape", false, "matrix must be square and nonempty");
    return out;
  }
  add("shape", true, std::to_string(n) + "x" + std::to_string(n));

  double asym = (w - w.transpose()).cwiseAbs().maxCoeff();
  add("symmetric", asym <= kStructTol,
      "max |w - w^T| = " + std::to_string(asym));

  double min_entry = w.minCoeff();
  add("nonnegative", min_entry >= -kStructTol,
      "min entry = " + std::to_string(min_entry));

  double row_err = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
  add("row_stochastic", row_err <= 1e-10,
      "max |row sum - 1| = " + std::to_string(row_err));
  double col_err = (w.colwise().sum().array() - 1.0).abs().maxCoeff();
  add("col_stochastic", col_err <= 1e-10,
      "max |col sum - 1| = " + std::to_string(col_err));

  bool spectra_ok = asym <= 1e-8;  // eigensolver needs symmetry
  if (!spectra_ok) {
    add("connectivity", false, "skipped: matrix not symmetric");
    add("positive_definite", false, "skipped: matrix not symmetric");
    return out;
  }

  Eigen::VectorXd ev = sorted_eigenvalues(w);
  // count eigenvalues with |lambda| within kSpectralTol of 1
  int near_unit = 0;
  double rho = 0.0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(std::abs(ev(i)) - 1.0) <= kSpectralTol)
      ++near_unit;
  }
  for (int i = 0; i < n; ++i) {
    double a = std::abs(ev(i));
    if (std::abs(a - 1.0) <= kSpectralTol) continue;
    rho = std::max(rho, a);
  }
  bool connected = near_unit == 1 && std::abs(ev(n - 1) - 1.0) <= kSpectralTol;
  {
    std::ostringstream os;
    os << "unit eigenvalues: " << near_unit << ", rho = " << rho;
    add("connectivity", connected && rho < 1.0, os.str());
  }
  {
    double lmin = ev(0);
    std::ostringstream os;
    os << "lambda_min = " << lmin
       << (lmin > kStructTol ? " (strictly PD)" : " (not strictly PD)");
    add("positive_definite", lmin >= -kStructTol, os.str());
  }
  return out;
}

MixingMatrix MixingMatrix::from_matrix(const Eigen::MatrixXd& w) {
  auto checks = validate_mixing(w);
  for (const auto& c : checks) {
    if (c.name == "positive_definite") continue;  // informational
    if (!c.pass)
      throw TopologyError("mixing matrix check failed: " + c.name + " (" +
                          c.detail + ")");
  }
  MixingMatrix m;
  m.n = static_cast<int>(w.rows());
  m.w = w;
  Eigen::VectorXd ev = sorted_eigenvalues(w);
  m.lambda_min = ev(0);
  double rho = 0.0;
  for (int i = 0; i < m.n; ++i) {
    if (std::abs(std::abs(ev(i)) - 1.0) <= kSpectralTol) continue;
    rho = std::max(rho, std::abs(ev(i)));
  }
  m.rho = rho;
  m.gap = 1.0 - rho;
  return m;
}

double spectral_gap(const MixingMatrix& m) { return m.gap; }

MixingMatrix complete_graph(int n) {
  if (n < 1) throw TopologyError("complete: n must be >= 1");
  Eigen::MatrixXd w = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  sharpen_row_sums(w, 1.0);
  return MixingMatrix::from_matrix(w);
}

MixingMatrix ring_adjusted(int n, double a) {
  if (n < 1) throw TopologyError("ring_adjusted: n must be >= 1");
  if (!(a > 0.0 && a < 1.0))
    throw TopologyError("ring_adjusted: self-weight a must lie in (0, 1)");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    w(i, i) += a;
    w(i, (i + 1) % n) += (1.0 - a) / 2.0;
    w(i, (i + n - 1) % n) += (1.0 - a) / 2.0;
  }
  sharpen_row_sums(w, 1.0);
  return MixingMatrix::from_matrix(w);
}

MixingMatrix five_peer(int n) {
  if (n < 5) throw TopologyError("five_peer: needs n >= 5");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int d : {0, 1, -1, 2, -2})
      w(i, ((i + d) % n + n) % n) += 0.2;
  sharpen_row_sums(w, 1.0);
  return MixingMatrix::from_matrix(w);
}

MixingMatrix torus(int rows, int cols) {
  if (rows < 1 || cols < 1) throw TopologyError("torus: empty grid");
  const int n = rows * cols;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      int i = id(r, c);
      w(i, i) += 0.2;
      w(i, id((r + 1) % rows, c)) += 0.2;
      w(i, id((r + rows - 1) % rows, c)) += 0.2;
      w(i, id(r, (c + 1) % cols)) += 0.2;
      w(i, id(r, (c + cols - 1) % cols)) += 0.2;
    }
  sharpen_row_sums(w, 1.0);
  return MixingMatrix::from_matrix(w);
}

MixingMatrix custom_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TopologyError("custom topology: cannot open " + path);
  int n = 0;
  if (!(in >> n) || n < 1)
    throw TopologyError("custom topology: bad size line in " + path);
  Eigen::MatrixXd w(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!(in >> w(i, j)))
        throw TopologyError("custom topology: expected " +
                            std::to_string(n * n) + " entries in " + path);
  return MixingMatrix::from_matrix(w);  // validated, never repaired
}

double ring_adjusted_eigenvalue(int n, double a, int k) {
  return a + (1.0 - a) * std::cos(2.0 * std::numbers::pi * k / n);
}

double ring_adjusted_rho(int n, double a) {
  double rho = 0.0;
  for (int k = 1; k < n; ++k)
    rho = std::max(rho, std::abs(ring_adjusted_eigenvalue(n, a, k)));
  return rho;
}

double ring_a_for_rho(int n, double rho_target) {
  if (n < 3) throw TopologyError("ring_a_for_rho: needs n >= 3");
  if (!(rho_target > 0.0 && rho_target < 1.0))
    throw TopologyError("ring_a_for_rho: target must lie in (0, 1)");
  const double c1 = std::cos(2.0 * std::numbers::pi / n);

  // rho(a) is piecewise affine in a: the k=1 eigenvalue c1 + (1-c1) a rises
  // with a while the magnitude of the most negative eigenvalue falls, so the
  // curve is V-shaped. Locate the crossover (the family's floor) first.
  auto most_negative = [n](double a) {
    double v = 0.0;
    for (int k = 1; k < n; ++k)
      v = std::max(v, -ring_adjusted_eigenvalue(n, a, k));
    return v;
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (most_negative(mid) > ring_adjusted_eigenvalue(n, mid, 1))
      lo = mid;
    else
      hi = mid;
  }
  const double a_floor = 0.5 * (lo + hi);
  const double rho_floor = ring_adjusted_rho(n, a_floor);

  auto infeasible = [&](const char* why) {
    std::ostringstream os;
    os << "ring_a_for_rho: target " << rho_target << " " << why
       << " for the nonnegative adjusted ring at n = " << n
       << "; achievable targets lie in [" << rho_floor << ", 1)";
    return TopologyError(os.str());
  };
  if (rho_target < rho_floor - 1e-12) throw infeasible("is below the floor");

  // Prefer the rising branch (larger self-weight, better conditioned).
  double a = (rho_target - c1) / (1.0 - c1);
  if (a > 0.0 && a < 1.0 &&
      std::abs(ring_adjusted_rho(n, a) - rho_target) <= 1e-9)
    return a;

  // Falling branch: bisect on (0, a_floor), where rho decreases.
  if (rho_target <= ring_adjusted_rho(n, 1e-9) + 1e-12) {
    lo = 1e-9;
    hi = a_floor;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (ring_adjusted_rho(n, mid) > rho_target)
        lo = mid;
      else
        hi = mid;
    }
    a = 0.5 * (lo + hi);
    if (std::abs(ring_adjusted_rho(n, a) - rho_target) <= 1e-9) return a;
  }
  throw infeasible("is not attained");
}

MixingMatrix half_shift(const MixingMatrix& m) {
  Eigen::MatrixXd w =
      0.5 * (Eigen::MatrixXd::Identity(m.n, m.n) + m.w);
  sharpen_row_sums(w, 1.0);
  return MixingMatrix::from_matrix(w);
}

}  // namespace sparkle
