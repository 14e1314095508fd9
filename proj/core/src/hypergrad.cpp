#include "sparkle/hypergrad.hpp"

#include <cmath>

namespace sparkle {

namespace {

// agent-averaged exact oracle fields at (x, y)
struct MeanOracle {
  Eigen::VectorXd l, b, v;
  Eigen::MatrixXd j, h;
};

MeanOracle mean_exact(const BilevelProblem& prob, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y) {
  const int n = prob.agents();
  MeanOracle m;
  for (int i = 0; i < n; ++i) {
    OracleSample s = prob.exact(i, x, y);
    if (i == 0) {
      m.l = s.l;
      m.b = s.b;
      m.v = s.v;
      m.j = s.j_mat;
      m.h = s.h_mat;
    } else {
      m.l += s.l;
      m.b += s.b;
      m.v += s.v;
      m.j += s.j_mat;
      m.h += s.h_mat;
    }
  }
  const double inv = 1.0 / n;
  m.l *= inv;
  m.b *= inv;
  m.v *= inv;
  m.j *= inv;
  m.h *= inv;
  return m;
}

double mean_upper_value(const BilevelProblem& prob, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y) {
  double acc = 0.0;
  for (int i = 0; i < prob.agents(); ++i)
    acc += prob.exact_upper_value(i, x, y);
  return acc / prob.agents();
}

Eigen::LLT<Eigen::MatrixXd> factor_pd(const Eigen::MatrixXd& h,
                                      const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success)
    throw HypergradError(std::string(what) +
                         ": lower-level Hessian is not positive definite");
  return llt;
}

}  // namespace

// Tolerances are relative: far from the optimum the lower gradient and the
// auxiliary right-hand side grow with ||x||, and an absolute threshold would
// sit below the fp floor of the solve there.
double lower_scale(const MeanOracle& at_zero) { return 1.0 + at_zero.v.norm(); }

Eigen::VectorXd solve_lower(const BilevelProblem& prob,
                            const Eigen::VectorXd& x, double tol) {
  const int q = prob.dim_y();
  Eigen::VectorXd y = Eigen::VectorXd::Zero(q);
  double scale = -1.0;

  // Newton; each iterate re-probes the Hessian, so quadratic lower losses
  // close in one step. After first reaching the tolerance one extra step is
  // taken to polish toward the fp floor (downstream solves want the slack).
  bool within_tol = false;
  for (int it = 0; it < 100; ++it) {
    MeanOracle m = mean_exact(prob, x, y);
    if (scale < 0.0) scale = lower_scale(m);  // first pass is at y = 0
    double res = m.v.norm();
    if (!std::isfinite(res)) break;
    if (res <= tol * scale) {
      if (within_tol) return y;
      within_tol = true;
    } else {
      within_tol = false;
    }
    y -= factor_pd(m.h, "solve_lower").solve(m.v);
  }
  if (within_tol) return y;

  // damped gradient descent, step 1/L
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      mean_exact(prob, x, y).h, Eigen::EigenvaluesOnly);
  double lip = std::max(es.eigenvalues().maxCoeff(), prob.mu_g());
  for (long it = 0; it < 1000000; ++it) {
    Eigen::VectorXd v = mean_exact(prob, x, y).v;
    if (v.norm() <= tol * scale) return y;
    y -= v / lip;
  }
  throw HypergradError("solve_lower: gradient descent hit the iteration cap");
}

Eigen::VectorXd solve_aux(const BilevelProblem& prob, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y_star, double tol) {
  MeanOracle m = mean_exact(prob, x, y_star);
  auto llt = factor_pd(m.h, "solve_aux");
  Eigen::VectorXd z = llt.solve(m.b);
  z += llt.solve(m.b - m.h * z);  // one refinement pass
  double res = (m.h * z - m.b).norm() / (1.0 + m.b.norm());
  if (!(res <= tol)) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", res);
    throw HypergradError(std::string("solve_aux: relative residual ") + buf +
                         " exceeds tolerance");
  }
  return z;
}

ReferenceSolution hypergradient(const BilevelProblem& prob,
                                const Eigen::VectorXd& x) {
  ReferenceSolution out;
  out.y_star = solve_lower(prob, x);
  out.z_star = solve_aux(prob, x, out.y_star);
  MeanOracle m = mean_exact(prob, x, out.y_star);
  out.grad_phi = m.l - m.j * out.z_star;
  out.y_residual =
      m.v.norm() / lower_scale(mean_exact(prob, x, Eigen::VectorXd::Zero(
                                                       prob.dim_y())));
  out.z_residual = (m.h * out.z_star - m.b).norm() / (1.0 + m.b.norm());
  return out;
}

Eigen::VectorXd fd_hypergradient(const BilevelProblem& prob,
                                 const Eigen::VectorXd& x, double h) {
  const int p = prob.dim_x();
  Eigen::VectorXd g(p);
  for (int j = 0; j < p; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    double fp = mean_upper_value(prob, xp, solve_lower(prob, xp));
    double fm = mean_upper_value(prob, xm, solve_lower(prob, xm));
    g(j) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::VectorXd argmin_phi(const BilevelProblem& prob, double tol) {
  const int p = prob.dim_x();
  Eigen::VectorXd g0 = hypergradient(prob, Eigen::VectorXd::Zero(p)).grad_phi;

  // numeric Hessian of phi, column by column (phi is smooth; our families
  // make it exactly quadratic, so the probes are exact up to roundoff)
  Eigen::MatrixXd hess(p, p);
  for (int j = 0; j < p; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(p);
    e(j) = 1.0;
    hess.col(j) = hypergradient(prob, e).grad_phi - g0;
  }
  hess = 0.5 * (hess + hess.transpose());

  // minimum-norm stationary point; stays valid when hess is rank deficient
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(hess);
  Eigen::VectorXd x = cod.solve(-g0);
  for (int it = 0; it < 60; ++it) {
    Eigen::VectorXd g = hypergradient(prob, x).grad_phi;
    if (g.norm() <= tol) return x;
    x -= cod.solve(g);
  }

  // last resort: descend with step 1/L along the probed curvature
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess,
                                                    Eigen::EigenvaluesOnly);
  double lip = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-12);
  for (long it = 0; it < 200000; ++it) {
    Eigen::VectorXd g = hypergradient(prob, x).grad_phi;
    if (g.norm() <= tol) return x;
    x -= g / lip;
  }
  throw HypergradError("argmin_phi: could not reach the requested tolerance");
}

}  // namespace sparkle
