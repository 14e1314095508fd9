#include "sparkle/metrics.hpp"

#include <cstdio>

#include "sparkle/hypergrad.hpp"

namespace sparkle {

double consensus_gap(const Eigen::MatrixXd& s) {
  const auto n = s.rows();
  if (n == 0) return 0.0;
  Eigen::RowVectorXd mean = s.colwise().mean();
  return (s.rowwise() - mean).squaredNorm() / static_cast<double>(n);
}

Measurer::Measurer(const BilevelProblem& prob, bool timing)
    : prob_(prob), timing_(timing), t0_(std::chrono::steady_clock::now()) {}

const Eigen::VectorXd& Measurer::x_hat() {
  if (!have_x_hat_) {
    x_hat_ = argmin_phi(prob_);
    have_x_hat_ = true;
  }
  return x_hat_;
}

MetricsRow Measurer::measure(const SwarmState& st) {
  MetricsRow row;
  row.k = st.k;

  Eigen::VectorXd xbar = st.x.colwise().mean().transpose();
  ReferenceSolution ref = hypergradient(prob_, xbar);
  row.grad_phi_sq = ref.grad_phi.squaredNorm();

  row.cons_x = consensus_gap(st.x);
  row.cons_y = consensus_gap(st.y);
  row.cons_z = consensus_gap(st.z);

  // y and z trail x by one oracle query; compare their means against the
  // solutions at the x mean those queries actually saw.
  Eigen::VectorXd y_prev = solve_lower(prob_, st.prev_xbar);
  Eigen::VectorXd z_prev = solve_aux(prob_, st.prev_xbar, y_prev);
  Eigen::VectorXd ybar = st.y.colwise().mean().transpose();
  Eigen::VectorXd zbar = st.z.colwise().mean().transpose();
  row.err_y = (ybar - y_prev).squaredNorm();
  row.err_z = (zbar - z_prev).squaredNorm();

  row.est_err = (st.x.rowwise() - x_hat().transpose()).squaredNorm();

  if (timing_) {
    auto dt = std::chrono::steady_clock::now() - t0_;
    row.wall_ns =
        std::chrono::duration_cast<std::chrono::nanoseconds>(dt).count();
  }
  return row;
}

std::string csv_header() {
  return "k,grad_phi_sq,cons_x,cons_y,cons_z,err_y,err_z,est_err,wall_ns";
}

std::string csv_row(const MetricsRow& row) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%lld",
                static_cast<long long>(row.k), row.grad_phi_sq, row.cons_x,
                row.cons_y, row.cons_z, row.err_y, row.err_z, row.est_err,
                static_cast<long long>(row.wall_ns));
  return std::string(buf);
}

}  // namespace sparkle
