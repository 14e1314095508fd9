#include "sparkle/strategy.hpp"

#include <fstream>

namespace sparkle {

namespace {

void check_triple(const StrategyMatrices& sm) {
  const int n = static_cast<int>(sm.w.rows());
  auto stochastic = [n](const Eigen::MatrixXd& m, const char* what) {
    if (m.rows() != n || m.cols() != n)
      throw StrategyError(std::string(what) + ": wrong shape");
    double row = (m.rowwise().sum().array() - 1.0).abs().maxCoeff();
    double col = (m.colwise().sum().array() - 1.0).abs().maxCoeff();
    if (row > 1e-12 || col > 1e-12)
      throw StrategyError(std::string(what) + ": not doubly stochastic");
  };
  stochastic(sm.a_mat, "strategy matrix A");
  stochastic(sm.c_mat, "strategy matrix C");

  const auto& b = sm.b_sq;
  if (b.rows() != n || b.cols() != n)
    throw StrategyError("strategy matrix B^2: wrong shape");
  if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw StrategyError("strategy matrix B^2: not symmetric");
  if ((b * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() > 1e-12)
    throw StrategyError("strategy matrix B^2: B^2 1 != 0");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
  if (es.eigenvalues()(0) < -1e-12)
    throw StrategyError("strategy matrix B^2: not PSD");
}

}  // namespace

StrategyMatrices strategy_matrices(Strategy s, const MixingMatrix& m) {
  const int n = m.n;
  const Eigen::MatrixXd& w = m.w;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);

  StrategyMatrices sm;
  sm.strategy = s;
  sm.w = w;

  auto w2 = [&]() {
    Eigen::MatrixXd p = w * w;
    sharpen_row_sums(p, 1.0);
    return p;
  };
  auto i_minus_w_sq = [&]() {
    Eigen::MatrixXd d = id - w;
    Eigen::MatrixXd p = d * d;
    p = 0.5 * (p + p.transpose());
    sharpen_row_sums(p, 0.0);
    return p;
  };

  switch (s) {
    case Strategy::Ed: {
      sm.a_mat = w;
      sm.b_sq = id - w;
      sharpen_row_sums(sm.b_sq, 0.0);
      sm.c_mat = w;
      break;
    }
    case Strategy::Extra: {
      sm.a_mat = id;
      sm.b_sq = id - w;
      sharpen_row_sums(sm.b_sq, 0.0);
      sm.c_mat = w;
      break;
    }
    case Strategy::AtcGt: {
      sm.a_mat = w2();
      sm.b_sq = i_minus_w_sq();
      sm.c_mat = sm.a_mat;
      break;
    }
    case Strategy::SemiAtcGt: {
      sm.a_mat = w;
      sm.b_sq = i_minus_w_sq();
      sm.c_mat = w2();
      break;
    }
    case Strategy::NonAtcGt: {
      sm.a_mat = id;
      sm.b_sq = i_minus_w_sq();
      sm.c_mat = w2();
      break;
    }
    case Strategy::DgdBaseline: {
      sm.a_mat = w;
      sm.b_sq = Eigen::MatrixXd::Zero(n, n);
      sm.c_mat = w;
      sm.uses_dual = false;
      break;
    }
    case Strategy::Custom:
      throw StrategyError(
          "custom strategy requires a file; use custom_strategy_from_file");
  }
  check_triple(sm);  // the zero B^2 of dgd passes the dual checks vacuously
  return sm;
}

StrategyMatrices custom_strategy_from_file(const std::string& path,
                                           const MixingMatrix& m) {
  std::ifstream in(path);
  if (!in) throw StrategyError("custom strategy: cannot open " + path);
  int n = 0;
  if (!(in >> n) || n < 1)
    throw StrategyError("custom strategy: bad size line in " + path);
  if (n != m.n)
    throw StrategyError("custom strategy: size " + std::to_string(n) +
                        " does not match topology n = " + std::to_string(m.n));
  auto read_block = [&](const char* what) {
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (!(in >> b(i, j)))
          throw StrategyError(std::string("custom strategy: truncated ") +
                              what + " block in " + path);
    return b;
  };
  StrategyMatrices sm;
  sm.strategy = Strategy::Custom;
  sm.w = m.w;
  sm.a_mat = read_block("A");
  sm.b_sq = read_block("B^2");
  sm.c_mat = read_block("C");
  sm.uses_dual = sm.b_sq.cwiseAbs().maxCoeff() > 0.0;
  check_triple(sm);
  return sm;
}

RecursionForm recursion_form(Strategy s) {
  switch (s) {
    case Strategy::Ed:
    case Strategy::Extra:
    case Strategy::SemiAtcGt:
    case Strategy::NonAtcGt:
      return RecursionForm::TwoStep;
    case Strategy::AtcGt:
      return RecursionForm::Tracker;
    case Strategy::DgdBaseline:
      throw StrategyError(
          "dgd has no dual-free recursion beyond plain diffusion");
    case Strategy::Custom:
      throw StrategyError("custom strategies have no dual-free recursion");
  }
  throw StrategyError("unknown strategy");
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "ed") return Strategy::Ed;
  if (name == "extra") return Strategy::Extra;
  if (name == "atc-gt") return Strategy::AtcGt;
  if (name == "semi-atc-gt") return Strategy::SemiAtcGt;
  if (name == "non-atc-gt") return Strategy::NonAtcGt;
  if (name == "dgd") return Strategy::DgdBaseline;
  if (name == "custom") return Strategy::Custom;
  throw StrategyError("unknown strategy name: '" + name +
                      "' (expected ed, extra, atc-gt, semi-atc-gt, "
                      "non-atc-gt, dgd, or custom)");
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Ed: return "ed";
    case Strategy::Extra: return "extra";
    case Strategy::AtcGt: return "atc-gt";
    case Strategy::SemiAtcGt: return "semi-atc-gt";
    case Strategy::NonAtcGt: return "non-atc-gt";
    case Strategy::DgdBaseline: return "dgd";
    case Strategy::Custom: return "custom";
  }
  return "?";
}

}  // namespace sparkle
