#include "sparkle/problems.hpp"

namespace sparkle {

OracleSample sample_batch_mean(const BilevelProblem& prob, int agent,
                               const Eigen::VectorXd& x,
                               const Eigen::VectorXd& y, int count,
                               RngStream& rng) {
  if (count < 1) throw ProblemError("batch size must be >= 1");
  OracleSample acc = prob.sample(agent, x, y, rng);
  for (int s = 1; s < count; ++s) {
    OracleSample one = prob.sample(agent, x, y, rng);
    acc.l += one.l;
    acc.b += one.b;
    acc.v += one.v;
    acc.j_mat += one.j_mat;
    acc.h_mat += one.h_mat;
  }
  const double inv = 1.0 / count;
  acc.l *= inv;
  acc.b *= inv;
  acc.v *= inv;
  acc.j_mat *= inv;
  acc.h_mat *= inv;
  return acc;
}

namespace {

Eigen::MatrixXd draw_matrix(RngStream& rng, int rows, int cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)       // row-major draw order
    for (int j = 0; j < cols; ++j)
      m(i, j) = scale * rng.normal();
  return m;
}

// ---------------------------------------------------------------------------
// least-squares bilevel

class SyntheticBilevel final : public BilevelProblem {
 public:
  explicit SyntheticBilevel(const SyntheticParams& prm) : prm_(prm) {
    if (prm.n < 1 || prm.p < 1 || prm.q < 1)
      throw ProblemError("synthetic: n, p, q must be positive");
    if (prm.sigma_g < 0.0 || prm.sigma_h < 0.0 || prm.c_r <= 0.0)
      throw ProblemError("synthetic: need sigma_g, sigma_h >= 0 and c_r > 0");
    {
      RngStream s = setup_stream(prm.seed, 1);
      a_star_ = draw_matrix(s, prm.p, prm.q, 3.0);  // entries N(0, 9)
    }
    {
      RngStream s = setup_stream(prm.seed, 2);
      t_base_ = draw_matrix(s, prm.p, 1, 1.0);
    }
    targets_.resize(prm.n);
    RngStream s = setup_stream(prm.seed, 3);
    for (int i = 0; i < prm.n; ++i)
      targets_[i] = t_base_ + draw_matrix(s, prm.p, 1, prm.sigma_h);

    // E[(A* + E)^T (A* + E)] = A*^T A* + p sigma_g^2 I
    gram_eff_ = a_star_.transpose() * a_star_ +
                prm.p * prm.sigma_g * prm.sigma_g *
                    Eigen::MatrixXd::Identity(prm.q, prm.q);
  }

  int agents() const override { return prm_.n; }
  int dim_x() const override { return prm_.p; }
  int dim_y() const override { return prm_.q; }
  double mu_g() const override { return 2.0 * prm_.c_r; }
  std::string family() const override { return "synthetic"; }

  OracleSample sample(int agent, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y, RngStream& rng) const override {
    // draw order: upper-level design noise, target noise, lower-level design
    // noise; fixed so traces are reproducible across steppers and threads.
    Eigen::MatrixXd a_f = a_star_ + draw_matrix(rng, prm_.p, prm_.q, prm_.sigma_g);
    Eigen::VectorXd b_obs =
        targets_[agent] + draw_matrix(rng, prm_.p, 1, prm_.sigma_g);
    Eigen::MatrixXd a_g = a_star_ + draw_matrix(rng, prm_.p, prm_.q, prm_.sigma_g);

    OracleSample out;
    out.l = Eigen::VectorXd::Zero(prm_.p);  // upper loss has no direct x term
    out.b = 2.0 * (a_f.transpose() * (a_f * y - b_obs));
    out.v = 2.0 * (a_g.transpose() * (a_g * y - x)) + 2.0 * prm_.c_r * y;
    out.j_mat = -2.0 * a_g;
    out.h_mat = 2.0 * (a_g.transpose() * a_g +
                       prm_.c_r * Eigen::MatrixXd::Identity(prm_.q, prm_.q));
    return out;
  }

  OracleSample exact(int agent, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& y) const override {
    OracleSample out;
    out.l = Eigen::VectorXd::Zero(prm_.p);
    out.b = 2.0 * (gram_eff_ * y - a_star_.transpose() * targets_[agent]);
    out.v = 2.0 * (gram_eff_ * y - a_star_.transpose() * x) +
            2.0 * prm_.c_r * y;
    out.j_mat = -2.0 * a_star_;
    out.h_mat = 2.0 * (gram_eff_ +
                       prm_.c_r * Eigen::MatrixXd::Identity(prm_.q, prm_.q));
    return out;
  }

  double exact_upper_value(int agent, const Eigen::VectorXd&,
                           const Eigen::VectorXd& y) const override {
    double s2 = prm_.sigma_g * prm_.sigma_g;
    return (a_star_ * y - targets_[agent]).squaredNorm() +
           prm_.p * s2 * (y.squaredNorm() + 1.0);
  }

 private:
  SyntheticParams prm_;
  Eigen::MatrixXd a_star_;
  Eigen::VectorXd t_base_;
  std::vector<Eigen::VectorXd> targets_;
  Eigen::MatrixXd gram_eff_;
};

// ---------------------------------------------------------------------------
// policy evaluation

class PolicyEval final : public BilevelProblem {
 public:
  explicit PolicyEval(const PolicyEvalParams& prm) : prm_(prm) {
    if (prm.n < 1 || prm.num_states < 1 || prm.m < 1)
      throw ProblemError("policy_eval: n, num_states, m must be positive");
    if (!(prm.gamma > 0.0 && prm.gamma < 1.0))
      throw ProblemError("policy_eval: gamma must lie in (0, 1)");
    if (prm.reward_noise_std < 0.0)
      throw ProblemError("policy_eval: reward_noise_std must be >= 0");
    const int S = prm.num_states;
    {
      RngStream s = setup_stream(prm.seed, 1);
      feat_.resize(S, prm.m);
      for (int i = 0; i < S; ++i)
        for (int j = 0; j < prm.m; ++j) feat_(i, j) = s.uniform();
    }
    {
      RngStream s = setup_stream(prm.seed, 2);
      trans_.resize(S, S);
      for (int i = 0; i < S; ++i) {
        double sum = 0.0;
        for (int j = 0; j < S; ++j) {
          trans_(i, j) = s.uniform();
          sum += trans_(i, j);
        }
        trans_.row(i) /= sum;
      }
    }
    exp_reward_.resize(prm.n);
    RngStream s = setup_stream(prm.seed, 3);
    for (int a = 0; a < prm.n; ++a) {
      Eigen::VectorXd c(S);
      for (int i = 0; i < S; ++i) {
        double acc = 0.0;
        for (int j = 0; j < S; ++j) acc += trans_(i, j) * s.uniform();
        c(i) = acc;
      }
      exp_reward_[a] = std::move(c);
    }
    pfeat_ = trans_ * feat_;
    row_norm_ = trans_.rowwise().norm();
    j_shared_ = -2.0 * prm.gamma * pfeat_.transpose();
    h_shared_ = 2.0 * Eigen::MatrixXd::Identity(S, S);
  }

  int agents() const override { return prm_.n; }
  int dim_x() const override { return prm_.m; }
  int dim_y() const override { return prm_.num_states; }
  double mu_g() const override { return 2.0; }
  std::string family() const override { return "policy_eval"; }

  OracleSample sample(int agent, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y, RngStream& rng) const override {
    const int S = prm_.num_states;
    // Reward noise is iid per (s, s') pair; after the P-weighted row sum it
    // is exactly N(0, sigma_r^2 ||P_s||^2), so draw that aggregate directly.
    Eigen::VectorXd eta(S);
    for (int i = 0; i < S; ++i)
      eta(i) = prm_.reward_noise_std * row_norm_(i) * rng.normal();
    return assemble(agent, x, y, eta);
  }

  OracleSample exact(int agent, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& y) const override {
    return assemble(agent, x, y, Eigen::VectorXd::Zero(prm_.num_states));
  }

  double exact_upper_value(int, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y) const override {
    return (feat_ * x - y).squaredNorm() / (2.0 * prm_.num_states);
  }

 private:
  OracleSample assemble(int agent, const Eigen::VectorXd& x,
                        const Eigen::VectorXd& y,
                        const Eigen::VectorXd& eta) const {
    const double inv_s = 1.0 / prm_.num_states;
    Eigen::VectorXd resid = feat_ * x - y;
    OracleSample out;
    out.l = inv_s * (feat_.transpose() * resid);
    out.b = -inv_s * resid;
    out.v = 2.0 * (y - exp_reward_[agent] - eta - prm_.gamma * (pfeat_ * x));
    out.j_mat = j_shared_;
    out.h_mat = h_shared_;
    return out;
  }

  PolicyEvalParams prm_;
  Eigen::MatrixXd feat_;     // S x m state features
  Eigen::MatrixXd trans_;    // row-stochastic transitions
  Eigen::MatrixXd pfeat_;    // P * feat
  Eigen::VectorXd row_norm_; // ||P_s||_2, scales aggregated reward noise
  std::vector<Eigen::VectorXd> exp_reward_;
  Eigen::MatrixXd j_shared_;
  Eigen::MatrixXd h_shared_;
};

// ---------------------------------------------------------------------------
// degenerate single level

class SingleLevel final : public BilevelProblem {
 public:
  explicit SingleLevel(const SingleLevelParams& prm) : prm_(prm) {
    if (prm.n < 1 || prm.p < 1 || prm.q < 1)
      throw ProblemError("single_level: n, p, q must be positive");
    if (prm.noise_std < 0.0 || prm.hetero_std < 0.0)
      throw ProblemError("single_level: stds must be >= 0");
    centers_.resize(prm.n);
    RngStream s = setup_stream(prm.seed, 1);
    for (int i = 0; i < prm.n; ++i)
      centers_[i] = draw_matrix(s, prm.p, 1, prm.hetero_std);
  }

  int agents() const override { return prm_.n; }
  int dim_x() const override { return prm_.p; }
  int dim_y() const override { return prm_.q; }
  double mu_g() const override { return 1.0; }
  std::string family() const override { return "single_level"; }

  OracleSample sample(int agent, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y, RngStream& rng) const override {
    OracleSample out = exact(agent, x, y);
    out.l -= prm_.noise_std * draw_matrix(rng, prm_.p, 1, 1.0);
    return out;
  }

  OracleSample exact(int agent, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& y) const override {
    OracleSample out;
    out.l = x - centers_[agent];
    out.b = Eigen::VectorXd::Zero(prm_.q);
    out.v = y;  // g(y) = ||y||^2 / 2
    out.j_mat = Eigen::MatrixXd::Zero(prm_.p, prm_.q);
    out.h_mat = Eigen::MatrixXd::Identity(prm_.q, prm_.q);
    return out;
  }

  double exact_upper_value(int agent, const Eigen::VectorXd& x,
                           const Eigen::VectorXd&) const override {
    return 0.5 * (x - centers_[agent]).squaredNorm() +
           0.5 * prm_.p * prm_.noise_std * prm_.noise_std;
  }

 private:
  SingleLevelParams prm_;
  std::vector<Eigen::VectorXd> centers_;
};

}  // namespace

std::unique_ptr<BilevelProblem> make_synthetic_bilevel(
    const SyntheticParams& params) {
  return std::make_unique<SyntheticBilevel>(params);
}

std::unique_ptr<BilevelProblem> make_policy_eval(
    const PolicyEvalParams& params) {
  return std::make_unique<PolicyEval>(params);
}

std::unique_ptr<BilevelProblem> make_single_level(
    const SingleLevelParams& params) {
  return std::make_unique<SingleLevel>(params);
}

}  // namespace sparkle
