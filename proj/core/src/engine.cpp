#include "sparkle/engine.hpp"

#include <cmath>
#include <thread>

namespace sparkle {

namespace {

void check_schedule(const StepSchedule& s, const char* name) {
  if (!(s.c0 > 0.0) || !(s.c1 > 0.0) || s.c2 < 0.0)
    throw EngineError(std::string("step schedule '") + name +
                      "': need c0 > 0, c1 > 0, c2 >= 0");
}

}  // namespace

Engine::Engine(const BilevelProblem& prob, EngineOptions opt)
    : prob_(prob), opt_(std::move(opt)) {
  const int n = prob.agents();
  const int p = prob.dim_x();
  const int q = prob.dim_y();
  for (const auto* sm : {&opt_.sx, &opt_.sy, &opt_.sz})
    if (sm->w.rows() != n)
      throw EngineError("strategy/topology size does not match agent count");
  check_schedule(opt_.hp.alpha, "alpha");
  check_schedule(opt_.hp.beta, "beta");
  check_schedule(opt_.hp.gamma, "gamma");
  if (!(opt_.hp.theta > 0.0 && opt_.hp.theta <= 1.0))
    throw EngineError("theta must lie in (0, 1]");
  if (opt_.hp.batch_size < 1) throw EngineError("batch_size must be >= 1");
  if (opt_.hp.iterations < 0) throw EngineError("iterations must be >= 0");
  if (opt_.stepper == StepperKind::Recursive)
    for (const auto* sm : {&opt_.sx, &opt_.sy, &opt_.sz})
      if (sm->strategy == Strategy::Custom)
        throw EngineError(
            "custom strategies run on the generic stepper only");

  st_.x = Eigen::MatrixXd::Zero(n, p);
  st_.y = Eigen::MatrixXd::Zero(n, q);
  st_.z = Eigen::MatrixXd::Zero(n, q);
  st_.r = Eigen::MatrixXd::Zero(n, p);
  st_.e_x = Eigen::MatrixXd::Zero(n, p);
  st_.e_y = Eigen::MatrixXd::Zero(n, q);
  st_.e_z = Eigen::MatrixXd::Zero(n, q);
  st_.sh_x = {st_.x, Eigen::MatrixXd::Zero(n, p), {}, 0.0, false};
  st_.sh_y = {st_.y, Eigen::MatrixXd::Zero(n, q), {}, 0.0, false};
  st_.sh_z = {st_.z, Eigen::MatrixXd::Zero(n, q), {}, 0.0, false};
  st_.prev_xbar = Eigen::VectorXd::Zero(p);
  st_.last.vbar = Eigen::VectorXd::Zero(q);
  st_.last.pbar = Eigen::VectorXd::Zero(q);

  w_l_.resize(n, p);
  w_b_.resize(n, q);
  w_v_.resize(n, q);
  w_j_.assign(n, Eigen::MatrixXd::Zero(p, q));
  w_h_.assign(n, Eigen::MatrixXd::Zero(q, q));
  p_dir_.resize(n, q);
  u_.resize(n, p);
}

void Engine::eval_oracles() {
  const int n = prob_.agents();
  auto fill = [this](int i) {
    OracleSample s;
    if (opt_.hp.mode == Mode::Deterministic) {
      s = prob_.exact(i, st_.x.row(i), st_.y.row(i));
    } else {
      RngStream rng = agent_stream(opt_.master_seed, opt_.replicate,
                                   static_cast<std::uint32_t>(i),
                                   static_cast<std::uint64_t>(st_.k));
      s = sample_batch_mean(prob_, i, st_.x.row(i), st_.y.row(i),
                            opt_.hp.batch_size, rng);
    }
    w_l_.row(i) = s.l.transpose();
    w_b_.row(i) = s.b.transpose();
    w_v_.row(i) = s.v.transpose();
    w_j_[i] = std::move(s.j_mat);
    w_h_[i] = std::move(s.h_mat);
  };

  const int threads = std::min(opt_.threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fill(i);
    return;
  }
  // agents are independent and write disjoint rows; results cannot depend on
  // the partition because each agent owns its rng stream
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(threads);
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    int lo = static_cast<int>(static_cast<long>(n) * t / threads);
    int hi = static_cast<int>(static_cast<long>(n) * (t + 1) / threads);
    pool.emplace_back([&fill, &errs, t, lo, hi]() {
      try {
        for (int i = lo; i < hi; ++i) fill(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

void Engine::compute_p_dir() {
  const int n = prob_.agents();
  for (int i = 0; i < n; ++i)
    p_dir_.row(i) =
        (w_h_[i] * st_.z.row(i).transpose() - w_b_.row(i).transpose())
            .transpose();
}

void Engine::guard() const {
  auto check = [this](const char* name, const Eigen::MatrixXd& m) {
    double mx = 0.0;
    bool finite = true;
    for (Eigen::Index i = 0; i < m.size() && finite; ++i) {
      double a = std::abs(m.data()[i]);
      if (!std::isfinite(a)) finite = false;
      mx = std::max(mx, a);
    }
    if (!finite || mx > opt_.divergence_norm)
      throw DivergenceError(st_.k, name,
                            finite ? mx : std::numeric_limits<double>::quiet_NaN());
  };
  check("x", st_.x);
  check("y", st_.y);
  check("z", st_.z);
  check("r", st_.r);
}

void Engine::step() {
  eval_oracles();
  if (opt_.stepper == StepperKind::Generic)
    step_generic();
  else
    step_recursive();
  ++st_.k;
  guard();
}

void Engine::step_generic() {
  const double alpha_k = opt_.hp.alpha.at(st_.k);
  const double beta_k = opt_.hp.beta.at(st_.k);
  const double gamma_k = opt_.hp.gamma.at(st_.k);
  const double theta = opt_.hp.theta;

  // The transformed dual lives in the zero-column-sum subspace; B^2 maps
  // there exactly, but gemm roundoff drifts out of it at eps per step, which
  // adds up over long runs. Projecting the drift out costs one mean.
  auto recenter = [](Eigen::MatrixXd& e) {
    e.rowwise() -= e.colwise().mean();
  };

  // lower level
  Eigen::MatrixXd y_new =
      opt_.sy.c_mat * st_.y - beta_k * (opt_.sy.a_mat * w_v_) - st_.e_y;
  if (opt_.sy.uses_dual) {
    st_.e_y += opt_.sy.b_sq * y_new;
    recenter(st_.e_y);
  }

  // auxiliary level: direction p_i = H_i z_i - b_i at the current z
  compute_p_dir();
  Eigen::MatrixXd z_new =
      opt_.sz.c_mat * st_.z - gamma_k * (opt_.sz.a_mat * p_dir_) - st_.e_z;
  if (opt_.sz.uses_dual) {
    st_.e_z += opt_.sz.b_sq * z_new;
    recenter(st_.e_z);
  }

  // momentum direction; uses the freshly updated z
  for (int i = 0; i < prob_.agents(); ++i)
    u_.row(i) = w_l_.row(i) -
                (w_j_[i] * z_new.row(i).transpose()).transpose();
  st_.r = (1.0 - theta) * st_.r + theta * u_;

  // upper level
  Eigen::MatrixXd x_new =
      opt_.sx.c_mat * st_.x - alpha_k * (opt_.sx.a_mat * st_.r) - st_.e_x;
  if (opt_.sx.uses_dual) {
    st_.e_x += opt_.sx.b_sq * x_new;
    recenter(st_.e_x);
  }

  st_.prev_xbar = st_.x.colwise().mean().transpose();
  st_.x = std::move(x_new);
  st_.y = std::move(y_new);
  st_.z = std::move(z_new);
  st_.last = {alpha_k, beta_k, gamma_k,
              w_v_.colwise().mean().transpose(),
              p_dir_.colwise().mean().transpose()};
}

void Engine::recursive_level(const StrategyMatrices& sm, Eigen::MatrixXd& s,
                             LevelShadow& sh, double eta,
                             const Eigen::MatrixXd& g) {
  Eigen::MatrixXd s_new;
  switch (sm.strategy) {
    case Strategy::Ed:
      s_new = sm.w * (2.0 * s - sh.s_prev - (eta * g - sh.eta_prev * sh.g_prev));
      break;
    case Strategy::Extra:
      s_new = sm.w * (2.0 * s - sh.s_prev) - (eta * g - sh.eta_prev * sh.g_prev);
      break;
    case Strategy::SemiAtcGt:
      // two-step form with leading matrices (2W, W^2) and a W-smoothed
      // gradient difference
      s_new = sm.w * (2.0 * s - (eta * g - sh.eta_prev * sh.g_prev)) -
              sm.c_mat * sh.s_prev;
      break;
    case Strategy::NonAtcGt:
      s_new = 2.0 * (sm.w * s) - sm.c_mat * sh.s_prev -
              (eta * g - sh.eta_prev * sh.g_prev);
      break;
    case Strategy::AtcGt: {
      // tracker sees gradients one iteration late, so only quantities already
      // computed are consumed; first step seeds it with W g^0
      if (!sh.tracker_ready) {
        sh.tracker = sm.w * g;
        sh.tracker_ready = true;
      } else {
        sh.tracker = sm.w * (sh.tracker + g - sh.g_prev);
      }
      s_new = sm.w * (s - eta * sh.tracker);
      break;
    }
    case Strategy::DgdBaseline:
      s_new = sm.w * (s - eta * g);
      break;
    case Strategy::Custom:
      throw EngineError("custom strategies run on the generic stepper only");
  }
  sh.s_prev = s;
  sh.g_prev = g;
  sh.eta_prev = eta;
  s = std::move(s_new);
}

void Engine::step_recursive() {
  const double alpha_k = opt_.hp.alpha.at(st_.k);
  const double beta_k = opt_.hp.beta.at(st_.k);
  const double gamma_k = opt_.hp.gamma.at(st_.k);
  const double theta = opt_.hp.theta;

  recursive_level(opt_.sy, st_.y, st_.sh_y, beta_k, w_v_);

  compute_p_dir();  // still the pre-update z
  recursive_level(opt_.sz, st_.z, st_.sh_z, gamma_k, p_dir_);

  for (int i = 0; i < prob_.agents(); ++i)
    u_.row(i) = w_l_.row(i) -
                (w_j_[i] * st_.z.row(i).transpose()).transpose();
  st_.r = (1.0 - theta) * st_.r + theta * u_;

  st_.prev_xbar = st_.x.colwise().mean().transpose();
  recursive_level(opt_.sx, st_.x, st_.sh_x, alpha_k, st_.r);
  st_.last = {alpha_k, beta_k, gamma_k,
              w_v_.colwise().mean().transpose(),
              p_dir_.colwise().mean().transpose()};
}

void run_engine(Engine& engine, long stride,
                const std::function<void(const SwarmState&)>& on_record) {
  if (stride < 1) throw EngineError("metrics stride must be >= 1");
  const long total = engine.options().hp.iterations;
  if (on_record) on_record(engine.state());
  for (long k = 0; k < total; ++k) {
    engine.step();
    const long done = k + 1;
    if (on_record && (done % stride == 0 || done == total))
      on_record(engine.state());
  }
}

}  // namespace sparkle
