// End-to-end acceptance gate. Ten checks of the full optimizer stack, each
// printing exactly one [PASS]/[FAIL] line; the exit code is the number of
// failures. Tolerances and step sizes are pinned here on purpose: moving one
// is a decision to be reviewed, not a knob.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sparkle/config.hpp"
#include "sparkle/engine.hpp"
#include "sparkle/hypergrad.hpp"
#include "sparkle/metrics.hpp"
#include "sparkle/problems.hpp"
#include "sparkle/rng.hpp"
#include "sparkle/strategy.hpp"
#include "sparkle/topology.hpp"

namespace {

using namespace sparkle;

constexpr double kGradSqTol = 1e-8;        // squared mean-gradient target
constexpr double kConsTol = 1e-10;         // per-level consensus target
constexpr long kMaxIters = 20000;
constexpr double kWallPerRun = 30.0;       // seconds per convergence run
constexpr double kStepperTolTight = 1e-9;  // ed / extra / atc-gt
constexpr double kStepperTolLoose = 1e-8;  // semi- and non-atc-gt
constexpr long kStepperIters = 200;
constexpr double kDegenerateTol = 1e-12;
constexpr double kFdRelTol = 1e-4;
constexpr double kZResidualTol = 1e-10;
constexpr double kMeanIdentityTol = 1e-12;
constexpr double kDualSumTol = 1e-12;
constexpr double kGapRatioLo = 3.2;
constexpr double kGapRatioHi = 4.8;
constexpr double kGapFormulaTol = 1e-10;
// (1 - cos(2 pi / 16)) / (1 - cos(2 pi / 32)); the self weight cancels
constexpr double kGapRatioExact = 3.961570560806458;
constexpr int kVarianceSamples = 4000;
constexpr double kVarianceBand = 0.25;
constexpr double kVarianceWall = 10.0;
constexpr double kDgdFloorFactor = 10.0;
constexpr long kHeteroIters = 8000;
constexpr double kCliWall = 60.0;

std::string strf(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// One named configuration of the three levels. `low` drives both the lower
// and the auxiliary level; the two mixed variants put a tracker on x only.
struct TunedRun {
  const char* name;
  Strategy up;
  Strategy low;
  double alpha;
  double beta_gamma;
};

// Step sizes that reach the convergence bar on the reference instance.
// non-atc-gt keeps stability only while gamma * L stays well under one on
// the ring's most negative mode, hence the smaller pair.
constexpr TunedRun kPure[] = {
    {"ed", Strategy::Ed, Strategy::Ed, 0.01, 1e-3},
    {"extra", Strategy::Extra, Strategy::Extra, 0.01, 1e-3},
    {"atc-gt", Strategy::AtcGt, Strategy::AtcGt, 0.01, 1e-3},
    {"semi-atc-gt", Strategy::SemiAtcGt, Strategy::SemiAtcGt, 0.01, 1e-3},
    {"non-atc-gt", Strategy::NonAtcGt, Strategy::NonAtcGt, 2e-3, 1.5e-4},
};
constexpr TunedRun kMixed[] = {
    {"ed-gt", Strategy::AtcGt, Strategy::Ed, 0.01, 1e-3},
    {"extra-gt", Strategy::AtcGt, Strategy::Extra, 0.01, 1e-3},
};
constexpr TunedRun kCommonStep[] = {
    {"ed", Strategy::Ed, Strategy::Ed, 2e-3, 1.5e-4},
    {"extra", Strategy::Extra, Strategy::Extra, 2e-3, 1.5e-4},
    {"atc-gt", Strategy::AtcGt, Strategy::AtcGt, 2e-3, 1.5e-4},
    {"semi-atc-gt", Strategy::SemiAtcGt, Strategy::SemiAtcGt, 2e-3, 1.5e-4},
    {"non-atc-gt", Strategy::NonAtcGt, Strategy::NonAtcGt, 2e-3, 1.5e-4},
    {"dgd", Strategy::DgdBaseline, Strategy::DgdBaseline, 2e-3, 1.5e-4},
};

// ed and extra want a positive definite mixing matrix; the ring's most
// negative eigenvalue is -1/3, so those two levels run on (I + W)/2 exactly
// as the shipped runner does by default.
bool needs_shift(Strategy s) {
  return s == Strategy::Ed || s == Strategy::Extra;
}

StrategyMatrices level(Strategy s, const MixingMatrix& raw,
                       const MixingMatrix& shifted) {
  return strategy_matrices(s, needs_shift(s) ? shifted : raw);
}

// Running worst case of the mean-dynamics identities, fed by every in-process
// engine run below.
struct IdentityStats {
  double worst_mean = 0.0;  // |new mean - (old mean - step * mean dir)|_inf
  double worst_dual = 0.0;  // |column sums of e_x, e_y, e_z|_inf
  long iterations = 0;
};

void check_identities(const Engine& eng, const Eigen::VectorXd& xb,
                      const Eigen::VectorXd& yb, const Eigen::VectorXd& zb,
                      IdentityStats& ids) {
  const SwarmState& s = eng.state();
  Eigen::VectorXd rbar = s.r.colwise().mean().transpose();
  double dx = (s.x.colwise().mean().transpose() - (xb - s.last.alpha * rbar))
                  .cwiseAbs()
                  .maxCoeff();
  double dy =
      (s.y.colwise().mean().transpose() - (yb - s.last.beta * s.last.vbar))
          .cwiseAbs()
          .maxCoeff();
  double dz =
      (s.z.colwise().mean().transpose() - (zb - s.last.gamma * s.last.pbar))
          .cwiseAbs()
          .maxCoeff();
  ids.worst_mean = std::max({ids.worst_mean, dx, dy, dz});
  double de = std::max({s.e_x.colwise().sum().cwiseAbs().maxCoeff(),
                        s.e_y.colwise().sum().cwiseAbs().maxCoeff(),
                        s.e_z.colwise().sum().cwiseAbs().maxCoeff()});
  ids.worst_dual = std::max(ids.worst_dual, de);
  ++ids.iterations;
}

EngineOptions make_options(const TunedRun& t, const MixingMatrix& raw,
                           const MixingMatrix& shifted, long iters) {
  EngineOptions opt;
  opt.sx = level(t.up, raw, shifted);
  opt.sy = level(t.low, raw, shifted);
  opt.sz = opt.sy;
  opt.hp.alpha = StepSchedule::constant(t.alpha);
  opt.hp.beta = StepSchedule::constant(t.beta_gamma);
  opt.hp.gamma = StepSchedule::constant(t.beta_gamma);
  opt.hp.theta = 1.0;
  opt.hp.iterations = iters;
  opt.hp.mode = Mode::Deterministic;
  return opt;
}

struct ConvResult {
  long hit = -1;  // first measured iteration meeting both targets
  double wall = 0.0;
  MetricsRow final_row;
};

double max_cons(const MetricsRow& r) {
  return std::max({r.cons_x, r.cons_y, r.cons_z});
}

// Deterministic run with metrics every 200 steps; optionally stops at the
// first measurement that meets both convergence targets.
ConvResult run_conv(const BilevelProblem& prob, Measurer& meas,
                    const TunedRun& t, const MixingMatrix& raw,
                    const MixingMatrix& shifted, long iters, bool stop_at_hit,
                    IdentityStats& ids) {
  Engine eng(prob, make_options(t, raw, shifted, iters));
  ConvResult res;
  auto t0 = std::chrono::steady_clock::now();
  for (long k = 1; k <= iters; ++k) {
    Eigen::VectorXd xb = eng.state().x.colwise().mean().transpose();
    Eigen::VectorXd yb = eng.state().y.colwise().mean().transpose();
    Eigen::VectorXd zb = eng.state().z.colwise().mean().transpose();
    eng.step();
    check_identities(eng, xb, yb, zb, ids);
    if (k % 200 == 0 || k == iters) {
      res.final_row = meas.measure(eng.state());
      if (res.hit < 0 && res.final_row.grad_phi_sq <= kGradSqTol &&
          max_cons(res.final_row) <= kConsTol) {
        res.hit = k;
        if (stop_at_hit) break;
      }
    }
  }
  res.wall = seconds_since(t0);
  return res;
}

struct Line {
  bool pass = false;
  std::string text;
};

// criteria 1 and 9: every listed configuration reaches grad^2 <= 1e-8 and
// consensus <= 1e-10 within the iteration and wall budgets
template <int N>
Line check_convergence(const BilevelProblem& prob, Measurer& meas,
                       const MixingMatrix& raw, const MixingMatrix& shifted,
                       const TunedRun (&runs)[N], IdentityStats& ids,
                       const char* what) {
  long worst_hit = 0;
  double worst_wall = 0.0;
  std::string bad;
  for (const TunedRun& t : runs) {
    ConvResult r = run_conv(prob, meas, t, raw, shifted, kMaxIters, true, ids);
    worst_wall = std::max(worst_wall, r.wall);
    if (r.hit < 0) {
      bad += strf(" %s:miss(grad2=%.2e,cons=%.2e)", t.name,
                  r.final_row.grad_phi_sq, max_cons(r.final_row));
    } else {
      worst_hit = std::max(worst_hit, r.hit);
      if (r.wall > kWallPerRun) bad += strf(" %s:slow(%.1fs)", t.name, r.wall);
    }
  }
  Line l;
  l.pass = bad.empty();
  if (l.pass) {
    l.text = strf(
        "%s: all reached grad^2<=%.0e and consensus<=%.0e, "
        "worst hit k=%ld of %ld, worst wall %.1fs",
        what, kGradSqTol, kConsTol, worst_hit, kMaxIters, worst_wall);
  } else {
    l.text = strf("%s:%s", what, bad.c_str());
  }
  return l;
}

Line check_stepper_agreement(const BilevelProblem& prob,
                             const MixingMatrix& raw,
                             const MixingMatrix& shifted, IdentityStats& ids) {
  double worst_tight = 0.0, worst_loose = 0.0;
  for (const TunedRun& t : kPure) {
    Engine gen(prob, make_options(t, raw, shifted, kStepperIters));
    EngineOptions ro = make_options(t, raw, shifted, kStepperIters);
    ro.stepper = StepperKind::Recursive;
    Engine rec(prob, ro);
    double diff = 0.0;
    for (long k = 0; k < kStepperIters; ++k) {
      Eigen::VectorXd xb = gen.state().x.colwise().mean().transpose();
      Eigen::VectorXd yb = gen.state().y.colwise().mean().transpose();
      Eigen::VectorXd zb = gen.state().z.colwise().mean().transpose();
      gen.step();
      check_identities(gen, xb, yb, zb, ids);
      rec.step();
    }
    diff = std::max(
        {(gen.state().x - rec.state().x).cwiseAbs().maxCoeff(),
         (gen.state().y - rec.state().y).cwiseAbs().maxCoeff(),
         (gen.state().z - rec.state().z).cwiseAbs().maxCoeff()});
    bool tight = t.low == Strategy::Ed || t.low == Strategy::Extra ||
                 t.low == Strategy::AtcGt;
    (tight ? worst_tight : worst_loose) =
        std::max(tight ? worst_tight : worst_loose, diff);
  }
  Line l;
  l.pass = worst_tight <= kStepperTolTight && worst_loose <= kStepperTolLoose;
  l.text = strf(
      "dual-free stepper matches the dual form over %ld steps: "
      "max diff %.2e (ed/extra/atc-gt, tol %.0e), %.2e (semi/non, tol %.0e)",
      kStepperIters, worst_tight, kStepperTolTight, worst_loose,
      kStepperTolLoose);
  return l;
}

Line check_single_level_collapse(IdentityStats& ids) {
  auto prob = make_single_level({10, 6, 3, 0.5, 1.0, 2});
  MixingMatrix ring = ring_adjusted(10, 1.0 / 3.0);
  MixingMatrix shifted = half_shift(ring);
  const double alpha = 0.02;
  double worst_yz = 0.0, worst_x = 0.0;
  for (Strategy s : {Strategy::Extra, Strategy::AtcGt}) {
    StrategyMatrices sm =
        strategy_matrices(s, needs_shift(s) ? shifted : ring);
    EngineOptions opt;
    opt.sx = opt.sy = opt.sz = sm;
    opt.hp.alpha = StepSchedule::constant(alpha);
    opt.hp.beta = StepSchedule::constant(0.01);
    opt.hp.gamma = StepSchedule::constant(0.01);
    opt.hp.theta = 1.0;
    opt.hp.iterations = 100;
    opt.hp.batch_size = 2;
    opt.hp.mode = Mode::Stochastic;
    opt.master_seed = 11;
    Engine eng(*prob, opt);

    // plain decentralized gradient run on f alone, same streams, same
    // dual-corrected x recursion
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(10, 6);
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(10, 6);
    Eigen::MatrixXd g(10, 6);
    Eigen::VectorXd y0 = Eigen::VectorXd::Zero(3);
    for (long k = 0; k < 100; ++k) {
      for (int i = 0; i < 10; ++i) {
        RngStream rng = agent_stream(11, 0, static_cast<std::uint32_t>(i),
                                     static_cast<std::uint64_t>(k));
        g.row(i) =
            sample_batch_mean(*prob, i, x.row(i), y0, 2, rng).l.transpose();
      }
      Eigen::MatrixXd x_new = sm.c_mat * x - alpha * (sm.a_mat * g) - e;
      if (sm.uses_dual) e += sm.b_sq * x_new;
      x = std::move(x_new);

      Eigen::VectorXd xb = eng.state().x.colwise().mean().transpose();
      Eigen::VectorXd yb = eng.state().y.colwise().mean().transpose();
      Eigen::VectorXd zb = eng.state().z.colwise().mean().transpose();
      eng.step();
      check_identities(eng, xb, yb, zb, ids);

      worst_yz = std::max({worst_yz, eng.state().y.cwiseAbs().maxCoeff(),
                           eng.state().z.cwiseAbs().maxCoeff()});
      worst_x =
          std::max(worst_x, (eng.state().x - x).cwiseAbs().maxCoeff());
    }
  }
  Line l;
  l.pass = worst_yz == 0.0 && worst_x <= kDegenerateTol;
  l.text = strf(
      "trivial lower level: y and z stay exactly zero (max |.| = %.1e) and "
      "the x trace matches a standalone single-level run to %.2e (tol %.0e)",
      worst_yz, worst_x, kDegenerateTol);
  return l;
}

Line check_hypergradient() {
  struct Fam {
    const char* name;
    std::unique_ptr<BilevelProblem> prob;
  };
  Fam fams[3];
  fams[0] = {"synthetic", make_synthetic_bilevel({6, 4, 3, 0.3, 0.5, 0.05, 7})};
  fams[1] = {"policy_eval", make_policy_eval({4, 5, 4, 0.9, 0.05, 7})};
  fams[2] = {"single_level", make_single_level({5, 4, 2, 0.2, 1.0, 7})};
  double worst_rel = 0.0, worst_zres = 0.0;
  for (int f = 0; f < 3; ++f) {
    const BilevelProblem& prob = *fams[f].prob;
    for (int t = 0; t < 20; ++t) {
      RngStream r(static_cast<std::uint64_t>(4000 + t),
                  static_cast<std::uint64_t>(f), 0, 0);
      Eigen::VectorXd x(prob.dim_x());
      for (int j = 0; j < prob.dim_x(); ++j) x[j] = 1.5 * r.normal();
      ReferenceSolution ref = hypergradient(prob, x);
      Eigen::VectorXd fd = fd_hypergradient(prob, x);
      double rel =
          (ref.grad_phi - fd).norm() / std::max(1e-12, fd.norm());
      worst_rel = std::max(worst_rel, rel);
      worst_zres = std::max(worst_zres, ref.z_residual);
    }
  }
  Line l;
  l.pass = worst_rel <= kFdRelTol && worst_zres <= kZResidualTol;
  l.text = strf(
      "implicit gradient vs central differences, 60 probes over 3 families: "
      "worst rel err %.2e (tol %.0e), worst aux residual %.2e (tol %.0e)",
      worst_rel, kFdRelTol, worst_zres, kZResidualTol);
  return l;
}

Line check_identity_stats(const IdentityStats& ids) {
  Line l;
  l.pass = ids.iterations > 0 && ids.worst_mean <= kMeanIdentityTol &&
           ids.worst_dual <= kDualSumTol;
  l.text = strf(
      "mean dynamics across %ld engine iterations: worst mean-update "
      "violation %.2e (tol %.0e), worst dual column sum %.2e (tol %.0e)",
      ids.iterations, ids.worst_mean, kMeanIdentityTol, ids.worst_dual,
      kDualSumTol);
  return l;
}

Line check_gap_scaling() {
  MixingMatrix r16 = ring_adjusted(16, 1.0 / 3.0);
  MixingMatrix r32 = ring_adjusted(32, 1.0 / 3.0);
  double f16 = 1.0 - ring_adjusted_rho(16, 1.0 / 3.0);
  double f32 = 1.0 - ring_adjusted_rho(32, 1.0 / 3.0);
  double ratio = r16.gap / r32.gap;
  double d16 = std::abs(r16.gap - f16);
  double d32 = std::abs(r32.gap - f32);
  double dr = std::abs(ratio - kGapRatioExact);
  Line l;
  l.pass = ratio >= kGapRatioLo && ratio <= kGapRatioHi &&
           d16 <= kGapFormulaTol && d32 <= kGapFormulaTol &&
           dr <= kGapFormulaTol;
  l.text = strf(
      "ring gap(16)/gap(32) = %.12f in [%.1f, %.1f], circulant formula "
      "deviations %.1e / %.1e, ratio deviation %.1e (tol %.0e)",
      ratio, kGapRatioLo, kGapRatioHi, d16, d32, dr, kGapFormulaTol);
  return l;
}

// variance of the agent-averaged direction under i.i.d. oracle noise at a
// frozen state; doubling the swarm should halve it
Line check_variance_scaling() {
  auto t0 = std::chrono::steady_clock::now();
  const int ns[4] = {1, 4, 16, 64};
  Eigen::VectorXd z(5);
  {
    RngStream zr(123, 0, 0, 0);
    for (int j = 0; j < 5; ++j) z[j] = zr.normal();
  }
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(8);
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(5);
  double var[4] = {0, 0, 0, 0};
  for (int idx = 0; idx < 4; ++idx) {
    const int n = ns[idx];
    auto prob = make_synthetic_bilevel({n, 8, 5, 0.5, 0.0, 0.05, 5});
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(8);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(8);
    for (int s = 0; s < kVarianceSamples; ++s) {
      Eigen::VectorXd rbar = Eigen::VectorXd::Zero(8);
      for (int i = 0; i < n; ++i) {
        RngStream rng = agent_stream(999, 0, static_cast<std::uint32_t>(i),
                                     static_cast<std::uint64_t>(s));
        OracleSample samp = prob->sample(i, x0, y0, rng);
        rbar += samp.l - samp.j_mat * z;
      }
      rbar /= n;
      sum += rbar;
      sq += rbar.cwiseAbs2();
    }
    const double m = kVarianceSamples;
    var[idx] = ((sq - sum.cwiseAbs2() / m) / (m - 1.0)).sum();
  }
  double worst_dev = 0.0;
  for (int idx = 1; idx < 4; ++idx) {
    double ratio = ns[idx] * var[idx] / var[0];
    worst_dev = std::max(worst_dev, std::abs(ratio - 1.0));
  }
  double wall = seconds_since(t0);
  Line l;
  l.pass = worst_dev <= kVarianceBand && wall <= kVarianceWall;
  l.text = strf(
      "direction variance scales as 1/n over n in {1,4,16,64}: worst "
      "deviation of n*var(n)/var(1) from 1 is %.3f (band %.2f), %d samples, "
      "%.1fs",
      worst_dev, kVarianceBand, kVarianceSamples, wall);
  return l;
}

Line check_heterogeneity(const MixingMatrix& raw, const MixingMatrix& shifted,
                         IdentityStats& ids) {
  auto prob = make_synthetic_bilevel({16, 20, 10, 0.0, 2.0, 0.001, 1});
  Measurer meas(*prob);
  double corrected_worst = 0.0;
  double dgd_floor = 0.0;
  for (const TunedRun& t : kCommonStep) {
    ConvResult r =
        run_conv(*prob, meas, t, raw, shifted, kHeteroIters, false, ids);
    double cons = max_cons(r.final_row);
    if (t.up == Strategy::DgdBaseline) {
      dgd_floor = cons;
    } else {
      corrected_worst = std::max(corrected_worst, cons);
    }
  }
  Line l;
  l.pass = corrected_worst <= kConsTol &&
           dgd_floor >= kDgdFloorFactor * corrected_worst && dgd_floor > 0.0;
  l.text = strf(
      "heterogeneous instance, one shared step size: corrected strategies "
      "reach consensus %.2e (tol %.0e) after %ld steps while plain diffusion "
      "stalls at %.2e (>= %.0fx)",
      corrected_worst, kConsTol, kHeteroIters, dgd_floor, kDgdFloorFactor);
  return l;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Line check_cli_reproducibility() {
  namespace fs = std::filesystem;
  Line l;
  ExperimentConfig loaded = load_config(SPARKLE_DEFAULT_CONFIG);
  if (!(loaded == ExperimentConfig{})) {
    l.text = "default config file no longer matches the built-in defaults";
    return l;
  }
  fs::path dir = "acceptance_cli";
  fs::create_directories(dir);
  double walls[2] = {0, 0};
  const int threads[2] = {1, 4};
  for (int i = 0; i < 2; ++i) {
    std::string out = (dir / ("t" + std::to_string(threads[i]))).string();
    std::string cmd = std::string("\"") + SPARKLE_CLI_PATH +
                      "\" run --config \"" + SPARKLE_DEFAULT_CONFIG +
                      "\" --out " + out + " --threads " +
                      std::to_string(threads[i]) + " > " + out + ".log 2>&1";
    auto t0 = std::chrono::steady_clock::now();
    int rc = std::system(cmd.c_str());
    walls[i] = seconds_since(t0);
    if (rc != 0) {
      l.text = strf("cli run with %d threads exited with code %d", threads[i],
                    rc);
      return l;
    }
  }
  std::string a = slurp(dir / "t1_r0.csv");
  std::string b = slurp(dir / "t4_r0.csv");
  bool same = !a.empty() && a == b;
  l.pass = same && walls[0] <= kCliWall && walls[1] <= kCliWall;
  l.text = strf(
      "default cli run: %zu byte csv, byte-identical across 1 and 4 oracle "
      "threads (%s), walls %.1fs / %.1fs (limit %.0fs)",
      a.size(), same ? "yes" : "NO", walls[0], walls[1], kCliWall);
  return l;
}

}  // namespace

int main() {
  Line lines[11];
  IdentityStats ids;

  auto prob = make_synthetic_bilevel({16, 20, 10, 0.0, 0.5, 0.001, 1});
  MixingMatrix ring = ring_adjusted(16, 1.0 / 3.0);
  MixingMatrix shifted = half_shift(ring);
  Measurer meas(*prob);

  auto guard = [](Line& slot, auto&& fn) {
    try {
      slot = fn();
    } catch (const std::exception& e) {
      slot.pass = false;
      slot.text = strf("unexpected exception: %s", e.what());
    }
  };

  guard(lines[1], [&] {
    return check_convergence(*prob, meas, ring, shifted, kPure, ids,
                             "deterministic convergence, 5 strategies");
  });
  guard(lines[2], [&] { return check_stepper_agreement(*prob, ring, shifted, ids); });
  guard(lines[3], [&] { return check_single_level_collapse(ids); });
  guard(lines[4], [&] { return check_hypergradient(); });
  guard(lines[6], [&] { return check_gap_scaling(); });
  guard(lines[7], [&] { return check_variance_scaling(); });
  guard(lines[8], [&] { return check_heterogeneity(ring, shifted, ids); });
  guard(lines[9], [&] {
    return check_convergence(*prob, meas, ring, shifted, kMixed, ids,
                             "mixed-level strategies");
  });
  guard(lines[10], [&] { return check_cli_reproducibility(); });
  // 5 aggregates over every engine iteration the other checks ran
  guard(lines[5], [&] { return check_identity_stats(ids); });

  int fails = 0;
  for (int i = 1; i <= 10; ++i) {
    std::printf("[%s] %2d %s\n", lines[i].pass ? "PASS" : "FAIL", i,
                lines[i].text.c_str());
    if (!lines[i].pass) ++fails;
  }
  std::printf("acceptance: %d/10 passed\n", 10 - fails);
  return fails;
}
