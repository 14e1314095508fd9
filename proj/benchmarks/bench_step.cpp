#include <benchmark/benchmark.h>

#include "sparkle/engine.hpp"
#include "sparkle/hypergrad.hpp"
#include "sparkle/problems.hpp"
#include "sparkle/rng.hpp"
#include "sparkle/strategy.hpp"
#include "sparkle/topology.hpp"

namespace {

using namespace sparkle;

EngineOptions make_options(Strategy s, const MixingMatrix& mix,
                           StepperKind kind, int batch) {
  EngineOptions opt;
  opt.sx = strategy_matrices(s, mix);
  opt.sy = opt.sx;
  opt.sz = opt.sx;
  opt.hp.alpha = StepSchedule::constant(1e-3);
  opt.hp.beta = StepSchedule::constant(1e-3);
  opt.hp.gamma = StepSchedule::constant(1e-3);
  opt.hp.theta = 0.5;
  opt.hp.batch_size = batch;
  opt.master_seed = 7;
  opt.stepper = kind;
  return opt;
}

void bench_step(benchmark::State& state, Strategy s, StepperKind kind) {
  const int n = static_cast<int>(state.range(0));
  auto prob = make_synthetic_bilevel({n, 20, 10, 0.001, 0.5, 0.001, 1});
  MixingMatrix mix = half_shift(ring_adjusted(n, 1.0 / 3.0));
  Engine eng(*prob, make_options(s, mix, kind, 1));
  for (auto _ : state) {
    eng.step();
    benchmark::DoNotOptimize(eng.state().x.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void bench_oracle_batch(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  auto prob = make_synthetic_bilevel({4, 20, 10, 0.001, 0.5, 0.001, 1});
  Eigen::VectorXd x = Eigen::VectorXd::Ones(20);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(10);
  std::uint64_t k = 0;
  for (auto _ : state) {
    RngStream rng = agent_stream(7, 0, 0, k++);
    OracleSample s = sample_batch_mean(*prob, 0, x, y, batch, rng);
    benchmark::DoNotOptimize(s.l.data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}

void bench_hypergradient(benchmark::State& state) {
  auto prob = make_synthetic_bilevel({10, 20, 10, 0.001, 0.5, 0.001, 1});
  Eigen::VectorXd x = Eigen::VectorXd::Ones(20);
  for (auto _ : state) {
    ReferenceSolution ref = hypergradient(*prob, x);
    benchmark::DoNotOptimize(ref.grad_phi.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(bench_step, extra_generic, Strategy::Extra,
                  StepperKind::Generic)
    ->Arg(10)
    ->Arg(50);
BENCHMARK_CAPTURE(bench_step, extra_recursive, Strategy::Extra,
                  StepperKind::Recursive)
    ->Arg(10)
    ->Arg(50);
BENCHMARK_CAPTURE(bench_step, atc_gt_generic, Strategy::AtcGt,
                  StepperKind::Generic)
    ->Arg(10)
    ->Arg(50);
BENCHMARK_CAPTURE(bench_step, atc_gt_recursive, Strategy::AtcGt,
                  StepperKind::Recursive)
    ->Arg(10)
    ->Arg(50);
BENCHMARK(bench_oracle_batch)->Arg(1)->Arg(10)->Arg(100);
BENCHMARK(bench_hypergradient);

BENCHMARK_MAIN();
