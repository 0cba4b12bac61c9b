// Serial vs node-parallel envelope/Euler kernels on the 2-D three-control
// torus, and a short Monte Carlo batch. Set NISIO_THREADS to vary the
// parallel worker count.

#include <benchmark/benchmark.h>

#include <vector>

#include "nisio/generator.hpp"
#include "nisio/kernels.hpp"
#include "nisio/mc_sim.hpp"

namespace {

using namespace nisio;

ProblemSpec torus_2d(int n) {
  return make_problem(Grid::make(Topology::Torus, 2, n), {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}},
                      {"1", "0", "0", "1"}, {"v1", "v2"},
                      "cos(2*pi*x1) + 0.5*cos(2*pi*x2) + 0.3*v1*sin(2*pi*x2) + 1");
}

template <bool Parallel>
void BM_EulerStep(benchmark::State& state) {
  const auto gen = DiscreteGenerator::build(torus_2d(static_cast<int>(state.range(0))));
  const std::size_t n = gen.node_count();
  std::vector<double> f(n, 1.0), out(n);
  for (std::size_t i = 0; i < n; ++i) f[i] += 0.1 * static_cast<double>(i % 7);
  const double dt = 0.5 * gen.dt_max();
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::euler_step_parallel(gen, f, dt, Sense::Minimize, out);
    } else {
      kernels::euler_step_serial(gen, f, dt, Sense::Minimize, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

template <bool Parallel>
void BM_Envelope(benchmark::State& state) {
  const auto gen = DiscreteGenerator::build(torus_2d(static_cast<int>(state.range(0))));
  const std::size_t n = gen.node_count();
  std::vector<double> f(n, 1.0), out(n);
  std::vector<int> policy(n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::envelope_parallel(gen, f, Sense::Minimize, out, policy);
    } else {
      kernels::envelope_serial(gen, f, Sense::Minimize, out, policy);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

void BM_MonteCarlo(benchmark::State& state) {
  const ProblemSpec spec = make_problem(Grid::make(Topology::Torus, 1, 64), {{-1.0}, {1.0}},
                                        {"1"}, {"v1"}, "cos(2*pi*x1) + 0.25*v1*sin(2*pi*x1) + 1");
  McConfig cfg;
  cfg.T = 1.0;
  cfg.dt_sim = 1e-3;
  cfg.N = static_cast<std::size_t>(state.range(0));
  cfg.x0 = {0.5};
  cfg.policy = constant_policy(spec.grid, 0);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_cost(spec, cfg).value);
  state.SetItemsProcessed(state.iterations() * state.range(0) * 1000);
}

}  // namespace

BENCHMARK_TEMPLATE(BM_EulerStep, false)->Arg(64)->Arg(256);
BENCHMARK_TEMPLATE(BM_EulerStep, true)->Arg(64)->Arg(256);
BENCHMARK_TEMPLATE(BM_Envelope, false)->Arg(64)->Arg(256);
BENCHMARK_TEMPLATE(BM_Envelope, true)->Arg(64)->Arg(256);
BENCHMARK(BM_MonteCarlo)->Arg(1000);

BENCHMARK_MAIN();
