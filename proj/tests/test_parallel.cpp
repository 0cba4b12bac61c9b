#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <vector>

#include "corpus.hpp"
#include "nisio/eigensolver.hpp"
#include "nisio/kernels.hpp"

using namespace nisio;
using namespace nisio::testing;

// The parallel kernels must reproduce the serial reference bit for bit.
class KernelParity : public ::testing::Test {
 protected:
  void SetUp() override { setenv("NISIO_THREADS", "3", 1); }
  void TearDown() override { unsetenv("NISIO_THREADS"); }
};

TEST_F(KernelParity, EnvelopeAndSteps) {
  std::mt19937_64 rng(77);
  for (const auto& p : corpus(4096, 64)) {
    const auto gen = DiscreteGenerator::build(p.spec);
    const std::size_t n = gen.node_count();
    const GridFunction f = random_positive(n, rng);
    for (Sense s : {Sense::Minimize, Sense::Maximize}) {
      std::vector<double> a(n), b(n);
      std::vector<int> pa(n), pb(n);
      kernels::envelope_serial(gen, f, s, a, pa);
      kernels::envelope_parallel(gen, f, s, b, pb);
      EXPECT_EQ(a, b) << p.name;
      EXPECT_EQ(pa, pb) << p.name;
      const double dt = 0.5 * gen.dt_max();
      kernels::euler_step_serial(gen, f, dt, s, a);
      kernels::euler_step_parallel(gen, f, dt, s, b);
      EXPECT_EQ(a, b) << p.name;
    }
    for (std::size_t v = 0; v < gen.control_count(); ++v) {
      std::vector<double> a(n), b(n);
      kernels::linear_step_serial(gen, v, f, 1e-7, a);
      kernels::linear_step_parallel(gen, v, f, 1e-7, b);
      EXPECT_EQ(a, b) << p.name;
    }
  }
}

TEST_F(KernelParity, MatchesApplyRow) {
  std::mt19937_64 rng(78);
  const auto gen = DiscreteGenerator::build(torus_2d(16).spec);
  const GridFunction f = random_positive(gen.node_count(), rng);
  std::vector<double> out(gen.node_count());
  kernels::envelope_serial(gen, f, Sense::Minimize, out);
  EXPECT_EQ(GridFunction(out), apply_G(gen, f));
  for (std::size_t v = 0; v < gen.control_count(); ++v) {
    kernels::linear_step_serial(gen, v, f, 0.0, out);
    EXPECT_EQ(GridFunction(out), f);
  }
}

TEST(Kernels, WorkerCountHonorsEnvironment) {
  setenv("NISIO_THREADS", "2", 1);
  EXPECT_EQ(kernels::worker_count(), 2);
  setenv("NISIO_THREADS", "0", 1);
  EXPECT_GE(kernels::worker_count(), 1);
  unsetenv("NISIO_THREADS");
}

TEST(Kernels, SolveIndependentOfWorkerCount) {
  const auto gen = DiscreteGenerator::build(torus_2d(64).spec);
  EigenOptions o;
  o.tol = 1e-8;
  setenv("NISIO_THREADS", "1", 1);
  const EigenPair one = solve_evolution(gen, o);
  setenv("NISIO_THREADS", "3", 1);
  const EigenPair three = solve_evolution(gen, o);
  unsetenv("NISIO_THREADS");
  EXPECT_EQ(one.rho, three.rho);
  EXPECT_EQ(one.phi, three.phi);
  EXPECT_EQ(one.iterations, three.iterations);
}
