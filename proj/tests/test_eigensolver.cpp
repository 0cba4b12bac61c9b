#include <gtest/gtest.h>

#include <cmath>

#include "corpus.hpp"
#include "nisio/eigensolver.hpp"
#include "nisio/matrix_cw.hpp"
#include "oracles.hpp"

using namespace nisio;
using namespace nisio::testing;

namespace {

double frozen_rho(const DiscreteGenerator& gen, int v) {
  const std::vector<int> pol(gen.node_count(), v);
  const double c = gen.perron_shift();
  return cw::perron(gen.shifted_matrix(pol, c), 1e-14, 10000000).lambda - c;
}

}  // namespace

TEST(Eigensolver, ConstantCost) {
  const auto gen = DiscreteGenerator::build(make_problem(
      Grid::make(Topology::Interval, 1, 32), {{-1.0}, {0.0}, {1.0}}, {"0.7"}, {"v1*(1 - x1)"}, "2.5"));
  for (const EigenPair& p : {solve_evolution(gen), solve_policy_iteration(gen), solve_max(gen)}) {
    EXPECT_NEAR(p.rho, 2.5, 1e-10) << p.method;
    for (double v : p.phi) EXPECT_NEAR(v, 1.0, 1e-10);
  }
  EXPECT_EQ(solve_policy_iteration(gen).iterations, 1u);
}

TEST(Eigensolver, DenseOracle) {
  const auto gen = DiscreteGenerator::build(
      make_problem(Grid::make(Topology::Torus, 1, 128), {{}}, {"1"}, {"0"}, "cos(2*pi*x1)"));
  const double ref = dense_principal_eigenvalue(dense_operator(gen, 0));
  EXPECT_NEAR(solve_evolution(gen).rho / ref, 1.0, 1e-6);
}

TEST(Eigensolver, Invariants) {
  for (const auto& p : corpus(32, 12)) {
    const auto gen = DiscreteGenerator::build(p.spec);
    EigenOptions o;
    o.tol = 1e-10;
    const EigenPair ev = solve_evolution(gen, o);
    const EigenPair pi = solve_policy_iteration(gen, o);
    EXPECT_NEAR(ev.rho, pi.rho, 1e-6 * std::abs(ev.rho)) << p.name;
    EXPECT_TRUE(ev.phi.strictly_positive()) << p.name;
    EXPECT_DOUBLE_EQ(ev.phi.sup_norm(), 1.0) << p.name;
    EXPECT_LE(ev.residual, 1e-9) << p.name;
    EXPECT_LE(ev.lower, ev.rho);
    EXPECT_GE(ev.upper, ev.rho);
    // f = 1 in the Collatz-Wielandt functional
    const GridFunction g1 = apply_G(gen, GridFunction(gen.node_count(), 1.0));
    EXPECT_LE(g1.min(), ev.rho + 1e-12) << p.name;
    EXPECT_GE(g1.max(), ev.rho - 1e-12) << p.name;
    // envelope against each frozen control
    for (std::size_t v = 0; v < gen.control_count(); ++v) {
      EXPECT_LE(ev.rho, frozen_rho(gen, static_cast<int>(v)) + 1e-8) << p.name;
    }
    const EigenPair mx = solve_max(gen, o);
    EXPECT_GE(mx.rho, ev.rho - 1e-10) << p.name;
    if (p.single_control) {
      EXPECT_NEAR(mx.rho, ev.rho, 1e-10) << p.name;
      EXPECT_LE(pi.iterations, 2u) << p.name;
    }
  }
}

TEST(Eigensolver, SingleControlPolicyIterationMatches) {
  const auto gen = DiscreteGenerator::build(interval_uncontrolled(48).spec);
  EXPECT_NEAR(solve_policy_iteration(gen).rho, solve_evolution(gen).rho, 1e-8);
}

TEST(Eigensolver, RefinementCauchy) {
  double prev_rho = 0.0, prev_diff = 1e300;
  for (int n : {16, 32, 64, 128}) {
    const double rho = solve_policy_iteration(DiscreteGenerator::build(torus_two_controls(n).spec)).rho;
    if (n > 16) {
      const double diff = std::abs(rho - prev_rho);
      EXPECT_LT(diff, prev_diff);
      prev_diff = diff;
    }
    prev_rho = rho;
  }
}

TEST(Eigensolver, WarmStart) {
  const auto gen = DiscreteGenerator::build(torus_variable_sigma(32).spec);
  const EigenPair cold = solve_evolution(gen);
  EigenOptions o;
  o.start = cold.phi.values();
  const EigenPair warm = solve_evolution(gen, o);
  EXPECT_NEAR(warm.rho, cold.rho, 1e-10);
  EXPECT_LT(warm.iterations, cold.iterations);
  o.start.assign(gen.node_count(), -1.0);
  EXPECT_THROW(solve_evolution(gen, o), Error);
}
