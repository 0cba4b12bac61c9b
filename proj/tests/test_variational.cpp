#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "corpus.hpp"
#include "nisio/eigensolver.hpp"
#include "nisio/variational.hpp"
#include "oracles.hpp"

using namespace nisio;
using namespace nisio::testing;

TEST(Variational, BoundsAtOnes) {
  const auto gen = DiscreteGenerator::build(interval_three_controls(32).spec);
  const SandwichReport r = cw_bounds(gen, GridFunction(gen.node_count(), 1.0));
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < gen.node_count(); ++i) {
    double m = gen.cost(0, i);
    for (std::size_t v = 1; v < gen.control_count(); ++v) m = std::min(m, gen.cost(v, i));
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  EXPECT_EQ(r.lower, lo);
  EXPECT_EQ(r.upper, hi);
}

TEST(Variational, SandwichAndEquality) {
  std::mt19937_64 rng(41);
  const auto gen = DiscreteGenerator::build(torus_two_controls(32).spec);
  const EigenPair p = solve_evolution(gen);
  const SandwichReport at_phi = cw_bounds(gen, p.phi, p.rho);
  EXPECT_LE(at_phi.gap(), 2e-10);
  for (int k = 0; k < 100; ++k) {
    const SandwichReport r = cw_bounds(gen, random_positive(gen.node_count(), rng), p.rho);
    EXPECT_LE(r.lower, p.rho + 1e-8);
    EXPECT_GE(r.upper, p.rho - 1e-8);
  }
  GridFunction bumped = p.phi;
  for (std::size_t i = 0; i < bumped.size(); ++i) bumped[i] *= 1.0 + 0.1 * std::sin(6.0 * i);
  const SandwichReport inside = cw_bounds(gen, bumped, p.rho);
  EXPECT_LT(inside.lower, p.rho);
  EXPECT_GT(inside.upper, p.rho);
}

// Exact for power-of-two factors: every ratio (G cf)/(cf) is computed
// from exactly scaled operands.
TEST(Variational, ScalingExact) {
  std::mt19937_64 rng(42);
  const auto gen = DiscreteGenerator::build(torus_variable_sigma(32).spec);
  const GridFunction f = random_positive(gen.node_count(), rng);
  for (double c : {0.25, 2.0, 1024.0}) {
    GridFunction g = f;
    for (double& v : g) v *= c;
    EXPECT_EQ(cw_bounds(gen, g).lower, cw_bounds(gen, f).lower);
    EXPECT_EQ(cw_bounds(gen, g).upper, cw_bounds(gen, f).upper);
  }
  GridFunction bad = f;
  bad[3] = 0.0;
  EXPECT_THROW(cw_bounds(gen, bad), NonPositiveFunction);
}

TEST(Variational, SearchShrinksUpperBound) {
  const auto gen = DiscreteGenerator::build(torus_cosine(32).spec);
  const EigenPair p = solve_evolution(gen);
  SearchOptions o;
  o.direction = Direction::TightenUpper;
  o.rho = p.rho;
  const auto seq = cw_search(gen, o);
  ASSERT_EQ(seq.size(), 51u);
  EXPECT_GE((seq.front().upper - p.rho) / (seq.back().upper - p.rho), 10.0);
  for (std::size_t k = 1; k < seq.size(); ++k) EXPECT_LE(seq[k].upper, seq[k - 1].upper);

  o.direction = Direction::Both;
  const auto both = cw_search(gen, o);
  for (std::size_t k = 1; k < both.size(); ++k) EXPECT_LE(both[k].gap(), both[k - 1].gap());

  o.start = p.phi.values();
  const auto fixed = cw_search(gen, o);
  EXPECT_LE(fixed.back().gap(), 2e-10);
}

TEST(Variational, DvRateBasics) {
  const auto gen = DiscreteGenerator::build(
      make_problem(Grid::make(Topology::Torus, 1, 32), {{}}, {"1"}, {"0.4*sin(2*pi*x1)"}, "0"));
  const auto pi = dense_stationary(gen);
  EXPECT_LE(dv_rate(gen, pi).rate, 1e-6);
  std::mt19937_64 rng(43);
  for (int k = 0; k < 10; ++k) {
    std::vector<double> nu = random_positive(gen.node_count(), rng, 0.0, 1.0).values();
    double s = 0.0;
    for (double v : nu) s += v;
    for (double& v : nu) v /= s;
    const DvResult r = dv_rate(gen, nu);
    EXPECT_EQ(r.objective_at_zero, 0.0);
    EXPECT_GE(r.rate, 1e-4);
  }
}

// A point mass at node j: the objective is w_-(e^{a} - 1) + w_+(e^{b} - 1) in
// the neighbor increments, with infimum -(w_- + w_+).
TEST(Variational, DvPointMass) {
  const auto gen = DiscreteGenerator::build(
      make_problem(Grid::make(Topology::Torus, 1, 32), {{}}, {"1"}, {"0.3"}, "0"));
  std::vector<double> nu(gen.node_count(), 0.0);
  nu[7] = 1.0;
  const DvResult r = dv_rate(gen, nu);
  EXPECT_NEAR(r.rate, gen.outflow(0, 7), 1e-6 * gen.outflow(0, 7));
}

TEST(Variational, DvCheck) {
  const auto gen = DiscreteGenerator::build(torus_cosine(64).spec);
  const DvCheck c = dv_check(gen);
  EXPECT_LE(c.gap, 1e-3);
  const double ref = dense_principal_eigenvalue(dense_operator(gen, 0));
  EXPECT_NEAR(c.rho, ref, 1e-9);
  std::mt19937_64 rng(44);
  for (int k = 0; k < 5; ++k) {
    std::vector<double> nu = random_positive(gen.node_count(), rng).values();
    double s = 0.0;
    for (double v : nu) s += v;
    for (double& v : nu) v /= s;
    EXPECT_LE(dv_certificate(gen, nu), c.rho + 1e-6);
  }
  const auto zero = DiscreteGenerator::build(
      make_problem(Grid::make(Topology::Interval, 1, 32), {{}}, {"0.8"}, {"0.5*sin(pi*x1)"}, "0"));
  const DvCheck z = dv_check(zero);
  EXPECT_NEAR(z.rho, 0.0, 1e-10);
  EXPECT_LE(z.gap, 1e-6);
  const auto stat = dense_stationary(zero);
  for (std::size_t i = 0; i < stat.size(); ++i) EXPECT_NEAR(z.nu[i], stat[i], 1e-8);
}

TEST(Variational, DvNeedsSingleControl) {
  const auto gen = DiscreteGenerator::build(torus_two_controls(16).spec);
  EXPECT_THROW(dv_check(gen), ValidationError);
}

TEST(Variational, HjiResidual) {
  const auto flat = DiscreteGenerator::build(make_problem(
      Grid::make(Topology::Torus, 1, 32), {{-1.0}, {1.0}}, {"1"}, {"v1"}, "0.8"));
  EXPECT_EQ(hji_residual(flat, solve_evolution(flat)).residual, 0.0);

  double prev = 1e300;
  for (int n : {64, 128, 256}) {
    const auto gen = DiscreteGenerator::build(torus_cosine(n).spec);
    const double r = hji_residual(gen, solve_evolution(gen)).residual;
    EXPECT_LT(r, prev);
    prev = r;
  }
  EigenPair bad = solve_evolution(flat);
  bad.phi[0] = 0.0;
  EXPECT_THROW(hji_residual(flat, bad), NonPositivePhi);
}
