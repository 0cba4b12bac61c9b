#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "corpus.hpp"
#include "nisio/generator.hpp"
#include "oracles.hpp"

using namespace nisio;
using namespace nisio::testing;

TEST(Generator, LaplacianStencil) {
  const auto gen = DiscreteGenerator::build(
      make_problem(Grid::make(Topology::Torus, 1, 64), {{}}, {"1"}, {"0"}, "0"));
  const double h = 1.0 / 64;
  for (std::size_t i = 0; i < gen.node_count(); ++i) {
    EXPECT_DOUBLE_EQ(gen.weight(0, i, 0), 0.5 / (h * h));
    EXPECT_DOUBLE_EQ(gen.weight(0, i, 1), 0.5 / (h * h));
    EXPECT_DOUBLE_EQ(gen.outflow(0, i), 1.0 / (h * h));
  }
  const GridFunction c(gen.node_count(), 3.7);
  for (double v : apply_linear(gen, 0, c)) EXPECT_EQ(v, 0.0);
}

TEST(Generator, SecondOrderLaplacian) {
  double prev = 0.0;
  for (int n : {32, 64, 128}) {
    const auto gen = DiscreteGenerator::build(
        make_problem(Grid::make(Topology::Torus, 1, n), {{}}, {"1"}, {"0"}, "0"));
    const GridFunction f = sample(gen.grid(), "cos(2*pi*x1)");
    const GridFunction lf = apply_linear(gen, 0, f);
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      err = std::max(err, std::abs(lf[i] + 2 * M_PI * M_PI * f[i]));
    }
    if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.1);
    prev = err;
  }
}

TEST(Generator, IntervalNeumann) {
  const auto gen = DiscreteGenerator::build(
      make_problem(Grid::make(Topology::Interval, 1, 129), {{}}, {"1"}, {"0"}, "0"));
  const GridFunction f = sample(gen.grid(), "cos(pi*x1)");
  const GridFunction lf = apply_linear(gen, 0, f);
  // leading truncation term of the 3-point stencil: (1/2) (h^2/12) max |f^(4)|
  const double h = gen.grid().h;
  const double bound = 1.01 * 0.5 * h * h / 12.0 * std::pow(M_PI, 4);
  for (std::size_t i = 0; i < f.size(); ++i) {
    EXPECT_NEAR(lf[i], -0.5 * M_PI * M_PI * f[i], bound);
  }
}

TEST(Generator, UpwindDrift) {
  const auto gen = DiscreteGenerator::build(
      make_problem(Grid::make(Topology::Interval, 1, 65), {{-1.0}, {1.0}}, {"0.0001"}, {"v1"}, "0"));
  const GridFunction f = sample(gen.grid(), "x1");
  const GridFunction plus = apply_linear(gen, 1, f);
  const GridFunction g = apply_G(gen, f);
  for (std::size_t i = 1; i + 1 < f.size(); ++i) {
    EXPECT_NEAR(plus[i], 1.0, 1e-9);
    EXPECT_NEAR(g[i], -1.0, 1e-9);
  }
}

TEST(Generator, ConstantFunctionGivesCost) {
  const auto gen = DiscreteGenerator::build(interval_three_controls(64).spec);
  const GridFunction one(gen.node_count(), 1.0);
  const GridFunction g = apply_G(gen, one);
  for (std::size_t v = 0; v < gen.control_count(); ++v) {
    const GridFunction lv = apply_linear(gen, v, one);
    for (std::size_t i = 0; i < one.size(); ++i) EXPECT_EQ(lv[i], gen.cost(v, i));
  }
  for (std::size_t i = 0; i < one.size(); ++i) {
    double m = gen.cost(0, i);
    for (std::size_t v = 1; v < gen.control_count(); ++v) m = std::min(m, gen.cost(v, i));
    EXPECT_EQ(g[i], m);
  }
}

TEST(Generator, PolicyTiesAndDominance) {
  const auto single = DiscreteGenerator::build(torus_cosine(32).spec);
  const GridFunction one(single.node_count(), 1.0);
  for (int p : argmin_policy(single, one)) EXPECT_EQ(p, 0);
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(apply_G(single, one)[i], apply_linear(single, 0, one)[i]);
  }
  const auto squared = DiscreteGenerator::build(
      make_problem(Grid::make(Topology::Torus, 1, 32), {{0.0}, {1.0}}, {"1"}, {"0.3"}, "v1^2"));
  for (int p : argmin_policy(squared, one)) EXPECT_EQ(p, 0);
  const auto tied = DiscreteGenerator::build(
      make_problem(Grid::make(Topology::Torus, 1, 32), {{1.0}, {1.0}}, {"1"}, {"v1"}, "1"));
  for (int p : argmin_policy(tied, one)) EXPECT_EQ(p, 0);
}

TEST(Generator, PolicySelfConsistency) {
  std::mt19937_64 rng(17);
  for (const auto& p : corpus(32, 16)) {
    const auto gen = DiscreteGenerator::build(p.spec);
    const GridFunction f = random_positive(gen.node_count(), rng);
    const auto pol = argmin_policy(gen, f);
    EXPECT_EQ(apply_policy(gen, pol, f), apply_G(gen, f)) << p.name;
  }
}

// Metzler structure, envelope and positive homogeneity of G on the corpus.
TEST(Generator, StructuralProperties) {
  std::mt19937_64 rng(23);
  for (const auto& p : corpus(32, 16)) {
    const auto gen = DiscreteGenerator::build(p.spec);
    for (std::size_t v = 0; v < gen.control_count(); ++v)
      for (std::size_t i = 0; i < gen.node_count(); ++i)
        for (std::size_t k = 0; k < gen.stencil_width(); ++k) EXPECT_GE(gen.weight(v, i, k), 0.0);
    const GridFunction f = random_positive(gen.node_count(), rng);
    const GridFunction g = apply_G(gen, f);
    for (std::size_t v = 0; v < gen.control_count(); ++v) {
      const GridFunction lv = apply_linear(gen, v, f);
      for (std::size_t i = 0; i < f.size(); ++i) EXPECT_LE(g[i], lv[i]);
    }
    GridFunction f4 = f;
    for (double& x : f4) x *= 4.0;
    const GridFunction g4 = apply_G(gen, f4);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_EQ(g4[i], 4.0 * g[i]);
  }
}

TEST(Generator, MatchesDenseOperator) {
  std::mt19937_64 rng(4);
  const auto gen = DiscreteGenerator::build(torus_2d(8).spec);
  const GridFunction f = random_positive(gen.node_count(), rng);
  for (std::size_t v = 0; v < gen.control_count(); ++v) {
    const Eigen::MatrixXd a = dense_operator(gen, v);
    const Eigen::VectorXd y = a * Eigen::Map<const Eigen::VectorXd>(f.values().data(), f.size());
    const GridFunction lv = apply_linear(gen, v, f);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(lv[i], y(static_cast<Eigen::Index>(i)), 1e-9);
  }
}

TEST(Generator, Errors) {
  EXPECT_THROW(Grid::make(Topology::Torus, 1, 4), ValidationError);
  EXPECT_THROW(Grid::make(Topology::Interval, 2, 16), ValidationError);
  EXPECT_THROW(DiscreteGenerator::build(make_problem(Grid::make(Topology::Torus, 1, 16), {{}},
                                                     {"0"}, {"0"}, "1")),
               DegenerateDiffusion);
  EXPECT_THROW(DiscreteGenerator::build(make_problem(Grid::make(Topology::Torus, 2, 16), {{}},
                                                     {"1", "0.5", "1", "0.1"}, {"0", "0"}, "1")),
               NonMonotoneStencil);
  EXPECT_THROW(DiscreteGenerator::build(make_problem(Grid::make(Topology::Interval, 1, 16), {{}},
                                                     {"1"}, {"0"}, "log(x1)")),
               NonFiniteCoefficient);
  const auto gen = DiscreteGenerator::build(torus_cosine(16).spec);
  const GridFunction f(16, 1.0);
  EXPECT_THROW(apply_linear(gen, 1, f), IndexOutOfRange);
  EXPECT_THROW(apply_G(gen, GridFunction(15, 1.0)), IndexOutOfRange);
}
