#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "nisio/expr.hpp"

using namespace nisio;
using namespace nisio::expr;

TEST(Expr, Examples) {
  EXPECT_DOUBLE_EQ(eval(parse("2*x1+1"), {{"x1", 3.0}}), 7.0);
  EXPECT_NEAR(eval(parse("cos(2*pi*x1)"), {{"x1", 0.5}}), -1.0, 1e-15);
  EXPECT_DOUBLE_EQ(eval(parse("x1^2"), {{"x1", -2.0}}), 4.0);
  EXPECT_DOUBLE_EQ(eval(parse("min(x1,v1)"), {{"x1", 2.0}, {"v1", 1.0}}), 1.0);
}

TEST(Expr, SyntaxErrorOffset) {
  try {
    parse("2*+x1");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.offset(), 2u);
  }
}

TEST(Expr, Precedence) {
  const Bindings none;
  EXPECT_DOUBLE_EQ(eval(parse("2^3^2"), none), 512.0);
  EXPECT_DOUBLE_EQ(eval(parse("-2^2"), none), -4.0);
  EXPECT_DOUBLE_EQ(eval(parse("1 - 2 - 3"), none), -4.0);
  EXPECT_DOUBLE_EQ(eval(parse("8 / 4 / 2"), none), 1.0);
  EXPECT_DOUBLE_EQ(eval(parse("2 + 3 * 4"), none), 14.0);
  EXPECT_DOUBLE_EQ(eval(parse("(2 + 3) * 4"), none), 20.0);
  EXPECT_DOUBLE_EQ(eval(parse("2^-1"), none), 0.5);
}

TEST(Expr, Errors) {
  EXPECT_THROW(parse("(1 + 2"), SyntaxError);
  EXPECT_THROW(parse("1 + 2)"), SyntaxError);
  EXPECT_THROW(parse(""), SyntaxError);
  EXPECT_THROW(parse("foo(1)"), UnknownIdentifier);
  EXPECT_THROW(parse("y3 + 1"), UnknownIdentifier);
  EXPECT_THROW(eval(parse("log(x1)"), {{"x1", 0.0}}), EvalError);
  EXPECT_THROW(eval(parse("1/x1"), {{"x1", 0.0}}), EvalError);
  EXPECT_THROW(eval(parse("exp(x1)"), {{"x1", 1000.0}}), EvalError);
  EXPECT_THROW(eval(parse("x1 + v2"), {{"x1", 0.0}}), UnboundVariable);
}

TEST(Expr, Variables) {
  const auto vars = variables(parse("x2*v1 + x1 + sin(x2)"));
  EXPECT_EQ(vars, (std::vector<std::string>{"v1", "x1", "x2"}));
}

namespace {

Expr random_tree(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 7);
  std::uniform_real_distribution<double> num(0.1, 3.0);
  switch (pick(rng)) {
    case 0: return Expr::number(std::round(num(rng) * 1000.0) / 1000.0);
    case 1: return Expr::variable(rng() % 2 ? "x1" : "v1");
    case 2: return Expr::constant(rng() % 2 ? "pi" : "e");
    case 3: return Expr::negate(random_tree(rng, depth - 1));
    case 4: return Expr::binary(Op::Add, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    case 5: return Expr::binary(Op::Mul, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    case 6: return Expr::binary(Op::Sub, random_tree(rng, depth - 1), random_tree(rng, depth - 1));
    default: {
      const Func f = rng() % 2 ? Func::Sin : Func::Cos;
      return Expr::call(f, {random_tree(rng, depth - 1)});
    }
  }
}

}  // namespace

TEST(Expr, RoundTripRandomTrees) {
  std::mt19937_64 rng(11);
  const Bindings at{{"x1", 0.37}, {"v1", -1.25}};
  for (int k = 0; k < 1000; ++k) {
    const Expr e = random_tree(rng, 5);
    const std::string text = to_string(e);
    const Expr back = parse(text);
    EXPECT_EQ(eval(back, at), eval(e, at)) << text;
    EXPECT_EQ(to_string(back), text);
  }
}

TEST(Expr, ProgramMatchesEval) {
  std::mt19937_64 rng(5);
  const std::vector<std::string> slots{"x1", "v1"};
  for (int k = 0; k < 200; ++k) {
    const Expr e = random_tree(rng, 4);
    const Program p(e, slots);
    const double vals[2] = {0.81, 0.5};
    EXPECT_EQ(p(vals), eval(e, {{"x1", 0.81}, {"v1", 0.5}}));
  }
}

// Single-character mutations of valid inputs must either parse or raise a
// library error; nothing else escapes.
TEST(Expr, MutatedInputsFailCleanly) {
  const std::vector<std::string> seeds{"cos(2*pi*x1) + 0.5", "v1*(1 - x1)", "min(x1, v1)^2",
                                       "exp(-x1^2)/(1 + abs(v1))"};
  const std::string alphabet = "()+-*/^,.0123456789xvpie ";
  std::mt19937_64 rng(99);
  for (const auto& s : seeds) {
    for (int k = 0; k < 250; ++k) {
      std::string m = s;
      const std::size_t pos = rng() % m.size();
      switch (rng() % 3) {
        case 0: m[pos] = alphabet[rng() % alphabet.size()]; break;
        case 1: m.erase(pos, 1); break;
        default: m.insert(pos, 1, alphabet[rng() % alphabet.size()]); break;
      }
      try {
        const Expr e = parse(m);
        (void)to_string(e);
      } catch (const Error&) {
      }
    }
  }
}
