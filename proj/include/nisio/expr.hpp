#pragma once

// Arithmetic expressions for coefficient definitions.
//
// Grammar (highest precedence first):
//   primary  := number | constant | variable | func '(' args ')' | '(' expr ')'
//   power    := primary '^' unary          (right associative)
//   unary    := '-' unary | power
//   product  := unary (('*' | '/') unary)*
//   sum      := product (('+' | '-') product)*
// constants: pi, e    variables: x1..xd, v1..vm
// functions: sin cos exp log abs tanh (one argument), min max (two)

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nisio/error.hpp"

namespace nisio::expr {

enum class Op { Add, Sub, Mul, Div, Pow };
enum class Func { Sin, Cos, Exp, Log, Abs, Tanh, Min, Max };

struct Node;

/// Immutable expression tree. Copies share structure; safe to evaluate from
/// several threads at once.
class Expr {
 public:
  Expr() = default;

  static Expr number(double value);
  static Expr constant(std::string name);  // "pi" or "e"
  static Expr variable(std::string name);
  static Expr negate(Expr operand);
  static Expr binary(Op op, Expr lhs, Expr rhs);
  static Expr call(Func func, std::vector<Expr> args);

  const Node& node() const { return *node_; }
  bool empty() const { return !node_; }

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Node {
  enum class Kind { Number, Constant, Variable, Negate, Binary, Call };
  Kind kind;
  double value = 0.0;  // Number and Constant
  std::string name;    // Constant and Variable
  Op op = Op::Add;
  Func func = Func::Sin;
  std::vector<Expr> children;
};

using Bindings = std::map<std::string, double, std::less<>>;

Expr parse(std::string_view source);

/// Evaluates with IEEE doubles; a domain violation or any non-finite
/// intermediate raises EvalError.
double eval(const Expr& expr, const Bindings& bindings);

/// Fully parenthesized text that parses back to an identically evaluating tree.
std::string to_string(const Expr& expr);

/// Sorted, deduplicated variable names.
std::vector<std::string> variables(const Expr& expr);

/// Flat stack-machine form of an expression with variables resolved to slot
/// indices, for the simulation hot path. Evaluation order matches `eval`
/// exactly, so results are bit-identical.
class Program {
 public:
  Program() = default;
  Program(const Expr& expr, std::span<const std::string> slots);

  double operator()(std::span<const double> slots) const;
  bool is_constant() const { return constant_; }
  const std::string& source() const { return source_; }

 private:
  enum class Code : unsigned char {
    Push, Load, Neg, Add, Sub, Mul, Div, Pow,
    Sin, Cos, Exp, Log, Abs, Tanh, Min, Max
  };
  struct Instr {
    Code code;
    int slot = 0;
    double value = 0.0;
  };
  void emit(const Expr& expr, std::span<const std::string> slots, int depth);

  std::vector<Instr> code_;
  int max_depth_ = 0;
  bool constant_ = true;
  std::string source_;
};

}  // namespace nisio::expr
