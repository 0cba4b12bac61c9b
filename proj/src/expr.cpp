#include "nisio/expr.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

namespace nisio::expr {

Expr Expr::number(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Number;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::constant(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Constant;
  if (name == "pi") {
    n->value = std::numbers::pi;
  } else if (name == "e") {
    n->value = std::numbers::e;
  } else {
    throw UnknownIdentifier("unknown constant '" + name + "'");
  }
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Variable;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::negate(Expr operand) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Negate;
  n->children.push_back(std::move(operand));
  return Expr(std::move(n));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Binary;
  n->op = op;
  n->children.push_back(std::move(lhs));
  n->children.push_back(std::move(rhs));
  return Expr(std::move(n));
}

Expr Expr::call(Func func, std::vector<Expr> args) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Call;
  n->func = func;
  n->children = std::move(args);
  return Expr(std::move(n));
}

namespace {

struct FuncInfo {
  std::string_view name;
  Func func;
  int arity;
};

constexpr std::array<FuncInfo, 8> kFuncs{{
    {"sin", Func::Sin, 1},
    {"cos", Func::Cos, 1},
    {"exp", Func::Exp, 1},
    {"log", Func::Log, 1},
    {"abs", Func::Abs, 1},
    {"tanh", Func::Tanh, 1},
    {"min", Func::Min, 2},
    {"max", Func::Max, 2},
}};

const FuncInfo* find_func(std::string_view name) {
  for (const auto& f : kFuncs) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::string_view func_name(Func func) {
  for (const auto& f : kFuncs) {
    if (f.func == func) return f.name;
  }
  return "?";
}

bool is_variable_name(std::string_view s) {
  if (s.size() < 2 || (s[0] != 'x' && s[0] != 'v')) return false;
  if (s[1] == '0') return false;
  return std::all_of(s.begin() + 1, s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

double checked(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw EvalError(std::string("non-finite result in ") + what);
  }
  return value;
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return checked(a + b, "addition");
    case Op::Sub: return checked(a - b, "subtraction");
    case Op::Mul: return checked(a * b, "multiplication");
    case Op::Div:
      if (b == 0.0) throw EvalError("division by zero");
      return checked(a / b, "division");
    case Op::Pow: return checked(std::pow(a, b), "power");
  }
  return 0.0;
}

double apply_unary(Func func, double a) {
  switch (func) {
    case Func::Sin: return checked(std::sin(a), "sin");
    case Func::Cos: return checked(std::cos(a), "cos");
    case Func::Exp: return checked(std::exp(a), "exp");
    case Func::Log:
      if (!(a > 0.0)) throw EvalError("log of non-positive value");
      return checked(std::log(a), "log");
    case Func::Abs: return std::abs(a);
    case Func::Tanh: return std::tanh(a);
    default: return 0.0;
  }
}

double apply_pair(Func func, double a, double b) {
  return func == Func::Min ? std::min(a, b) : std::max(a, b);
}

// ---------------------------------------------------------------------------
// Lexer and precedence-climbing parser.

struct Token {
  enum class Type { Number, Ident, Op, LParen, RParen, Comma, End } type;
  std::size_t offset;
  std::string_view text;
  double number = 0.0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return current_; }
  Token take() {
    Token t = current_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' ||
                                  src_[pos_] == '\n' || src_[pos_] == '\r')) {
      ++pos_;
    }
    const std::size_t start = pos_;
    if (pos_ >= src_.size()) {
      current_ = {Token::Type::End, start, {}};
      return;
    }
    const char c = src_[pos_];
    if ((c >= '0' && c <= '9') || c == '.') {
      std::size_t end = pos_;
      while (end < src_.size() && src_[end] >= '0' && src_[end] <= '9') ++end;
      if (end < src_.size() && src_[end] == '.') {
        ++end;
        while (end < src_.size() && src_[end] >= '0' && src_[end] <= '9') ++end;
      }
      if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
        std::size_t exp_end = end + 1;
        if (exp_end < src_.size() && (src_[exp_end] == '+' || src_[exp_end] == '-')) ++exp_end;
        if (exp_end < src_.size() && src_[exp_end] >= '0' && src_[exp_end] <= '9') {
          while (exp_end < src_.size() && src_[exp_end] >= '0' && src_[exp_end] <= '9') ++exp_end;
          end = exp_end;
        }
      }
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + end, value);
      if (ec != std::errc() || ptr != src_.data() + end || !std::isfinite(value)) {
        throw SyntaxError("malformed number", start);
      }
      pos_ = end;
      current_ = {Token::Type::Number, start, src_.substr(start, end - start), value};
      return;
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
      std::size_t end = pos_;
      while (end < src_.size() &&
             ((src_[end] >= 'a' && src_[end] <= 'z') || (src_[end] >= 'A' && src_[end] <= 'Z') ||
              (src_[end] >= '0' && src_[end] <= '9') || src_[end] == '_')) {
        ++end;
      }
      pos_ = end;
      current_ = {Token::Type::Ident, start, src_.substr(start, end - start)};
      return;
    }
    ++pos_;
    switch (c) {
      case '+': case '-': case '*': case '/': case '^':
        current_ = {Token::Type::Op, start, src_.substr(start, 1)};
        return;
      case '(':
        current_ = {Token::Type::LParen, start, src_.substr(start, 1)};
        return;
      case ')':
        current_ = {Token::Type::RParen, start, src_.substr(start, 1)};
        return;
      case ',':
        current_ = {Token::Type::Comma, start, src_.substr(start, 1)};
        return;
      default:
        throw SyntaxError(std::string("unexpected character '") + c + "'", start);
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token current_{Token::Type::End, 0, {}};
};

struct BindingPower {
  int left;
  int right;
  Op op;
};

constexpr int kUnaryPower = 30;

bool infix_power(const Token& t, BindingPower& out) {
  if (t.type != Token::Type::Op) return false;
  switch (t.text[0]) {
    case '+': out = {10, 11, Op::Add}; return true;
    case '-': out = {10, 11, Op::Sub}; return true;
    case '*': out = {20, 21, Op::Mul}; return true;
    case '/': out = {20, 21, Op::Div}; return true;
    case '^': out = {40, 39, Op::Pow}; return true;
  }
  return false;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  Expr parse_all() {
    Expr e = parse_expr(0);
    const Token& t = lex_.peek();
    if (t.type == Token::Type::RParen) throw SyntaxError("unbalanced ')'", t.offset);
    if (t.type != Token::Type::End) throw SyntaxError("unexpected token", t.offset);
    return e;
  }

 private:
  Expr parse_expr(int min_power) {
    Expr lhs = parse_prefix();
    for (;;) {
      BindingPower bp{};
      if (!infix_power(lex_.peek(), bp) || bp.left < min_power) break;
      lex_.take();
      Expr rhs = parse_expr(bp.right);
      lhs = Expr::binary(bp.op, std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Expr parse_prefix() {
    Token t = lex_.take();
    switch (t.type) {
      case Token::Type::Number:
        return Expr::number(t.number);
      case Token::Type::Op:
        if (t.text[0] == '-') return Expr::negate(parse_expr(kUnaryPower));
        throw SyntaxError("unexpected operator '" + std::string(t.text) + "'", t.offset);
      case Token::Type::LParen: {
        Expr inner = parse_expr(0);
        const Token& close = lex_.peek();
        if (close.type != Token::Type::RParen) {
          throw SyntaxError("unbalanced '(' opened", t.offset);
        }
        lex_.take();
        return inner;
      }
      case Token::Type::Ident:
        return parse_identifier(t);
      case Token::Type::End:
        throw SyntaxError("unexpected end of input", t.offset);
      default:
        throw SyntaxError("unexpected token '" + std::string(t.text) + "'", t.offset);
    }
  }

  Expr parse_identifier(const Token& t) {
    if (lex_.peek().type == Token::Type::LParen) {
      const FuncInfo* info = find_func(t.text);
      if (!info) {
        throw UnknownIdentifier("unknown function '" + std::string(t.text) + "' at offset " +
                                std::to_string(t.offset));
      }
      lex_.take();
      std::vector<Expr> args;
      args.push_back(parse_expr(0));
      while (lex_.peek().type == Token::Type::Comma) {
        lex_.take();
        args.push_back(parse_expr(0));
      }
      const Token& close = lex_.peek();
      if (close.type != Token::Type::RParen) {
        throw SyntaxError("unbalanced '(' in call to " + std::string(t.text), close.offset);
      }
      lex_.take();
      if (static_cast<int>(args.size()) != info->arity) {
        throw SyntaxError(std::string(t.text) + " expects " + std::to_string(info->arity) +
                              " argument(s)",
                          t.offset);
      }
      return Expr::call(info->func, std::move(args));
    }
    if (t.text == "pi" || t.text == "e") return Expr::constant(std::string(t.text));
    if (is_variable_name(t.text)) return Expr::variable(std::string(t.text));
    throw UnknownIdentifier("unknown identifier '" + std::string(t.text) + "' at offset " +
                            std::to_string(t.offset));
  }

  Lexer lex_;
};

void print(const Expr& e, std::string& out) {
  const Node& n = e.node();
  switch (n.kind) {
    case Node::Kind::Number: {
      char buf[32];
      const double mag = std::abs(n.value);
      std::snprintf(buf, sizeof buf, "%.17g", mag);
      if (std::signbit(n.value)) {
        out += "(-";
        out += buf;
        out += ')';
      } else {
        out += buf;
      }
      return;
    }
    case Node::Kind::Constant:
    case Node::Kind::Variable:
      out += n.name;
      return;
    case Node::Kind::Negate:
      out += "(-";
      print(n.children[0], out);
      out += ')';
      return;
    case Node::Kind::Binary: {
      static constexpr char kOps[] = {'+', '-', '*', '/', '^'};
      out += '(';
      print(n.children[0], out);
      out += kOps[static_cast<int>(n.op)];
      print(n.children[1], out);
      out += ')';
      return;
    }
    case Node::Kind::Call:
      out += func_name(n.func);
      out += '(';
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) out += ',';
        print(n.children[i], out);
      }
      out += ')';
      return;
  }
}

void collect(const Expr& e, std::set<std::string>& names) {
  const Node& n = e.node();
  if (n.kind == Node::Kind::Variable) names.insert(n.name);
  for (const auto& c : n.children) collect(c, names);
}

}  // namespace

Expr parse(std::string_view source) { return Parser(source).parse_all(); }

double eval(const Expr& expr, const Bindings& bindings) {
  const Node& n = expr.node();
  switch (n.kind) {
    case Node::Kind::Number:
    case Node::Kind::Constant:
      return n.value;
    case Node::Kind::Variable: {
      auto it = bindings.find(n.name);
      if (it == bindings.end()) throw UnboundVariable("unbound variable '" + n.name + "'");
      return checked(it->second, "variable binding");
    }
    case Node::Kind::Negate:
      return -eval(n.children[0], bindings);
    case Node::Kind::Binary: {
      const double a = eval(n.children[0], bindings);
      const double b = eval(n.children[1], bindings);
      return apply_binary(n.op, a, b);
    }
    case Node::Kind::Call: {
      if (n.children.size() == 2) {
        const double a = eval(n.children[0], bindings);
        const double b = eval(n.children[1], bindings);
        return apply_pair(n.func, a, b);
      }
      return apply_unary(n.func, eval(n.children[0], bindings));
    }
  }
  return 0.0;
}

std::string to_string(const Expr& expr) {
  std::string out;
  print(expr, out);
  return out;
}

std::vector<std::string> variables(const Expr& expr) {
  std::set<std::string> names;
  collect(expr, names);
  return {names.begin(), names.end()};
}

// ---------------------------------------------------------------------------

Program::Program(const Expr& expr, std::span<const std::string> slots)
    : source_(to_string(expr)) {
  emit(expr, slots, 0);
}

void Program::emit(const Expr& expr, std::span<const std::string> slots, int depth) {
  const Node& n = expr.node();
  max_depth_ = std::max(max_depth_, depth + 1);
  switch (n.kind) {
    case Node::Kind::Number:
    case Node::Kind::Constant:
      code_.push_back({Code::Push, 0, n.value});
      return;
    case Node::Kind::Variable: {
      auto it = std::find(slots.begin(), slots.end(), n.name);
      if (it == slots.end()) throw UnboundVariable("unbound variable '" + n.name + "'");
      code_.push_back({Code::Load, static_cast<int>(it - slots.begin())});
      constant_ = false;
      return;
    }
    case Node::Kind::Negate:
      emit(n.children[0], slots, depth);
      code_.push_back({Code::Neg});
      return;
    case Node::Kind::Binary:
      emit(n.children[0], slots, depth);
      emit(n.children[1], slots, depth + 1);
      code_.push_back({static_cast<Code>(static_cast<int>(Code::Add) + static_cast<int>(n.op))});
      return;
    case Node::Kind::Call:
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        emit(n.children[i], slots, depth + static_cast<int>(i));
      }
      code_.push_back({static_cast<Code>(static_cast<int>(Code::Sin) + static_cast<int>(n.func))});
      return;
  }
}

double Program::operator()(std::span<const double> slots) const {
  constexpr int kInline = 32;
  std::array<double, kInline> small{};
  std::vector<double> large;
  double* stack = small.data();
  if (max_depth_ > kInline) {
    large.resize(static_cast<std::size_t>(max_depth_));
    stack = large.data();
  }
  int top = -1;
  for (const Instr& in : code_) {
    switch (in.code) {
      case Code::Push: stack[++top] = in.value; break;
      case Code::Load: stack[++top] = checked(slots[static_cast<std::size_t>(in.slot)], "variable binding"); break;
      case Code::Neg: stack[top] = -stack[top]; break;
      case Code::Add: case Code::Sub: case Code::Mul: case Code::Div: case Code::Pow: {
        const double b = stack[top--];
        const auto op = static_cast<Op>(static_cast<int>(in.code) - static_cast<int>(Code::Add));
        stack[top] = apply_binary(op, stack[top], b);
        break;
      }
      case Code::Min: case Code::Max: {
        const double b = stack[top--];
        stack[top] = apply_pair(in.code == Code::Min ? Func::Min : Func::Max, stack[top], b);
        break;
      }
      default: {
        const auto f = static_cast<Func>(static_cast<int>(in.code) - static_cast<int>(Code::Sin));
        stack[top] = apply_unary(f, stack[top]);
        break;
      }
    }
  }
  return stack[0];
}

}  // namespace nisio::expr
