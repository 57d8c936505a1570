#pragma once

// Scalar coefficient expressions: a small recursive-descent parser and a
// pure tree evaluator. Grammar, loosest binding first:
//
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          (right associative)
//   primary := number | variable | 'pi' | func '(' sum (',' sum)* ')' | '(' sum ')'
//
// Variables are x, t and xi (the latter only for user-defined kernels).
// Functions: sin cos exp log abs sqrt (one argument), min max (two).

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "varexp/error.hpp"

namespace varexp::expr {

enum class Variable { kX, kT, kXi };

struct Bindings {
  std::optional<double> x;
  std::optional<double> t;
  std::optional<double> xi;
};

namespace detail {

enum class Kind { kNumber, kVariable, kNegate, kBinary, kCall };
enum class Func { kSin, kCos, kExp, kLog, kAbs, kSqrt, kMin, kMax };

struct Node {
  Kind kind = Kind::kNumber;
  double number = 0.0;
  Variable variable = Variable::kX;
  char op = 0;
  Func func = Func::kSin;
  std::vector<std::shared_ptr<const Node>> args;
};

using NodePtr = std::shared_ptr<const Node>;

inline const char* func_name(Func f) {
  switch (f) {
    case Func::kSin: return "sin";
    case Func::kCos: return "cos";
    case Func::kExp: return "exp";
    case Func::kLog: return "log";
    case Func::kAbs: return "abs";
    case Func::kSqrt: return "sqrt";
    case Func::kMin: return "min";
    case Func::kMax: return "max";
  }
  return "?";
}

inline const char* variable_name(Variable v) {
  switch (v) {
    case Variable::kX: return "x";
    case Variable::kT: return "t";
    case Variable::kXi: return "xi";
  }
  return "?";
}

inline double checked(double value, const char* what) {
  if (!std::isfinite(value)) throw DomainError(std::string("non-finite result in ") + what);
  return value;
}

inline double power(double base, double exponent) {
  if (base < 0.0 && std::floor(exponent) != exponent) {
    throw DomainError("negative base raised to a non-integer power");
  }
  if (base == 0.0 && exponent < 0.0) throw DomainError("zero raised to a negative power");
  return checked(std::pow(base, exponent), "^");
}

inline double evaluate(const Node& node, const Bindings& b) {
  switch (node.kind) {
    case Kind::kNumber:
      return node.number;
    case Kind::kVariable: {
      const std::optional<double>* slot = nullptr;
      switch (node.variable) {
        case Variable::kX: slot = &b.x; break;
        case Variable::kT: slot = &b.t; break;
        case Variable::kXi: slot = &b.xi; break;
      }
      if (!slot->has_value()) {
        throw PreconditionError(std::string("unbound variable '") + variable_name(node.variable) + "'");
      }
      return **slot;
    }
    case Kind::kNegate:
      return -evaluate(*node.args[0], b);
    case Kind::kBinary: {
      const double lhs = evaluate(*node.args[0], b);
      const double rhs = evaluate(*node.args[1], b);
      switch (node.op) {
        case '+': return checked(lhs + rhs, "+");
        case '-': return checked(lhs - rhs, "-");
        case '*': return checked(lhs * rhs, "*");
        case '/':
          if (rhs == 0.0) throw DomainError("division by zero");
          return checked(lhs / rhs, "/");
        case '^': return power(lhs, rhs);
      }
      break;
    }
    case Kind::kCall: {
      const double a0 = evaluate(*node.args[0], b);
      switch (node.func) {
        case Func::kSin: return checked(std::sin(a0), "sin");
        case Func::kCos: return checked(std::cos(a0), "cos");
        case Func::kExp: return checked(std::exp(a0), "exp");
        case Func::kLog:
          if (a0 <= 0.0) throw DomainError("log of a nonpositive value");
          return std::log(a0);
        case Func::kAbs: return std::fabs(a0);
        case Func::kSqrt:
          if (a0 < 0.0) throw DomainError("sqrt of a negative value");
          return std::sqrt(a0);
        case Func::kMin: return std::fmin(a0, evaluate(*node.args[1], b));
        case Func::kMax: return std::fmax(a0, evaluate(*node.args[1], b));
      }
      break;
    }
  }
  throw DomainError("malformed expression tree");
}

inline void print(const Node& node, std::string& out) {
  switch (node.kind) {
    case Kind::kNumber: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", node.number);
      out += buf;
      return;
    }
    case Kind::kVariable:
      out += variable_name(node.variable);
      return;
    case Kind::kNegate:
      out += "(-";
      print(*node.args[0], out);
      out += ')';
      return;
    case Kind::kBinary:
      out += '(';
      print(*node.args[0], out);
      out += node.op;
      print(*node.args[1], out);
      out += ')';
      return;
    case Kind::kCall:
      out += func_name(node.func);
      out += '(';
      for (std::size_t i = 0; i < node.args.size(); ++i) {
        if (i) out += ',';
        print(*node.args[i], out);
      }
      out += ')';
      return;
  }
}

inline bool mentions(const Node& node, Variable v) {
  if (node.kind == Kind::kVariable) return node.variable == v;
  for (const auto& arg : node.args) {
    if (mentions(*arg, v)) return true;
  }
  return false;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr parse_all() {
    skip_space();
    if (at_end()) throw ParseError("empty expression", pos_);
    NodePtr root = parse_sum();
    skip_space();
    if (!at_end()) throw ParseError(std::string("unexpected character '") + src_[pos_] + "'", pos_);
    return root;
  }

 private:
  bool at_end() const { return pos_ >= src_.size(); }

  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (!at_end() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  static NodePtr binary(char op, NodePtr lhs, NodePtr rhs) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::kBinary;
    n->op = op;
    n->args = {std::move(lhs), std::move(rhs)};
    return n;
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = binary('+', lhs, parse_product());
      } else if (accept('-')) {
        lhs = binary('-', lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_product() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = binary('*', lhs, parse_unary());
      } else if (accept('/')) {
        lhs = binary('/', lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) {
      auto n = std::make_shared<Node>();
      n->kind = Kind::kNegate;
      n->args = {parse_unary()};
      return n;
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) return binary('^', base, parse_unary());
    return base;
  }

  NodePtr parse_number() {
    const char* begin = src_.data() + pos_;
    char* end = nullptr;
    // strtod needs a terminated buffer; copy the numeric prefix.
    std::size_t len = 0;
    while (pos_ + len < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_ + len])) || src_[pos_ + len] == '.' ||
            src_[pos_ + len] == 'e' || src_[pos_ + len] == 'E' ||
            ((src_[pos_ + len] == '+' || src_[pos_ + len] == '-') && len > 0 &&
             (src_[pos_ + len - 1] == 'e' || src_[pos_ + len - 1] == 'E')))) {
      ++len;
    }
    const std::string text(begin, len);
    const double value = std::strtod(text.c_str(), &end);
    const std::size_t used = static_cast<std::size_t>(end - text.c_str());
    if (used == 0) throw ParseError("malformed number", pos_);
    pos_ += used;
    auto n = std::make_shared<Node>();
    n->kind = Kind::kNumber;
    n->number = value;
    return n;
  }

  NodePtr parse_primary() {
    skip_space();
    if (at_end()) throw ParseError("unexpected end of expression", pos_);
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (accept('(')) {
      NodePtr inner = parse_sum();
      expect(')');
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (!at_end() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
      const std::string_view name = src_.substr(start, pos_ - start);
      return parse_identifier(name, start);
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  NodePtr parse_identifier(std::string_view name, std::size_t start) {
    auto n = std::make_shared<Node>();
    if (name == "x" || name == "t" || name == "xi") {
      n->kind = Kind::kVariable;
      n->variable = name == "x" ? Variable::kX : name == "t" ? Variable::kT : Variable::kXi;
      return n;
    }
    if (name == "pi") {
      n->kind = Kind::kNumber;
      n->number = std::numbers::pi;
      return n;
    }
    static constexpr struct {
      std::string_view name;
      Func func;
      int arity;
    } kFuncs[] = {{"sin", Func::kSin, 1}, {"cos", Func::kCos, 1}, {"exp", Func::kExp, 1},
                  {"log", Func::kLog, 1}, {"abs", Func::kAbs, 1}, {"sqrt", Func::kSqrt, 1},
                  {"min", Func::kMin, 2}, {"max", Func::kMax, 2}};
    for (const auto& f : kFuncs) {
      if (f.name != name) continue;
      expect('(');
      n->kind = Kind::kCall;
      n->func = f.func;
      n->args.push_back(parse_sum());
      while (accept(',')) n->args.push_back(parse_sum());
      expect(')');
      if (static_cast<int>(n->args.size()) != f.arity) {
        throw ParseError(std::string(name) + " takes " + std::to_string(f.arity) + " argument(s)", start);
      }
      return n;
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Immutable parsed expression. Copies share the tree.
class Expression {
 public:
  Expression() = default;

  double eval(const Bindings& bindings) const {
    if (!root_) throw PreconditionError("evaluating an empty expression");
    return detail::evaluate(*root_, bindings);
  }

  double operator()(double x) const { return eval(Bindings{x, std::nullopt, std::nullopt}); }
  double operator()(double t, double x) const { return eval(Bindings{x, t, std::nullopt}); }

  bool uses(Variable v) const { return root_ && detail::mentions(*root_, v); }

  /// Fully parenthesised form; re-parsing it gives an evaluation-equivalent tree.
  std::string to_string() const {
    std::string out;
    if (root_) detail::print(*root_, out);
    return out;
  }

  const std::string& source() const noexcept { return source_; }

 private:
  friend Expression parse(std::string_view src);
  detail::NodePtr root_;
  std::string source_;
};

inline Expression parse(std::string_view src) {
  Expression e;
  e.root_ = detail::Parser(src).parse_all();
  e.source_ = std::string(src);
  return e;
}

}  // namespace varexp::expr
