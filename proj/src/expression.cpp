#include "geotubes/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "geotubes/errors.hpp"

namespace geotubes {

struct Expression::Node {
  enum class Op { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };
  Op op = Op::Number;
  double value = 0.0;
  std::size_t index = 0;
  double (*fn1)(double) = nullptr;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

double eval(const Expression::Node& n, std::span<const double> v) {
  switch (n.op) {
    case Op::Number:
      return n.value;
    case Op::Variable:
      return v[n.index];
    case Op::Neg:
      return -eval(*n.lhs, v);
    case Op::Add:
      return eval(*n.lhs, v) + eval(*n.rhs, v);
    case Op::Sub:
      return eval(*n.lhs, v) - eval(*n.rhs, v);
    case Op::Mul:
      return eval(*n.lhs, v) * eval(*n.rhs, v);
    case Op::Div:
      return eval(*n.lhs, v) / eval(*n.rhs, v);
    case Op::Pow:
      return std::pow(eval(*n.lhs, v), eval(*n.rhs, v));
    case Op::Call:
      return n.fn1(eval(*n.lhs, v));
  }
  return 0.0;
}

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr number(double x) {
  auto n = std::make_shared<Expression::Node>();
  n->value = x;
  return n;
}

double (*unary_function(const std::string& name))(double) {
  static const std::map<std::string, double (*)(double)> table = {
      {"sin", [](double x) { return std::sin(x); }},   {"cos", [](double x) { return std::cos(x); }},
      {"tan", [](double x) { return std::tan(x); }},   {"sinh", [](double x) { return std::sinh(x); }},
      {"cosh", [](double x) { return std::cosh(x); }}, {"tanh", [](double x) { return std::tanh(x); }},
      {"exp", [](double x) { return std::exp(x); }},   {"log", [](double x) { return std::log(x); }},
      {"sqrt", [](double x) { return std::sqrt(x); }}, {"abs", [](double x) { return std::abs(x); }},
  };
  const auto it = table.find(name);
  return it == table.end() ? nullptr : it->second;
}

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars, const std::map<std::string, double>& consts)
      : s_(text), vars_(vars), consts_(consts) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::Parse, "expression \"" + s_ + "\": " + msg + " at position " + std::to_string(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (true) {
      if (accept('+')) {
        lhs = make(Op::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make(Op::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (true) {
      if (accept('*')) {
        lhs = make(Op::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make(Op::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (accept('^')) return make(Op::Pow, base, unary());
    return base;
  }

  NodePtr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double x = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return number(x);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (accept('(')) return call(name);
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == name) {
          auto n = std::make_shared<Expression::Node>();
          n->op = Op::Variable;
          n->index = i;
          return n;
        }
      }
      if (const auto it = consts_.find(name); it != consts_.end()) return number(it->second);
      if (name == "pi") return number(std::numbers::pi);
      if (name == "e") return number(std::numbers::e);
      pos_ = start;
      fail("unknown name '" + name + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr call(const std::string& name) {
    NodePtr first = expr();
    if (name == "pow") {
      expect(',');
      NodePtr second = expr();
      expect(')');
      return make(Op::Pow, first, second);
    }
    expect(')');
    auto fn = unary_function(name);
    if (!fn) fail("unknown function '" + name + "'");
    auto n = std::make_shared<Expression::Node>();
    n->op = Op::Call;
    n->fn1 = fn;
    n->lhs = first;
    return n;
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  const std::map<std::string, double>& consts_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables,
                             const std::map<std::string, double>& constants) {
  Expression e;
  e.text_ = text;
  e.n_vars_ = variables.size();
  e.root_ = Parser(text, variables, constants).parse();
  return e;
}

double Expression::evaluate(std::span<const double> values) const {
  if (values.size() < n_vars_) {
    throw Error(ErrorKind::Parse, "expression \"" + text_ + "\": expected " + std::to_string(n_vars_) + " values");
  }
  return eval(*root_, values);
}

double evaluate_constant(const std::string& text, const std::map<std::string, double>& constants) {
  return Expression::parse(text, {}, constants).evaluate();
}

}  // namespace geotubes
