#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace geotubes {

// Arithmetic expressions over named variables and constants.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | '+' unary | power
//   power  := atom ('^' unary)?           right associative
//   atom   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Functions: sin cos tan sinh cosh tanh exp log sqrt abs pow(x, y).
// Built-in constants: pi, e. Unknown names are parse errors.
class Expression {
 public:
  struct Node;

  static Expression parse(const std::string& text, const std::vector<std::string>& variables = {},
                          const std::map<std::string, double>& constants = {});

  double evaluate(std::span<const double> values) const;
  double evaluate() const { return evaluate(std::span<const double>{}); }

  const std::string& text() const { return text_; }
  std::size_t variable_count() const { return n_vars_; }

 private:
  std::string text_;
  std::size_t n_vars_ = 0;
  std::shared_ptr<const Node> root_;
};

// Parses and evaluates a constant expression such as "pi/4" or "2*a".
double evaluate_constant(const std::string& text, const std::map<std::string, double>& constants = {});

}  // namespace geotubes
