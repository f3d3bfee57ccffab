#pragma once

#include "ckg/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace ckg {

/// Syntax error or unknown name in an expression.  `identifier` holds the
/// offending name for unknown variables and functions, empty otherwise.
class ExpressionError : public ParameterError {
 public:
  ExpressionError(const std::string& what, size_t position, std::string identifier = {})
      : ParameterError(what), position(position), identifier(std::move(identifier)) {}
  size_t position;
  std::string identifier;
};

/// Arithmetic expression over named real variables.
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('+' | '-') unary | power
///   power   := primary ('^' unary)?
///   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
///
/// '^' is right associative and binds tighter than unary minus, so -x^2 is
/// -(x^2).  Functions: pow, exp, log, sqrt, sin, cos, tan, asin, acos, atan,
/// sinh, cosh, tanh, abs.  The constant pi is always available.
class Expression {
 public:
  static Expression parse(const std::string& text, const std::vector<std::string>& variables);

  /// `values` follows the order of the variable list given to parse().
  double operator()(std::span<const double> values) const;
  double operator()(std::initializer_list<double> values) const {
    return (*this)(std::span<const double>(values.begin(), values.size()));
  }

  const std::string& text() const { return text_; }
  bool uses(const std::string& variable) const;
  /// True when no variable occurs.
  bool is_constant() const;

 private:
  enum class Op : unsigned char {
    number, variable, neg, add, sub, mul, div, pow,
    exp, log, sqrt, sin, cos, tan, asin, acos, atan, sinh, cosh, tanh, abs
  };
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double value = 0.0;  // number literal or variable slot
  };

  class Parser;
  double eval(int node, std::span<const double> values) const;

  std::string text_;
  std::vector<std::string> variables_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace ckg
