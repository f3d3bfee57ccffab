#include "ckg/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>

namespace ckg {

class Expression::Parser {
 public:
  Parser(Expression& e) : e_(e), s_(e.text_) {}

  int parse() {
    const int root = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what, const std::string& ident = {}) const {
    throw ExpressionError("expression '" + s_ + "': " + what + " at position " + std::to_string(pos_), pos_, ident);
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

  int node(Op op, int a = -1, int b = -1, double value = 0.0) {
    e_.nodes_.push_back({op, a, b, value});
    return static_cast<int>(e_.nodes_.size()) - 1;
  }

  int expr() {
    int lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = node(Op::add, lhs, term());
      } else if (accept('-')) {
        lhs = node(Op::sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  int term() {
    int lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = node(Op::mul, lhs, unary());
      } else if (accept('/')) {
        lhs = node(Op::div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  int unary() {
    if (accept('-')) return node(Op::neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  int power() {
    const int base = primary();
    if (accept('^')) return node(Op::pow, base, unary());
    return base;
  }

  int primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (accept('(')) {
      const int inner = expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return name();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  int number() {
    double v = 0.0;
    const char* first = s_.data() + pos_;
    const auto [ptr, ec] = std::from_chars(first, s_.data() + s_.size(), v);
    if (ec != std::errc()) fail("malformed number");
    pos_ += static_cast<size_t>(ptr - first);
    return node(Op::number, -1, -1, v);
  }

  int name() {
    const size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string id = s_.substr(start, pos_ - start);
    skip();
    if (pos_ < s_.size() && s_[pos_] == '(') return call(id, start);
    if (id == "pi") return node(Op::number, -1, -1, std::numbers::pi);
    const auto& vars = e_.variables_;
    const auto it = std::find(vars.begin(), vars.end(), id);
    if (it == vars.end()) {
      pos_ = start;
      std::string allowed;
      for (const auto& v : vars) allowed += (allowed.empty() ? "" : ", ") + v;
      fail("unknown variable '" + id + "' (allowed: " + (allowed.empty() ? "none" : allowed) + ")", id);
    }
    return node(Op::variable, -1, -1, static_cast<double>(it - vars.begin()));
  }

  int call(const std::string& id, size_t start) {
    static const std::pair<const char*, Op> unary_fns[] = {
        {"exp", Op::exp},   {"log", Op::log},   {"sqrt", Op::sqrt}, {"sin", Op::sin},   {"cos", Op::cos},
        {"tan", Op::tan},   {"asin", Op::asin}, {"acos", Op::acos}, {"atan", Op::atan}, {"sinh", Op::sinh},
        {"cosh", Op::cosh}, {"tanh", Op::tanh}, {"abs", Op::abs}};
    expect('(');
    if (id == "pow") {
      const int a = expr();
      expect(',');
      const int b = expr();
      expect(')');
      return node(Op::pow, a, b);
    }
    for (const auto& [fname, op] : unary_fns) {
      if (id == fname) {
        const int a = expr();
        expect(')');
        return node(op, a);
      }
    }
    pos_ = start;
    fail("unknown function '" + id + "'", id);
  }

  Expression& e_;
  const std::string& s_;
  size_t pos_ = 0;
};

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables) {
  Expression e;
  e.text_ = text;
  e.variables_ = variables;
  Parser p(e);
  e.root_ = p.parse();
  return e;
}

double Expression::operator()(std::span<const double> values) const {
  if (values.size() != variables_.size()) {
    throw ParameterError("expression '" + text_ + "' expects " + std::to_string(variables_.size()) + " values");
  }
  return eval(root_, values);
}

double Expression::eval(int i, std::span<const double> v) const {
  const Node& n = nodes_[i];
  switch (n.op) {
    case Op::number:
      return n.value;
    case Op::variable:
      return v[static_cast<size_t>(n.value)];
    case Op::neg:
      return -eval(n.a, v);
    case Op::add:
      return eval(n.a, v) + eval(n.b, v);
    case Op::sub:
      return eval(n.a, v) - eval(n.b, v);
    case Op::mul:
      return eval(n.a, v) * eval(n.b, v);
    case Op::div:
      return eval(n.a, v) / eval(n.b, v);
    case Op::pow:
      return std::pow(eval(n.a, v), eval(n.b, v));
    case Op::exp:
      return std::exp(eval(n.a, v));
    case Op::log:
      return std::log(eval(n.a, v));
    case Op::sqrt:
      return std::sqrt(eval(n.a, v));
    case Op::sin:
      return std::sin(eval(n.a, v));
    case Op::cos:
      return std::cos(eval(n.a, v));
    case Op::tan:
      return std::tan(eval(n.a, v));
    case Op::asin:
      return std::asin(eval(n.a, v));
    case Op::acos:
      return std::acos(eval(n.a, v));
    case Op::atan:
      return std::atan(eval(n.a, v));
    case Op::sinh:
      return std::sinh(eval(n.a, v));
    case Op::cosh:
      return std::cosh(eval(n.a, v));
    case Op::tanh:
      return std::tanh(eval(n.a, v));
    case Op::abs:
      return std::abs(eval(n.a, v));
  }
  return 0.0;
}

bool Expression::uses(const std::string& variable) const {
  const auto it = std::find(variables_.begin(), variables_.end(), variable);
  if (it == variables_.end()) return false;
  const double slot = static_cast<double>(it - variables_.begin());
  return std::any_of(nodes_.begin(), nodes_.end(),
                     [&](const Node& n) { return n.op == Op::variable && n.value == slot; });
}

bool Expression::is_constant() const {
  return std::none_of(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.op == Op::variable; });
}

}  // namespace ckg
