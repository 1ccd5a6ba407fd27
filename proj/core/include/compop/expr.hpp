// Symbolic expressions in one real variable: parsing, printing, evaluation,
// exact differentiation.  Trees are immutable; all mutating-looking operations
// return new values.
#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace compop {

enum class NodeKind {
  Constant,
  Variable,
  Neg,
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  Tanh,
  Abs,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
};

// Smooth: infinitely differentiable wherever defined.  ContinuousOnly: trees
// containing abs, or a fractional power of a subtree that may vanish; these
// evaluate but refuse differentiation.
enum class SmoothnessClass { Smooth, ContinuousOnly };

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& what);
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& what, std::string subexpression);
  const std::string& subexpression() const { return subexpression_; }

 private:
  std::string subexpression_;
};

// Construction or differentiation rejected the tree (fractional power of a
// possibly-negative base, derivative of a ContinuousOnly expression, ...).
class ExprError : public std::runtime_error {
 public:
  explicit ExprError(const std::string& what) : std::runtime_error(what) {}
};

class Expr {
 public:
  Expr();  // constant 0

  static Expr constant(double value);
  static Expr variable();

  NodeKind kind() const;
  double constant_value() const;  // pre: kind() == Constant
  std::size_t arity() const;
  const Expr& child(std::size_t i) const;  // pre: i < arity()

  SmoothnessClass smoothness() const;
  bool is_constant() const { return kind() == NodeKind::Constant; }
  bool is_constant(double value) const;

  double eval(double x) const;  // value at x; throws EvalError on domain faults

  std::size_t node_count() const;

  struct Node;
  explicit Expr(std::shared_ptr<const Node> node);
  const Node* node() const { return node_.get(); }

 private:
  std::shared_ptr<const Node> node_;
};

Expr operator-(const Expr& e);
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr sin(const Expr& e);
Expr cos(const Expr& e);
Expr exp(const Expr& e);
Expr log(const Expr& e);
Expr sqrt(const Expr& e);
Expr tanh(const Expr& e);
Expr abs(const Expr& e);
Expr pow(const Expr& base, const Expr& exponent);

// Grammar:
//   expr   := term (('+' | '-') term)*
//   term   := factor (('*' | '/') factor)*
//   factor := '-' factor | base ('^' factor)?
//   base   := number | 'x' | ident '(' expr ')' | '(' expr ')'
// '^' is right-associative and binds tighter than unary minus.
Expr parse(std::string_view text);

// Prints a form that parses back to a structurally equal tree.
std::string to_string(const Expr& e);

double eval(const Expr& e, double x);
// Extended-precision twin of eval, for high-order finite differences.
long double eval_ld(const Expr& e, long double x);

inline double Expr::eval(double x) const { return compop::eval(*this, x); }

Expr derivative(const Expr& e, int order = 1);
// Replaces the variable by `replacement` everywhere.
Expr substitute(const Expr& e, const Expr& replacement);

bool structurally_equal(const Expr& a, const Expr& b);

// Conservative sign analysis; false means "not provable", not "false".
bool provably_positive(const Expr& e);
bool provably_nonnegative(const Expr& e);

}  // namespace compop
