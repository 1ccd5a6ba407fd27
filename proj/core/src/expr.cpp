#include "compop/expr.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <unordered_map>
#include <utility>

namespace compop {

struct Expr::Node {
  NodeKind kind = NodeKind::Constant;
  double value = 0.0;
  Expr a{std::shared_ptr<const Node>{}};
  Expr b{std::shared_ptr<const Node>{}};
  bool smooth = true;
  bool positive = false;
  bool nonneg = false;
};

namespace {

using Node = Expr::Node;

bool is_integral_value(double v) {
  return std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15;
}

std::shared_ptr<const Node> make_leaf(NodeKind kind, double value) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->value = value;
  if (kind == NodeKind::Constant) {
    n->positive = value > 0.0;
    n->nonneg = value >= 0.0;
  }
  return n;
}

const std::shared_ptr<const Node>& zero_node() {
  static const std::shared_ptr<const Node> zero = make_leaf(NodeKind::Constant, 0.0);
  return zero;
}

Expr wrap(std::shared_ptr<const Node> n) { return Expr(std::move(n)); }

Expr make_unary(NodeKind kind, const Expr& a) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->a = a;
  const Node* ca = a.node();
  switch (kind) {
    case NodeKind::Neg:
      n->smooth = ca->smooth;
      break;
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Tanh:
    case NodeKind::Log:
      n->smooth = ca->smooth;
      break;
    case NodeKind::Exp:
      n->smooth = ca->smooth;
      n->positive = true;
      n->nonneg = true;
      break;
    case NodeKind::Sqrt:
      // a fractional power loses smoothness where the base can vanish
      n->smooth = ca->smooth && ca->positive;
      n->positive = ca->positive;
      n->nonneg = true;
      break;
    case NodeKind::Abs:
      n->smooth = false;
      n->nonneg = true;
      break;
    default:
      break;
  }
  return wrap(std::move(n));
}

Expr make_binary(NodeKind kind, const Expr& a, const Expr& b, bool smooth_override = false,
                 bool smooth_value = true) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->a = a;
  n->b = b;
  const Node* ca = a.node();
  const Node* cb = b.node();
  n->smooth = smooth_override ? smooth_value : (ca->smooth && cb->smooth);
  switch (kind) {
    case NodeKind::Add:
      n->positive = (ca->positive && cb->nonneg) || (ca->nonneg && cb->positive);
      n->nonneg = ca->nonneg && cb->nonneg;
      break;
    case NodeKind::Mul:
      n->positive = ca->positive && cb->positive;
      n->nonneg = ca->nonneg && cb->nonneg;
      break;
    case NodeKind::Div:
      n->positive = ca->positive && cb->positive;
      n->nonneg = ca->nonneg && cb->positive;
      break;
    case NodeKind::Pow: {
      n->positive = ca->positive;
      bool even_integral = cb->kind == NodeKind::Constant && is_integral_value(cb->value) &&
                           std::fmod(cb->value, 2.0) == 0.0;
      n->nonneg = ca->nonneg || even_integral;
      break;
    }
    default:
      break;
  }
  return wrap(std::move(n));
}

double powi(double base, long long e) {
  bool invert = e < 0;
  unsigned long long k = invert ? static_cast<unsigned long long>(-e) : static_cast<unsigned long long>(e);
  double acc = 1.0;
  double b = base;
  while (k != 0) {
    if (k & 1ULL) acc *= b;
    b *= b;
    k >>= 1ULL;
  }
  return invert ? 1.0 / acc : acc;
}

template <typename T>
T eval_node(const Node* n, T x);

}  // namespace

Expr::Expr() : node_(zero_node()) {}
Expr::Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expr Expr::constant(double value) { return wrap(make_leaf(NodeKind::Constant, value)); }
Expr Expr::variable() { return wrap(make_leaf(NodeKind::Variable, 0.0)); }

NodeKind Expr::kind() const { return node_->kind; }

double Expr::constant_value() const {
  if (kind() != NodeKind::Constant) throw ExprError("constant_value() on a non-constant node");
  return node_->value;
}

std::size_t Expr::arity() const {
  switch (kind()) {
    case NodeKind::Constant:
    case NodeKind::Variable:
      return 0;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
    case NodeKind::Pow:
      return 2;
    default:
      return 1;
  }
}

const Expr& Expr::child(std::size_t i) const {
  if (i >= arity()) throw ExprError("child index out of range");
  return i == 0 ? node_->a : node_->b;
}

SmoothnessClass Expr::smoothness() const {
  return node_->smooth ? SmoothnessClass::Smooth : SmoothnessClass::ContinuousOnly;
}

bool Expr::is_constant(double value) const {
  return kind() == NodeKind::Constant && node_->value == value;
}

std::size_t Expr::node_count() const {
  // Memoized per shared subtree so heavily shared DAGs stay linear to count.
  std::unordered_map<const Node*, std::size_t> sizes;
  auto count = [&](auto&& self, const Node* n) -> std::size_t {
    if (n == nullptr) return 0;
    auto it = sizes.find(n);
    if (it != sizes.end()) return it->second;
    std::size_t total = 1 + self(self, n->a.node()) + self(self, n->b.node());
    sizes.emplace(n, total);
    return total;
  };
  return count(count, node_.get());
}

ParseError::ParseError(std::size_t offset, std::vector<std::string> expected, const std::string& what)
    : std::runtime_error(what), offset_(offset), expected_(std::move(expected)) {}

EvalError::EvalError(const std::string& what, std::string subexpression)
    : std::runtime_error(what + " in '" + subexpression + "'"), subexpression_(std::move(subexpression)) {}

Expr operator-(const Expr& e) {
  if (e.is_constant()) return Expr::constant(-e.constant_value());
  if (e.kind() == NodeKind::Neg) return e.child(0);
  return make_unary(NodeKind::Neg, e);
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) {
    double v = a.constant_value() + b.constant_value();
    if (std::isfinite(v)) return Expr::constant(v);
  }
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return make_binary(NodeKind::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) {
    double v = a.constant_value() - b.constant_value();
    if (std::isfinite(v)) return Expr::constant(v);
  }
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return -b;
  return make_binary(NodeKind::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant()) {
    double v = a.constant_value() * b.constant_value();
    if (std::isfinite(v)) return Expr::constant(v);
  }
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  // Keep one leading constant coefficient so chains of scalars collapse.
  if (b.is_constant() && !a.is_constant()) return b * a;
  if (a.is_constant() && b.kind() == NodeKind::Mul && b.child(0).is_constant()) {
    return (a * b.child(0)) * b.child(1);
  }
  return make_binary(NodeKind::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (a.is_constant() && b.is_constant() && b.constant_value() != 0.0) {
    double v = a.constant_value() / b.constant_value();
    if (std::isfinite(v)) return Expr::constant(v);
  }
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(0.0) && !b.is_constant(0.0)) return Expr::constant(0.0);
  return make_binary(NodeKind::Div, a, b);
}

Expr sin(const Expr& e) {
  if (e.is_constant()) return Expr::constant(std::sin(e.constant_value()));
  return make_unary(NodeKind::Sin, e);
}

Expr cos(const Expr& e) {
  if (e.is_constant()) return Expr::constant(std::cos(e.constant_value()));
  return make_unary(NodeKind::Cos, e);
}

Expr exp(const Expr& e) {
  if (e.is_constant()) {
    double v = std::exp(e.constant_value());
    if (std::isfinite(v)) return Expr::constant(v);
  }
  return make_unary(NodeKind::Exp, e);
}

Expr log(const Expr& e) {
  if (e.is_constant() && e.constant_value() > 0.0) {
    double v = std::log(e.constant_value());
    if (std::isfinite(v)) return Expr::constant(v);
  }
  return make_unary(NodeKind::Log, e);
}

Expr sqrt(const Expr& e) {
  if (e.is_constant() && e.constant_value() >= 0.0) {
    return Expr::constant(std::sqrt(e.constant_value()));
  }
  return make_unary(NodeKind::Sqrt, e);
}

Expr tanh(const Expr& e) {
  if (e.is_constant()) return Expr::constant(std::tanh(e.constant_value()));
  return make_unary(NodeKind::Tanh, e);
}

Expr abs(const Expr& e) {
  if (e.is_constant()) return Expr::constant(std::abs(e.constant_value()));
  return make_unary(NodeKind::Abs, e);
}

Expr pow(const Expr& base, const Expr& exponent) {
  if (exponent.kind() != NodeKind::Constant) {
    // Rewrite b^e as exp(e*log(b)); only valid on a provably positive base.
    if (!provably_positive(base)) {
      throw ExprError("pow with a non-constant exponent requires a provably positive base: " +
                      to_string(base) + "^" + to_string(exponent));
    }
    return exp(exponent * log(base));
  }
  double c = exponent.constant_value();
  if (base.is_constant()) {
    double bv = base.constant_value();
    if (bv > 0.0 || is_integral_value(c)) {
      double v = is_integral_value(c) ? powi(bv, static_cast<long long>(c)) : std::pow(bv, c);
      if (std::isfinite(v)) return Expr::constant(v);
    }
  }
  if (c == 0.0) return Expr::constant(1.0);
  if (c == 1.0) return base;
  if (is_integral_value(c)) return make_binary(NodeKind::Pow, base, exponent);
  if (provably_positive(base)) return make_binary(NodeKind::Pow, base, exponent);
  if (provably_nonnegative(base)) {
    // Real-valued but loses smoothness where the base vanishes.
    return make_binary(NodeKind::Pow, base, exponent, true, false);
  }
  throw ExprError("fractional power of a base that may be negative: " + to_string(base) + "^" +
                  to_string(exponent));
}

bool provably_positive(const Expr& e) { return e.node()->positive; }
bool provably_nonnegative(const Expr& e) { return e.node()->nonneg || e.node()->positive; }

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Token {
  enum class Type { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };
  Type type = Type::End;
  std::size_t offset = 0;
  double value = 0.0;
  std::string text;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) { advance(); }

  Expr run() {
    Expr e = parse_expr();
    if (tok_.type != Token::Type::End) {
      fail({"end of input", "operator"});
    }
    return e;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  Token tok_;

  [[noreturn]] void fail(std::vector<std::string> expected) {
    std::string got = tok_.type == Token::Type::End ? "end of input" : "'" + tok_.text + "'";
    std::string msg = "syntax error at offset " + std::to_string(tok_.offset) + ": expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i != 0) msg += i + 1 == expected.size() ? " or " : ", ";
      msg += expected[i];
    }
    msg += ", got " + got;
    throw ParseError(tok_.offset, std::move(expected), msg);
  }

  void advance() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
    tok_ = Token{};
    tok_.offset = pos_;
    if (pos_ >= text_.size()) {
      tok_.type = Token::Type::End;
      return;
    }
    char c = text_[pos_];
    auto single = [&](Token::Type t) {
      tok_.type = t;
      tok_.text = std::string(1, c);
      ++pos_;
    };
    switch (c) {
      case '+': single(Token::Type::Plus); return;
      case '-': single(Token::Type::Minus); return;
      case '*': single(Token::Type::Star); return;
      case '/': single(Token::Type::Slash); return;
      case '^': single(Token::Type::Caret); return;
      case '(': single(Token::Type::LParen); return;
      case ')': single(Token::Type::RParen); return;
      default: break;
    }
    if ((c >= '0' && c <= '9') || c == '.') {
      std::size_t end = pos_;
      while (end < text_.size() && ((text_[end] >= '0' && text_[end] <= '9') || text_[end] == '.')) ++end;
      if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
        std::size_t exp_end = end + 1;
        if (exp_end < text_.size() && (text_[exp_end] == '+' || text_[exp_end] == '-')) ++exp_end;
        std::size_t digits = exp_end;
        while (digits < text_.size() && text_[digits] >= '0' && text_[digits] <= '9') ++digits;
        if (digits > exp_end) end = digits;
      }
      double value = 0.0;
      auto res = std::from_chars(text_.data() + pos_, text_.data() + end, value);
      if (res.ec != std::errc{} || res.ptr != text_.data() + end) {
        tok_.text = std::string(text_.substr(pos_, end - pos_));
        fail({"number"});
      }
      tok_.type = Token::Type::Number;
      tok_.value = value;
      tok_.text = std::string(text_.substr(pos_, end - pos_));
      pos_ = end;
      return;
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
      std::size_t end = pos_;
      while (end < text_.size() &&
             ((text_[end] >= 'a' && text_[end] <= 'z') || (text_[end] >= 'A' && text_[end] <= 'Z') ||
              (text_[end] >= '0' && text_[end] <= '9') || text_[end] == '_')) {
        ++end;
      }
      tok_.type = Token::Type::Ident;
      tok_.text = std::string(text_.substr(pos_, end - pos_));
      pos_ = end;
      return;
    }
    tok_.text = std::string(1, c);
    fail({"number", "'x'", "function", "'('", "'-'"});
  }

  Expr parse_expr() {
    Expr e = parse_term();
    while (tok_.type == Token::Type::Plus || tok_.type == Token::Type::Minus) {
      bool plus = tok_.type == Token::Type::Plus;
      advance();
      Expr rhs = parse_term();
      e = plus ? e + rhs : e - rhs;
    }
    return e;
  }

  Expr parse_term() {
    Expr e = parse_factor();
    while (tok_.type == Token::Type::Star || tok_.type == Token::Type::Slash) {
      bool mul = tok_.type == Token::Type::Star;
      advance();
      Expr rhs = parse_factor();
      e = mul ? e * rhs : e / rhs;
    }
    return e;
  }

  // '^' binds tighter than unary minus: -x^2 is -(x^2).
  Expr parse_factor() {
    if (tok_.type == Token::Type::Minus) {
      advance();
      return -parse_factor();
    }
    Expr base = parse_base();
    if (tok_.type == Token::Type::Caret) {
      advance();
      Expr exponent = parse_factor();
      return pow(base, exponent);
    }
    return base;
  }

  Expr parse_base() {
    switch (tok_.type) {
      case Token::Type::Number: {
        Expr e = Expr::constant(tok_.value);
        advance();
        return e;
      }
      case Token::Type::LParen: {
        advance();
        Expr e = parse_expr();
        if (tok_.type != Token::Type::RParen) fail({"')'"});
        advance();
        return e;
      }
      case Token::Type::Ident: {
        std::string name = tok_.text;
        std::size_t name_offset = tok_.offset;
        if (name == "x") {
          advance();
          return Expr::variable();
        }
        NodeKind kind;
        if (name == "sin") kind = NodeKind::Sin;
        else if (name == "cos") kind = NodeKind::Cos;
        else if (name == "exp") kind = NodeKind::Exp;
        else if (name == "log") kind = NodeKind::Log;
        else if (name == "sqrt") kind = NodeKind::Sqrt;
        else if (name == "tanh") kind = NodeKind::Tanh;
        else if (name == "abs") kind = NodeKind::Abs;
        else {
          throw ParseError(name_offset, {"sin", "cos", "exp", "log", "sqrt", "tanh", "abs", "x"},
                           "unknown identifier '" + name + "' at offset " + std::to_string(name_offset));
        }
        advance();
        if (tok_.type != Token::Type::LParen) fail({"'('"});
        advance();
        Expr arg = parse_expr();
        if (tok_.type != Token::Type::RParen) fail({"')'"});
        advance();
        switch (kind) {
          case NodeKind::Sin: return sin(arg);
          case NodeKind::Cos: return cos(arg);
          case NodeKind::Exp: return exp(arg);
          case NodeKind::Log: return log(arg);
          case NodeKind::Sqrt: return sqrt(arg);
          case NodeKind::Tanh: return tanh(arg);
          default: return abs(arg);
        }
      }
      default:
        fail({"number", "'x'", "function", "'('", "'-'"});
    }
  }
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text).run(); }

// ---------------------------------------------------------------------------
// Printing

namespace {

// add/sub = 1, mul/div = 2, unary minus = 3, pow = 4, atoms = 5.
int precedence(NodeKind k) {
  switch (k) {
    case NodeKind::Add:
    case NodeKind::Sub:
      return 1;
    case NodeKind::Mul:
    case NodeKind::Div:
      return 2;
    case NodeKind::Neg:
      return 3;
    case NodeKind::Pow:
      return 4;
    default:
      return 5;
  }
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void print_node(const Expr& e, std::string& out, int min_prec) {
  int prec = precedence(e.kind());
  bool parens = prec < min_prec;
  if (parens) out += '(';
  switch (e.kind()) {
    case NodeKind::Constant:
      out += format_number(e.constant_value());
      break;
    case NodeKind::Variable:
      out += 'x';
      break;
    case NodeKind::Neg:
      out += '-';
      print_node(e.child(0), out, 3);
      break;
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Exp:
    case NodeKind::Log:
    case NodeKind::Sqrt:
    case NodeKind::Tanh:
    case NodeKind::Abs: {
      const char* name = e.kind() == NodeKind::Sin    ? "sin"
                         : e.kind() == NodeKind::Cos  ? "cos"
                         : e.kind() == NodeKind::Exp  ? "exp"
                         : e.kind() == NodeKind::Log  ? "log"
                         : e.kind() == NodeKind::Sqrt ? "sqrt"
                         : e.kind() == NodeKind::Tanh ? "tanh"
                                                      : "abs";
      out += name;
      out += '(';
      print_node(e.child(0), out, 0);
      out += ')';
      break;
    }
    case NodeKind::Add:
      print_node(e.child(0), out, 1);
      out += " + ";
      print_node(e.child(1), out, 2);
      break;
    case NodeKind::Sub:
      print_node(e.child(0), out, 1);
      out += " - ";
      print_node(e.child(1), out, 2);
      break;
    case NodeKind::Mul:
      print_node(e.child(0), out, 2);
      out += '*';
      print_node(e.child(1), out, 3);
      break;
    case NodeKind::Div:
      print_node(e.child(0), out, 2);
      out += '/';
      print_node(e.child(1), out, 3);
      break;
    case NodeKind::Pow:
      print_node(e.child(0), out, 5);
      out += '^';
      print_node(e.child(1), out, 4);
      break;
  }
  if (parens) out += ')';
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print_node(e, out, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

template <typename T>
T eval_node(const Node* n, T x) {
  switch (n->kind) {
    case NodeKind::Constant:
      return static_cast<T>(n->value);
    case NodeKind::Variable:
      return x;
    case NodeKind::Neg:
      return -eval_node(n->a.node(), x);
    case NodeKind::Sin:
      return std::sin(eval_node(n->a.node(), x));
    case NodeKind::Cos:
      return std::cos(eval_node(n->a.node(), x));
    case NodeKind::Exp:
      return std::exp(eval_node(n->a.node(), x));
    case NodeKind::Tanh:
      return std::tanh(eval_node(n->a.node(), x));
    case NodeKind::Abs:
      return std::abs(eval_node(n->a.node(), x));
    case NodeKind::Log: {
      T v = eval_node(n->a.node(), x);
      if (!(v > 0)) throw EvalError("log of a non-positive value", to_string(n->a));
      return std::log(v);
    }
    case NodeKind::Sqrt: {
      T v = eval_node(n->a.node(), x);
      if (v < 0) throw EvalError("sqrt of a negative value", to_string(n->a));
      return std::sqrt(v);
    }
    case NodeKind::Add:
      return eval_node(n->a.node(), x) + eval_node(n->b.node(), x);
    case NodeKind::Sub:
      return eval_node(n->a.node(), x) - eval_node(n->b.node(), x);
    case NodeKind::Mul:
      return eval_node(n->a.node(), x) * eval_node(n->b.node(), x);
    case NodeKind::Div: {
      T den = eval_node(n->b.node(), x);
      if (den == 0) throw EvalError("division by zero", to_string(n->b));
      return eval_node(n->a.node(), x) / den;
    }
    case NodeKind::Pow: {
      T base = eval_node(n->a.node(), x);
      double c = n->b.node()->value;
      if (is_integral_value(c)) {
        if (base == 0 && c < 0) throw EvalError("zero raised to a negative power", to_string(n->a));
        if constexpr (std::is_same_v<T, double>) {
          return powi(base, static_cast<long long>(c));
        } else {
          long double acc = 1.0L, b = base;
          long long e = static_cast<long long>(c);
          bool invert = e < 0;
          unsigned long long k = invert ? static_cast<unsigned long long>(-e) : static_cast<unsigned long long>(e);
          while (k != 0) {
            if (k & 1ULL) acc *= b;
            b *= b;
            k >>= 1ULL;
          }
          return invert ? 1.0L / acc : acc;
        }
      }
      if (base < 0) throw EvalError("fractional power of a negative value", to_string(n->a));
      return std::pow(base, static_cast<T>(c));
    }
  }
  throw EvalError("unhandled node", "?");
}

}  // namespace

double eval(const Expr& e, double x) { return eval_node<double>(e.node(), x); }
long double eval_ld(const Expr& e, long double x) { return eval_node<long double>(e.node(), x); }

// ---------------------------------------------------------------------------
// Differentiation and substitution

namespace {

Expr derivative_once(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Constant:
      return Expr::constant(0.0);
    case NodeKind::Variable:
      return Expr::constant(1.0);
    case NodeKind::Neg:
      return -derivative_once(e.child(0));
    case NodeKind::Sin:
      return cos(e.child(0)) * derivative_once(e.child(0));
    case NodeKind::Cos:
      return -(sin(e.child(0)) * derivative_once(e.child(0)));
    case NodeKind::Exp:
      return exp(e.child(0)) * derivative_once(e.child(0));
    case NodeKind::Log:
      return derivative_once(e.child(0)) / e.child(0);
    case NodeKind::Sqrt:
      return derivative_once(e.child(0)) / (Expr::constant(2.0) * sqrt(e.child(0)));
    case NodeKind::Tanh:
      return (Expr::constant(1.0) - pow(tanh(e.child(0)), Expr::constant(2.0))) *
             derivative_once(e.child(0));
    case NodeKind::Abs:
      throw ExprError("abs is not differentiable: " + to_string(e));
    case NodeKind::Add:
      return derivative_once(e.child(0)) + derivative_once(e.child(1));
    case NodeKind::Sub:
      return derivative_once(e.child(0)) - derivative_once(e.child(1));
    case NodeKind::Mul:
      return derivative_once(e.child(0)) * e.child(1) + e.child(0) * derivative_once(e.child(1));
    case NodeKind::Div:
      return (derivative_once(e.child(0)) * e.child(1) - e.child(0) * derivative_once(e.child(1))) /
             pow(e.child(1), Expr::constant(2.0));
    case NodeKind::Pow: {
      double c = e.child(1).constant_value();
      return Expr::constant(c) * pow(e.child(0), Expr::constant(c - 1.0)) *
             derivative_once(e.child(0));
    }
  }
  throw ExprError("unhandled node kind in derivative");
}

}  // namespace

Expr derivative(const Expr& e, int order) {
  if (order < 0) throw ExprError("derivative order must be non-negative");
  if (order == 0) return e;
  if (e.smoothness() != SmoothnessClass::Smooth) {
    throw ExprError("expression is not differentiable (ContinuousOnly): " + to_string(e));
  }
  Expr d = e;
  for (int i = 0; i < order; ++i) d = derivative_once(d);
  return d;
}

Expr substitute(const Expr& e, const Expr& replacement) {
  switch (e.kind()) {
    case NodeKind::Constant:
      return e;
    case NodeKind::Variable:
      return replacement;
    case NodeKind::Neg:
      return -substitute(e.child(0), replacement);
    case NodeKind::Sin:
      return sin(substitute(e.child(0), replacement));
    case NodeKind::Cos:
      return cos(substitute(e.child(0), replacement));
    case NodeKind::Exp:
      return exp(substitute(e.child(0), replacement));
    case NodeKind::Log:
      return log(substitute(e.child(0), replacement));
    case NodeKind::Sqrt:
      return sqrt(substitute(e.child(0), replacement));
    case NodeKind::Tanh:
      return tanh(substitute(e.child(0), replacement));
    case NodeKind::Abs:
      return abs(substitute(e.child(0), replacement));
    case NodeKind::Add:
      return substitute(e.child(0), replacement) + substitute(e.child(1), replacement);
    case NodeKind::Sub:
      return substitute(e.child(0), replacement) - substitute(e.child(1), replacement);
    case NodeKind::Mul:
      return substitute(e.child(0), replacement) * substitute(e.child(1), replacement);
    case NodeKind::Div:
      return substitute(e.child(0), replacement) / substitute(e.child(1), replacement);
    case NodeKind::Pow:
      return pow(substitute(e.child(0), replacement), substitute(e.child(1), replacement));
  }
  throw ExprError("unhandled node kind in substitute");
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node() == b.node()) return true;
  if (a.kind() != b.kind()) return false;
  if (a.kind() == NodeKind::Constant) {
    std::uint64_t ba, bb;
    double va = a.constant_value(), vb = b.constant_value();
    std::memcpy(&ba, &va, sizeof ba);
    std::memcpy(&bb, &vb, sizeof bb);
    return ba == bb;
  }
  for (std::size_t i = 0; i < a.arity(); ++i) {
    if (!structurally_equal(a.child(i), b.child(i))) return false;
  }
  return true;
}

}  // namespace compop
