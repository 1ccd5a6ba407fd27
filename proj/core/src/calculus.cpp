#include "compop/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

namespace compop {

namespace {

constexpr int kMaxOrder = 20;  // 21! no longer fits in 64 bits

std::uint64_t factorial_u64(int n) {
  std::uint64_t acc = 1;
  for (int i = 2; i <= n; ++i) acc *= static_cast<std::uint64_t>(i);
  return acc;
}

void enumerate(int j, int remaining, std::vector<int>& counts, std::vector<PartitionTerm>& out) {
  if (remaining == 0) {
    PartitionTerm term;
    term.counts = counts;
    term.coefficient = faa_coefficient(counts);
    term.outer_order = 0;
    for (int k : counts) term.outer_order += k;
    out.push_back(std::move(term));
    return;
  }
  if (j > remaining) return;
  // High multiplicities of the current order first; matches the documented
  // ordering with k_1 descending.
  for (int k = remaining / j; k >= 0; --k) {
    counts[static_cast<std::size_t>(j - 1)] = k;
    enumerate(j + 1, remaining - j * k, counts, out);
  }
  counts[static_cast<std::size_t>(j - 1)] = 0;
}

}  // namespace

const std::vector<PartitionTerm>& partitions(int p) {
  if (p < 0) throw std::invalid_argument("partitions: order must be non-negative");
  if (p > kMaxOrder) throw std::overflow_error("partitions: coefficients exceed 64-bit range beyond order 20");
  static std::mutex mutex;
  static std::vector<std::vector<PartitionTerm>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  while (static_cast<int>(cache.size()) <= p) {
    int order = static_cast<int>(cache.size());
    std::vector<PartitionTerm> terms;
    if (order == 0) {
      terms.push_back(PartitionTerm{{}, 1, 0});
    } else {
      std::vector<int> counts(static_cast<std::size_t>(order), 0);
      enumerate(1, order, counts, terms);
    }
    cache.push_back(std::move(terms));
  }
  return cache[static_cast<std::size_t>(p)];
}

std::uint64_t faa_coefficient(std::span<const int> counts) {
  int p = 0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 0) throw std::invalid_argument("faa_coefficient: negative multiplicity");
    p += static_cast<int>(j + 1) * counts[j];
  }
  if (p > kMaxOrder) throw std::overflow_error("faa_coefficient: order exceeds 64-bit safe range");
  std::uint64_t numerator = factorial_u64(p);
  std::uint64_t denominator = 1;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    int k = counts[j];
    if (k == 0) continue;
    denominator *= factorial_u64(k);
    std::uint64_t jf = factorial_u64(static_cast<int>(j + 1));
    for (int i = 0; i < k; ++i) denominator *= jf;
  }
  return numerator / denominator;
}

double compose_derivative_from_values(std::span<const double> f_derivs_at_phi,
                                      std::span<const double> phi_derivs, int p) {
  if (p < 0) throw std::invalid_argument("compose_derivative: order must be non-negative");
  if (static_cast<int>(f_derivs_at_phi.size()) <= p || static_cast<int>(phi_derivs.size()) <= p) {
    throw std::invalid_argument("compose_derivative: need derivative values through order p");
  }
  if (p == 0) return f_derivs_at_phi[0];
  // NaN operands would break the magnitude ordering below; the sum is NaN anyway.
  for (int i = 1; i <= p; ++i) {
    if (std::isnan(f_derivs_at_phi[static_cast<std::size_t>(i)]) ||
        std::isnan(phi_derivs[static_cast<std::size_t>(i)])) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  }
  double sum = 0.0;
  double factors[kMaxOrder];
  for (const PartitionTerm& term : partitions(p)) {
    int nfactors = 0;
    for (std::size_t j = 0; j < term.counts.size(); ++j) {
      for (int i = 0; i < term.counts[j]; ++i) {
        factors[nfactors++] = phi_derivs[j + 1];
      }
    }
    // Smallest magnitude first keeps the running product from drifting.
    std::sort(factors, factors + nfactors,
              [](double a, double b) { return std::abs(a) < std::abs(b); });
    double product = 1.0;
    for (int i = 0; i < nfactors; ++i) product *= factors[i];
    sum += static_cast<double>(term.coefficient) * f_derivs_at_phi[static_cast<std::size_t>(term.outer_order)] * product;
  }
  return sum;
}

double compose_derivative(const Expr& f, const Expr& phi, int p, double x) {
  DerivativeLadder lf(f);
  DerivativeLadder lphi(phi);
  double phi_x = eval(phi, x);
  std::vector<double> f_vals(static_cast<std::size_t>(p) + 1);
  std::vector<double> phi_vals(static_cast<std::size_t>(p) + 1);
  for (int i = 0; i <= p; ++i) {
    f_vals[static_cast<std::size_t>(i)] = eval(lf.order(i), phi_x);
    phi_vals[static_cast<std::size_t>(i)] = eval(lphi.order(i), x);
  }
  return compose_derivative_from_values(f_vals, phi_vals, p);
}

namespace {

// Truncated Taylor coefficients c_k = g^{(k)}(x)/k!, all arrays of equal size.
using Series = std::vector<double>;

Series series_mul(const Series& a, const Series& b) {
  Series h(a.size(), 0.0);
  for (std::size_t k = 0; k < h.size(); ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j <= k; ++j) s += a[j] * b[k - j];
    h[k] = s;
  }
  return h;
}

void fill_tail_nan(Series& h) {
  for (std::size_t k = 1; k < h.size(); ++k) h[k] = std::numeric_limits<double>::quiet_NaN();
}

Series jet_node(const Expr& e, double x, int top);

// Constant exponent only; non-constant exponents were rewritten at build time.
Series pow_series(const Expr& e, Series a, double c) {
  const std::size_t n = a.size();
  const bool integral = std::isfinite(c) && std::floor(c) == c;
  if (integral) {
    if (a[0] == 0.0 && c < 0.0) {
      throw EvalError("zero raised to a negative power", to_string(e.child(0)));
    }
    if (a[0] == 0.0) {
      // The value recurrence divides by a_0; an exactly-zero base is instead
      // raised by squaring, which stays exact for polynomial jets like x^3.
      Series result(n, 0.0);
      result[0] = 1.0;
      long long m = static_cast<long long>(c);
      while (m > 0) {
        if (m & 1) result = series_mul(result, a);
        m >>= 1;
        if (m) a = series_mul(a, a);
      }
      return result;
    }
  } else {
    if (a[0] < 0.0) throw EvalError("fractional power of a negative value", to_string(e.child(0)));
    if (a[0] == 0.0) {
      Series h(n, 0.0);
      h[0] = std::pow(a[0], c);
      fill_tail_nan(h);
      return h;
    }
  }
  Series h(n, 0.0);
  h[0] = std::pow(a[0], c);
  for (std::size_t k = 1; k < n; ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) {
      s += ((c + 1.0) * static_cast<double>(j) - static_cast<double>(k)) * a[j] * h[k - j];
    }
    h[k] = s / (static_cast<double>(k) * a[0]);
  }
  return h;
}

Series jet_node(const Expr& e, double x, int top) {
  const std::size_t n = static_cast<std::size_t>(top) + 1;
  switch (e.kind()) {
    case NodeKind::Constant: {
      Series h(n, 0.0);
      h[0] = e.constant_value();
      return h;
    }
    case NodeKind::Variable: {
      Series h(n, 0.0);
      h[0] = x;
      if (top >= 1) h[1] = 1.0;
      return h;
    }
    case NodeKind::Neg: {
      Series h = jet_node(e.child(0), x, top);
      for (double& c : h) c = -c;
      return h;
    }
    case NodeKind::Add:
    case NodeKind::Sub: {
      Series a = jet_node(e.child(0), x, top);
      const Series b = jet_node(e.child(1), x, top);
      if (e.kind() == NodeKind::Add) {
        for (std::size_t k = 0; k < n; ++k) a[k] += b[k];
      } else {
        for (std::size_t k = 0; k < n; ++k) a[k] -= b[k];
      }
      return a;
    }
    case NodeKind::Mul:
      return series_mul(jet_node(e.child(0), x, top), jet_node(e.child(1), x, top));
    case NodeKind::Div: {
      // divisor first, as eval does, so double-fault points report the same error
      const Series b = jet_node(e.child(1), x, top);
      if (b[0] == 0.0) throw EvalError("division by zero", to_string(e.child(1)));
      const Series a = jet_node(e.child(0), x, top);
      Series h(n, 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        double s = a[k];
        for (std::size_t j = 1; j <= k; ++j) s -= b[j] * h[k - j];
        h[k] = s / b[0];
      }
      return h;
    }
    case NodeKind::Sin:
    case NodeKind::Cos: {
      const Series a = jet_node(e.child(0), x, top);
      Series s(n, 0.0), c(n, 0.0);
      s[0] = std::sin(a[0]);
      c[0] = std::cos(a[0]);
      for (std::size_t k = 1; k < n; ++k) {
        double ds = 0.0, dc = 0.0;
        for (std::size_t j = 1; j <= k; ++j) {
          ds += static_cast<double>(j) * a[j] * c[k - j];
          dc += static_cast<double>(j) * a[j] * s[k - j];
        }
        s[k] = ds / static_cast<double>(k);
        c[k] = -dc / static_cast<double>(k);
      }
      return e.kind() == NodeKind::Sin ? s : c;
    }
    case NodeKind::Exp: {
      const Series a = jet_node(e.child(0), x, top);
      Series h(n, 0.0);
      h[0] = std::exp(a[0]);
      for (std::size_t k = 1; k < n; ++k) {
        double s = 0.0;
        for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * a[j] * h[k - j];
        h[k] = s / static_cast<double>(k);
      }
      return h;
    }
    case NodeKind::Log: {
      const Series a = jet_node(e.child(0), x, top);
      if (!(a[0] > 0)) throw EvalError("log of a non-positive value", to_string(e.child(0)));
      Series h(n, 0.0);
      h[0] = std::log(a[0]);
      for (std::size_t k = 1; k < n; ++k) {
        double s = 0.0;
        for (std::size_t j = 1; j < k; ++j) s += static_cast<double>(j) * h[j] * a[k - j];
        h[k] = (a[k] - s / static_cast<double>(k)) / a[0];
      }
      return h;
    }
    case NodeKind::Sqrt: {
      const Series a = jet_node(e.child(0), x, top);
      if (a[0] < 0) throw EvalError("sqrt of a negative value", to_string(e.child(0)));
      Series h(n, 0.0);
      h[0] = std::sqrt(a[0]);
      if (h[0] == 0.0) {
        fill_tail_nan(h);
        return h;
      }
      for (std::size_t k = 1; k < n; ++k) {
        double s = a[k];
        for (std::size_t j = 1; j < k; ++j) s -= h[j] * h[k - j];
        h[k] = s / (2.0 * h[0]);
      }
      return h;
    }
    case NodeKind::Tanh: {
      const Series a = jet_node(e.child(0), x, top);
      Series t(n, 0.0), u(n, 0.0);  // u = t^2, finalized through index k after t[k]
      t[0] = std::tanh(a[0]);
      u[0] = t[0] * t[0];
      for (std::size_t k = 1; k < n; ++k) {
        double s = 0.0;
        for (std::size_t j = 1; j <= k; ++j) {
          const double w = (k == j) ? 1.0 - u[0] : -u[k - j];
          s += static_cast<double>(j) * a[j] * w;
        }
        t[k] = s / static_cast<double>(k);
        double uk = 0.0;
        for (std::size_t m = 0; m <= k; ++m) uk += t[m] * t[k - m];
        u[k] = uk;
      }
      return t;
    }
    case NodeKind::Abs: {
      // reachable only with top == 0: smoothness is rejected before recursion
      const Series a = jet_node(e.child(0), x, top);
      Series h(n, 0.0);
      h[0] = std::abs(a[0]);
      fill_tail_nan(h);
      return h;
    }
    case NodeKind::Pow:
      return pow_series(e, jet_node(e.child(0), x, top), e.child(1).constant_value());
  }
  throw EvalError("unhandled node", "?");
}

}  // namespace

std::vector<double> derivative_jet(const Expr& f, double x, int p) {
  if (p < 0) throw ExprError("derivative order must be non-negative");
  if (p >= 1 && f.smoothness() != SmoothnessClass::Smooth) {
    throw ExprError("expression is not differentiable (ContinuousOnly): " + to_string(f));
  }
  std::vector<double> jet = jet_node(f, x, p);
  double factorial = 1.0;
  for (int k = 2; k <= p; ++k) {
    factorial *= static_cast<double>(k);
    jet[static_cast<std::size_t>(k)] *= factorial;
  }
  return jet;
}

int gorny_order(int p, int k) {
  if (p < 1 || k < 1) throw std::invalid_argument("gorny_order: requires p >= 1 and k >= 1");
  // In integers the defining inequality reads k*(p*(m-1)+1) <= m*m.
  for (std::int64_t m = std::max(p, 1);; ++m) {
    std::int64_t lhs = static_cast<std::int64_t>(k) * (static_cast<std::int64_t>(p) * (m - 1) + 1);
    if (lhs <= m * m) return static_cast<int>(m);
  }
}

}  // namespace compop
