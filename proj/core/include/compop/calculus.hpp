// Derivatives of compositions: multiplicity-vector expansion of the higher
// chain rule, and the derivative-order selector for the interpolation
// inequality used by the harness.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "compop/expr.hpp"

namespace compop {

// counts[j-1] is the multiplicity of derivative order j; sum of j*counts[j-1]
// equals p.  outer_order = sum of counts = order of the outer derivative.
struct PartitionTerm {
  std::vector<int> counts;
  std::uint64_t coefficient = 0;
  int outer_order = 0;
};

// All multiplicity vectors for order p, first slot descending, memoized and
// safe to call concurrently.  p = 0 yields one empty term with coefficient 1.
const std::vector<PartitionTerm>& partitions(int p);

// p! / prod_j (counts[j-1]! * (j!)^counts[j-1]), exact; throws
// std::overflow_error when the 64-bit range would be exceeded (p > 20).
std::uint64_t faa_coefficient(std::span<const int> counts);

// p-th derivative of f(phi(x)) at x via the expansion over partitions(p).
double compose_derivative(const Expr& f, const Expr& phi, int p, double x);

// Same expansion from precomputed values: f_derivs_at_phi[i] = f^{(i)}(phi(x)),
// phi_derivs[j] = phi^{(j)}(x), both with at least p+1 entries.
double compose_derivative_from_values(std::span<const double> f_derivs_at_phi,
                                      std::span<const double> phi_derivs, int p);

// Smallest integer m >= max(p,1) with (1-(p-1)/m)*(1/m) + (p-1)/m <= 1/k,
// decided in exact integer arithmetic.
int gorny_order(int p, int k);

// f(x), f'(x), ..., f^(p)(x) in one pass: a degree-p Taylor series is pushed
// through the tree, so the cost is O(node_count * p^2) and independent of how
// large the symbolic derivatives would grow.  Throws ExprError for p >= 1 on a
// ContinuousOnly tree; domain faults raise EvalError exactly as eval does.
std::vector<double> derivative_jet(const Expr& f, double x, int p);

// f, f', f'', ... extended on demand; each order is built from the previous
// one so repeated queries stay cheap.
class DerivativeLadder {
 public:
  explicit DerivativeLadder(Expr f) { orders_.push_back(std::move(f)); }

  const Expr& order(int p) {
    while (static_cast<int>(orders_.size()) <= p) {
      orders_.push_back(derivative(orders_.back(), 1));
    }
    return orders_[static_cast<std::size_t>(p)];
  }

  int max_order() const { return static_cast<int>(orders_.size()) - 1; }

 private:
  std::vector<Expr> orders_;
};

}  // namespace compop
