#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "compop/calculus.hpp"
#include "compop/expr.hpp"
#include "doctest.h"

using namespace compop;

namespace {

// Euler's pentagonal-number recurrence, independent of the enumeration under test.
std::vector<std::uint64_t> partition_numbers(int top) {
  std::vector<std::uint64_t> p(static_cast<std::size_t>(top) + 1, 0);
  p[0] = 1;
  for (int n = 1; n <= top; ++n) {
    std::uint64_t acc = 0;
    for (int k = 1;; ++k) {
      const int g1 = k * (3 * k - 1) / 2;
      const int g2 = k * (3 * k + 1) / 2;
      if (g1 > n && g2 > n) break;
      const std::uint64_t sign = (k % 2 == 1) ? 1 : 0;
      std::uint64_t term = 0;
      if (g1 <= n) term += p[static_cast<std::size_t>(n - g1)];
      if (g2 <= n) term += p[static_cast<std::size_t>(n - g2)];
      acc = sign ? acc + term : acc - term;
    }
    p[static_cast<std::size_t>(n)] = acc;
  }
  return p;
}

// Bell triangle, again independent of the code under test.
std::vector<std::uint64_t> bell_numbers(int top) {
  std::vector<std::uint64_t> bell{1};
  std::vector<std::uint64_t> row{1};
  for (int n = 1; n <= top; ++n) {
    std::vector<std::uint64_t> next(row.size() + 1);
    next[0] = row.back();
    for (std::size_t i = 0; i < row.size(); ++i) next[i + 1] = next[i] + row[i];
    bell.push_back(next.front());  // each row opens with the Bell number
    row = std::move(next);
  }
  return bell;
}

}  // namespace

TEST_CASE("partition term counts match the pentagonal recurrence") {
  const auto expected = partition_numbers(20);
  for (int p = 0; p <= 20; ++p) {
    CAPTURE(p);
    CHECK(partitions(p).size() == expected[static_cast<std::size_t>(p)]);
  }
  CHECK_THROWS_AS(partitions(21), std::overflow_error);
  CHECK_THROWS_AS(partitions(-1), std::invalid_argument);
}

TEST_CASE("partition terms are well-formed and coefficient sums hit the Bell numbers") {
  const auto bell = bell_numbers(10);
  for (int p = 1; p <= 10; ++p) {
    CAPTURE(p);
    std::uint64_t sum = 0;
    for (const PartitionTerm& term : partitions(p)) {
      int weight = 0, total = 0;
      for (std::size_t j = 0; j < term.counts.size(); ++j) {
        weight += static_cast<int>(j + 1) * term.counts[j];
        total += term.counts[j];
      }
      CHECK(weight == p);
      CHECK(total == term.outer_order);
      CHECK(term.coefficient == faa_coefficient(term.counts));
      sum += term.coefficient;
    }
    CHECK(sum == bell[static_cast<std::size_t>(p)]);
  }
}

TEST_CASE("order-4 expansion coefficients are the textbook five") {
  // partitions of 4 -> coefficients {1, 4, 3, 6, 1} keyed by multiplicity vector
  std::uint64_t seen_sum = 0;
  for (const PartitionTerm& term : partitions(4)) seen_sum += term.coefficient;
  CHECK(partitions(4).size() == 5);
  CHECK(seen_sum == 15);  // Bell(4)
  CHECK(faa_coefficient(std::vector<int>{0, 0, 0, 1}) == 1);  // phi''''
  CHECK(faa_coefficient(std::vector<int>{1, 0, 1, 0}) == 4);  // phi' phi'''
  CHECK(faa_coefficient(std::vector<int>{0, 2, 0, 0}) == 3);  // (phi'')^2
  CHECK(faa_coefficient(std::vector<int>{2, 1, 0, 0}) == 6);  // (phi')^2 phi''
  CHECK(faa_coefficient(std::vector<int>{4, 0, 0, 0}) == 1);  // (phi')^4
  CHECK_THROWS_AS(faa_coefficient(std::vector<int>{-1}), std::invalid_argument);
}

TEST_CASE("composition derivatives match closed forms for sin(x^2)") {
  const Expr f = parse("sin(x)");
  const Expr phi = parse("x^2");
  for (double x : {-1.7, -0.3, 0.0, 0.9, 2.2}) {
    const double s = std::sin(x * x), c = std::cos(x * x);
    CHECK(compose_derivative(f, phi, 0, x) == doctest::Approx(s).epsilon(1e-12));
    CHECK(compose_derivative(f, phi, 1, x) == doctest::Approx(2 * x * c).epsilon(1e-12));
    CHECK(compose_derivative(f, phi, 2, x) == doctest::Approx(2 * c - 4 * x * x * s).epsilon(1e-12));
    CHECK(compose_derivative(f, phi, 3, x) ==
          doctest::Approx(-12 * x * s - 8 * x * x * x * c).epsilon(1e-11));
  }
}

TEST_CASE("composition expansion agrees with differentiating the substituted tree") {
  const Expr fs[] = {parse("sin(x)"), parse("exp(-x^2)"), parse("1/(2+x^2)")};
  const Expr phis[] = {parse("x^2"), parse("x^3+x"), parse("sin(x)")};
  for (const Expr& f : fs) {
    for (const Expr& phi : phis) {
      DerivativeLadder ladder(substitute(f, phi));
      for (double x : {-1.1, 0.4, 1.6}) {
        for (int p = 0; p <= 6; ++p) {
          CAPTURE(to_string(f));
          CAPTURE(to_string(phi));
          CAPTURE(x);
          CAPTURE(p);
          const double direct = ladder.order(p).eval(x);
          const double expanded = compose_derivative(f, phi, p, x);
          CHECK(expanded == doctest::Approx(direct).epsilon(1e-9));
        }
      }
    }
  }
}

TEST_CASE("compose_derivative_from_values validates and guards NaN") {
  std::vector<double> fd{1.0, 2.0, 3.0};
  std::vector<double> pd{0.5, 1.5, 2.5};
  CHECK_THROWS_AS(compose_derivative_from_values(fd, pd, 3), std::invalid_argument);
  CHECK_THROWS_AS(compose_derivative_from_values(fd, pd, -1), std::invalid_argument);
  CHECK(compose_derivative_from_values(fd, pd, 0) == 1.0);
  fd[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK(std::isnan(compose_derivative_from_values(fd, pd, 2)));
}

TEST_CASE("derivative ladder matches extended-precision central differences") {
  const Expr e = parse("sin(x^2)*exp(-x^2)");
  DerivativeLadder ladder(e);
  CHECK(ladder.max_order() == 0);
  for (double x : {-1.3, 0.5, 1.1}) {
    for (int p = 1; p <= 3; ++p) {
      // 5-point stencils on eval_ld keep truncation + cancellation below 1e-8
      const long double h = 1e-3L;
      long double fd = 0.0L;
      if (p == 1) {
        fd = (-eval_ld(e, x + 2 * h) + 8 * eval_ld(e, x + h) - 8 * eval_ld(e, x - h) +
              eval_ld(e, x - 2 * h)) /
             (12 * h);
      } else if (p == 2) {
        fd = (-eval_ld(e, x + 2 * h) + 16 * eval_ld(e, x + h) - 30 * eval_ld(e, x) +
              16 * eval_ld(e, x - h) - eval_ld(e, x - 2 * h)) /
             (12 * h * h);
      } else {
        auto d3 = [&](long double hh) {
          return (eval_ld(e, x + 2 * hh) - 2 * eval_ld(e, x + hh) + 2 * eval_ld(e, x - hh) -
                  eval_ld(e, x - 2 * hh)) /
                 (2 * hh * hh * hh);
        };
        fd = (4 * d3(h / 2) - d3(h)) / 3;  // Richardson: one halving removes the h^2 term
      }
      CAPTURE(x);
      CAPTURE(p);
      CHECK(ladder.order(p).eval(x) == doctest::Approx(static_cast<double>(fd)).epsilon(1e-7));
    }
  }
  CHECK(ladder.max_order() >= 3);
}

TEST_CASE("gorny_order values and minimality") {
  CHECK(gorny_order(2, 2) == 4);
  for (int k = 1; k <= 8; ++k) {
    CAPTURE(k);
    CHECK(gorny_order(1, k) == k);
  }
  // independent exact-integer check: m is admissible iff k*(p*(m-1)+1) <= m^2
  auto admissible = [](std::int64_t p, std::int64_t k, std::int64_t m) {
    return k * (p * (m - 1) + 1) <= m * m;
  };
  for (int p = 1; p <= 6; ++p) {
    for (int k = 1; k <= 8; ++k) {
      const int m = gorny_order(p, k);
      CAPTURE(p);
      CAPTURE(k);
      CHECK(m >= std::max(p, 1));
      CHECK(admissible(p, k, m));
      if (m > std::max(p, 1)) CHECK(!admissible(p, k, m - 1));
    }
  }
}

TEST_CASE("derivative jets match the symbolic ladder") {
  const char* symbols[] = {"sin(x)",     "exp(-x^2)", "x*exp(-x^2)", "sin(x^2)", "tanh(x)",
                           "x^3+x",      "exp(x)",    "sqrt(1+x^2)", "log(1+x^2)",
                           "cos(x)/(2+sin(x))", "(1+x^2)^1.5"};
  for (const char* s : symbols) {
    const Expr f = parse(s);
    DerivativeLadder ladder(f);
    for (double x : {-2.1, -0.4, 0.0, 0.8, 1.9}) {
      const std::vector<double> jet = derivative_jet(f, x, 8);
      REQUIRE(jet.size() == 9);
      for (int p = 0; p <= 8; ++p) {
        CAPTURE(s);
        CAPTURE(x);
        CAPTURE(p);
        const double want = ladder.order(p).eval(x);
        if (std::isnan(want)) continue;  // symbolic quotient towers can overflow
        CHECK(jet[static_cast<std::size_t>(p)] ==
              doctest::Approx(want).epsilon(1e-9).scale(std::max(1.0, std::abs(want))));
      }
    }
  }
}

TEST_CASE("jets survive where symbolic quotient towers overflow") {
  // 9th derivative of 1/(1+x^2): the symbolic tree squares its denominator per
  // order and evaluates to inf/inf; values frozen from the partial-fraction
  // closed form over 1/(x-i), 1/(x+i).
  const Expr f = parse("1/(1+x^2)");
  CHECK(std::isnan(DerivativeLadder(f).order(9).eval(-2.3)));
  CHECK(derivative_jet(f, -2.3, 9)[9] == doctest::Approx(-30.185486398288502).epsilon(1e-12));
  CHECK(derivative_jet(f, 1.9, 9)[9] == doctest::Approx(172.75922765262151).epsilon(1e-12));
}

TEST_CASE("jets reproduce exact patterns") {
  // sin at 0: 0, 1, 0, -1 repeating
  const std::vector<double> s = derivative_jet(parse("sin(x)"), 0.0, 7);
  const double want[] = {0, 1, 0, -1, 0, 1, 0, -1};
  for (int p = 0; p <= 7; ++p) CHECK(s[static_cast<std::size_t>(p)] == doctest::Approx(want[p]));
  // x^3 at the exactly-zero base point
  const std::vector<double> c = derivative_jet(parse("x^3"), 0.0, 5);
  const double cubic[] = {0, 0, 0, 6, 0, 0};
  for (int p = 0; p <= 5; ++p) CHECK(c[static_cast<std::size_t>(p)] == cubic[p]);
  // exp duplicates its own value
  const std::vector<double> e = derivative_jet(parse("exp(x)"), 1.5, 6);
  for (int p = 0; p <= 6; ++p) CHECK(e[static_cast<std::size_t>(p)] == doctest::Approx(std::exp(1.5)));
}

TEST_CASE("jets mirror eval error semantics") {
  CHECK_THROWS_AS(derivative_jet(parse("log(x)"), -1.0, 3), EvalError);
  CHECK_THROWS_AS(derivative_jet(parse("1/x"), 0.0, 2), EvalError);
  CHECK_THROWS_AS(derivative_jet(parse("x^-2"), 0.0, 2), EvalError);
  CHECK_THROWS_AS(derivative_jet(parse("abs(x)"), 1.0, 1), ExprError);
  CHECK_THROWS_AS(derivative_jet(parse("x"), 1.0, -1), ExprError);
  // order 0 on a non-smooth tree is plain evaluation
  CHECK(derivative_jet(parse("abs(x)"), -2.0, 0)[0] == 2.0);
}
