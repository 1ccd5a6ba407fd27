#include <cmath>
#include <map>
#include <stdexcept>

#include "compop/expr.hpp"
#include "compop/spaces.hpp"
#include "doctest.h"

using namespace compop;

namespace {

WindowSchedule small_schedule() { return WindowSchedule{9, 512}; }

ClassifierThresholds defaults() { return ClassifierThresholds{}; }

SpaceSpec spec_for(SpaceFamily family, WeightSystem system = WeightSystem::power(parse("1+abs(x)"))) {
  SpaceSpec spec;
  spec.family = family;
  spec.system = std::move(system);
  return spec;
}

MembershipTag tag_of(const char* f, SpaceFamily family) {
  return membership(parse(f), spec_for(family), small_schedule(), defaults()).tag;
}

}  // namespace

TEST_CASE("seminorm evaluates the max over orders of weighted sups") {
  // constant: only the order-0 term, sup 1/(1+|x|) attained at 0
  CHECK(seminorm(parse("1"), parse("1+abs(x)"), 0, 100.0) == doctest::Approx(1.0));
  // sin with the flat weight: both |sin| and |cos| reach 1 on [-100, 100]
  CHECK(seminorm(parse("sin(x)"), parse("1"), 1, 100.0) == doctest::Approx(1.0).epsilon(1e-6));
  // f = x, v = 1+|x|, n = 1: the order-1 term sup 1/(1+|x|) attains 1.0 at
  // x = 0 and dominates the order-0 sup 100/101
  CHECK(seminorm(parse("x"), parse("1+abs(x)"), 1, 100.0) == doctest::Approx(1.0));
  // same data at order 0 only: the boundary ratio 100/101
  CHECK(seminorm(parse("x"), parse("1+abs(x)"), 0, 100.0) == doctest::Approx(100.0 / 101.0));
}

TEST_CASE("seminorm grows with the order and the radius") {
  const Expr f = parse("exp(x)");
  const Expr v = parse("1");
  const double base = seminorm(f, v, 0, 2.0);
  CHECK(seminorm(f, v, 0, 3.0) > base);
  CHECK(seminorm(f, v, 2, 2.0) == doctest::Approx(base));  // every derivative repeats exp
  CHECK(seminorm(parse("x^3"), v, 3, 2.0) >= seminorm(parse("x^3"), v, 1, 2.0));
}

TEST_CASE("seminorm validates its arguments") {
  CHECK_THROWS_AS(seminorm(parse("x"), parse("1"), -1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(seminorm(parse("x"), parse("1"), 0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(seminorm(parse("x"), parse("1"), 0, 1.0, 2), std::invalid_argument);
}

TEST_CASE("decay family membership over the polynomial system") {
  CHECK(tag_of("exp(-x^2)", SpaceFamily::K) == MembershipTag::Holds);
  CHECK(tag_of("x*exp(-x^2)", SpaceFamily::K) == MembershipTag::Holds);
  CHECK(tag_of("x^3", SpaceFamily::K) == MembershipTag::Fails);
  CHECK(tag_of("sin(x)", SpaceFamily::K) == MembershipTag::Fails);  // no decay against v_1
}

TEST_CASE("ratio families separate sin(x^2) as the canonical example") {
  // derivatives of sin(x^2) grow like |2x|^p: no single index controls every
  // order, but each fixed order is controlled by some index
  CHECK(tag_of("sin(x^2)", SpaceFamily::OC) == MembershipTag::Fails);
  CHECK(tag_of("sin(x^2)", SpaceFamily::OM) == MembershipTag::Holds);
  CHECK(tag_of("sin(x)", SpaceFamily::OC) == MembershipTag::Holds);
  CHECK(tag_of("exp(x)", SpaceFamily::OM) == MembershipTag::Fails);
}

TEST_CASE("membership verdicts carry witnesses and cells") {
  const MembershipVerdict fails =
      membership(parse("x^3"), spec_for(SpaceFamily::K), small_schedule(), defaults());
  CHECK(fails.tag == MembershipTag::Fails);
  CHECK(fails.witness_N >= 0);
  CHECK(fails.witness_n >= 0);
  CHECK(!fails.cells.empty());
  const MembershipCell& last = fails.cells.back();
  CHECK(last.N == fails.witness_N);
  CHECK(last.p == fails.witness_n);
  CHECK(last.verdict.tag == GrowthTag::Diverging);

  const MembershipVerdict holds =
      membership(parse("sin(x)"), spec_for(SpaceFamily::OC), small_schedule(), defaults());
  CHECK(holds.tag == MembershipTag::Holds);
  CHECK(holds.witness_N >= 0);

  const MembershipVerdict om_fails =
      membership(parse("exp(x)"), spec_for(SpaceFamily::OM), small_schedule(), defaults());
  CHECK(om_fails.tag == MembershipTag::Fails);
  CHECK(om_fails.witness_n == 0);  // already the plain values outgrow every index
}

TEST_CASE("fixed-index family matches bounded-derivative functions") {
  const SpaceSpec b = spec_for(SpaceFamily::B, WeightSystem());
  CHECK(membership(parse("sin(x)"), b, small_schedule(), defaults()).tag == MembershipTag::Holds);
  CHECK(membership(parse("tanh(x)"), b, small_schedule(), defaults()).tag == MembershipTag::Holds);
  CHECK(membership(parse("x^2"), b, small_schedule(), defaults()).tag == MembershipTag::Fails);
}

TEST_CASE("fixed-order family needs only enough index for its order") {
  SpaceSpec spec = spec_for(SpaceFamily::OMn);
  spec.n = 1;
  CHECK(membership(parse("sin(x^2)"), spec, small_schedule(), defaults()).tag ==
        MembershipTag::Holds);
  spec.n = 0;
  CHECK(membership(parse("exp(x)"), spec, small_schedule(), defaults()).tag == MembershipTag::Fails);
}

TEST_CASE("membership requires smoothness") {
  const MembershipVerdict v =
      membership(parse("1+abs(x)"), spec_for(SpaceFamily::OM), small_schedule(), defaults());
  CHECK(v.tag == MembershipTag::Inconclusive);
  CHECK(!v.diagnostic.empty());
}

TEST_CASE("membership_from runs on externally supplied derivative values") {
  // hand the scan the derivatives of f(x) = x directly
  class LinearSource final : public DerivativeSource {
   public:
    explicit LinearSource(const Grid& grid) : grid_(grid) {}
    const GridValues& order(int p) override {
      auto& slot = slots_[p];
      if (slot.values.empty()) {
        slot.values.resize(grid_.size());
        slot.window_errors.assign(static_cast<std::size_t>(grid_.windows()), "");
        for (std::size_t i = 0; i < grid_.size(); ++i) {
          const double x = grid_.all_points()[i];
          slot.values[i] = p == 0 ? x : (p == 1 ? 1.0 : 0.0);
        }
      }
      return slot;
    }

   private:
    const Grid& grid_;
    std::map<int, GridValues> slots_;
  };

  const Grid grid(small_schedule());
  LinearSource source(grid);
  SpaceSpec spec = spec_for(SpaceFamily::OM);
  const MembershipVerdict v = membership_from(source, spec, grid, defaults());
  CHECK(v.tag == MembershipTag::Holds);

  LinearSource decay_probe(grid);
  SpaceSpec k = spec_for(SpaceFamily::K);
  CHECK(membership_from(decay_probe, k, grid, defaults()).tag == MembershipTag::Fails);
}

TEST_CASE("inclusion chain stays consistent across the corpus") {
  const WeightSystem system = WeightSystem::power(parse("1+abs(x)"));
  for (const char* f : {"exp(-x^2)", "sin(x)", "sin(x^2)", "x^3", "tanh(x)", "exp(x)"}) {
    CAPTURE(f);
    const InclusionChainReport rep =
        inclusion_chain_check(parse(f), system, Bounds{}, small_schedule(), defaults());
    CHECK(rep.consistent);
    CHECK(rep.violation.empty());
  }
}

TEST_CASE("family and tag names render stably") {
  CHECK(std::string(to_cstring(SpaceFamily::K)) == "K");
  CHECK(std::string(to_cstring(SpaceFamily::OMn)) == "OMn");
  CHECK(std::string(to_cstring(MembershipTag::Holds)) == "holds");
  CHECK(std::string(to_cstring(MembershipTag::Fails)) == "fails");
  CHECK(std::string(to_cstring(MembershipTag::Inconclusive)) == "inconclusive");
}
