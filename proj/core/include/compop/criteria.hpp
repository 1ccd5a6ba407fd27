// Checkable characterizations of when the composition operator f -> f(phi)
// maps one weighted space into another, one checker per space family, plus
// the classical presets.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "compop/config.hpp"
#include "compop/expr.hpp"
#include "compop/spaces.hpp"
#include "compop/weights.hpp"

namespace compop {

enum class CheckTag { Pass, Fail, Inconclusive };
const char* to_cstring(CheckTag tag);

using IndexList = std::vector<std::pair<std::string, int>>;

struct ConditionCell {
  IndexList indices;  // quantifier indices in declaration order, e.g. {M, N}
  GrowthVerdict verdict;
};

struct ConditionTable {
  std::string name;  // "a" or "b"
  CheckTag tag = CheckTag::Inconclusive;
  std::vector<ConditionCell> cells;  // scan order
};

struct CriteriaVerdict {
  CheckTag overall = CheckTag::Inconclusive;
  std::string part;  // "I", "II", "III", or "B"
  ConditionTable condition_a;
  ConditionTable condition_b;
  CondMultReport hypothesis;           // weight-product closure backing the checker
  std::string hypothesis_diagnostic;   // nonempty when the hypothesis failed
  std::string witness_condition;       // "a" or "b" on Fail
  IndexList witness_indices;
  GrowthVerdict witness;               // deciding cell verdict, trail included
};

// K -> K: (a) every target index M needs some N with w_M / v_N(phi) bounded;
// (b) every order p needs some N with |phi^(p)| / v_N(phi) bounded.
// Hypothesis: V closed under products (cond-mult).
CriteriaVerdict check_K(const WeightSystem& V, const WeightSystem& W, const Expr& phi,
                        const Bounds& bounds, const WindowSchedule& schedule,
                        const ClassifierThresholds& thresholds, int jobs = 1,
                        const CondMultReport* hypothesis = nullptr);

// OC -> OC: (a) every N needs some M with v_N(phi) / w_M bounded;
// (b) one M must keep |phi^(p)| / w_M^(1/k) bounded for all p and k.
// Hypothesis: W cond-mult.
CriteriaVerdict check_OC(const WeightSystem& V, const WeightSystem& W, const Expr& phi,
                         const Bounds& bounds, const WindowSchedule& schedule,
                         const ClassifierThresholds& thresholds, int jobs = 1,
                         const CondMultReport* hypothesis = nullptr);

// OM -> OM: (a) as for OC; (b) every order p needs some M with
// |phi^(p)| / w_M bounded.  Hypothesis: W cond-mult.
CriteriaVerdict check_OM(const WeightSystem& V, const WeightSystem& W, const Expr& phi,
                         const Bounds& bounds, const WindowSchedule& schedule,
                         const ClassifierThresholds& thresholds, int jobs = 1,
                         const CondMultReport* hypothesis = nullptr);

// Bounded case: Pass iff phi', phi'', ..., phi^(p_max) all classify Bounded.
CriteriaVerdict check_B(const Expr& phi, const Bounds& bounds, const WindowSchedule& schedule,
                        const ClassifierThresholds& thresholds, int jobs = 1);

struct Preset {
  std::string name;
  SpaceSpec source;
  SpaceSpec target;
};

// S | OC | OM | B | EXP, built on (1+|x|)-powers, the constant system, or
// exp(|x|)-powers; throws std::invalid_argument for unknown names.
Preset preset(const std::string& name, const Bounds& bounds);

}  // namespace compop
