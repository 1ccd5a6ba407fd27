// Weighted seminorms and membership tests for the five space families, each a
// quantifier pattern over growth-classifier cells.
#pragma once

#include <string>
#include <vector>

#include "compop/config.hpp"
#include "compop/expr.hpp"
#include "compop/weights.hpp"

namespace compop {

// K:   for every N,  max_{p<=N} sup |f^(p)| * v_N        < inf   (decay ladder)
// OC:  some N works for every order:   sup |f^(p)| / v_N < inf for all p
// OM:  every order n admits some N:    sup |f^(p)| / v_N < inf for p <= n
// B:   fixed index n:                  sup |f^(p)| / v_n < inf for all p
// OMn: fixed order n, some N:          sup |f^(p)| / v_N < inf for p <= n
enum class SpaceFamily { K, OC, OM, B, OMn };
const char* to_cstring(SpaceFamily family);

struct SpaceSpec {
  SpaceFamily family = SpaceFamily::K;
  WeightSystem system;
  int n = 0;  // fixed weight index for B, fixed seminorm order for OMn
  int N_max = Bounds{}.N_max;
  int n_max = Bounds{}.n_max;
};

enum class MembershipTag { Holds, Fails, Inconclusive };
const char* to_cstring(MembershipTag tag);

struct MembershipCell {
  int N = 0;  // weight index
  int p = 0;  // derivative order
  GrowthVerdict verdict;
};

struct MembershipVerdict {
  MembershipTag tag = MembershipTag::Inconclusive;
  std::vector<MembershipCell> cells;  // every classified cell, scan order
  int witness_N = -1;  // Holds via exists-N: the witness; Fails: weight index of the deciding cell
  int witness_n = -1;  // Fails: derivative order (or OM order) of the deciding cell
  std::string diagnostic;
};

// max over p <= n of the sup of |f^(p)(x)| / v(x) over an equispaced grid on
// [-radius, radius] (endpoints included)
double seminorm(const Expr& f, const Expr& v, int n, double radius, int samples = 8193);

// Supplies derivative values over a fixed grid; lets membership run on
// functions that only exist numerically (compositions).
class DerivativeSource {
 public:
  virtual ~DerivativeSource() = default;
  virtual const GridValues& order(int p) = 0;
};

MembershipVerdict membership(const Expr& f, const SpaceSpec& spec, const WindowSchedule& schedule,
                             const ClassifierThresholds& thresholds, int jobs = 1);

MembershipVerdict membership_from(DerivativeSource& f, const SpaceSpec& spec, const Grid& grid,
                                  const ClassifierThresholds& thresholds, int jobs = 1);

struct InclusionChainReport {
  MembershipVerdict k;
  MembershipVerdict oc;
  MembershipVerdict om;
  bool consistent = true;   // Holds never sits left of Fails along K -> OC -> OM
  std::string violation;
};

InclusionChainReport inclusion_chain_check(const Expr& f, const WeightSystem& system,
                                           const Bounds& bounds, const WindowSchedule& schedule,
                                           const ClassifierThresholds& thresholds, int jobs = 1);

}  // namespace compop
