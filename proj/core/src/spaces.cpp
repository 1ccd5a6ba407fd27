#include "compop/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "grid_cache.hpp"

namespace compop {

namespace {

// One quantifier cell: is sup |f^(p)| * v_N (decay == true) or
// sup |f^(p)| / v_N (decay == false) finite?
class CellTable {
 public:
  CellTable(DerivativeSource& f, const WeightSystem& system, bool decay, const Grid& grid,
            const ClassifierThresholds& thresholds, int jobs)
      : f_(f), weights_(system, grid, jobs), decay_(decay), grid_(grid), thresholds_(thresholds) {}

  const GrowthVerdict& cell(int N, int p) {
    auto it = cache_.find({N, p});
    if (it != cache_.end()) return it->second;
    const GridValues& fp = f_.order(p);
    const GridValues& vN = weights_.plain(N);
    GrowthVerdict verdict = classify_values(
        grid_, decay_ ? detail::product(grid_, fp, vN) : detail::ratio(grid_, fp, vN), thresholds_);
    auto [pos, inserted] = cache_.emplace(std::pair<int, int>{N, p}, std::move(verdict));
    order_.push_back({N, p});
    return pos->second;
  }

  // cells in first-use order, for the verdict table
  std::vector<MembershipCell> table() {
    std::vector<MembershipCell> out;
    out.reserve(order_.size());
    for (const auto& key : order_) {
      out.push_back({key.first, key.second, cache_.at(key)});
    }
    return out;
  }

 private:
  DerivativeSource& f_;
  detail::WeightArrays weights_;
  bool decay_;
  const Grid& grid_;
  const ClassifierThresholds& thresholds_;
  std::map<std::pair<int, int>, GrowthVerdict> cache_;
  std::vector<std::pair<int, int>> order_;
};

enum class CandidateState { Works, DefiniteFail, Unknown };

// Conjunction over p in [0, p_top] of cells at weight index N.
CandidateState scan_candidate(CellTable& cells, int N, int p_top, int* fail_p) {
  bool unknown = false;
  for (int p = 0; p <= p_top; ++p) {
    const GrowthVerdict& v = cells.cell(N, p);
    if (v.tag == GrowthTag::Diverging) {
      if (fail_p) *fail_p = p;
      return CandidateState::DefiniteFail;
    }
    if (v.tag != GrowthTag::Bounded) unknown = true;
  }
  return unknown ? CandidateState::Unknown : CandidateState::Works;
}

// exists N <= N_top with all cells p <= p_top(N) bounded
MembershipTag scan_exists(CellTable& cells, int N_top, const std::function<int(int)>& p_top,
                          int* witness_N) {
  bool all_definite_fail = true;
  for (int N = 0; N <= N_top; ++N) {
    const CandidateState state = scan_candidate(cells, N, p_top(N), nullptr);
    if (state == CandidateState::Works) {
      if (witness_N) *witness_N = N;
      return MembershipTag::Holds;
    }
    if (state != CandidateState::DefiniteFail) all_definite_fail = false;
  }
  return all_definite_fail ? MembershipTag::Fails : MembershipTag::Inconclusive;
}

}  // namespace

const char* to_cstring(SpaceFamily family) {
  switch (family) {
    case SpaceFamily::K: return "K";
    case SpaceFamily::OC: return "OC";
    case SpaceFamily::OM: return "OM";
    case SpaceFamily::B: return "B";
    case SpaceFamily::OMn: return "OMn";
  }
  return "K";
}

const char* to_cstring(MembershipTag tag) {
  switch (tag) {
    case MembershipTag::Holds: return "holds";
    case MembershipTag::Fails: return "fails";
    case MembershipTag::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

double seminorm(const Expr& f, const Expr& v, int n, double radius, int samples) {
  if (n < 0) throw std::invalid_argument("seminorm order must be >= 0");
  if (!(radius > 0.0)) throw std::invalid_argument("seminorm radius must be > 0");
  if (samples < 3) throw std::invalid_argument("seminorm needs >= 3 samples");
  if (samples % 2 == 0) ++samples;  // odd count keeps 0 and both endpoints on the grid
  DerivativeLadder ladder(f);
  double best = 0.0;
  for (int p = 0; p <= n; ++p) {
    const Expr& d = ladder.order(p);
    for (int i = 0; i < samples; ++i) {
      const double x = -radius + 2.0 * radius * static_cast<double>(i) / static_cast<double>(samples - 1);
      best = std::max(best, std::abs(d.eval(x)) / v.eval(x));
    }
  }
  return best;
}

namespace {

// ExprArrays as a DerivativeSource
class SymbolicSource final : public DerivativeSource {
 public:
  SymbolicSource(Expr f, const Grid& grid, int jobs) : arrays_(std::move(f), grid, jobs) {}
  const GridValues& order(int p) override { return arrays_.order(p); }

 private:
  detail::ExprArrays arrays_;
};

}  // namespace

MembershipVerdict membership(const Expr& f, const SpaceSpec& spec, const WindowSchedule& schedule,
                             const ClassifierThresholds& thresholds, int jobs) {
  if (f.smoothness() != SmoothnessClass::Smooth) {
    MembershipVerdict out;
    out.diagnostic = "membership needs a smooth function";
    return out;
  }
  Grid grid(schedule);
  SymbolicSource source(f, grid, jobs);
  return membership_from(source, spec, grid, thresholds, jobs);
}

MembershipVerdict membership_from(DerivativeSource& f, const SpaceSpec& spec, const Grid& grid,
                                  const ClassifierThresholds& thresholds, int jobs) {
  MembershipVerdict out;
  const bool decay = spec.family == SpaceFamily::K;
  CellTable cells(f, spec.system, decay, grid, thresholds, jobs);
  const int N_top = std::min(spec.N_max, spec.system.max_index());

  try {
    switch (spec.family) {
      case SpaceFamily::K: {
        // for every N: all orders p <= N bounded against weight v_N
        out.tag = MembershipTag::Holds;
        for (int N = 0; N <= N_top && out.tag != MembershipTag::Fails; ++N) {
          for (int p = 0; p <= N; ++p) {
            const GrowthVerdict& v = cells.cell(N, p);
            if (v.tag == GrowthTag::Diverging) {
              out.tag = MembershipTag::Fails;
              out.witness_N = N;
              out.witness_n = p;
              break;
            }
            if (v.tag == GrowthTag::Inconclusive) out.tag = MembershipTag::Inconclusive;
          }
        }
        break;
      }
      case SpaceFamily::B: {
        // fixed weight index spec.n, every order up to n_max
        const int idx = std::min(spec.n, spec.system.max_index());
        out.tag = MembershipTag::Holds;
        for (int p = 0; p <= spec.n_max; ++p) {
          const GrowthVerdict& v = cells.cell(idx, p);
          if (v.tag == GrowthTag::Diverging) {
            out.tag = MembershipTag::Fails;
            out.witness_N = idx;
            out.witness_n = p;
            break;
          }
          if (v.tag == GrowthTag::Inconclusive) out.tag = MembershipTag::Inconclusive;
        }
        break;
      }
      case SpaceFamily::OC: {
        // the candidate index must control every order, so probe past N as well
        auto p_top = [&spec](int N) { return std::max(spec.n_max, N + 2); };
        out.tag = scan_exists(cells, N_top, p_top, &out.witness_N);
        break;
      }
      case SpaceFamily::OMn: {
        auto p_top = [&spec](int) { return spec.n; };
        out.tag = scan_exists(cells, N_top, p_top, &out.witness_N);
        break;
      }
      case SpaceFamily::OM: {
        // for every order n, some N controls orders p <= n
        out.tag = MembershipTag::Holds;
        for (int n = 0; n <= spec.n_max; ++n) {
          int witness = -1;
          auto p_top = [n](int) { return n; };
          const MembershipTag level = scan_exists(cells, N_top, p_top, &witness);
          if (level == MembershipTag::Fails) {
            out.tag = MembershipTag::Fails;
            out.witness_n = n;
            break;
          }
          if (level == MembershipTag::Inconclusive) out.tag = MembershipTag::Inconclusive;
        }
        break;
      }
    }
  } catch (const std::exception& e) {
    out.tag = MembershipTag::Inconclusive;
    out.diagnostic = e.what();
  }
  out.cells = cells.table();
  return out;
}

InclusionChainReport inclusion_chain_check(const Expr& f, const WeightSystem& system,
                                           const Bounds& bounds, const WindowSchedule& schedule,
                                           const ClassifierThresholds& thresholds, int jobs) {
  InclusionChainReport rep;
  SpaceSpec spec;
  spec.system = system;
  spec.N_max = bounds.N_max;
  spec.n_max = bounds.n_max;

  spec.family = SpaceFamily::K;
  rep.k = membership(f, spec, schedule, thresholds, jobs);
  spec.family = SpaceFamily::OC;
  rep.oc = membership(f, spec, schedule, thresholds, jobs);
  spec.family = SpaceFamily::OM;
  rep.om = membership(f, spec, schedule, thresholds, jobs);

  auto violates = [](const MembershipVerdict& small, const MembershipVerdict& large) {
    return small.tag == MembershipTag::Holds && large.tag == MembershipTag::Fails;
  };
  if (violates(rep.k, rep.oc)) {
    rep.consistent = false;
    rep.violation = "K holds but OC fails";
  } else if (violates(rep.k, rep.om)) {
    rep.consistent = false;
    rep.violation = "K holds but OM fails";
  } else if (violates(rep.oc, rep.om)) {
    rep.consistent = false;
    rep.violation = "OC holds but OM fails";
  }
  return rep;
}

}  // namespace compop
