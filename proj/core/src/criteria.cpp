#include "compop/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "grid_cache.hpp"

namespace compop {

namespace {

// Shared arrays: symbol derivatives, target weights, source weights along phi.
class CheckerArrays {
 public:
  CheckerArrays(const Expr& phi, const WeightSystem& V, const WeightSystem& W, const Grid& grid,
                int jobs)
      : phi_(phi, grid, jobs), V_(V), W_(W, grid, jobs), grid_(grid) {}

  const GridValues& phi_deriv(int p) { return phi_.order(p); }
  const GridValues& target_weight(int M) { return W_.plain(M); }
  const GridValues& log_target(int M) { return W_.log_plain(M); }

  const GridValues& source_weight_at_phi(int N) {
    auto& slot = slot_for(at_phi_, N);
    if (!slot.ready) {
      slot.values = detail::map_values(grid_, V_.weight(N), phi_.order(0));
      slot.ready = true;
    }
    return slot.values;
  }

  const GridValues& log_source_at_phi(int N) {
    auto& slot = slot_for(log_at_phi_, N);
    if (!slot.ready) {
      slot.values = detail::map_values(grid_, V_.log_weight(N), phi_.order(0));
      slot.ready = true;
    }
    return slot.values;
  }

 private:
  struct Slot {
    bool ready = false;
    GridValues values;
  };

  Slot& slot_for(std::deque<Slot>& store, int N) {
    if (static_cast<std::size_t>(N) >= store.size()) store.resize(static_cast<std::size_t>(N) + 1);
    return store[static_cast<std::size_t>(N)];
  }

  detail::ExprArrays phi_;
  const WeightSystem& V_;
  detail::WeightArrays W_;
  const Grid& grid_;
  // deque: growing the cache must not invalidate references handed out earlier
  std::deque<Slot> at_phi_;
  std::deque<Slot> log_at_phi_;
};

// Existential index ranges widen with the governing universal index, so slow
// symbols and fractional tradeoffs stay decidable within fixed base bounds.
int inner_top(int base_max, int outer_index, int system_cap) {
  const long long scaled = static_cast<long long>(base_max) * std::max(1, outer_index);
  return static_cast<int>(std::min<long long>(scaled, system_cap));
}

struct ExistsResult {
  CheckTag tag = CheckTag::Inconclusive;
  int decided_cell = -1;  // index into the table's cells: bounded cell on Pass, last cell on Fail
};

// exists inner in [0, top] with cell(inner) bounded; Fail only when every
// scanned cell diverges
ExistsResult exists_scan(ConditionTable& table, int top,
                         const std::function<ConditionCell(int)>& make_cell) {
  ExistsResult res;
  bool all_diverging = true;
  for (int inner = 0; inner <= top; ++inner) {
    table.cells.push_back(make_cell(inner));
    const GrowthTag tag = table.cells.back().verdict.tag;
    if (tag == GrowthTag::Bounded) {
      res.tag = CheckTag::Pass;
      res.decided_cell = static_cast<int>(table.cells.size()) - 1;
      return res;
    }
    if (tag != GrowthTag::Diverging) all_diverging = false;
  }
  res.tag = all_diverging ? CheckTag::Fail : CheckTag::Inconclusive;
  res.decided_cell = static_cast<int>(table.cells.size()) - 1;
  return res;
}

struct ForallFold {
  CheckTag tag = CheckTag::Pass;
  void add(CheckTag level) {
    if (tag == CheckTag::Fail) return;
    if (level == CheckTag::Fail) {
      tag = CheckTag::Fail;
    } else if (level == CheckTag::Inconclusive) {
      tag = CheckTag::Inconclusive;
    }
  }
};

void record_witness(CriteriaVerdict& out, const ConditionTable& table, int cell_index) {
  if (!out.witness_condition.empty() || cell_index < 0) return;
  out.witness_condition = table.name;
  out.witness_indices = table.cells[static_cast<std::size_t>(cell_index)].indices;
  out.witness = table.cells[static_cast<std::size_t>(cell_index)].verdict;
}

// (a) for the decay checker: forall M exists N with w_M / v_N(phi) bounded.
// Weight-vs-weight ratios combine in log space so exponential systems do not
// collapse to inf/inf.
void condition_a_target_over_source(CriteriaVerdict& out, CheckerArrays& arrays,
                                    const WeightSystem& V, const WeightSystem& W,
                                    const Bounds& bounds, const Grid& grid,
                                    const ClassifierThresholds& thresholds) {
  ConditionTable& table = out.condition_a;
  table.name = "a";
  ForallFold fold;
  const int M_top = std::min(bounds.M_max, W.max_index());
  for (int M = 0; M <= M_top && fold.tag != CheckTag::Fail; ++M) {
    const ExistsResult level =
        exists_scan(table, inner_top(bounds.N_max, M, V.max_index()), [&](int N) {
          return ConditionCell{
              {{"M", M}, {"N", N}},
              classify_values(grid,
                              detail::exp_diff(grid, arrays.log_target(M),
                                               arrays.log_source_at_phi(N)),
                              thresholds)};
        });
    fold.add(level.tag);
    if (level.tag == CheckTag::Fail) record_witness(out, table, level.decided_cell);
  }
  table.tag = fold.tag;
}

// (a) for the growth checkers: forall N exists M with v_N(phi) / w_M bounded
void condition_a_source_over_target(CriteriaVerdict& out, CheckerArrays& arrays,
                                    const WeightSystem& V, const WeightSystem& W,
                                    const Bounds& bounds, const Grid& grid,
                                    const ClassifierThresholds& thresholds) {
  ConditionTable& table = out.condition_a;
  table.name = "a";
  ForallFold fold;
  const int N_top = std::min(bounds.N_max, V.max_index());
  for (int N = 0; N <= N_top && fold.tag != CheckTag::Fail; ++N) {
    const ExistsResult level =
        exists_scan(table, inner_top(bounds.M_max, N, W.max_index()), [&](int M) {
          return ConditionCell{
              {{"N", N}, {"M", M}},
              classify_values(grid,
                              detail::exp_diff(grid, arrays.log_source_at_phi(N),
                                               arrays.log_target(M)),
                              thresholds)};
        });
    fold.add(level.tag);
    if (level.tag == CheckTag::Fail) record_witness(out, table, level.decided_cell);
  }
  table.tag = fold.tag;
}

void finish(CriteriaVerdict& out, bool hypothesis_ok) {
  const CheckTag a = out.condition_a.tag;
  const CheckTag b = out.condition_b.tag;
  if (a == CheckTag::Fail || b == CheckTag::Fail) {
    out.overall = CheckTag::Fail;
  } else if (a == CheckTag::Pass && b == CheckTag::Pass) {
    out.overall = CheckTag::Pass;
  } else {
    out.overall = CheckTag::Inconclusive;
  }
  if (!hypothesis_ok) out.overall = CheckTag::Inconclusive;
}

CondMultReport run_hypothesis(const WeightSystem& system, int index_max,
                              const WindowSchedule& schedule, const ClassifierThresholds& thresholds,
                              int jobs, const CondMultReport* precomputed) {
  if (precomputed) return *precomputed;
  return check_cond_mult(system, index_max, 2 * index_max, schedule, thresholds, jobs);
}

}  // namespace

const char* to_cstring(CheckTag tag) {
  switch (tag) {
    case CheckTag::Pass: return "pass";
    case CheckTag::Fail: return "fail";
    case CheckTag::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

CriteriaVerdict check_K(const WeightSystem& V, const WeightSystem& W, const Expr& phi,
                        const Bounds& bounds, const WindowSchedule& schedule,
                        const ClassifierThresholds& thresholds, int jobs,
                        const CondMultReport* hypothesis) {
  CriteriaVerdict out;
  out.part = "I";
  Grid grid(schedule);
  CheckerArrays arrays(phi, V, W, grid, jobs);

  out.hypothesis = run_hypothesis(V, bounds.N_max, schedule, thresholds, jobs, hypothesis);
  const bool hyp_ok = out.hypothesis.ok();
  if (!hyp_ok) {
    out.hypothesis_diagnostic =
        "source weight system not closed under products within the searched indices";
  }

  condition_a_target_over_source(out, arrays, V, W, bounds, grid, thresholds);

  // (b): forall p exists N with |phi^(p)| / v_N(phi) bounded
  {
    ConditionTable& table = out.condition_b;
    table.name = "b";
    ForallFold fold;
    for (int p = 1; p <= bounds.p_max && fold.tag != CheckTag::Fail; ++p) {
      const ExistsResult level =
          exists_scan(table, inner_top(bounds.N_max, p, V.max_index()), [&](int N) {
            return ConditionCell{
                {{"p", p}, {"N", N}},
                classify_values(grid,
                                detail::ratio(grid, arrays.phi_deriv(p),
                                              arrays.source_weight_at_phi(N)),
                                thresholds)};
          });
      fold.add(level.tag);
      if (level.tag == CheckTag::Fail) record_witness(out, table, level.decided_cell);
    }
    table.tag = fold.tag;
  }

  finish(out, hyp_ok);
  return out;
}

CriteriaVerdict check_OC(const WeightSystem& V, const WeightSystem& W, const Expr& phi,
                         const Bounds& bounds, const WindowSchedule& schedule,
                         const ClassifierThresholds& thresholds, int jobs,
                         const CondMultReport* hypothesis) {
  CriteriaVerdict out;
  out.part = "II";
  Grid grid(schedule);
  CheckerArrays arrays(phi, V, W, grid, jobs);

  out.hypothesis = run_hypothesis(W, bounds.M_max, schedule, thresholds, jobs, hypothesis);
  const bool hyp_ok = out.hypothesis.ok();
  if (!hyp_ok) {
    out.hypothesis_diagnostic =
        "target weight system not closed under products within the searched indices";
  }

  condition_a_source_over_target(out, arrays, V, W, bounds, grid, thresholds);

  // (b): some M keeps |phi^(p)| / w_M^(1/k) bounded for all p and k; the
  // k-range stretches past 2M so fractional exponents below 1 are probed
  {
    ConditionTable& table = out.condition_b;
    table.name = "b";
    const int M_top = std::min(bounds.M_max, W.max_index());
    bool some_works = false;
    bool all_definite_fail = true;
    int first_diverging_cell = -1;
    for (int M = 0; M <= M_top && !some_works; ++M) {
      const int k_top = std::max(bounds.k_max, 2 * (M + 1));
      bool diverged = false;
      bool unknown = false;
      for (int p = 1; p <= bounds.p_max && !diverged; ++p) {
        const GridValues& num = arrays.phi_deriv(p);
        const GridValues& wM = arrays.target_weight(M);
        for (int k = 1; k <= k_top; ++k) {
          GridValues cell;
          cell.window_errors = detail::merge_errors(grid, {&num, &wM});
          cell.values.resize(grid.size());
          const double inv_k = 1.0 / static_cast<double>(k);
          for (std::size_t i = 0; i < grid.size(); ++i) {
            cell.values[i] = num.values[i] / std::pow(wM.values[i], inv_k);
          }
          table.cells.push_back(
              {{{"M", M}, {"p", p}, {"k", k}}, classify_values(grid, cell, thresholds)});
          const GrowthTag tag = table.cells.back().verdict.tag;
          if (tag == GrowthTag::Diverging) {
            if (first_diverging_cell < 0) {
              first_diverging_cell = static_cast<int>(table.cells.size()) - 1;
            }
            diverged = true;
            break;
          }
          if (tag != GrowthTag::Bounded) unknown = true;
        }
      }
      if (!diverged) {
        all_definite_fail = false;
        if (!unknown) some_works = true;
      }
    }
    if (some_works) {
      table.tag = CheckTag::Pass;
    } else if (all_definite_fail) {
      table.tag = CheckTag::Fail;
      record_witness(out, table, first_diverging_cell);
    } else {
      table.tag = CheckTag::Inconclusive;
    }
  }

  // the (a) witness wins when both conditions fail
  if (out.condition_a.tag == CheckTag::Fail && out.witness_condition != "a") {
    out.witness_condition.clear();
    out.witness_indices.clear();
    for (const auto& cell : out.condition_a.cells) {
      if (cell.verdict.tag == GrowthTag::Diverging) {
        out.witness_condition = "a";
        out.witness_indices = cell.indices;
        out.witness = cell.verdict;
      }
    }
  }

  finish(out, hyp_ok);
  return out;
}

CriteriaVerdict check_OM(const WeightSystem& V, const WeightSystem& W, const Expr& phi,
                         const Bounds& bounds, const WindowSchedule& schedule,
                         const ClassifierThresholds& thresholds, int jobs,
                         const CondMultReport* hypothesis) {
  CriteriaVerdict out;
  out.part = "III";
  Grid grid(schedule);
  CheckerArrays arrays(phi, V, W, grid, jobs);

  out.hypothesis = run_hypothesis(W, bounds.M_max, schedule, thresholds, jobs, hypothesis);
  const bool hyp_ok = out.hypothesis.ok();
  if (!hyp_ok) {
    out.hypothesis_diagnostic =
        "target weight system not closed under products within the searched indices";
  }

  condition_a_source_over_target(out, arrays, V, W, bounds, grid, thresholds);

  // (b): forall p exists M with |phi^(p)| / w_M bounded
  {
    ConditionTable& table = out.condition_b;
    table.name = "b";
    ForallFold fold;
    for (int p = 1; p <= bounds.p_max && fold.tag != CheckTag::Fail; ++p) {
      const ExistsResult level =
          exists_scan(table, inner_top(bounds.M_max, p, W.max_index()), [&](int M) {
            return ConditionCell{
                {{"p", p}, {"M", M}},
                classify_values(grid,
                                detail::ratio(grid, arrays.phi_deriv(p), arrays.target_weight(M)),
                                thresholds)};
          });
      fold.add(level.tag);
      if (level.tag == CheckTag::Fail) record_witness(out, table, level.decided_cell);
    }
    table.tag = fold.tag;
  }

  finish(out, hyp_ok);
  return out;
}

CriteriaVerdict check_B(const Expr& phi, const Bounds& bounds, const WindowSchedule& schedule,
                        const ClassifierThresholds& thresholds, int jobs) {
  CriteriaVerdict out;
  out.part = "B";
  out.condition_a.name = "a";
  out.condition_a.tag = CheckTag::Pass;  // no weight transfer to check
  Grid grid(schedule);
  detail::ExprArrays phi_arrays(phi, grid, jobs);

  ConditionTable& table = out.condition_b;
  table.name = "b";
  ForallFold fold;
  for (int p = 1; p <= bounds.p_max && fold.tag != CheckTag::Fail; ++p) {
    table.cells.push_back(
        {{{"p", p}}, classify_values(grid, phi_arrays.order(p), thresholds)});
    const GrowthTag tag = table.cells.back().verdict.tag;
    CheckTag level = CheckTag::Inconclusive;
    if (tag == GrowthTag::Bounded) level = CheckTag::Pass;
    if (tag == GrowthTag::Diverging) level = CheckTag::Fail;
    fold.add(level);
    if (level == CheckTag::Fail) {
      record_witness(out, table, static_cast<int>(table.cells.size()) - 1);
    }
  }
  table.tag = fold.tag;

  finish(out, true);
  return out;
}

Preset preset(const std::string& name, const Bounds& bounds) {
  Preset p;
  p.name = name;
  auto space = [&bounds](SpaceFamily family, const WeightSystem& system) {
    SpaceSpec s;
    s.family = family;
    s.system = system;
    s.N_max = bounds.N_max;
    s.n_max = bounds.n_max;
    return s;
  };
  const Expr x = Expr::variable();
  if (name == "S") {
    const WeightSystem sys = WeightSystem::power(Expr::constant(1.0) + abs(x));
    p.source = space(SpaceFamily::K, sys);
    p.target = space(SpaceFamily::K, sys);
  } else if (name == "OC") {
    const WeightSystem sys = WeightSystem::power(Expr::constant(1.0) + abs(x));
    p.source = space(SpaceFamily::OC, sys);
    p.target = space(SpaceFamily::OC, sys);
  } else if (name == "OM") {
    const WeightSystem sys = WeightSystem::power(Expr::constant(1.0) + abs(x));
    p.source = space(SpaceFamily::OM, sys);
    p.target = space(SpaceFamily::OM, sys);
  } else if (name == "B") {
    const WeightSystem sys = WeightSystem::power(Expr::constant(1.0));
    p.source = space(SpaceFamily::B, sys);
    p.target = space(SpaceFamily::B, sys);
  } else if (name == "EXP") {
    const WeightSystem sys = WeightSystem::exponential(abs(x));
    p.source = space(SpaceFamily::K, sys);
    p.target = space(SpaceFamily::K, sys);
  } else {
    throw std::invalid_argument("unknown preset '" + name + "' (expected S, OC, OM, B, or EXP)");
  }
  return p;
}

}  // namespace compop
