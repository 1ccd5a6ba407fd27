// Internal: lazily evaluated grid arrays shared by the membership and
// criteria scans, so each expression is evaluated once per grid regardless of
// how many quantifier cells consume it.
#pragma once

#include <charconv>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "compop/calculus.hpp"
#include "compop/weights.hpp"

namespace compop::detail {

inline std::string format_point(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Values of f, f', f'', ... over a grid, extended on demand.  One series pass
// per point yields every missing order at once, so high orders cost no more
// than low ones and the symbolic derivatives are never materialized.
class ExprArrays {
 public:
  ExprArrays(Expr f, const Grid& grid, int jobs) : f_(std::move(f)), grid_(grid), jobs_(jobs) {}

  const GridValues& order(int p) {
    if (static_cast<std::size_t>(p) >= slots_.size()) build_to(p);
    return slots_[static_cast<std::size_t>(p)].values;
  }

 private:
  struct Slot {
    GridValues values;
  };

  // Fills orders [previous size, p]; already-built slots are left untouched so
  // references handed out earlier stay valid.
  void build_to(int p) {
    if (p >= 1 && f_.smoothness() != SmoothnessClass::Smooth) {
      throw ExprError("expression is not differentiable (ContinuousOnly): " + to_string(f_));
    }
    const int lo = static_cast<int>(slots_.size());
    slots_.resize(static_cast<std::size_t>(p) + 1);
    for (int q = lo; q <= p; ++q) {
      auto& gv = slots_[static_cast<std::size_t>(q)].values;
      gv.values.assign(grid_.size(), 0.0);
      gv.window_errors.assign(static_cast<std::size_t>(grid_.windows()), std::string());
    }
    for (int w = 0; w < grid_.windows(); ++w) {
      const auto xs = grid_.window_points(w);
      const std::size_t base = grid_.offset(w);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        try {
          const std::vector<double> jet = derivative_jet(f_, xs[i], p);
          for (int q = lo; q <= p; ++q) {
            slots_[static_cast<std::size_t>(q)].values.values[base + i] = jet[static_cast<std::size_t>(q)];
          }
        } catch (const std::exception& e) {
          for (int q = lo; q <= p; ++q) {
            auto& gv = slots_[static_cast<std::size_t>(q)].values;
            gv.values[base + i] = std::numeric_limits<double>::quiet_NaN();
            auto& note = gv.window_errors[static_cast<std::size_t>(w)];
            if (note.empty()) note = std::string(e.what()) + " at x = " + format_point(xs[i]);
          }
        }
      }
    }
  }

  Expr f_;
  const Grid& grid_;
  int jobs_;  // grid passes are cheap enough to stay serial; kept for interface parity
  // deque: growing the cache must not invalidate references handed out earlier
  std::deque<Slot> slots_;
};

// Weight values v_N (and their |t| <= 1 shifted sups) per index.
class WeightArrays {
 public:
  WeightArrays(const WeightSystem& system, const Grid& grid, int jobs)
      : system_(system), grid_(grid), jobs_(jobs) {}

  const GridValues& plain(int N) {
    auto& slot = slot_for(plain_, N);
    if (!slot.ready) {
      const Expr v = system_.weight(N);
      slot.values = eval_on_grid([&v](double x) { return v.eval(x); }, grid_, jobs_);
      slot.ready = true;
    }
    return slot.values;
  }

  // pointwise max over |t| <= 1 of v_N(x+t)
  const GridValues& shifted(int N) {
    auto& slot = slot_for(shifted_, N);
    if (!slot.ready) {
      const Expr v = system_.weight(N);
      slot.values = eval_on_grid([&v](double x) { return shifted_sup(v, x); }, grid_, jobs_);
      slot.ready = true;
    }
    return slot.values;
  }

  // log v_N; weight-vs-weight cells combine these so exponential systems do
  // not collapse to inf/inf
  const GridValues& log_plain(int N) {
    auto& slot = slot_for(log_plain_, N);
    if (!slot.ready) {
      const Expr v = system_.log_weight(N);
      slot.values = eval_on_grid([&v](double x) { return v.eval(x); }, grid_, jobs_);
      slot.ready = true;
    }
    return slot.values;
  }

  // pointwise max over |t| <= 1 of log v_N(x+t); exp is monotone, so this is
  // the log of the shifted sup
  const GridValues& log_shifted(int N) {
    auto& slot = slot_for(log_shifted_, N);
    if (!slot.ready) {
      const Expr v = system_.log_weight(N);
      slot.values = eval_on_grid([&v](double x) { return shifted_sup(v, x); }, grid_, jobs_);
      slot.ready = true;
    }
    return slot.values;
  }

  const WeightSystem& system() const { return system_; }

 private:
  struct Slot {
    bool ready = false;
    GridValues values;
  };

  Slot& slot_for(std::deque<Slot>& store, int N) {
    if (static_cast<std::size_t>(N) >= store.size()) store.resize(static_cast<std::size_t>(N) + 1);
    return store[static_cast<std::size_t>(N)];
  }

  const WeightSystem& system_;
  const Grid& grid_;
  int jobs_;
  // deque: growing the cache must not invalidate references handed out earlier
  std::deque<Slot> plain_;
  std::deque<Slot> shifted_;
  std::deque<Slot> log_plain_;
  std::deque<Slot> log_shifted_;
};

inline std::vector<std::string> merge_errors(const Grid& grid,
                                             std::span<const GridValues* const> parts) {
  std::vector<std::string> errors(static_cast<std::size_t>(grid.windows()));
  for (std::size_t w = 0; w < errors.size(); ++w) {
    for (const GridValues* part : parts) {
      if (!part->window_errors[w].empty()) {
        errors[w] = part->window_errors[w];
        break;
      }
    }
  }
  return errors;
}

inline std::vector<std::string> merge_errors(const Grid& grid,
                                             std::initializer_list<const GridValues*> parts) {
  return merge_errors(grid, std::span<const GridValues* const>(parts.begin(), parts.size()));
}

// v evaluated at precomputed inner values; NaN inputs pass through, per-point
// faults leave NaN plus the window's first error message
inline GridValues map_values(const Grid& grid, const Expr& v, const GridValues& inner) {
  GridValues out;
  out.values.resize(grid.size());
  out.window_errors = inner.window_errors;
  for (int w = 0; w < grid.windows(); ++w) {
    const std::size_t base = grid.offset(w);
    const std::size_t count = grid.window_points(w).size();
    for (std::size_t i = base; i < base + count; ++i) {
      const double y = inner.values[i];
      if (std::isnan(y)) {
        out.values[i] = y;
        continue;
      }
      try {
        out.values[i] = v.eval(y);
      } catch (const std::exception& e) {
        out.values[i] = std::numeric_limits<double>::quiet_NaN();
        auto& slot = out.window_errors[static_cast<std::size_t>(w)];
        if (slot.empty()) slot = e.what();
      }
    }
  }
  return out;
}

inline GridValues ratio(const Grid& grid, const GridValues& num, const GridValues& den) {
  GridValues out;
  out.window_errors = merge_errors(grid, {&num, &den});
  out.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out.values[i] = num.values[i] / den.values[i];
  return out;
}

inline GridValues product(const Grid& grid, const GridValues& a, const GridValues& b) {
  GridValues out;
  out.window_errors = merge_errors(grid, {&a, &b});
  out.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    // 0 * inf here is an exact zero against an overflowed finite value
    out.values[i] = (a.values[i] == 0.0 || b.values[i] == 0.0) ? 0.0 : a.values[i] * b.values[i];
  }
  return out;
}

inline GridValues product_ratio(const Grid& grid, const GridValues& a, const GridValues& b,
                                const GridValues& den) {
  GridValues out;
  out.window_errors = merge_errors(grid, {&a, &b, &den});
  out.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.values[i] = a.values[i] * b.values[i] / den.values[i];
  }
  return out;
}

// exp(a - b): the ratio e^a / e^b computed without overflowing the factors
inline GridValues exp_diff(const Grid& grid, const GridValues& a, const GridValues& b) {
  GridValues out;
  out.window_errors = merge_errors(grid, {&a, &b});
  out.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.values[i] = std::exp(a.values[i] - b.values[i]);
  }
  return out;
}

// exp(a + b - c): e^a * e^b / e^c in log space
inline GridValues exp_sum_diff(const Grid& grid, const GridValues& a, const GridValues& b,
                               const GridValues& c) {
  GridValues out;
  out.window_errors = merge_errors(grid, {&a, &b, &c});
  out.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.values[i] = std::exp(a.values[i] + b.values[i] - c.values[i]);
  }
  return out;
}

}  // namespace compop::detail
