#include "compop/weights.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "compop/parallel.hpp"
#include "grid_cache.hpp"

namespace compop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kShiftSamples = 65;  // resolution of the sup over |t| <= 1

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Extremum of |values| over one window, skipping NaN samples.  Scans in grid
// order so ties resolve at the smallest |x|, negative side first.
struct WindowScan {
  double max_abs = -1.0;  // max over finite samples; -1 when none
  double argmax = 0.0;
  bool has_inf = false;
  double inf_x = 0.0;
  std::size_t nan_count = 0;
  std::string note;  // first per-point failure, for diagnostics
};

WindowScan scan_window(std::span<const double> xs, std::span<const double> vals,
                       const std::string& window_error) {
  WindowScan s;
  s.note = window_error;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double v = std::abs(vals[i]);
    if (std::isnan(v)) {
      ++s.nan_count;
      if (s.note.empty()) s.note = "non-finite value at x = " + format_double(xs[i]);
      continue;
    }
    if (std::isinf(v)) {
      if (!s.has_inf) {
        s.has_inf = true;
        s.inf_x = xs[i];
      }
      continue;
    }
    if (v > s.max_abs) {
      s.max_abs = v;
      s.argmax = xs[i];
    }
  }
  return s;
}

// Longest strictly increasing run of finite annulus maxima ending just before
// `end_window` (exclusive); annuli are windows 1..windows-1.
std::vector<WitnessPoint> increasing_trail(const std::vector<WindowScan>& scans, int end_window) {
  std::vector<WitnessPoint> trail;
  const int last = end_window - 1;
  if (last < 1 || scans[static_cast<std::size_t>(last)].max_abs < 0.0) return trail;
  int start = last;
  while (start > 1) {
    const auto& prev = scans[static_cast<std::size_t>(start - 1)];
    if (!(prev.max_abs >= 0.0 && prev.max_abs < scans[static_cast<std::size_t>(start)].max_abs)) break;
    --start;
  }
  for (int w = start; w <= last; ++w) {
    const auto& s = scans[static_cast<std::size_t>(w)];
    trail.push_back({s.argmax, s.max_abs});
  }
  return trail;
}

GrowthVerdict combine_windows(const Grid& grid, std::vector<WindowScan> scans,
                              const ClassifierThresholds& thresholds) {
  GrowthVerdict out;
  const int W = grid.windows();
  out.windows_used = W;

  int first_inf = W;
  std::size_t nan_total = 0;
  std::string first_note;
  double sup = 0.0;
  double sup_arg = 0.0;
  for (int w = 0; w < W; ++w) {
    const auto& s = scans[static_cast<std::size_t>(w)];
    if (s.has_inf && first_inf == W) first_inf = w;
    nan_total += s.nan_count;
    if (first_note.empty()) first_note = s.note;
    if (s.max_abs > sup) {
      sup = s.max_abs;
      sup_arg = s.argmax;
    }
  }
  out.sup_estimate = first_inf < W ? kInf : sup;

  // An overflowing sample certifies divergence on its own.
  if (first_inf < W) {
    out.tag = GrowthTag::Diverging;
    out.witness = increasing_trail(scans, first_inf);
    out.diagnostic = "overflow at x = " + format_double(scans[static_cast<std::size_t>(first_inf)].inf_x);
    return out;
  }

  // Sustained tail growth certifies divergence; finite samples are genuine
  // values even when NaN samples sit elsewhere in the window.
  const int T = thresholds.diverging_tail;
  if (W >= T + 2) {
    bool grows = true;
    for (int w = W - T; w < W; ++w) {
      const double prev = scans[static_cast<std::size_t>(w - 1)].max_abs;
      const double cur = scans[static_cast<std::size_t>(w)].max_abs;
      if (!(prev > 0.0 && cur >= thresholds.growth_factor * prev)) {
        grows = false;
        break;
      }
    }
    if (grows) {
      out.tag = GrowthTag::Diverging;
      out.witness = increasing_trail(scans, W);
      return out;
    }
  }

  // Boundedness needs every sample accounted for.
  if (nan_total > 0) {
    out.tag = GrowthTag::Inconclusive;
    out.diagnostic = std::to_string(nan_total) + " samples failed to evaluate (" + first_note + ")";
    return out;
  }

  const int prefix_end = std::min(thresholds.bounded_prefix, W - 1);
  double reference = 0.0;
  for (int w = 0; w <= prefix_end; ++w) {
    reference = std::max(reference, scans[static_cast<std::size_t>(w)].max_abs);
  }
  bool bounded = true;
  for (int w = prefix_end + 1; w < W; ++w) {
    if (scans[static_cast<std::size_t>(w)].max_abs > (1.0 + thresholds.bounded_slack) * reference) {
      bounded = false;
      break;
    }
  }
  if (bounded) {
    out.tag = GrowthTag::Bounded;
    out.witness.push_back({sup_arg, sup});
    return out;
  }

  out.tag = GrowthTag::Inconclusive;
  out.diagnostic = "growth between the bounded and diverging thresholds";
  return out;
}

std::vector<WindowScan> scan_all(const Grid& grid, const GridValues& values) {
  const int W = grid.windows();
  std::vector<WindowScan> scans(static_cast<std::size_t>(W));
  for (int w = 0; w < W; ++w) {
    const auto xs = grid.window_points(w);
    const std::span<const double> vals(values.values.data() + grid.offset(w), xs.size());
    scans[static_cast<std::size_t>(w)] =
        scan_window(xs, vals, values.window_errors[static_cast<std::size_t>(w)]);
  }
  return scans;
}

}  // namespace

const char* to_cstring(GrowthTag tag) {
  switch (tag) {
    case GrowthTag::Bounded: return "bounded";
    case GrowthTag::Diverging: return "diverging";
    case GrowthTag::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Grid::Grid(const WindowSchedule& schedule) {
  if (schedule.annuli < 1 || schedule.samples_per_window < 4 || schedule.samples_per_window % 2 != 0) {
    throw std::invalid_argument("window schedule needs >= 1 annuli and an even sample count >= 4");
  }
  const int half = schedule.samples_per_window / 2;
  offsets_.push_back(0);
  // core [-1,1]: 0 once, then -t, +t pairs by |t| ascending
  points_.push_back(0.0);
  for (int i = 1; i < half; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(half - 1);
    points_.push_back(-t);
    points_.push_back(t);
  }
  offsets_.push_back(points_.size());
  double lo = 1.0;
  for (int k = 1; k <= schedule.annuli; ++k) {
    const double hi = lo * 2.0;
    for (int i = 0; i < half; ++i) {
      const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(half - 1);
      points_.push_back(-t);
      points_.push_back(t);
    }
    offsets_.push_back(points_.size());
    lo = hi;
  }
}

std::span<const double> Grid::window_points(int w) const {
  const std::size_t a = offsets_[static_cast<std::size_t>(w)];
  const std::size_t b = offsets_[static_cast<std::size_t>(w) + 1];
  return std::span<const double>(points_.data() + a, b - a);
}

GridValues eval_on_grid(const std::function<double(double)>& g, const Grid& grid, int jobs) {
  GridValues out;
  out.values.assign(grid.size(), 0.0);
  out.window_errors.assign(static_cast<std::size_t>(grid.windows()), std::string());
  parallel_for(static_cast<std::size_t>(grid.windows()), jobs, [&](std::size_t w) {
    const auto xs = grid.window_points(static_cast<int>(w));
    const std::size_t base = grid.offset(static_cast<int>(w));
    for (std::size_t i = 0; i < xs.size(); ++i) {
      try {
        out.values[base + i] = g(xs[i]);
      } catch (const std::exception& e) {
        out.values[base + i] = std::numeric_limits<double>::quiet_NaN();
        if (out.window_errors[w].empty()) {
          out.window_errors[w] = std::string(e.what()) + " at x = " + format_double(xs[i]);
        }
      }
    }
  });
  return out;
}

GrowthVerdict classify_values(const Grid& grid, const GridValues& values,
                              const ClassifierThresholds& thresholds) {
  if (values.values.size() != grid.size() ||
      values.window_errors.size() != static_cast<std::size_t>(grid.windows())) {
    throw std::invalid_argument("grid values do not match the grid layout");
  }
  return combine_windows(grid, scan_all(grid, values), thresholds);
}

GrowthVerdict classify_growth(const std::function<double(double)>& g, const WindowSchedule& schedule,
                              const ClassifierThresholds& thresholds, int jobs) {
  Grid grid(schedule);
  return classify_values(grid, eval_on_grid(g, grid, jobs), thresholds);
}

double shifted_sup(const Expr& v, double x) {
  double best = -kInf;
  for (int i = 0; i < kShiftSamples; ++i) {
    const double t = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(kShiftSamples - 1);
    best = std::max(best, v.eval(x + t));
  }
  return best;
}

WeightSystem::WeightSystem(Kind kind, Expr base, std::vector<Expr> list)
    : kind_(kind), base_(std::move(base)), list_(std::move(list)) {}

WeightSystem WeightSystem::power(Expr base) {
  return WeightSystem(Kind::Power, std::move(base), {});
}

WeightSystem WeightSystem::explicit_list(std::vector<Expr> v) {
  if (v.empty()) throw std::invalid_argument("explicit weight system needs at least one weight");
  Expr first = v.front();
  return WeightSystem(Kind::Explicit, std::move(first), std::move(v));
}

WeightSystem WeightSystem::exponential(Expr rate) {
  return WeightSystem(Kind::Exponential, std::move(rate), {});
}

Expr WeightSystem::weight(int N) const {
  if (N < 0) throw std::out_of_range("weight index must be >= 0");
  switch (kind_) {
    case Kind::Power:
      return pow(base_, Expr::constant(static_cast<double>(N)));
    case Kind::Explicit:
      if (static_cast<std::size_t>(N) >= list_.size()) {
        throw std::out_of_range("weight index " + std::to_string(N) +
                                " past the end of an explicit system of size " +
                                std::to_string(list_.size()));
      }
      return list_[static_cast<std::size_t>(N)];
    case Kind::Exponential:
      return exp(Expr::constant(static_cast<double>(N)) * base_);
  }
  throw std::logic_error("unreachable weight kind");
}

Expr WeightSystem::log_weight(int N) const {
  if (N < 0) throw std::out_of_range("weight index must be >= 0");
  switch (kind_) {
    case Kind::Power:
      if (N == 0) return Expr::constant(0.0);
      return Expr::constant(static_cast<double>(N)) * log(base_);
    case Kind::Explicit:
      return log(weight(N));
    case Kind::Exponential:
      if (N == 0) return Expr::constant(0.0);
      return Expr::constant(static_cast<double>(N)) * base_;
  }
  throw std::logic_error("unreachable weight kind");
}

int WeightSystem::max_index() const {
  if (kind_ == Kind::Explicit) return static_cast<int>(list_.size()) - 1;
  return std::numeric_limits<int>::max();
}

bool WeightSystem::is_constant_one() const {
  switch (kind_) {
    case Kind::Power:
      return base_.is_constant(1.0);
    case Kind::Exponential:
      return base_.is_constant(0.0);
    case Kind::Explicit:
      return std::all_of(list_.begin(), list_.end(), [](const Expr& e) { return e.is_constant(1.0); });
  }
  return false;
}

WeightSystem power_system(const Expr& base, const WindowSchedule& schedule) {
  Grid grid(schedule);
  for (double x : grid.all_points()) {
    double v = 0.0;
    try {
      v = base.eval(x);
    } catch (const std::exception& e) {
      throw ExprError(std::string("weight base failed to evaluate: ") + e.what());
    }
    if (!(v >= 1.0 - 1e-12)) {
      throw ExprError("weight base must be >= 1 everywhere; got " + format_double(v) + " at x = " +
                      format_double(x));
    }
  }
  return WeightSystem::power(base);
}

bool WeightSystemReport::ok() const {
  if (!v0_ok || !monotone_ok || !diagnostic.empty()) return false;
  return std::all_of(moderateness.begin(), moderateness.end(),
                     [](const ModeratenessEntry& e) { return e.M >= 0; });
}

WeightSystemReport validate_weight_system(const WeightSystem& system, int N_max, int M_max,
                                          const WindowSchedule& schedule,
                                          const ClassifierThresholds& thresholds, int jobs) {
  WeightSystemReport rep;
  Grid grid(schedule);
  detail::WeightArrays arrays(system, grid, jobs);
  const int n_top = std::min(N_max, system.max_index());
  const int m_top = std::min(M_max, system.max_index());
  if (n_top < N_max || m_top < M_max) {
    rep.diagnostic = "explicit system shorter than the requested index range";
    return rep;
  }

  {
    const GridValues& v0 = arrays.plain(0);
    for (int w = 0; w < grid.windows() && rep.diagnostic.empty(); ++w) {
      if (!v0.window_errors[static_cast<std::size_t>(w)].empty()) {
        rep.diagnostic = "v_0: " + v0.window_errors[static_cast<std::size_t>(w)];
      }
    }
    if (!rep.diagnostic.empty()) return rep;
    rep.v0_min = kInf;
    const auto xs = grid.all_points();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (v0.values[i] < rep.v0_min) {
        rep.v0_min = v0.values[i];
        rep.v0_argmin = xs[i];
      }
    }
    rep.v0_ok = rep.v0_min >= 1.0 - 1e-9;
  }

  // Compare in log space: exponential systems overflow past |x| ~ 710/N, and
  // inf vs inf decides nothing.  The slack scales with the log magnitude,
  // matching a relative tolerance on the weights themselves.
  for (int N = 0; N < n_top && rep.monotone_ok; ++N) {
    const GridValues& lo = arrays.log_plain(N);
    const GridValues& hi = arrays.log_plain(N + 1);
    for (int w = 0; w < grid.windows() && rep.diagnostic.empty(); ++w) {
      if (!hi.window_errors[static_cast<std::size_t>(w)].empty()) {
        rep.diagnostic =
            "v_" + std::to_string(N + 1) + ": " + hi.window_errors[static_cast<std::size_t>(w)];
      }
    }
    if (!rep.diagnostic.empty()) return rep;
    const auto xs = grid.all_points();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double slack = 1e-12 * std::max(1.0, std::abs(hi.values[i]));
      if (lo.values[i] > hi.values[i] + slack) {
        rep.monotone_ok = false;
        rep.monotone_index = N;
        rep.monotone_x = xs[i];
        break;
      }
    }
  }

  for (int N = 0; N <= n_top; ++N) {
    ModeratenessEntry entry;
    entry.N = N;
    const GridValues& num = arrays.log_shifted(N);
    for (int M = 0; M <= m_top; ++M) {
      GrowthVerdict verdict =
          classify_values(grid, detail::exp_diff(grid, num, arrays.log_plain(M)), thresholds);
      entry.verdict = std::move(verdict);
      if (entry.verdict.tag == GrowthTag::Bounded) {
        entry.M = M;
        break;
      }
    }
    rep.moderateness.push_back(std::move(entry));
  }
  return rep;
}

bool CondMultReport::ok() const {
  return std::all_of(entries.begin(), entries.end(), [](const CondMultEntry& e) { return e.K >= 0; });
}

CondMultReport check_cond_mult(const WeightSystem& system, int index_max, int K_max,
                               const WindowSchedule& schedule, const ClassifierThresholds& thresholds,
                               int jobs) {
  CondMultReport rep;
  Grid grid(schedule);
  detail::WeightArrays arrays(system, grid, jobs);
  const int top = std::min(index_max, system.max_index());
  const int k_top = std::min(K_max, system.max_index());
  for (int N = 0; N <= top; ++N) {
    for (int M = N; M <= top; ++M) {
      CondMultEntry entry;
      entry.N = N;
      entry.M = M;
      const GridValues& a = arrays.log_plain(N);
      const GridValues& b = arrays.log_plain(M);
      for (int K = M; K <= k_top; ++K) {
        GrowthVerdict verdict = classify_values(
            grid, detail::exp_sum_diff(grid, a, b, arrays.log_plain(K)), thresholds);
        entry.verdict = std::move(verdict);
        if (entry.verdict.tag == GrowthTag::Bounded) {
          entry.K = K;
          break;
        }
      }
      rep.entries.push_back(std::move(entry));
    }
  }
  return rep;
}

}  // namespace compop
