// Weight systems and the three-way growth classifier that decides whether a
// sup over the real line is finite, on the evidence of a dyadic window
// schedule.
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "compop/config.hpp"
#include "compop/expr.hpp"

namespace compop {

enum class GrowthTag { Bounded, Diverging, Inconclusive };
const char* to_cstring(GrowthTag tag);

struct WitnessPoint {
  double x = 0.0;
  double ratio = 0.0;
};

struct GrowthVerdict {
  GrowthTag tag = GrowthTag::Inconclusive;
  double sup_estimate = 0.0;
  std::vector<WitnessPoint> witness;  // Diverging: strictly increasing trail; Bounded: attained max
  int windows_used = 0;
  std::string diagnostic;
};

// Deterministic sample points: window 0 is the core [-1,1], window k >= 1 the
// annulus 2^{k-1} <= |x| <= 2^k.  Points are listed by |x| ascending, the
// negative point before its mirror, so scans resolve ties at the smallest |x|.
class Grid {
 public:
  explicit Grid(const WindowSchedule& schedule);

  int windows() const { return static_cast<int>(offsets_.size()) - 1; }
  std::span<const double> window_points(int w) const;
  std::span<const double> all_points() const { return points_; }
  std::size_t offset(int w) const { return offsets_[static_cast<std::size_t>(w)]; }
  std::size_t size() const { return points_.size(); }

 private:
  std::vector<double> points_;
  std::vector<std::size_t> offsets_;
};

// Values of one scalar function over a Grid; window_errors[w] is empty when
// window w evaluated cleanly.
struct GridValues {
  std::vector<double> values;
  std::vector<std::string> window_errors;
};

GridValues eval_on_grid(const std::function<double(double)>& g, const Grid& grid, int jobs = 1);

GrowthVerdict classify_values(const Grid& grid, const GridValues& values,
                              const ClassifierThresholds& thresholds);

GrowthVerdict classify_growth(const std::function<double(double)>& g, const WindowSchedule& schedule,
                              const ClassifierThresholds& thresholds, int jobs = 1);

// max over 65 equispaced shifts |t| <= 1 of v(x+t)
double shifted_sup(const Expr& v, double x);

class WeightSystem {
 public:
  enum class Kind { Power, Explicit, Exponential };

  WeightSystem() : WeightSystem(Kind::Power, Expr::constant(1.0), {}) {}  // constant system v_N = 1

  static WeightSystem power(Expr base);                    // v_N = base^N
  static WeightSystem explicit_list(std::vector<Expr> v);  // v_N = v[N]
  static WeightSystem exponential(Expr rate);              // v_N = exp(N*rate)

  Kind kind() const { return kind_; }
  Expr weight(int N) const;      // throws std::out_of_range past an explicit list
  Expr log_weight(int N) const;  // log v_N; stays finite where v_N overflows
  int max_index() const;         // last valid index; INT_MAX when unbounded
  const Expr& base() const { return base_; }
  const std::vector<Expr>& list() const { return list_; }
  bool is_constant_one() const;

 private:
  WeightSystem(Kind kind, Expr base, std::vector<Expr> list);
  Kind kind_;
  Expr base_;
  std::vector<Expr> list_;
};

// Builds a power system after checking base >= 1 at every schedule point.
WeightSystem power_system(const Expr& base, const WindowSchedule& schedule);

struct ModeratenessEntry {
  int N = 0;
  int M = -1;  // matched index, -1 when none within reach
  GrowthVerdict verdict;
};

struct WeightSystemReport {
  bool v0_ok = true;
  double v0_min = 0.0;
  double v0_argmin = 0.0;
  bool monotone_ok = true;
  int monotone_index = -1;  // N with v_N > v_{N+1} somewhere
  double monotone_x = 0.0;
  std::vector<ModeratenessEntry> moderateness;
  std::string diagnostic;
  bool ok() const;
};

// Checks v_0 >= 1, pointwise monotonicity in N, and for each N <= N_max finds
// M <= M_max with sup_x max_{|t|<=1} v_N(x+t)/v_M(x) bounded.
WeightSystemReport validate_weight_system(const WeightSystem& system, int N_max, int M_max,
                                          const WindowSchedule& schedule,
                                          const ClassifierThresholds& thresholds, int jobs = 1);

struct CondMultEntry {
  int N = 0;
  int M = 0;
  int K = -1;
  GrowthVerdict verdict;
};

struct CondMultReport {
  std::vector<CondMultEntry> entries;
  bool ok() const;
};

// For every N, M <= index_max looks for K <= K_max with v_N*v_M/v_K bounded.
CondMultReport check_cond_mult(const WeightSystem& system, int index_max, int K_max,
                               const WindowSchedule& schedule, const ClassifierThresholds& thresholds,
                               int jobs = 1);

}  // namespace compop
