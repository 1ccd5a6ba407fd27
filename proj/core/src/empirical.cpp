#include "compop/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

#include "compop/calculus.hpp"
#include "grid_cache.hpp"

namespace compop {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxWindowOrder = 32;
constexpr int kLocalPoints = 2049;  // odd, so the center point is sampled
constexpr int kTrailSamples = 6;

// ---- the window psi(x) = exp(1 - 1/(1-x^2)) and its derivatives ----
// psi^(r) = psi * Q_r / (1-x^2)^(2r) with Q_0 = 1 and
// Q_{r+1} = (1-x^2)^2 Q_r' + 4 r x (1-x^2) Q_r - 2 x Q_r.

void add_scaled(std::vector<double>& dest, const std::vector<double>& src, double scale,
                std::size_t shift) {
  for (std::size_t i = 0; i < src.size(); ++i) dest[i + shift] += scale * src[i];
}

std::vector<double> next_window_poly(const std::vector<double>& q, int r) {
  std::vector<double> dq(q.size() > 1 ? q.size() - 1 : 0, 0.0);
  for (std::size_t i = 0; i + 1 < q.size(); ++i) dq[i] = q[i + 1] * static_cast<double>(i + 1);
  std::vector<double> res(q.size() + 3, 0.0);
  add_scaled(res, dq, 1.0, 0);   // Q'
  add_scaled(res, dq, -2.0, 2);  // -2x^2 Q'
  add_scaled(res, dq, 1.0, 4);   // x^4 Q'
  add_scaled(res, q, 4.0 * r, 1);   // 4r x Q
  add_scaled(res, q, -4.0 * r, 3);  // -4r x^3 Q
  add_scaled(res, q, -2.0, 1);      // -2x Q
  return res;
}

const std::vector<double>& window_poly(int r) {
  if (r < 0) throw std::invalid_argument("window derivative order must be >= 0");
  if (r > kMaxWindowOrder) {
    throw std::invalid_argument("window derivatives supported through order " +
                                std::to_string(kMaxWindowOrder));
  }
  static std::mutex mutex;
  static std::vector<std::vector<double>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  if (cache.empty()) cache.push_back({1.0});
  while (static_cast<int>(cache.size()) <= r) {
    cache.push_back(next_window_poly(cache.back(), static_cast<int>(cache.size()) - 1));
  }
  return cache[static_cast<std::size_t>(r)];
}

double horner(const std::vector<double>& c, double x) {
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
  return acc;
}

// value of the i-th derivative of the polynomial with coefficients c at x
double poly_derivative_value(const std::vector<double>& c, int i, double x) {
  double acc = 0.0;
  for (int t = static_cast<int>(c.size()) - 1; t >= i; --t) {
    double falling = 1.0;
    for (int s = 0; s < i; ++s) falling *= static_cast<double>(t - s);
    acc = acc * x + c[static_cast<std::size_t>(t)] * falling;
  }
  return acc;
}

double binomial(int n, int k) {
  double acc = 1.0;
  for (int i = 0; i < k; ++i) acc = acc * static_cast<double>(n - i) / static_cast<double>(i + 1);
  return acc;
}

}  // namespace

double window_derivative(int r, double x) {
  const std::vector<double>& q = window_poly(r);
  if (std::isnan(x)) return kNaN;
  if (!(std::abs(x) < 1.0)) return 0.0;
  const double u = 1.0 - x * x;
  const double e = 1.0 - 1.0 / u;
  // exp(e) < 1e-304 here; every polynomial factor is far below the inverse
  if (e < -700.0) return 0.0;
  return std::exp(e) * (horner(q, x) / std::pow(u, 2.0 * r));
}

double BumpFunction::derivative(int j, double x) const {
  if (j < 0) throw std::invalid_argument("derivative order must be >= 0");
  if (std::isnan(x)) return kNaN;
  if (!(std::abs(x) < 1.0)) return 0.0;
  // (P * psi)^(j) = sum binom(j,i) P^(i) psi^(j-i)
  const int top = std::min(j, degree());
  double acc = 0.0;
  for (int i = 0; i <= top; ++i) {
    acc += binomial(j, i) * poly_derivative_value(coeffs_, i, x) * window_derivative(j - i, x);
  }
  return acc;
}

BumpFunction bump_with_jet(const JetSpec& jet) {
  if (jet.q < 0) throw ExprError("jet order must be >= 0");
  if (jet.q > 12) throw ExprError("jet orders above 12 are not supported");
  std::vector<double> target(static_cast<std::size_t>(jet.q) + 1, 0.0);
  for (const auto& [order, value] : jet.values) {
    if (order < 0 || order > jet.q) {
      throw ExprError("jet assigns order " + std::to_string(order) + " outside 0.." +
                      std::to_string(jet.q));
    }
    if (!std::isfinite(value)) throw ExprError("jet values must be finite");
    target[static_cast<std::size_t>(order)] = value;
  }

  // psi^(r)(0) is the constant term of Q_r; exact in double through order 12
  std::vector<double> psi0(static_cast<std::size_t>(jet.q) + 1);
  for (int r = 0; r <= jet.q; ++r) psi0[static_cast<std::size_t>(r)] = window_poly(r)[0];
  std::vector<double> fact(static_cast<std::size_t>(jet.q) + 1, 1.0);
  for (int i = 1; i <= jet.q; ++i) {
    fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i - 1)] * i;
  }

  // f^(p)(0) = sum_i binom(p,i) i! c_i psi^(p-i)(0); solve triangularly for c
  BumpFunction f;
  f.coeffs_.assign(static_cast<std::size_t>(jet.q) + 1, 0.0);
  for (int p = 0; p <= jet.q; ++p) {
    double sum = 0.0;
    for (int i = 0; i < p; ++i) {
      sum += binomial(p, i) * fact[static_cast<std::size_t>(i)] * f.coeffs_[static_cast<std::size_t>(i)] *
             psi0[static_cast<std::size_t>(p - i)];
    }
    f.coeffs_[static_cast<std::size_t>(p)] =
        (target[static_cast<std::size_t>(p)] - sum) / fact[static_cast<std::size_t>(p)];
  }

  double residual = 0.0;
  for (int p = 0; p <= jet.q; ++p) {
    const double got = f.derivative(p, 0.0);
    const double want = target[static_cast<std::size_t>(p)];
    residual = std::max(residual, std::abs(got - want) / std::max(1.0, std::abs(want)));
  }
  f.residual_ = residual;
  if (!(residual <= 1e-10)) {
    throw ExprError("bump jet solve residual " + std::to_string(residual) + " above tolerance");
  }
  return f;
}

TranslatedBump translated_family(const BumpFunction& f, const Expr& phi, double x) {
  return TranslatedBump{f, phi.eval(x)};
}

double composed_jet_at(const BumpFunction& f, const Expr& phi, int p, double x) {
  if (p < 0) throw std::invalid_argument("derivative order must be >= 0");
  std::vector<double> fd(static_cast<std::size_t>(p) + 1);
  for (int m = 0; m <= p; ++m) fd[static_cast<std::size_t>(m)] = f.derivative(m, 0.0);
  if (p == 0) return fd[0];
  return compose_derivative_from_values(fd, derivative_jet(phi, x, p), p);
}

namespace {

// sup over [center-1, center+1] and orders <= n of |f^(r)(t-center)| / weight(t)
double local_weighted_norm(const BumpFunction& f, double center, const Expr& weight, int n) {
  double best = 0.0;
  for (int i = 0; i < kLocalPoints; ++i) {
    const double t = center - 1.0 + 2.0 * static_cast<double>(i) / (kLocalPoints - 1);
    double wv;
    try {
      wv = weight.eval(t);
    } catch (const std::exception&) {
      continue;
    }
    if (!(wv > 0.0) || !std::isfinite(wv)) continue;
    for (int r = 0; r <= n; ++r) {
      const double val = std::abs(f.derivative(r, t - center)) / wv;
      if (val > best) best = val;
    }
  }
  return best;
}

// measured transfer constant at one site: max over the three jet patterns of
// ||f_x(phi(.))||_{w,p} / ||f_x||_{v_tilde,n}
double site_transfer_constant(const std::array<BumpFunction, 3>& bumps, const Expr& v_tilde,
                              const Expr& w, const Expr& phi, int p, int n, double x,
                              std::string* note) {
  double center;
  double slope = 0.0;
  try {
    const std::vector<double> head = derivative_jet(phi, x, 1);
    center = head[0];
    slope = head[1];
  } catch (const std::exception& e) {
    if (note && note->empty()) *note = std::string(e.what()) + " at site x = " + std::to_string(x);
    return kNaN;
  }
  if (!std::isfinite(center)) {
    if (note && note->empty()) *note = "phi overflows at site x = " + std::to_string(x);
    return kNaN;
  }

  std::array<double, 3> fx_norm{};
  for (std::size_t b = 0; b < bumps.size(); ++b) {
    fx_norm[b] = local_weighted_norm(bumps[b], center, v_tilde, n);
  }

  // the composed bump lives where |phi(t) - phi(x)| < 1; scale the window by
  // the local slope so the grid straddles that neighborhood
  const double delta = 2.0 / std::max(1.0, std::abs(slope));
  std::array<double, 3> comp_sup{};
  std::vector<double> pd(static_cast<std::size_t>(p) + 1);
  std::vector<double> fd(static_cast<std::size_t>(p) + 1);
  for (int i = 0; i < kLocalPoints; ++i) {
    const double t = x - delta + 2.0 * delta * static_cast<double>(i) / (kLocalPoints - 1);
    bool usable = true;
    try {
      pd = derivative_jet(phi, t, p);
      for (int jj = 0; jj <= p; ++jj) {
        if (std::isnan(pd[static_cast<std::size_t>(jj)])) usable = false;
      }
    } catch (const std::exception&) {
      usable = false;
    }
    if (!usable) continue;
    double wv;
    try {
      wv = w.eval(t);
    } catch (const std::exception&) {
      continue;
    }
    if (!(wv > 0.0) || !std::isfinite(wv)) continue;
    const double y = pd[0] - center;
    for (std::size_t b = 0; b < bumps.size(); ++b) {
      for (int m = 0; m <= p; ++m) fd[static_cast<std::size_t>(m)] = bumps[b].derivative(m, y);
      for (int r = 0; r <= p; ++r) {
        const double val = r == 0 ? fd[0] : compose_derivative_from_values(fd, pd, r);
        const double scaled = std::abs(val) / wv;
        if (scaled > comp_sup[b]) comp_sup[b] = scaled;
      }
    }
  }

  double c1 = kNaN;
  for (std::size_t b = 0; b < bumps.size(); ++b) {
    if (!(fx_norm[b] > 0.0)) continue;
    const double ratio = comp_sup[b] / fx_norm[b];
    if (std::isnan(c1) || ratio > c1) c1 = ratio;
  }
  if (std::isnan(c1) && note && note->empty()) {
    *note = "test family degenerate at site x = " + std::to_string(x);
  }
  return c1;
}

void append_diagnostic(std::string& diag, const std::string& part) {
  if (part.empty()) return;
  if (!diag.empty()) diag += "; ";
  diag += part;
}

}  // namespace

Lemma1Report verify_lemma1(const Expr& v, const Expr& v_tilde, const Expr& w, const Expr& phi,
                           int p, int n, std::span<const double> sites,
                           const WindowSchedule& schedule, const ClassifierThresholds& thresholds,
                           int jobs) {
  if (p < 1 || p > 12 || n < 0 || n > 12) {
    throw std::invalid_argument("verify_lemma1 needs 1 <= p <= 12 and 0 <= n <= 12");
  }
  Lemma1Report rep;

  const int q = std::max({p, n, 1});
  const std::array<BumpFunction, 3> bumps = {
      bump_with_jet(JetSpec{{{0, 1.0}}, q}),  // constant jet: carries the weight transfer alone
      bump_with_jet(JetSpec{{{p, 1.0}}, q}),  // only the all-singleton block survives: phi'^p
      bump_with_jet(JetSpec{{{1, 1.0}}, q}),  // only the single-block term survives: phi^(p)
  };

  rep.c0 = classify_growth([&](double x) { return shifted_sup(v, x) / v_tilde.eval(x); }, schedule,
                           thresholds, jobs);
  if (rep.c0.tag != GrowthTag::Bounded) {
    append_diagnostic(rep.diagnostic, "enlargement constant not certified bounded");
  }

  rep.conclusions[0] = classify_growth(
      [&](double t) { return v.eval(phi.eval(t)) / w.eval(t); }, schedule, thresholds, jobs);
  rep.conclusions[1] = classify_growth(
      [&](double t) {
        const std::vector<double> jet = derivative_jet(phi, t, 1);
        return v.eval(jet[0]) * std::pow(std::abs(jet[1]), p) / w.eval(t);
      },
      schedule, thresholds, jobs);
  rep.conclusions[2] = classify_growth(
      [&](double t) {
        const std::vector<double> jet = derivative_jet(phi, t, p);
        return v.eval(jet[0]) * std::abs(jet[static_cast<std::size_t>(p)]) / w.eval(t);
      },
      schedule, thresholds, jobs);

  std::vector<double> xs(sites.begin(), sites.end());
  std::sort(xs.begin(), xs.end());
  std::string note;
  rep.c1_max = 0.0;
  for (double x : xs) {
    const double c1 = site_transfer_constant(bumps, v_tilde, w, phi, p, n, x, &note);
    rep.samples.push_back({x, c1});
    if (std::isfinite(c1) && c1 > rep.c1_max) rep.c1_max = c1;
  }
  append_diagnostic(rep.diagnostic, note);

  int first_diverging = -1;
  bool any_inconclusive = false;
  for (std::size_t i = 0; i < rep.conclusions.size(); ++i) {
    if (rep.conclusions[i].tag == GrowthTag::Diverging && first_diverging < 0) {
      first_diverging = static_cast<int>(i);
    }
    if (rep.conclusions[i].tag == GrowthTag::Inconclusive) any_inconclusive = true;
  }
  if (any_inconclusive) {
    append_diagnostic(rep.diagnostic, "some conclusion ratios classified inconclusive");
  }

  if (first_diverging >= 0) {
    // the transfer constant must blow up along the diverging ratio's witness
    const auto& trail = rep.conclusions[static_cast<std::size_t>(first_diverging)].witness;
    const std::size_t start = trail.size() > kTrailSamples ? trail.size() - kTrailSamples : 0;
    std::vector<double> cs;
    bool saw_inf = false;
    std::string trail_note;
    for (std::size_t i = start; i < trail.size(); ++i) {
      const double c1 =
          site_transfer_constant(bumps, v_tilde, w, phi, p, n, trail[i].x, &trail_note);
      rep.trail_samples.push_back({trail[i].x, c1});
      if (std::isinf(c1) && c1 > 0) saw_inf = true;
      if (std::isfinite(c1) && c1 > 0.0) cs.push_back(c1);
    }
    if (saw_inf) {
      rep.contrapositive_ok = true;
    } else if (cs.size() >= 2) {
      const double avg =
          std::pow(cs.back() / cs.front(), 1.0 / static_cast<double>(cs.size() - 1));
      rep.contrapositive_ok = avg >= thresholds.growth_factor;
      if (!rep.contrapositive_ok) {
        append_diagnostic(rep.diagnostic,
                          "transfer constant did not track the diverging ratio along its witness");
      }
    } else {
      rep.contrapositive_ok = false;
      append_diagnostic(rep.diagnostic, "witness trail too short to sample the transfer constant");
      append_diagnostic(rep.diagnostic, trail_note);
    }
    rep.implication_ok = rep.contrapositive_ok;
  }

  return rep;
}

GornyReport verify_gorny(std::span<const Expr> corpus, int j, int m) {
  if (j < 1 || m < j || m > 8) {
    throw std::invalid_argument("verify_gorny needs 1 <= j <= m <= 8");
  }
  GornyReport rep;
  rep.j = j;
  rep.m = m;
  rep.ratios.assign(corpus.size(), kNaN);
  if (corpus.empty()) {
    rep.diagnostic = "empty corpus";
    rep.stable = false;
    return rep;
  }

  const int kPts = 4097;
  const double exponent = static_cast<double>(j) / static_cast<double>(m);
  for (std::size_t idx = 0; idx < corpus.size(); ++idx) {
    double n0 = 0.0, nj = 0.0, nm = 0.0;
    bool ok = true;
    try {
      for (int i = 0; i < kPts; ++i) {
        const double x = -1.0 + 2.0 * static_cast<double>(i) / (kPts - 1);
        const std::vector<double> jet = derivative_jet(corpus[idx], x, m);
        n0 = std::max(n0, std::abs(jet[0]));
        nj = std::max(nj, std::abs(jet[static_cast<std::size_t>(j)]));
        nm = std::max(nm, std::abs(jet[static_cast<std::size_t>(m)]));
      }
    } catch (const std::exception&) {
      ok = false;
    }
    if (!ok || !std::isfinite(n0) || !std::isfinite(nj) || !std::isfinite(nm) || n0 < 1e-12) {
      rep.excluded.push_back(idx);
      continue;
    }
    const double denom = std::pow(n0, 1.0 - exponent) * std::pow(std::max(n0, nm), exponent);
    rep.ratios[idx] = nj / denom;
  }

  double c_full = 0.0;
  const std::size_t half = std::max<std::size_t>(1, corpus.size() / 2);
  double c_half = 0.0;
  for (std::size_t idx = 0; idx < corpus.size(); ++idx) {
    const double r = rep.ratios[idx];
    if (std::isnan(r)) continue;
    c_full = std::max(c_full, r);
    if (idx < half) c_half = std::max(c_half, r);
  }
  rep.c_full = c_full;
  rep.c_half = c_half;
  rep.stable = c_half > 0.0 && c_full <= 2.0 * c_half;
  for (double r : rep.ratios) {
    if (!std::isnan(r) && r > c_full * (1.0 + 1e-12)) ++rep.violations;
  }
  if (rep.excluded.size() == corpus.size()) {
    rep.diagnostic = "every corpus entry was degenerate";
    rep.stable = false;
  }
  return rep;
}

std::vector<Expr> gorny_default_corpus(int count) {
  if (count < 1) throw std::invalid_argument("corpus size must be >= 1");
  std::vector<Expr> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 1; k <= count; ++k) {
    out.push_back(k == 1 ? parse("sin(x)") : parse("sin(" + std::to_string(k) + "*x)"));
  }
  return out;
}

const char* to_cstring(TheoremPart part) {
  switch (part) {
    case TheoremPart::I: return "I";
    case TheoremPart::II: return "II";
    case TheoremPart::III: return "III";
  }
  return "I";
}

namespace {

SpaceFamily part_family(TheoremPart part) {
  switch (part) {
    case TheoremPart::I: return SpaceFamily::K;
    case TheoremPart::II: return SpaceFamily::OC;
    case TheoremPart::III: return SpaceFamily::OM;
  }
  return SpaceFamily::K;
}

std::string system_label(const WeightSystem& s) {
  if (s.is_constant_one()) return "constant";
  switch (s.kind()) {
    case WeightSystem::Kind::Power: return "power(" + to_string(s.base()) + ")";
    case WeightSystem::Kind::Explicit: return "explicit[" + std::to_string(s.list().size()) + "]";
    case WeightSystem::Kind::Exponential: return "exponential(" + to_string(s.base()) + ")";
  }
  return "unknown";
}

// Derivatives of f(phi(.)) on the grid, assembled pointwise from the symbolic
// ladders of f and phi through the partition sum.
class ComposedSource final : public DerivativeSource {
 public:
  ComposedSource(const Expr& f, const Expr& phi, const Grid& grid, int jobs)
      : f_(f), phi_(phi, grid, jobs), grid_(grid) {}

  const GridValues& order(int p) override {
    if (static_cast<std::size_t>(p) >= slots_.size()) slots_.resize(static_cast<std::size_t>(p) + 1);
    auto& slot = slots_[static_cast<std::size_t>(p)];
    if (slot.ready) return slot.values;

    std::vector<const GridValues*> parts;
    std::vector<const double*> frow(static_cast<std::size_t>(p) + 1);
    std::vector<const double*> prow(static_cast<std::size_t>(p) + 1);
    for (int m = 0; m <= p; ++m) {
      frow[static_cast<std::size_t>(m)] = f_at_phi(m).values.data();
      prow[static_cast<std::size_t>(m)] = phi_.order(m).values.data();
      parts.push_back(&f_at_phi(m));
      parts.push_back(&phi_.order(m));
    }

    GridValues out;
    out.window_errors = detail::merge_errors(grid_, std::span<const GridValues* const>(parts));
    out.values.resize(grid_.size());
    if (p == 0) {
      out.values = f_at_phi(0).values;
    } else {
      std::vector<double> fd(static_cast<std::size_t>(p) + 1);
      std::vector<double> pd(static_cast<std::size_t>(p) + 1);
      for (std::size_t i = 0; i < grid_.size(); ++i) {
        for (int m = 0; m <= p; ++m) {
          fd[static_cast<std::size_t>(m)] = frow[static_cast<std::size_t>(m)][i];
          pd[static_cast<std::size_t>(m)] = prow[static_cast<std::size_t>(m)][i];
        }
        out.values[i] = compose_derivative_from_values(fd, pd, p);
      }
    }
    slot.values = std::move(out);
    slot.ready = true;
    return slot.values;
  }

 private:
  struct Slot {
    bool ready = false;
    GridValues values;
  };

  const GridValues& f_at_phi(int m) {
    if (static_cast<std::size_t>(m) >= f_slots_.size()) build_f_to(m);
    return f_slots_[static_cast<std::size_t>(m)].values;
  }

  // f^(q)(phi(x)) for every missing order q <= m, one series pass per point.
  // NaN inner values pass through; per-point faults leave NaN plus the
  // window's first error message.  Built slots are never touched again, so
  // references handed out earlier stay valid.
  void build_f_to(int m) {
    if (m >= 1 && f_.smoothness() != SmoothnessClass::Smooth) {
      throw ExprError("expression is not differentiable (ContinuousOnly): " + to_string(f_));
    }
    const GridValues& inner = phi_.order(0);
    const int lo = static_cast<int>(f_slots_.size());
    f_slots_.resize(static_cast<std::size_t>(m) + 1);
    for (int q = lo; q <= m; ++q) {
      auto& gv = f_slots_[static_cast<std::size_t>(q)].values;
      gv.values.assign(grid_.size(), 0.0);
      gv.window_errors = inner.window_errors;
    }
    for (int w = 0; w < grid_.windows(); ++w) {
      const std::size_t base = grid_.offset(w);
      const std::size_t count = grid_.window_points(w).size();
      for (std::size_t i = base; i < base + count; ++i) {
        const double y = inner.values[i];
        if (std::isnan(y)) {
          for (int q = lo; q <= m; ++q) f_slots_[static_cast<std::size_t>(q)].values.values[i] = y;
          continue;
        }
        try {
          const std::vector<double> jet = derivative_jet(f_, y, m);
          for (int q = lo; q <= m; ++q) {
            f_slots_[static_cast<std::size_t>(q)].values.values[i] = jet[static_cast<std::size_t>(q)];
          }
        } catch (const std::exception& e) {
          for (int q = lo; q <= m; ++q) {
            auto& gv = f_slots_[static_cast<std::size_t>(q)].values;
            gv.values[i] = std::numeric_limits<double>::quiet_NaN();
            auto& note = gv.window_errors[static_cast<std::size_t>(w)];
            if (note.empty()) note = e.what();
          }
        }
      }
    }
  }

  Expr f_;
  detail::ExprArrays phi_;
  const Grid& grid_;
  // deque: growing the cache must not invalidate references handed out earlier
  std::deque<Slot> f_slots_;
  std::deque<Slot> slots_;
};

struct SourceKey {
  std::string system;
  int family = 0;
  std::string f;
  friend bool operator<(const SourceKey& a, const SourceKey& b) {
    return std::tie(a.system, a.family, a.f) < std::tie(b.system, b.family, b.f);
  }
};

using SourceCache = std::map<SourceKey, MembershipTag>;

CrosscheckEntry run_entry(const WeightSystem& V, const WeightSystem& W, const Expr& phi,
                          TheoremPart part, std::span<const Expr> fs, const Bounds& bounds,
                          const Grid& grid, const WindowSchedule& schedule,
                          const ClassifierThresholds& thresholds, int jobs,
                          const CondMultReport* hyp, SourceCache* source_cache) {
  CrosscheckEntry entry;
  entry.phi = to_string(phi);
  entry.part = part;
  entry.system = system_label(V);

  CriteriaVerdict verdict;
  switch (part) {
    case TheoremPart::I:
      verdict = check_K(V, W, phi, bounds, schedule, thresholds, jobs, hyp);
      break;
    case TheoremPart::II:
      verdict = check_OC(V, W, phi, bounds, schedule, thresholds, jobs, hyp);
      break;
    case TheoremPart::III:
      verdict = check_OM(V, W, phi, bounds, schedule, thresholds, jobs, hyp);
      break;
  }
  entry.checker = verdict.overall;

  const SpaceFamily family = part_family(part);
  SpaceSpec source_spec;
  source_spec.family = family;
  source_spec.system = V;
  source_spec.N_max = bounds.N_max;
  source_spec.n_max = bounds.n_max;
  // composed functions trade derivative orders for weight growth, so the
  // target-side scan gets extra index headroom before it may declare a Fails
  SpaceSpec target_spec = source_spec;
  target_spec.system = W;
  target_spec.N_max = std::max(bounds.N_max, 2 * bounds.n_max + 3);

  int fails = 0;
  int inconclusive = 0;
  int used = 0;
  std::string first_fail;
  for (const Expr& f : fs) {
    CrosscheckSample sample;
    sample.f = to_string(f);

    const SourceKey key{entry.system, static_cast<int>(family), sample.f};
    if (source_cache && source_cache->count(key)) {
      sample.source = source_cache->at(key);
    } else {
      sample.source = membership(f, source_spec, schedule, thresholds, jobs).tag;
      if (source_cache) source_cache->emplace(key, sample.source);
    }
    if (sample.source != MembershipTag::Holds) {
      sample.skipped = true;
      entry.samples.push_back(std::move(sample));
      continue;
    }

    ComposedSource composed(f, phi, grid, jobs);
    sample.composed = membership_from(composed, target_spec, grid, thresholds, jobs).tag;
    ++used;
    if (sample.composed == MembershipTag::Fails) {
      ++fails;
      if (first_fail.empty()) first_fail = sample.f;
    } else if (sample.composed == MembershipTag::Inconclusive) {
      ++inconclusive;
    }
    entry.samples.push_back(std::move(sample));
  }

  switch (entry.checker) {
    case CheckTag::Pass:
      if (fails > 0) {
        entry.discrepancy = true;
        entry.note = "checker passed but '" + first_fail + "' composed out of the target space";
      } else if (inconclusive > 0) {
        entry.note = "some composed memberships stayed inconclusive";
      }
      break;
    case CheckTag::Fail:
      if (used == 0) {
        entry.note = "no probes held in the source space";
      } else if (fails == 0 && inconclusive == 0) {
        entry.discrepancy = true;
        entry.note = "checker failed but every composed probe stayed in the target space";
      } else if (fails == 0) {
        entry.note = "fail not witnessed: composed membership inconclusive for " +
                     std::to_string(inconclusive) + " probe(s)";
      }
      break;
    case CheckTag::Inconclusive:
      entry.note = "checker inconclusive";
      break;
  }
  return entry;
}

void tally(CrosscheckReport& report) {
  report.discrepancies = 0;
  report.inconclusive = 0;
  for (const auto& entry : report.entries) {
    if (entry.discrepancy) ++report.discrepancies;
    const bool has_inconclusive =
        std::any_of(entry.samples.begin(), entry.samples.end(), [](const CrosscheckSample& s) {
          return !s.skipped && s.composed == MembershipTag::Inconclusive;
        });
    if (has_inconclusive) ++report.inconclusive;
  }
}

}  // namespace

CrosscheckReport crosscheck(const WeightSystem& V, const WeightSystem& W, const Expr& phi,
                            TheoremPart part, std::span<const Expr> f_corpus, const Bounds& bounds,
                            const WindowSchedule& schedule, const ClassifierThresholds& thresholds,
                            int jobs) {
  Grid grid(schedule);
  CrosscheckReport report;
  report.entries.push_back(run_entry(V, W, phi, part, f_corpus, bounds, grid, schedule, thresholds,
                                     jobs, nullptr, nullptr));
  tally(report);
  return report;
}

std::vector<Expr> regression_corpus() {
  static const char* const kSymbols[] = {
      "x",        "x^2",        "x^3+x",      "2*x",     "sin(x)",    "x+sin(x)",
      "sin(x^2)", "exp(-x^2)",  "x*exp(-x^2)", "tanh(x)", "1/(1+x^2)", "exp(x)",
  };
  std::vector<Expr> out;
  out.reserve(std::size(kSymbols));
  for (const char* s : kSymbols) out.push_back(parse(s));
  return out;
}

std::vector<Expr> crosscheck_f_samples(SpaceFamily source_family, const WeightSystem& system) {
  const bool constant = system.is_constant_one();
  std::vector<const char*> names;
  if (source_family == SpaceFamily::K) {
    if (constant) {
      names = {"sin(x)", "exp(-x^2)", "tanh(x)"};
    } else {
      names = {"exp(-x^2)", "x*exp(-x^2)"};
    }
  } else {
    if (constant) {
      names = {"sin(x)", "exp(-x^2)", "tanh(x)", "1/(1+x^2)"};
    } else {
      names = {"sin(x)", "exp(-x^2)", "tanh(x)", "x^3"};
    }
  }
  std::vector<Expr> out;
  out.reserve(names.size());
  for (const char* s : names) out.push_back(parse(s));
  return out;
}

CrosscheckReport crosscheck_suite(std::span<const Expr> phis,
                                  std::span<const std::string> preset_names, const Bounds& bounds,
                                  const WindowSchedule& schedule,
                                  const ClassifierThresholds& thresholds, int jobs) {
  // distinct weight systems behind the presets; identical systems share runs
  std::vector<std::pair<std::string, WeightSystem>> systems;
  for (const std::string& name : preset_names) {
    const Preset p = preset(name, bounds);
    const std::string label = system_label(p.source.system);
    const bool seen = std::any_of(systems.begin(), systems.end(),
                                  [&](const auto& s) { return s.first == label; });
    if (!seen) systems.emplace_back(label, p.source.system);
  }

  Grid grid(schedule);
  SourceCache source_cache;
  CrosscheckReport report;
  for (const auto& [label, system] : systems) {
    const int index_max = std::max(bounds.N_max, bounds.M_max);
    const CondMultReport hypothesis =
        check_cond_mult(system, index_max, 2 * index_max, schedule, thresholds, jobs);
    for (TheoremPart part : {TheoremPart::I, TheoremPart::II, TheoremPart::III}) {
      const std::vector<Expr> fs = crosscheck_f_samples(part_family(part), system);
      for (const Expr& phi : phis) {
        report.entries.push_back(run_entry(system, system, phi, part, fs, bounds, grid, schedule,
                                           thresholds, jobs, &hypothesis, &source_cache));
      }
    }
  }
  tally(report);
  return report;
}

}  // namespace compop
