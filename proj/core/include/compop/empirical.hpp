// Constructive verification harnesses: compactly supported bumps with
// prescribed jets, translated test families, the norm-transfer lemma check,
// the derivative-interpolation (Gorny) fit, and the checker-vs-seminorm
// crosscheck over a regression corpus.
#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "compop/config.hpp"
#include "compop/criteria.hpp"
#include "compop/expr.hpp"
#include "compop/spaces.hpp"
#include "compop/weights.hpp"

namespace compop {

// Prescribed derivative values at 0; orders <= q absent from the map are 0.
struct JetSpec {
  std::map<int, double> values;
  int q = 0;
};

// f = P * psi with psi(x) = exp(1 - 1/(1-x^2)) inside (-1,1) and 0 outside;
// P is the polynomial matching the jet at 0.  Evaluation outside [-1,1] is
// exact zero for every derivative order.
class BumpFunction {
 public:
  double value(double x) const { return derivative(0, x); }
  double derivative(int j, double x) const;
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  const std::vector<double>& coefficients() const { return coeffs_; }
  double solve_residual() const { return residual_; }

 private:
  friend BumpFunction bump_with_jet(const JetSpec& jet);
  std::vector<double> coeffs_;
  double residual_ = 0.0;
};

// Triangular solve for P; throws ExprError when q > 12 or the matched jet
// misses a target by more than 1e-10.
BumpFunction bump_with_jet(const JetSpec& jet);

// r-th derivative of the window psi at x (exact 0 for |x| >= 1)
double window_derivative(int r, double x);

// f shifted to sit over phi(x): f_x(t) = f(t - phi(x))
struct TranslatedBump {
  BumpFunction f;
  double center = 0.0;
  double value(double t) const { return f.value(t - center); }
  double derivative(int j, double t) const { return f.derivative(j, t - center); }
};

TranslatedBump translated_family(const BumpFunction& f, const Expr& phi, double x);

// p-th derivative of t -> f(phi(t) - phi(x)) at t = x, via the partition sum
double composed_jet_at(const BumpFunction& f, const Expr& phi, int p, double x);

struct Lemma1Sample {
  double x = 0.0;
  double c1 = 0.0;
};

struct Lemma1Report {
  GrowthVerdict c0;                          // sup over |t|<=1 of v(x+t)/v_tilde(x)
  std::array<GrowthVerdict, 3> conclusions;  // v(phi)/w, v(phi)|phi'|^p/w, v(phi)|phi^(p)|/w
  std::vector<Lemma1Sample> samples;         // measured norm-transfer constant per bump site
  double c1_max = 0.0;
  bool implication_ok = true;     // conclusions bounded, or the transfer constant blows up too
  bool contrapositive_ok = true;  // c1 grows along the diverging conclusion's witness trail
  std::vector<Lemma1Sample> trail_samples;
  std::string diagnostic;
};

// Measures the norm-transfer constant sup ||f(phi(.))||_{w,p} / ||f||_{v_tilde,n}
// over bump families at the given sites and classifies the three ratio
// functions the transfer bound forces to be finite.
Lemma1Report verify_lemma1(const Expr& v, const Expr& v_tilde, const Expr& w, const Expr& phi,
                           int p, int n, std::span<const double> sites,
                           const WindowSchedule& schedule, const ClassifierThresholds& thresholds,
                           int jobs = 1);

struct GornyReport {
  int j = 1;
  int m = 1;
  double c_full = 0.0;  // fitted constant over the whole corpus
  double c_half = 0.0;  // fitted constant over the first half
  bool stable = true;   // c_full <= 2 * c_half
  int violations = 0;   // entries beating the fitted constant (0 by construction)
  std::vector<double> ratios;  // per corpus entry; NaN marks excluded entries
  std::vector<std::size_t> excluded;
  std::string diagnostic;
};

// Fits C in ||g^(j)|| <= C ||g||^(1-j/m) max(||g||, ||g^(m)||)^(j/m) with
// sup-norms over a 4097-point grid on [-1,1]; requires 1 <= j <= m <= 8.
GornyReport verify_gorny(std::span<const Expr> corpus, int j, int m);

std::vector<Expr> gorny_default_corpus(int count = 20);  // sin(x), sin(2x), ...

enum class TheoremPart { I, II, III };
const char* to_cstring(TheoremPart part);

struct CrosscheckSample {
  std::string f;
  MembershipTag source = MembershipTag::Inconclusive;
  MembershipTag composed = MembershipTag::Inconclusive;
  bool skipped = false;  // source membership did not hold
};

struct CrosscheckEntry {
  std::string phi;
  TheoremPart part = TheoremPart::I;
  std::string system;  // printed generator of the weight system
  CheckTag checker = CheckTag::Inconclusive;
  std::vector<CrosscheckSample> samples;
  bool discrepancy = false;
  std::string note;
};

struct CrosscheckReport {
  std::vector<CrosscheckEntry> entries;
  int discrepancies = 0;
  int inconclusive = 0;  // entries where composed evidence stayed inconclusive
};

// Checker verdict vs composed-function membership for one symbol and part.
CrosscheckReport crosscheck(const WeightSystem& V, const WeightSystem& W, const Expr& phi,
                            TheoremPart part, std::span<const Expr> f_corpus, const Bounds& bounds,
                            const WindowSchedule& schedule, const ClassifierThresholds& thresholds,
                            int jobs = 1);

// The 12 symbols the suite regresses over.
std::vector<Expr> regression_corpus();

// Default membership probes for a source family over a given system.
std::vector<Expr> crosscheck_f_samples(SpaceFamily source_family, const WeightSystem& system);

// Full matrix: symbols x parts {I,II,III} x the distinct systems behind the
// given presets, with hypothesis and source-membership results shared.
CrosscheckReport crosscheck_suite(std::span<const Expr> phis,
                                  std::span<const std::string> preset_names, const Bounds& bounds,
                                  const WindowSchedule& schedule,
                                  const ClassifierThresholds& thresholds, int jobs = 1);

}  // namespace compop
