// End-to-end acceptance: one pass/fail line per criterion, nonzero exit when
// any criterion fails.  Tolerances and time budgets are pinned here.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "compop/calculus.hpp"
#include "compop/criteria.hpp"
#include "compop/empirical.hpp"
#include "compop/expr.hpp"
#include "compop/spaces.hpp"
#include "compop/weights.hpp"

using namespace compop;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Failure {
  std::string reason;
};

void require(bool ok, const std::string& reason) {
  if (!ok) throw Failure{reason};
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x) {
  std::ostringstream oss;
  oss.precision(6);
  oss << x;
  return oss.str();
}

// ---- criterion 1: random compositions against symbolic differentiation ----

void composition_vs_symbolic() {
  const auto start = Clock::now();
  const std::vector<Expr> pool{parse("sin(x)"),     parse("cos(x)"),      parse("exp(-x^2)"),
                               parse("x^3+x"),      parse("1/(1+x^2)"),   parse("tanh(x)")};
  std::mt19937_64 rng(20260815);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::uniform_int_distribution<int> order(0, 6);
  std::uniform_real_distribution<double> point(-2.0, 2.0);

  std::map<std::pair<std::size_t, std::size_t>, DerivativeLadder> ladders;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t fi = pick(rng);
    const std::size_t gi = pick(rng);
    const int p = order(rng);
    const double x = point(rng);
    const Expr& f = pool[fi];
    const Expr& phi = pool[gi];
    auto [it, inserted] = ladders.try_emplace({fi, gi}, substitute(f, phi));
    const double want = it->second.order(p).eval(x);
    const double got = compose_derivative(f, phi, p, x);
    const double tol = 1e-9 * std::max(1.0, std::fabs(want));
    require(std::isfinite(want), "symbolic reference not finite at trial " + std::to_string(trial));
    require(std::fabs(got - want) <= tol,
            "trial " + std::to_string(trial) + ": |" + fmt(got) + " - " + fmt(want) +
                "| above 1e-9 relative");
  }
  const double elapsed = seconds_since(start);
  require(elapsed <= 10.0, "took " + fmt(elapsed) + "s, budget 10s");
}

// ---- criterion 2: partition counts and coefficient sums ----

std::vector<std::uint64_t> pentagonal_partition_counts(int top) {
  // Euler's recurrence with generalized pentagonal numbers
  std::vector<std::uint64_t> p(static_cast<std::size_t>(top) + 1, 0);
  p[0] = 1;
  for (int n = 1; n <= top; ++n) {
    std::int64_t acc = 0;
    for (int k = 1;; ++k) {
      const int g1 = k * (3 * k - 1) / 2;
      const int g2 = k * (3 * k + 1) / 2;
      if (g1 > n && g2 > n) break;
      const std::int64_t sign = (k % 2 == 1) ? 1 : -1;
      if (g1 <= n) acc += sign * static_cast<std::int64_t>(p[static_cast<std::size_t>(n - g1)]);
      if (g2 <= n) acc += sign * static_cast<std::int64_t>(p[static_cast<std::size_t>(n - g2)]);
    }
    p[static_cast<std::size_t>(n)] = static_cast<std::uint64_t>(acc);
  }
  return p;
}

std::vector<std::uint64_t> bell_triangle(int top) {
  std::vector<std::uint64_t> bell{1};
  std::vector<std::uint64_t> row{1};
  for (int n = 1; n <= top; ++n) {
    std::vector<std::uint64_t> next{row.back()};
    for (std::uint64_t v : row) next.push_back(next.back() + v);
    bell.push_back(next.front());
    row = std::move(next);
  }
  return bell;
}

void partition_structure() {
  const std::vector<std::uint64_t> counts = pentagonal_partition_counts(20);
  for (int p = 0; p <= 20; ++p) {
    require(partitions(p).size() == counts[static_cast<std::size_t>(p)],
            "order " + std::to_string(p) + " multiplicity-vector count mismatch");
  }
  const std::vector<std::uint64_t> bell = bell_triangle(10);
  for (int p = 0; p <= 10; ++p) {
    std::uint64_t sum = 0;
    for (const PartitionTerm& term : partitions(p)) sum += term.coefficient;
    require(sum == bell[static_cast<std::size_t>(p)],
            "order " + std::to_string(p) + " coefficient sum is not the Bell number");
  }
}

// ---- criterion 3: the canonical separating example ----

void canonical_separation() {
  const auto start = Clock::now();
  const WeightSystem sys = WeightSystem::power(parse("1+abs(x)"));
  const WindowSchedule schedule;
  const ClassifierThresholds thresholds;
  const Bounds bounds;

  SpaceSpec oc;
  oc.family = SpaceFamily::OC;
  oc.system = sys;
  require(membership(parse("sin(x^2)"), oc, schedule, thresholds).tag == MembershipTag::Fails,
          "sin(x^2) not rejected from the exists-index space");

  SpaceSpec om;
  om.family = SpaceFamily::OM;
  om.system = sys;
  require(membership(parse("sin(x^2)"), om, schedule, thresholds).tag == MembershipTag::Holds,
          "sin(x^2) not accepted into the per-order space");

  const CriteriaVerdict oc_check = check_OC(sys, sys, parse("x^2"), bounds, schedule, thresholds);
  require(oc_check.overall == CheckTag::Fail, "x^2 not rejected by the exists-index checker");
  require(oc_check.witness_condition == "b", "deciding condition is not (b)");
  bool p_is_one = false;
  for (const auto& [name, value] : oc_check.witness_indices) {
    if (name == "p" && value == 1) p_is_one = true;
  }
  require(p_is_one, "witness does not point at the first derivative");

  require(check_OM(sys, sys, parse("x^2"), bounds, schedule, thresholds).overall == CheckTag::Pass,
          "x^2 not accepted by the per-order checker");
  const double elapsed = seconds_since(start);
  require(elapsed <= 60.0, "took " + fmt(elapsed) + "s, budget 60s");
}

// ---- criterion 4: bounded-derivative checker ----

void bounded_checker() {
  const WindowSchedule schedule;
  const ClassifierThresholds thresholds;
  const Bounds bounds;
  for (const char* phi : {"sin(x)", "tanh(x)", "x"}) {
    require(check_B(parse(phi), bounds, schedule, thresholds).overall == CheckTag::Pass,
            std::string(phi) + " not accepted");
  }
  for (const char* phi : {"x^2", "exp(x)"}) {
    require(check_B(parse(phi), bounds, schedule, thresholds).overall == CheckTag::Fail,
            std::string(phi) + " not rejected");
  }
}

// ---- criterion 5: decay checker with growing witness trails ----

void decay_checker() {
  const WeightSystem sys = WeightSystem::power(parse("1+abs(x)"));
  const WindowSchedule schedule;
  const ClassifierThresholds thresholds;
  const Bounds bounds;
  require(check_K(sys, sys, parse("x^3+x"), bounds, schedule, thresholds).overall == CheckTag::Pass,
          "x^3+x not accepted");
  for (const char* phi : {"sin(x)", "exp(x)"}) {
    const CriteriaVerdict v = check_K(sys, sys, parse(phi), bounds, schedule, thresholds);
    require(v.overall == CheckTag::Fail, std::string(phi) + " not rejected");
    require(v.witness_condition == "a", std::string(phi) + ": deciding condition is not (a)");
    require(v.witness.witness.size() >= 2, std::string(phi) + ": witness trail too short");
    for (std::size_t i = 1; i < v.witness.witness.size(); ++i) {
      require(v.witness.witness[i].ratio >= 1.3 * v.witness.witness[i - 1].ratio,
              std::string(phi) + ": witness trail not growing by 1.3 per annulus");
    }
  }
}

// ---- criterion 6: prescribed-jet bumps and composed jets ----

void bump_jets() {
  for (int q = 0; q <= 12; ++q) {
    JetSpec jet;
    jet.q = q;
    jet.values = {{q, 1.0}};
    const BumpFunction f = bump_with_jet(jet);
    require(f.solve_residual() <= 1e-10,
            "order " + std::to_string(q) + " residual above 1e-10");
    for (const double x : {1.0, -1.0, 1.5, -2.0, 2.7}) {
      for (int r = 0; r <= q; ++r) {
        require(f.derivative(r, x) == 0.0, "support leak at x = " + fmt(x));
      }
    }
  }

  const int p = 4;
  JetSpec top;
  top.q = p;
  top.values = {{p, 1.0}};
  const BumpFunction f_top = bump_with_jet(top);
  JetSpec bottom;
  bottom.q = p;
  bottom.values = {{1, 1.0}};
  const BumpFunction f_bottom = bump_with_jet(bottom);
  JetSpec flat;
  flat.q = p;
  flat.values = {{0, 1.0}};
  const BumpFunction f_flat = bump_with_jet(flat);

  for (const char* phi_text : {"sin(x)", "x^3+x"}) {
    const Expr phi = parse(phi_text);
    for (int i = 0; i < 20; ++i) {
      const double x = -2.85 + 0.3 * i;
      const std::vector<double> pj = derivative_jet(phi, x, p);
      const double want_top = std::pow(pj[1], p);
      const double got_top = composed_jet_at(f_top, phi, p, x);
      require(std::fabs(got_top - want_top) <= 1e-8 * std::max(1.0, std::fabs(want_top)),
              std::string(phi_text) + ": top jet pattern off at x = " + fmt(x));
      const double want_bottom = pj[static_cast<std::size_t>(p)];
      const double got_bottom = composed_jet_at(f_bottom, phi, p, x);
      require(std::fabs(got_bottom - want_bottom) <= 1e-8 * std::max(1.0, std::fabs(want_bottom)),
              std::string(phi_text) + ": bottom jet pattern off at x = " + fmt(x));
      require(composed_jet_at(f_flat, phi, p, x) == 0.0,
              std::string(phi_text) + ": constant jet leaks into order " + std::to_string(p));
    }
  }
}

// ---- criterion 7: interpolation inequality over the sine corpus ----

void interpolation_fit() {
  const std::vector<Expr> corpus = gorny_default_corpus(20);
  for (int j = 1; j <= 4; ++j) {
    for (int m = j; m <= 6; ++m) {
      const GornyReport rep = verify_gorny(corpus, j, m);
      require(rep.violations == 0, "(" + std::to_string(j) + "," + std::to_string(m) +
                                       ") has fitted-constant violations");
    }
  }
  const double c20 = verify_gorny(corpus, 1, 2).c_full;
  const double c40 = verify_gorny(gorny_default_corpus(40), 1, 2).c_full;
  require(c40 <= 2.0 * c20 && c20 <= 2.0 * c40,
          "constant moved past factor 2 under corpus doubling: " + fmt(c20) + " -> " + fmt(c40));
}

// ---- criterion 8: derivative-order selector minimality ----

void order_selector() {
  require(gorny_order(2, 2) == 4, "selector(2,2) != 4");
  for (int k = 1; k <= 8; ++k) {
    require(gorny_order(1, k) == k, "selector(1,k) != k at k = " + std::to_string(k));
  }
  const auto admissible = [](int p, int k, int m) {
    return static_cast<std::int64_t>(k) * (static_cast<std::int64_t>(p) * (m - 1) + 1) <=
           static_cast<std::int64_t>(m) * m;
  };
  for (int p = 1; p <= 4; ++p) {
    for (int k = 1; k <= 6; ++k) {
      const int m = gorny_order(p, k);
      require(m >= std::max(p, 1), "selector below its floor");
      require(admissible(p, k, m), "selected order fails the exact inequality");
      require(m == std::max(p, 1) || !admissible(p, k, m - 1),
              "selected order is not minimal for p = " + std::to_string(p) +
                  ", k = " + std::to_string(k));
    }
  }
}

// ---- criterion 9: checker vs composed membership across the corpus ----

void crosscheck_matrix() {
  const auto start = Clock::now();
  const std::vector<Expr> phis = regression_corpus();
  require(phis.size() == 12, "regression corpus is not 12 symbols");
  const std::vector<std::string> presets{"S", "OC", "OM", "B"};
  const CrosscheckReport report =
      crosscheck_suite(phis, presets, Bounds{}, WindowSchedule{}, ClassifierThresholds{});
  require(!report.entries.empty(), "no crosscheck entries ran");
  require(report.discrepancies == 0,
          std::to_string(report.discrepancies) + " checker-vs-membership discrepancies");
  const double elapsed = seconds_since(start);
  require(elapsed <= 600.0, "took " + fmt(elapsed) + "s, budget 600s");
}

// ---- criterion 10: byte-identical reports across worker counts ----

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(COMPOP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void parallel_determinism() {
  const fs::path dir = fs::current_path() / "acceptance_out";
  fs::create_directories(dir);
  const struct {
    const char* label;
    std::string command;
    int expected_exit;
  } runs[] = {
      {"check", "check --preset S --phi x^3+x", 0},
      {"membership", "membership --f \"sin(x^2)\" --space OC", 1},
  };
  for (const auto& r : runs) {
    const fs::path one = dir / (std::string(r.label) + "_jobs1.json");
    const fs::path eight = dir / (std::string(r.label) + "_jobs8.json");
    require(run_cli(r.command + " --jobs 1 --out " + one.string()) == r.expected_exit,
            std::string(r.label) + " --jobs 1 exited unexpectedly");
    require(run_cli(r.command + " --jobs 8 --out " + eight.string()) == r.expected_exit,
            std::string(r.label) + " --jobs 8 exited unexpectedly");
    const std::string a = slurp(one);
    require(!a.empty(), std::string(r.label) + " wrote an empty report");
    require(a == slurp(eight), std::string(r.label) + " reports differ across worker counts");
  }
}

}  // namespace

int main() {
  const struct {
    int id;
    const char* text;
    std::function<void()> body;
  } criteria[] = {
      {1, "composed derivatives match symbolic differentiation (100 random draws, 1e-9)",
       composition_vs_symbolic},
      {2, "multiplicity-vector counts and coefficient sums match the classical recurrences",
       partition_structure},
      {3, "sin(x^2) separates the space families and x^2 separates the checkers",
       canonical_separation},
      {4, "bounded-derivative checker accepts sin, tanh, x and rejects x^2, exp",
       bounded_checker},
      {5, "decay checker accepts x^3+x and rejects sin, exp with growing witness trails",
       decay_checker},
      {6, "prescribed-jet bumps solve to 1e-10, vanish off-support, and isolate chain-rule terms",
       bump_jets},
      {7, "interpolation-constant fit has zero violations and survives corpus doubling",
       interpolation_fit},
      {8, "derivative-order selector is exact and minimal", order_selector},
      {9, "checker verdicts agree with composed membership across the regression matrix",
       crosscheck_matrix},
      {10, "reports are byte-identical across --jobs 1 and --jobs 8", parallel_determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    std::string verdict = "PASS";
    std::string detail;
    try {
      c.body();
    } catch (const Failure& f) {
      verdict = "FAIL";
      detail = f.reason;
      ++failures;
    } catch (const std::exception& e) {
      verdict = "FAIL";
      detail = std::string("unexpected error: ") + e.what();
      ++failures;
    }
    std::cout << "criterion " << c.id << ": " << verdict << " - " << c.text;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
