// Hot paths: growth classification, the partition-sum chain rule, membership
// scans, and a full checker run.
#include <benchmark/benchmark.h>

#include <vector>

#include "compop/calculus.hpp"
#include "compop/criteria.hpp"
#include "compop/expr.hpp"
#include "compop/spaces.hpp"
#include "compop/weights.hpp"

namespace {

using namespace compop;

const WindowSchedule kSmallSchedule{10, 512};
const ClassifierThresholds kThresholds{};

void BM_classify_ratio(benchmark::State& state) {
  const Expr num = parse("(1+abs(x))^2");
  const Expr den = parse("(1+abs(x))^3");
  for (auto _ : state) {
    auto verdict = classify_growth([&](double x) { return num.eval(x) / den.eval(x); },
                                   kSmallSchedule, kThresholds);
    benchmark::DoNotOptimize(verdict);
  }
}
BENCHMARK(BM_classify_ratio);

void BM_partitions(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(partitions(p).size());
  }
}
BENCHMARK(BM_partitions)->Arg(8)->Arg(14)->Arg(20);

void BM_compose_values(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  std::vector<double> f_derivs(static_cast<std::size_t>(p) + 1, 0.5);
  std::vector<double> phi_derivs(static_cast<std::size_t>(p) + 1, 1.25);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compose_derivative_from_values(f_derivs, phi_derivs, p));
  }
}
BENCHMARK(BM_compose_values)->Arg(4)->Arg(8)->Arg(12);

void BM_derivative_ladder(benchmark::State& state) {
  for (auto _ : state) {
    DerivativeLadder ladder(parse("sin(x^2)*exp(-x^2)"));
    benchmark::DoNotOptimize(ladder.order(6));
  }
}
BENCHMARK(BM_derivative_ladder);

void BM_derivative_jet(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  const Expr f = parse("sin(x^2)*exp(-x^2)");
  for (auto _ : state) {
    benchmark::DoNotOptimize(derivative_jet(f, 1.3, p));
  }
}
BENCHMARK(BM_derivative_jet)->Arg(6)->Arg(12)->Arg(20);

void BM_membership_om(benchmark::State& state) {
  const Expr f = parse("sin(x^2)");
  SpaceSpec spec;
  spec.family = SpaceFamily::OM;
  spec.system = WeightSystem::power(parse("1+abs(x)"));
  for (auto _ : state) {
    auto verdict = membership(f, spec, kSmallSchedule, kThresholds);
    benchmark::DoNotOptimize(verdict);
  }
}
BENCHMARK(BM_membership_om);

void BM_check_K(benchmark::State& state) {
  const Expr phi = parse("x^3+x");
  const WeightSystem system = WeightSystem::power(parse("1+abs(x)"));
  const Bounds bounds;
  for (auto _ : state) {
    auto verdict = check_K(system, system, phi, bounds, kSmallSchedule, kThresholds);
    benchmark::DoNotOptimize(verdict);
  }
}
BENCHMARK(BM_check_K);

}  // namespace

BENCHMARK_MAIN();
