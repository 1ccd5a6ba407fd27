// Shared run parameters: quantifier search bounds, the dyadic window
// schedule, and the growth-classifier thresholds.
#pragma once

#include <cstdint>
#include <stdexcept>

namespace compop {

struct Bounds {
  int N_max = 8;  // weight index search bound, source side
  int M_max = 8;  // weight index search bound, target side
  int n_max = 6;  // seminorm order bound for membership tables
  int p_max = 6;  // symbol derivative order bound
  int k_max = 8;  // fractional-exponent denominator bound
};

// Core window [-1,1] plus `annuli` dyadic annuli 2^{k-1} <= |x| <= 2^k.
struct WindowSchedule {
  int annuli = 14;
  int samples_per_window = 4096;
};

struct ClassifierThresholds {
  double bounded_slack = 0.05;  // tail may exceed the prefix max by this factor
  int bounded_prefix = 6;       // windows forming the reference max
  int diverging_tail = 4;       // trailing annuli that must each grow ...
  double growth_factor = 1.3;   // ... by at least this factor
};

struct Config {
  Bounds bounds;
  WindowSchedule schedule;
  ClassifierThresholds thresholds;
  int jobs = 1;
  std::uint64_t seed = 0;

  void validate() const {  // throws std::invalid_argument
    auto fail = [](const char* what) { throw std::invalid_argument(what); };
    if (bounds.N_max < 0 || bounds.M_max < 0 || bounds.n_max < 0) fail("index bounds must be >= 0");
    if (bounds.p_max < 1) fail("p_max must be >= 1");
    if (bounds.k_max < 1) fail("k_max must be >= 1");
    if (schedule.samples_per_window < 4 || schedule.samples_per_window % 2 != 0) {
      fail("samples_per_window must be even and >= 4");
    }
    if (schedule.annuli < thresholds.diverging_tail + 1) fail("need at least diverging_tail + 1 annuli");
    if (!(thresholds.bounded_slack > 0.0)) fail("bounded_slack must be > 0");
    if (thresholds.bounded_prefix < 0) fail("bounded_prefix must be >= 0");
    if (thresholds.diverging_tail < 1) fail("diverging_tail must be >= 1");
    if (!(thresholds.growth_factor > 1.0)) fail("growth_factor must be > 1");
    if (jobs < 1) fail("jobs must be >= 1");
  }
};

}  // namespace compop
