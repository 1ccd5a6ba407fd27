// JSON documents for every verdict and harness report (schema compop-check/1),
// descriptor parsing for weight systems, spaces, and run configs, and atomic
// file output.  Reports never echo the worker count, so runs with different
// --jobs values emit identical bytes.
#pragma once

#include <string>

#include "compop/config.hpp"
#include "compop/criteria.hpp"
#include "compop/empirical.hpp"
#include "compop/spaces.hpp"
#include "compop/weights.hpp"

namespace compop {

// What every document echoes about the run.
struct RunMeta {
  std::string command;
  Config config;
  bool has_seed = false;  // seed echoed only when a command consumed it
};

std::string render_check(const RunMeta& meta, const std::string& phi, const std::string& preset,
                         const WeightSystem& source, const WeightSystem& target,
                         const CriteriaVerdict& verdict);

std::string render_membership(const RunMeta& meta, const std::string& f, const SpaceSpec& spec,
                              const MembershipVerdict& verdict);

std::string render_crosscheck(const RunMeta& meta, const CrosscheckReport& report);

std::string render_gorny(const RunMeta& meta, const GornyReport& report);

struct Lemma1Inputs {
  std::string v, v_tilde, w, phi;
  int p = 1;
  int n = 0;
};
std::string render_lemma1(const RunMeta& meta, const Lemma1Inputs& inputs,
                          const Lemma1Report& report);

// "x,ratio\n..." rows of a verdict's witness trail
std::string witness_csv(const GrowthVerdict& verdict);

// {"kind": "power"|"explicit"|"exponential", "base": "<expr>", "list": [...]};
// throws std::invalid_argument on malformed descriptors, ParseError on bad
// expressions.
WeightSystem weight_system_from_json(const std::string& text);
std::string weight_system_descriptor(const WeightSystem& system);  // round-trips the above

// {"family": "K"|"OC"|"OM"|"B"|"OMn", "system": <descriptor>, "n": int,
//  "bounds": {"N_max": int, "n_max": int}}; absent fields keep defaults.
SpaceSpec space_spec_from_json(const std::string& text, const Bounds& defaults);

// Overlays config-file values: {"bounds": {...}, "windows": {...},
// "thresholds": {...}, "seed": int, "jobs": int}.  Unknown keys are rejected.
void apply_config_json(const std::string& text, Config& config);

// Writes via temp file + rename so readers never observe partial documents.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace compop
