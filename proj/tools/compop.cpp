// compop: decide whether composition by a symbol maps one weighted space of
// smooth functions into another, test membership directly, and run the
// empirical harnesses.  Reports are JSON documents; exit codes encode the
// verdict (0 pass/holds, 1 fail, 2 inconclusive, 3 usage error, 4 input error).
#include <algorithm>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "compop/calculus.hpp"
#include "compop/config.hpp"
#include "compop/criteria.hpp"
#include "compop/empirical.hpp"
#include "compop/expr.hpp"
#include "compop/report.hpp"
#include "compop/spaces.hpp"
#include "compop/weights.hpp"

namespace {

using namespace compop;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitUsage = 3;
constexpr int kExitInput = 4;

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  std::string bounds_kv;
  std::string windows_kv;
  int jobs = 0;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON config file; flags override its values");
  cmd->add_option("--out", o.out_path, "write the JSON report here (atomic replace)");
  cmd->add_option("--jobs", o.jobs, "worker threads (default: hardware concurrency)");
  cmd->add_option("--bounds", o.bounds_kv, "quantifier bounds, e.g. N=8,M=8,n=6,p=6,k=8");
  cmd->add_option("--windows", o.windows_kv, "window schedule, e.g. K=14,samples=4096");
  cmd->add_option("--seed", o.seed, "seed for sampled harness sites");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

void apply_kv(const std::string& text, const std::string& what,
              const std::vector<std::pair<std::string, int*>>& slots) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item =
        text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    pos = comma == std::string::npos ? text.size() + 1 : comma + 1;
    if (item.empty()) continue;
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--" + what + " expects key=value pairs, got '" + item + "'");
    }
    const std::string key = item.substr(0, eq);
    int parsed = 0;
    try {
      std::size_t used = 0;
      parsed = std::stoi(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw std::invalid_argument("--" + what + " value for '" + key + "' must be an integer");
    }
    bool found = false;
    for (const auto& [name, target] : slots) {
      if (name == key) {
        *target = parsed;
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("unknown --" + what + " key '" + key + "'");
  }
}

Config resolve_config(const CLI::App* cmd, const CommonOpts& o) {
  Config cfg;
  cfg.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (!o.config_path.empty()) apply_config_json(slurp(o.config_path), cfg);
  if (!o.bounds_kv.empty()) {
    apply_kv(o.bounds_kv, "bounds",
             {{"N", &cfg.bounds.N_max},
              {"M", &cfg.bounds.M_max},
              {"n", &cfg.bounds.n_max},
              {"p", &cfg.bounds.p_max},
              {"k", &cfg.bounds.k_max}});
  }
  if (!o.windows_kv.empty()) {
    apply_kv(o.windows_kv, "windows",
             {{"K", &cfg.schedule.annuli}, {"samples", &cfg.schedule.samples_per_window}});
  }
  if (cmd->count("--jobs") > 0) cfg.jobs = o.jobs;
  if (cmd->count("--seed") > 0) cfg.seed = o.seed;
  cfg.validate();
  return cfg;
}

int emit(const CommonOpts& o, const std::string& doc, const std::string& summary, int code) {
  if (!o.out_path.empty()) {
    write_atomic(o.out_path, doc);
    std::cout << summary << "\n";
  } else {
    std::cout << doc;
  }
  return code;
}

// '{...}' is a descriptor; anything else is an expression for a power system
WeightSystem system_from_flag(const std::string& text) {
  const std::size_t first = text.find_first_not_of(" \t\n");
  if (first != std::string::npos && text[first] == '{') return weight_system_from_json(text);
  return WeightSystem::power(parse(text));
}

SpaceFamily family_from_name(const std::string& name) {
  if (name == "K") return SpaceFamily::K;
  if (name == "OC") return SpaceFamily::OC;
  if (name == "OM") return SpaceFamily::OM;
  if (name == "B") return SpaceFamily::B;
  if (name == "OMn") return SpaceFamily::OMn;
  throw std::invalid_argument("unknown space family '" + name + "' (expected K, OC, OM, B, or OMn)");
}

// '{...}' is a full descriptor; a bare name picks the family and takes the
// system from --weight (or the family default).
SpaceSpec space_from_flag(const std::string& text, const Bounds& bounds,
                          const WeightSystem* weight) {
  const std::size_t first = text.find_first_not_of(" \t\n");
  if (first != std::string::npos && text[first] == '{') {
    SpaceSpec spec = space_spec_from_json(text, bounds);
    if (weight) spec.system = *weight;
    return spec;
  }
  SpaceSpec spec;
  spec.family = family_from_name(text);
  spec.N_max = bounds.N_max;
  spec.n_max = bounds.n_max;
  if (weight) {
    spec.system = *weight;
  } else if (spec.family != SpaceFamily::B) {
    spec.system = WeightSystem::power(parse("1+abs(x)"));
  }
  return spec;
}

int verdict_exit(CheckTag tag) {
  switch (tag) {
    case CheckTag::Pass: return kExitPass;
    case CheckTag::Fail: return kExitFail;
    case CheckTag::Inconclusive: return kExitInconclusive;
  }
  return kExitInconclusive;
}

int verdict_exit(MembershipTag tag) {
  switch (tag) {
    case MembershipTag::Holds: return kExitPass;
    case MembershipTag::Fails: return kExitFail;
    case MembershipTag::Inconclusive: return kExitInconclusive;
  }
  return kExitInconclusive;
}

struct CheckOpts {
  std::string phi;
  std::string preset_name;
  std::string weight;
  std::string space_in;
  std::string space_out;
  CommonOpts common;
};

int run_check(const CLI::App* cmd, const CheckOpts& o) {
  const Config cfg = resolve_config(cmd, o.common);
  const Expr phi = parse(o.phi);

  SpaceSpec src;
  SpaceSpec dst;
  if (!o.preset_name.empty()) {
    if (!o.weight.empty() || !o.space_in.empty() || !o.space_out.empty()) {
      throw std::invalid_argument("--preset cannot be combined with --weight or --space-in/out");
    }
    const Preset p = preset(o.preset_name, cfg.bounds);
    src = p.source;
    dst = p.target;
  } else {
    WeightSystem weight;
    const bool has_weight = !o.weight.empty();
    if (has_weight) weight = system_from_flag(o.weight);
    src.N_max = cfg.bounds.N_max;
    src.n_max = cfg.bounds.n_max;
    if (has_weight) src.system = weight;
    if (!o.space_in.empty()) {
      src = space_from_flag(o.space_in, cfg.bounds, has_weight ? &weight : nullptr);
    }
    dst = src;
    if (!o.space_out.empty()) {
      dst = space_from_flag(o.space_out, cfg.bounds, has_weight ? &weight : nullptr);
    }
  }

  CriteriaVerdict verdict;
  switch (src.family) {
    case SpaceFamily::K:
      verdict = check_K(src.system, dst.system, phi, cfg.bounds, cfg.schedule, cfg.thresholds,
                        cfg.jobs);
      break;
    case SpaceFamily::OC:
      verdict = check_OC(src.system, dst.system, phi, cfg.bounds, cfg.schedule, cfg.thresholds,
                         cfg.jobs);
      break;
    case SpaceFamily::OM:
      verdict = check_OM(src.system, dst.system, phi, cfg.bounds, cfg.schedule, cfg.thresholds,
                         cfg.jobs);
      break;
    case SpaceFamily::B:
      verdict = check_B(phi, cfg.bounds, cfg.schedule, cfg.thresholds, cfg.jobs);
      break;
    case SpaceFamily::OMn:
      throw std::invalid_argument("no composition checker for family OMn; use membership");
  }

  RunMeta meta{"check", cfg, false};
  const std::string doc =
      render_check(meta, to_string(phi), o.preset_name, src.system, dst.system, verdict);
  const std::string summary =
      std::string("check: ") + to_cstring(verdict.overall) + " (part " + verdict.part + ")";
  return emit(o.common, doc, summary, verdict_exit(verdict.overall));
}

struct MembershipOpts {
  std::string f;
  std::string space;
  std::string weight;
  int n = 0;
  CommonOpts common;
};

int run_membership(const CLI::App* cmd, const MembershipOpts& o) {
  const Config cfg = resolve_config(cmd, o.common);
  const Expr f = parse(o.f);

  WeightSystem weight;
  const bool has_weight = !o.weight.empty();
  if (has_weight) weight = system_from_flag(o.weight);

  SpaceSpec spec;
  if (!o.space.empty()) {
    spec = space_from_flag(o.space, cfg.bounds, has_weight ? &weight : nullptr);
  } else {
    spec.N_max = cfg.bounds.N_max;
    spec.n_max = cfg.bounds.n_max;
    if (has_weight) spec.system = weight;
  }
  if (cmd->count("--n") > 0) spec.n = o.n;

  const MembershipVerdict verdict = membership(f, spec, cfg.schedule, cfg.thresholds, cfg.jobs);
  RunMeta meta{"membership", cfg, false};
  const std::string doc = render_membership(meta, to_string(f), spec, verdict);
  const std::string summary = std::string("membership: ") + to_cstring(verdict.tag);
  return emit(o.common, doc, summary, verdict_exit(verdict.tag));
}

TheoremPart part_for_family(SpaceFamily family) {
  switch (family) {
    case SpaceFamily::K: return TheoremPart::I;
    case SpaceFamily::OC: return TheoremPart::II;
    case SpaceFamily::OM: return TheoremPart::III;
    default: break;
  }
  throw std::invalid_argument("crosscheck covers families K, OC, and OM only");
}

struct CrosscheckOpts {
  std::string phi;
  std::string preset_name;
  CommonOpts common;
};

int run_crosscheck(const CLI::App* cmd, const CrosscheckOpts& o) {
  const Config cfg = resolve_config(cmd, o.common);
  std::vector<Expr> phis;
  if (o.phi.empty()) {
    phis = regression_corpus();
  } else {
    phis.push_back(parse(o.phi));
  }

  CrosscheckReport report;
  if (o.preset_name.empty()) {
    const std::vector<std::string> presets = {"S", "OC", "OM", "B"};
    report = crosscheck_suite(phis, presets, cfg.bounds, cfg.schedule, cfg.thresholds, cfg.jobs);
  } else {
    const Preset p = preset(o.preset_name, cfg.bounds);
    const TheoremPart part = part_for_family(p.source.family);
    const std::vector<Expr> fs = crosscheck_f_samples(p.source.family, p.source.system);
    for (const Expr& phi : phis) {
      CrosscheckReport one = crosscheck(p.source.system, p.target.system, phi, part, fs,
                                        cfg.bounds, cfg.schedule, cfg.thresholds, cfg.jobs);
      for (auto& entry : one.entries) report.entries.push_back(std::move(entry));
      report.discrepancies += one.discrepancies;
      report.inconclusive += one.inconclusive;
    }
  }

  RunMeta meta{"harness.crosscheck", cfg, false};
  const std::string doc = render_crosscheck(meta, report);
  const std::string summary = "crosscheck: " + std::to_string(report.discrepancies) +
                              " discrepancies in " + std::to_string(report.entries.size()) +
                              " entries";
  return emit(o.common, doc, summary, report.discrepancies > 0 ? kExitFail : kExitPass);
}

struct GornyOpts {
  int j = 1;
  int m = 2;
  int count = 20;
  CommonOpts common;
};

int run_gorny(const CLI::App* cmd, const GornyOpts& o) {
  const Config cfg = resolve_config(cmd, o.common);
  const std::vector<Expr> corpus = gorny_default_corpus(o.count);
  const GornyReport report = verify_gorny(corpus, o.j, o.m);

  RunMeta meta{"harness.gorny", cfg, false};
  const std::string doc = render_gorny(meta, report);
  std::ostringstream summary;
  summary << "gorny: C = " << report.c_full << (report.stable ? " (stable)" : " (unstable)")
          << ", " << report.violations << " violations";
  int code = kExitPass;
  if (report.excluded.size() == corpus.size()) {
    code = kExitInconclusive;
  } else if (report.violations > 0 || !report.stable) {
    code = kExitFail;
  }
  return emit(o.common, doc, summary.str(), code);
}

struct Lemma1Opts {
  std::string phi;
  std::string preset_name = "S";
  std::string v;
  std::string vtilde;
  std::string w;
  int p = 1;
  int n = 0;
  CommonOpts common;
};

int run_lemma1(const CLI::App* cmd, const Lemma1Opts& o) {
  const Config cfg = resolve_config(cmd, o.common);
  const Expr phi = parse(o.phi);

  Expr v = Expr::constant(1.0);
  Expr vt = Expr::constant(1.0);
  Expr w = Expr::constant(1.0);
  const bool any_custom = !o.v.empty() || !o.vtilde.empty() || !o.w.empty();
  if (any_custom) {
    if (o.v.empty() || o.vtilde.empty() || o.w.empty()) {
      throw std::invalid_argument("--v, --vtilde, and --w must be given together");
    }
    v = parse(o.v);
    vt = parse(o.vtilde);
    w = parse(o.w);
  } else {
    const Preset pre = preset(o.preset_name, cfg.bounds);
    v = pre.source.system.weight(1);
    vt = Expr::constant(3.0) * v;  // dominates every unit translate of the stock bases
    DerivativeLadder ladder(phi);
    const Expr one = Expr::constant(1.0);
    // large enough by construction: each conclusion ratio is <= 1 against it
    w = substitute(v, phi) * pow(one + abs(ladder.order(1)), Expr::constant(o.p)) *
        (one + abs(ladder.order(o.p)));
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> dist(-16.0, 16.0);
  std::vector<double> sites(12);
  for (double& s : sites) s = dist(rng);
  std::sort(sites.begin(), sites.end());

  const Lemma1Report report =
      verify_lemma1(v, vt, w, phi, o.p, o.n, sites, cfg.schedule, cfg.thresholds, cfg.jobs);

  RunMeta meta{"harness.lemma1", cfg, true};
  Lemma1Inputs inputs{to_string(v), to_string(vt), to_string(w), to_string(phi), o.p, o.n};
  const std::string doc = render_lemma1(meta, inputs, report);

  const bool undetermined =
      report.c0.tag != GrowthTag::Bounded ||
      std::any_of(report.conclusions.begin(), report.conclusions.end(),
                  [](const GrowthVerdict& g) { return g.tag == GrowthTag::Inconclusive; });
  int code = kExitPass;
  if (!report.implication_ok) {
    code = kExitFail;
  } else if (undetermined) {
    code = kExitInconclusive;
  }
  const std::string summary = std::string("lemma1: implication ") +
                              (report.implication_ok ? "ok" : "violated") +
                              ", c1_max = " + std::to_string(report.c1_max);
  return emit(o.common, doc, summary, code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"composition-operator checks on weighted spaces of smooth functions"};
  app.require_subcommand(1);

  CheckOpts check_opts;
  CLI::App* check_cmd = app.add_subcommand("check", "decide whether f -> f(phi) maps the space");
  check_cmd->add_option("--phi", check_opts.phi, "composition symbol")->required();
  check_cmd->add_option("--preset", check_opts.preset_name, "S, OC, OM, B, or EXP");
  check_cmd->add_option("--weight", check_opts.weight, "weight expression or JSON descriptor");
  check_cmd->add_option("--space-in", check_opts.space_in, "source space (family or descriptor)");
  check_cmd->add_option("--space-out", check_opts.space_out, "target space (family or descriptor)");
  add_common(check_cmd, check_opts.common);

  MembershipOpts member_opts;
  CLI::App* member_cmd = app.add_subcommand("membership", "test one function against a space");
  member_cmd->add_option("--f", member_opts.f, "function to test")->required();
  member_cmd->add_option("--space", member_opts.space, "space family or JSON descriptor");
  member_cmd->add_option("--weight", member_opts.weight, "weight expression or JSON descriptor");
  member_cmd->add_option("--n", member_opts.n, "fixed index (B) or fixed order (OMn)");
  add_common(member_cmd, member_opts.common);

  CLI::App* harness_cmd = app.add_subcommand("harness", "empirical verification harnesses");
  harness_cmd->require_subcommand(1);

  CrosscheckOpts cross_opts;
  CLI::App* cross_cmd =
      harness_cmd->add_subcommand("crosscheck", "checker verdicts vs composed membership");
  cross_cmd->add_option("--phi", cross_opts.phi, "single symbol (default: regression corpus)");
  cross_cmd->add_option("--preset", cross_opts.preset_name, "restrict to one preset");
  add_common(cross_cmd, cross_opts.common);

  GornyOpts gorny_opts;
  CLI::App* gorny_cmd =
      harness_cmd->add_subcommand("gorny", "derivative-interpolation constant fit");
  gorny_cmd->add_option("--j", gorny_opts.j, "interpolated derivative order")->required();
  gorny_cmd->add_option("--m", gorny_opts.m, "top derivative order")->required();
  gorny_cmd->add_option("--count", gorny_opts.count, "corpus size (default 20)");
  add_common(gorny_cmd, gorny_opts.common);

  Lemma1Opts lemma_opts;
  CLI::App* lemma_cmd =
      harness_cmd->add_subcommand("lemma1", "norm-transfer bound on translated bump families");
  lemma_cmd->add_option("--phi", lemma_opts.phi, "composition symbol")->required();
  lemma_cmd->add_option("--preset", lemma_opts.preset_name, "weight preset (default S)");
  lemma_cmd->add_option("--v", lemma_opts.v, "source weight expression");
  lemma_cmd->add_option("--vtilde", lemma_opts.vtilde, "enlarged source weight expression");
  lemma_cmd->add_option("--w", lemma_opts.w, "target weight expression");
  lemma_cmd->add_option("--p", lemma_opts.p, "target derivative order (default 1)");
  lemma_cmd->add_option("--n", lemma_opts.n, "source seminorm order (default 0)");
  add_common(lemma_cmd, lemma_opts.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (check_cmd->parsed()) return run_check(check_cmd, check_opts);
    if (member_cmd->parsed()) return run_membership(member_cmd, member_opts);
    if (cross_cmd->parsed()) return run_crosscheck(cross_cmd, cross_opts);
    if (gorny_cmd->parsed()) return run_gorny(gorny_cmd, gorny_opts);
    if (lemma_cmd->parsed()) return run_lemma1(lemma_cmd, lemma_opts);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  std::cerr << "usage error: no subcommand\n";
  return kExitUsage;
}
