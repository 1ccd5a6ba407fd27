#include "compop/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <utility>

#include "json.hpp"

namespace compop {

namespace {

using ordered_json = nlohmann::ordered_json;

// JSON has no encoding for non-finite doubles; use strings the tooling parses
ordered_json num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream oss;
  oss.precision(17);
  oss << x;
  return oss.str();
}

ordered_json verdict_json(const GrowthVerdict& v, bool with_trail) {
  ordered_json j;
  j["tag"] = to_cstring(v.tag);
  j["sup"] = num(v.sup_estimate);
  j["windows"] = v.windows_used;
  if (!v.diagnostic.empty()) j["note"] = v.diagnostic;
  if (with_trail) j["trail_csv"] = witness_csv(v);
  return j;
}

ordered_json indices_json(const IndexList& indices) {
  ordered_json j = ordered_json::object();
  for (const auto& [name, value] : indices) j[name] = value;
  return j;
}

ordered_json cells_json(const ConditionTable& table) {
  ordered_json cells = ordered_json::array();
  for (const auto& cell : table.cells) {
    ordered_json c;
    c["indices"] = indices_json(cell.indices);
    c["tag"] = to_cstring(cell.verdict.tag);
    c["sup"] = num(cell.verdict.sup_estimate);
    c["windows"] = cell.verdict.windows_used;
    if (!cell.verdict.diagnostic.empty()) c["note"] = cell.verdict.diagnostic;
    cells.push_back(std::move(c));
  }
  return cells;
}

ordered_json system_json(const WeightSystem& s) {
  ordered_json j;
  switch (s.kind()) {
    case WeightSystem::Kind::Power:
      j["kind"] = "power";
      j["base"] = to_string(s.base());
      break;
    case WeightSystem::Kind::Explicit: {
      j["kind"] = "explicit";
      ordered_json list = ordered_json::array();
      for (const Expr& v : s.list()) list.push_back(to_string(v));
      j["list"] = std::move(list);
      break;
    }
    case WeightSystem::Kind::Exponential:
      j["kind"] = "exponential";
      j["base"] = to_string(s.base());
      break;
  }
  return j;
}

ordered_json hypothesis_json(const CondMultReport& hyp, const std::string& diagnostic) {
  ordered_json j;
  j["ok"] = hyp.ok();
  ordered_json entries = ordered_json::array();
  for (const auto& e : hyp.entries) {
    ordered_json row;
    row["N"] = e.N;
    row["M"] = e.M;
    row["K"] = e.K;
    row["tag"] = to_cstring(e.verdict.tag);
    row["sup"] = num(e.verdict.sup_estimate);
    entries.push_back(std::move(row));
  }
  j["entries"] = std::move(entries);
  if (!diagnostic.empty()) j["diagnostic"] = diagnostic;
  return j;
}

ordered_json envelope(const RunMeta& meta) {
  ordered_json j;
  j["schema"] = "compop-check/1";
  j["command"] = meta.command;
  return j;
}

ordered_json config_json(const RunMeta& meta) {
  const Config& c = meta.config;
  ordered_json j;
  j["bounds"] = ordered_json{{"N_max", c.bounds.N_max},
                             {"M_max", c.bounds.M_max},
                             {"n_max", c.bounds.n_max},
                             {"p_max", c.bounds.p_max},
                             {"k_max", c.bounds.k_max}};
  j["windows"] = ordered_json{{"annuli", c.schedule.annuli},
                              {"samples_per_window", c.schedule.samples_per_window}};
  j["thresholds"] = ordered_json{{"bounded_slack", c.thresholds.bounded_slack},
                                 {"bounded_prefix", c.thresholds.bounded_prefix},
                                 {"diverging_tail", c.thresholds.diverging_tail},
                                 {"growth_factor", c.thresholds.growth_factor}};
  if (meta.has_seed) j["seed"] = c.seed;
  return j;
}

std::string finish(ordered_json& j, const RunMeta& meta) {
  j["config"] = config_json(meta);
  return j.dump(2) + "\n";
}

}  // namespace

std::string witness_csv(const GrowthVerdict& verdict) {
  std::string csv = "x,ratio\n";
  for (const WitnessPoint& wp : verdict.witness) {
    csv += format_double(wp.x);
    csv += ',';
    csv += format_double(wp.ratio);
    csv += '\n';
  }
  return csv;
}

std::string render_check(const RunMeta& meta, const std::string& phi, const std::string& preset,
                         const WeightSystem& source, const WeightSystem& target,
                         const CriteriaVerdict& verdict) {
  ordered_json j = envelope(meta);
  j["phi"] = phi;
  if (!preset.empty()) j["preset"] = preset;
  j["source_system"] = system_json(source);
  j["target_system"] = system_json(target);
  j["overall"] = to_cstring(verdict.overall);
  j["paper_part"] = verdict.part;
  j["conditions"] =
      ordered_json{{"a", cells_json(verdict.condition_a)}, {"b", cells_json(verdict.condition_b)}};
  j["condition_tags"] = ordered_json{{"a", to_cstring(verdict.condition_a.tag)},
                                     {"b", to_cstring(verdict.condition_b.tag)}};
  if (verdict.overall == CheckTag::Fail) {
    ordered_json w;
    w["condition"] = verdict.witness_condition;
    w["indices"] = indices_json(verdict.witness_indices);
    w["tag"] = to_cstring(verdict.witness.tag);
    w["sup"] = num(verdict.witness.sup_estimate);
    w["trail_csv"] = witness_csv(verdict.witness);
    j["witness"] = std::move(w);
  } else {
    j["witness"] = nullptr;
  }
  j["hypothesis"] = hypothesis_json(verdict.hypothesis, verdict.hypothesis_diagnostic);
  return finish(j, meta);
}

std::string render_membership(const RunMeta& meta, const std::string& f, const SpaceSpec& spec,
                              const MembershipVerdict& verdict) {
  ordered_json j = envelope(meta);
  j["f"] = f;
  j["space"] = ordered_json{
      {"family", to_cstring(spec.family)},
      {"system", system_json(spec.system)},
      {"n", spec.n},
      {"bounds", ordered_json{{"N_max", spec.N_max}, {"n_max", spec.n_max}}}};
  j["tag"] = to_cstring(verdict.tag);
  j["witness_N"] = verdict.witness_N;
  j["witness_n"] = verdict.witness_n;
  ordered_json cells = ordered_json::array();
  for (const MembershipCell& cell : verdict.cells) {
    ordered_json c;
    c["N"] = cell.N;
    c["p"] = cell.p;
    c["tag"] = to_cstring(cell.verdict.tag);
    c["sup"] = num(cell.verdict.sup_estimate);
    c["windows"] = cell.verdict.windows_used;
    if (!cell.verdict.diagnostic.empty()) c["note"] = cell.verdict.diagnostic;
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  if (!verdict.diagnostic.empty()) j["diagnostic"] = verdict.diagnostic;
  return finish(j, meta);
}

std::string render_crosscheck(const RunMeta& meta, const CrosscheckReport& report) {
  ordered_json j = envelope(meta);
  ordered_json entries = ordered_json::array();
  for (const CrosscheckEntry& entry : report.entries) {
    ordered_json e;
    e["phi"] = entry.phi;
    e["part"] = to_cstring(entry.part);
    e["system"] = entry.system;
    e["checker"] = to_cstring(entry.checker);
    ordered_json samples = ordered_json::array();
    for (const CrosscheckSample& s : entry.samples) {
      ordered_json row;
      row["f"] = s.f;
      row["source"] = to_cstring(s.source);
      if (s.skipped) {
        row["skipped"] = true;
      } else {
        row["composed"] = to_cstring(s.composed);
      }
      samples.push_back(std::move(row));
    }
    e["samples"] = std::move(samples);
    e["discrepancy"] = entry.discrepancy;
    if (!entry.note.empty()) e["note"] = entry.note;
    entries.push_back(std::move(e));
  }
  j["entries"] = std::move(entries);
  j["discrepancies"] = report.discrepancies;
  j["inconclusive"] = report.inconclusive;
  return finish(j, meta);
}

std::string render_gorny(const RunMeta& meta, const GornyReport& report) {
  ordered_json j = envelope(meta);
  j["j"] = report.j;
  j["m"] = report.m;
  j["c_full"] = num(report.c_full);
  j["c_half"] = num(report.c_half);
  j["stable"] = report.stable;
  j["violations"] = report.violations;
  std::string csv = "index,ratio\n";
  for (std::size_t i = 0; i < report.ratios.size(); ++i) {
    csv += std::to_string(i);
    csv += ',';
    csv += format_double(report.ratios[i]);
    csv += '\n';
  }
  j["ratio_csv"] = std::move(csv);
  ordered_json excluded = ordered_json::array();
  for (std::size_t idx : report.excluded) excluded.push_back(idx);
  j["excluded"] = std::move(excluded);
  if (!report.diagnostic.empty()) j["diagnostic"] = report.diagnostic;
  return finish(j, meta);
}

std::string render_lemma1(const RunMeta& meta, const Lemma1Inputs& inputs,
                          const Lemma1Report& report) {
  ordered_json j = envelope(meta);
  j["v"] = inputs.v;
  j["v_tilde"] = inputs.v_tilde;
  j["w"] = inputs.w;
  j["phi"] = inputs.phi;
  j["p"] = inputs.p;
  j["n"] = inputs.n;
  j["c0"] = verdict_json(report.c0, false);
  static const char* const kConclusionNames[3] = {"v(phi)/w", "v(phi)*|phi'|^p/w",
                                                  "v(phi)*|phi^(p)|/w"};
  ordered_json conclusions = ordered_json::array();
  for (std::size_t i = 0; i < report.conclusions.size(); ++i) {
    ordered_json c = verdict_json(report.conclusions[i], true);
    c["ratio"] = kConclusionNames[i];
    conclusions.push_back(std::move(c));
  }
  j["conclusions"] = std::move(conclusions);
  j["c1_max"] = num(report.c1_max);
  auto samples_csv = [](const std::vector<Lemma1Sample>& samples) {
    std::string csv = "x,c1\n";
    for (const Lemma1Sample& s : samples) {
      csv += format_double(s.x);
      csv += ',';
      csv += format_double(s.c1);
      csv += '\n';
    }
    return csv;
  };
  j["samples_csv"] = samples_csv(report.samples);
  j["trail_csv"] = samples_csv(report.trail_samples);
  j["implication_ok"] = report.implication_ok;
  j["contrapositive_ok"] = report.contrapositive_ok;
  if (!report.diagnostic.empty()) j["diagnostic"] = report.diagnostic;
  return finish(j, meta);
}

namespace {

ordered_json parse_descriptor(const std::string& text, const char* what) {
  try {
    return ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string(what) + ": " + e.what());
  }
}

Expr expr_field(const ordered_json& j, const char* name, const char* what) {
  if (!j.contains(name) || !j.at(name).is_string()) {
    throw std::invalid_argument(std::string(what) + " needs a \"" + name + "\" expression string");
  }
  return parse(j.at(name).get<std::string>());
}

WeightSystem system_from(const ordered_json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw std::invalid_argument("weight descriptor needs a \"kind\" string");
  }
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "power") return WeightSystem::power(expr_field(j, "base", "power system"));
  if (kind == "exponential") {
    return WeightSystem::exponential(expr_field(j, "base", "exponential system"));
  }
  if (kind == "explicit") {
    if (!j.contains("list") || !j.at("list").is_array() || j.at("list").empty()) {
      throw std::invalid_argument("explicit system needs a nonempty \"list\" of expressions");
    }
    std::vector<Expr> list;
    for (const auto& item : j.at("list")) {
      if (!item.is_string()) throw std::invalid_argument("explicit list entries must be strings");
      list.push_back(parse(item.get<std::string>()));
    }
    return WeightSystem::explicit_list(std::move(list));
  }
  throw std::invalid_argument("unknown weight kind '" + kind +
                              "' (expected power, explicit, or exponential)");
}

}  // namespace

WeightSystem weight_system_from_json(const std::string& text) {
  return system_from(parse_descriptor(text, "weight descriptor"));
}

std::string weight_system_descriptor(const WeightSystem& system) {
  return system_json(system).dump();
}

SpaceSpec space_spec_from_json(const std::string& text, const Bounds& defaults) {
  const ordered_json j = parse_descriptor(text, "space descriptor");
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string()) {
    throw std::invalid_argument("space descriptor needs a \"family\" string");
  }
  SpaceSpec spec;
  const std::string family = j.at("family").get<std::string>();
  if (family == "K") {
    spec.family = SpaceFamily::K;
  } else if (family == "OC") {
    spec.family = SpaceFamily::OC;
  } else if (family == "OM") {
    spec.family = SpaceFamily::OM;
  } else if (family == "B") {
    spec.family = SpaceFamily::B;
  } else if (family == "OMn") {
    spec.family = SpaceFamily::OMn;
  } else {
    throw std::invalid_argument("unknown space family '" + family +
                                "' (expected K, OC, OM, B, or OMn)");
  }
  if (j.contains("system")) {
    spec.system = system_from(j.at("system"));
  } else if (spec.family == SpaceFamily::B) {
    spec.system = WeightSystem();
  } else {
    spec.system = WeightSystem::power(parse("1+abs(x)"));
  }
  spec.N_max = defaults.N_max;
  spec.n_max = defaults.n_max;
  if (j.contains("n")) {
    if (!j.at("n").is_number_integer()) throw std::invalid_argument("space \"n\" must be an integer");
    spec.n = j.at("n").get<int>();
  }
  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    if (!b.is_object()) throw std::invalid_argument("space \"bounds\" must be an object");
    for (const auto& [key, value] : b.items()) {
      if (!value.is_number_integer()) {
        throw std::invalid_argument("space bound \"" + key + "\" must be an integer");
      }
      if (key == "N_max") {
        spec.N_max = value.get<int>();
      } else if (key == "n_max") {
        spec.n_max = value.get<int>();
      } else {
        throw std::invalid_argument("unknown space bound \"" + key + "\"");
      }
    }
  }
  return spec;
}

void apply_config_json(const std::string& text, Config& config) {
  const ordered_json j = parse_descriptor(text, "config");
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "bounds") {
      for (const auto& [name, v] : value.items()) {
        if (!v.is_number_integer()) {
          throw std::invalid_argument("bound \"" + name + "\" must be an integer");
        }
        if (name == "N_max") {
          config.bounds.N_max = v.get<int>();
        } else if (name == "M_max") {
          config.bounds.M_max = v.get<int>();
        } else if (name == "n_max") {
          config.bounds.n_max = v.get<int>();
        } else if (name == "p_max") {
          config.bounds.p_max = v.get<int>();
        } else if (name == "k_max") {
          config.bounds.k_max = v.get<int>();
        } else {
          throw std::invalid_argument("unknown bound \"" + name + "\"");
        }
      }
    } else if (key == "windows") {
      for (const auto& [name, v] : value.items()) {
        if (!v.is_number_integer()) {
          throw std::invalid_argument("window field \"" + name + "\" must be an integer");
        }
        if (name == "annuli" || name == "K") {
          config.schedule.annuli = v.get<int>();
        } else if (name == "samples_per_window" || name == "samples") {
          config.schedule.samples_per_window = v.get<int>();
        } else {
          throw std::invalid_argument("unknown window field \"" + name + "\"");
        }
      }
    } else if (key == "thresholds") {
      for (const auto& [name, v] : value.items()) {
        if (!v.is_number()) {
          throw std::invalid_argument("threshold \"" + name + "\" must be a number");
        }
        if (name == "bounded_slack") {
          config.thresholds.bounded_slack = v.get<double>();
        } else if (name == "bounded_prefix") {
          config.thresholds.bounded_prefix = v.get<int>();
        } else if (name == "diverging_tail") {
          config.thresholds.diverging_tail = v.get<int>();
        } else if (name == "growth_factor") {
          config.thresholds.growth_factor = v.get<double>();
        } else {
          throw std::invalid_argument("unknown threshold \"" + name + "\"");
        }
      }
    } else if (key == "seed") {
      if (!value.is_number_integer()) throw std::invalid_argument("seed must be an integer");
      config.seed = value.get<std::uint64_t>();
    } else if (key == "jobs") {
      if (!value.is_number_integer()) throw std::invalid_argument("jobs must be an integer");
      config.jobs = value.get<int>();
    } else {
      throw std::invalid_argument("unknown config key \"" + key + "\"");
    }
  }
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);  // open() below reports real failures
  }
  const fs::path tmp(path + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw std::runtime_error("cannot move report into place at '" + path + "': " + ec.message());
  }
}

}  // namespace compop
