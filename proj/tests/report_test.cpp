#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "compop/criteria.hpp"
#include "compop/expr.hpp"
#include "compop/report.hpp"
#include "compop/spaces.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace compop;
using nlohmann::json;

namespace {

WindowSchedule small_schedule() { return WindowSchedule{9, 512}; }

Config small_config() {
  Config cfg;
  cfg.schedule = small_schedule();
  return cfg;
}

}  // namespace

TEST_CASE("weight descriptors parse and round-trip") {
  const WeightSystem power = weight_system_from_json(R"j({"kind":"power","base":"1+abs(x)"})j");
  CHECK(power.kind() == WeightSystem::Kind::Power);
  CHECK(power.weight(2).eval(3.0) == doctest::Approx(16.0));
  CHECK(weight_system_from_json(weight_system_descriptor(power)).weight(2).eval(3.0) ==
        doctest::Approx(16.0));

  const WeightSystem listed =
      weight_system_from_json(R"j({"kind":"explicit","list":["1","1+x^2"]})j");
  CHECK(listed.max_index() == 1);
  CHECK(listed.weight(1).eval(2.0) == doctest::Approx(5.0));
  const json echoed = json::parse(weight_system_descriptor(listed));
  CHECK(echoed.at("kind") == "explicit");
  CHECK(echoed.at("list").size() == 2);

  const WeightSystem expo =
      weight_system_from_json(R"j({"kind":"exponential","base":"abs(x)"})j");
  CHECK(expo.weight(1).eval(2.0) == doctest::Approx(std::exp(2.0)));
  CHECK(weight_system_from_json(weight_system_descriptor(expo)).log_weight(2).eval(3.0) ==
        doctest::Approx(6.0));
}

TEST_CASE("weight descriptors reject malformed input") {
  CHECK_THROWS_AS(weight_system_from_json("not json"), std::invalid_argument);
  CHECK_THROWS_AS(weight_system_from_json(R"j({"kind":"nope"})j"), std::invalid_argument);
  CHECK_THROWS_AS(weight_system_from_json(R"j({"kind":"power"})j"), std::invalid_argument);
  CHECK_THROWS_AS(weight_system_from_json(R"j({"kind":"explicit","list":[]})j"),
                  std::invalid_argument);
  CHECK_THROWS_AS(weight_system_from_json(R"j({"kind":"power","base":"1+"})j"), ParseError);
}

TEST_CASE("space descriptors fill defaults per family") {
  const Bounds defaults;
  const SpaceSpec oc = space_spec_from_json(R"j({"family":"OC"})j", defaults);
  CHECK(oc.family == SpaceFamily::OC);
  CHECK(oc.system.weight(1).eval(3.0) == doctest::Approx(4.0));  // stock polynomial system
  CHECK(oc.N_max == defaults.N_max);
  CHECK(oc.n_max == defaults.n_max);

  const SpaceSpec b = space_spec_from_json(R"j({"family":"B"})j", defaults);
  CHECK(b.family == SpaceFamily::B);
  CHECK(b.system.is_constant_one());

  const SpaceSpec omn = space_spec_from_json(R"j({"family":"OMn","n":3})j", defaults);
  CHECK(omn.family == SpaceFamily::OMn);
  CHECK(omn.n == 3);

  const SpaceSpec custom = space_spec_from_json(
      R"j({"family":"K","system":{"kind":"explicit","list":["1","1+x^2"]},"bounds":{"N_max":4,"n_max":2}})j",
      defaults);
  CHECK(custom.family == SpaceFamily::K);
  CHECK(custom.system.max_index() == 1);
  CHECK(custom.N_max == 4);
  CHECK(custom.n_max == 2);

  CHECK_THROWS_AS(space_spec_from_json(R"j({"family":"Z"})j", defaults), std::invalid_argument);
  CHECK_THROWS_AS(space_spec_from_json(R"j({"n":1})j", defaults), std::invalid_argument);
  CHECK_THROWS_AS(space_spec_from_json(R"j({"family":"K","bounds":{"zap":1}})j", defaults),
                  std::invalid_argument);
}

TEST_CASE("config overlays touch only the given keys") {
  Config cfg = small_config();
  apply_config_json(
      R"j({"bounds":{"N_max":3},"windows":{"annuli":10,"samples_per_window":64},"thresholds":{"growth_factor":1.5},"jobs":4,"seed":7})j",
      cfg);
  CHECK(cfg.bounds.N_max == 3);
  CHECK(cfg.bounds.M_max == 8);  // untouched
  CHECK(cfg.schedule.annuli == 10);
  CHECK(cfg.schedule.samples_per_window == 64);
  CHECK(cfg.thresholds.growth_factor == doctest::Approx(1.5));
  CHECK(cfg.thresholds.bounded_slack == doctest::Approx(0.05));
  CHECK(cfg.jobs == 4);
  CHECK(cfg.seed == 7);

  // short window spellings
  apply_config_json(R"j({"windows":{"K":12,"samples":128}})j", cfg);
  CHECK(cfg.schedule.annuli == 12);
  CHECK(cfg.schedule.samples_per_window == 128);

  CHECK_THROWS_AS(apply_config_json(R"j({"zap":1})j", cfg), std::invalid_argument);
  CHECK_THROWS_AS(apply_config_json(R"j({"bounds":{"Q_max":1}})j", cfg), std::invalid_argument);
  CHECK_THROWS_AS(apply_config_json(R"j({"seed":"x"})j", cfg), std::invalid_argument);
}

TEST_CASE("check documents carry the verdict and omit run-local fields") {
  const Config cfg = small_config();
  const CriteriaVerdict verdict =
      check_B(parse("sin(x)"), cfg.bounds, cfg.schedule, cfg.thresholds);
  const RunMeta meta{"check", cfg, false};
  const Preset p = preset("B", cfg.bounds);
  const json doc = json::parse(
      render_check(meta, "sin(x)", "B", p.source.system, p.target.system, verdict));

  CHECK(doc.at("schema") == "compop-check/1");
  CHECK(doc.at("command") == "check");
  CHECK(doc.at("phi") == "sin(x)");
  CHECK(doc.at("overall") == "pass");
  CHECK(doc.at("paper_part") == "B");
  CHECK(doc.at("witness").is_null());  // only failures carry a witness
  CHECK(doc.at("conditions").at("b").is_array());
  CHECK(!doc.at("conditions").at("b").empty());
  CHECK(doc.at("conditions").at("b").at(0).at("indices").contains("p"));
  CHECK(!doc.at("config").contains("jobs"));  // reports are jobs-independent
  CHECK(!doc.at("config").contains("seed"));
  CHECK(doc.at("config").at("windows").at("annuli") == 9);

  RunMeta seeded{"check", cfg, true};
  seeded.config.seed = 42;
  const json with_seed = json::parse(
      render_check(seeded, "sin(x)", "B", p.source.system, p.target.system, verdict));
  CHECK(with_seed.at("config").at("seed") == 42);
}

TEST_CASE("failing check documents expose the deciding cell") {
  const Config cfg = small_config();
  const CriteriaVerdict verdict =
      check_B(parse("x^2"), cfg.bounds, cfg.schedule, cfg.thresholds);
  const RunMeta meta{"check", cfg, false};
  const Preset p = preset("B", cfg.bounds);
  const json doc =
      json::parse(render_check(meta, "x^2", "B", p.source.system, p.target.system, verdict));
  CHECK(doc.at("overall") == "fail");
  const json& witness = doc.at("witness");
  CHECK(witness.at("condition") == "b");
  CHECK(witness.at("tag") == "diverging");
  const std::string csv = witness.at("trail_csv").get<std::string>();
  CHECK(csv.rfind("x,ratio\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') >= 3);
}

TEST_CASE("membership documents mirror the verdict") {
  const Config cfg = small_config();
  SpaceSpec spec;
  spec.family = SpaceFamily::OM;
  spec.system = WeightSystem::power(parse("1+abs(x)"));
  const MembershipVerdict verdict =
      membership(parse("sin(x^2)"), spec, cfg.schedule, cfg.thresholds);
  const RunMeta meta{"membership", cfg, false};
  const json doc = json::parse(render_membership(meta, "sin(x^2)", spec, verdict));
  CHECK(doc.at("schema") == "compop-check/1");
  CHECK(doc.at("command") == "membership");
  CHECK(doc.at("f") == "sin(x^2)");
  CHECK(doc.at("space").at("family") == "OM");
  CHECK(doc.at("tag") == "holds");
  CHECK(doc.at("cells").is_array());
  CHECK(!doc.at("cells").empty());
  CHECK(doc.at("cells").at(0).contains("N"));
  CHECK(doc.at("cells").at(0).contains("p"));
}

TEST_CASE("witness csv uses shortest faithful decimal rows") {
  GrowthVerdict v;
  v.tag = GrowthTag::Diverging;
  v.witness = {{0.5, 2.0}, {1.25, 3.5}};
  CHECK(witness_csv(v) == "x,ratio\n0.5,2\n1.25,3.5\n");
  GrowthVerdict empty;
  CHECK(witness_csv(empty) == "x,ratio\n");
}

TEST_CASE("non-finite numbers render as strings") {
  GrowthVerdict v;
  v.tag = GrowthTag::Diverging;
  v.witness = {{1.0, std::numeric_limits<double>::infinity()},
               {2.0, std::numeric_limits<double>::quiet_NaN()}};
  const std::string csv = witness_csv(v);
  CHECK(csv == "x,ratio\n1,inf\n2,nan\n");
}

TEST_CASE("atomic writes leave no temporaries behind") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::current_path() / "report_test_out";
  fs::create_directories(dir);
  const fs::path target = dir / "doc.json";
  write_atomic(target.string(), "{\"a\":1}\n");
  std::ifstream in(target);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(content == "{\"a\":1}\n");
  // the only entry in the directory is the finished file
  int entries = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);
  write_atomic(target.string(), "{\"a\":2}\n");
  std::ifstream again(target);
  std::string replaced((std::istreambuf_iterator<char>(again)), std::istreambuf_iterator<char>());
  CHECK(replaced == "{\"a\":2}\n");
  fs::remove_all(dir);
}
