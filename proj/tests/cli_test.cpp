#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// runs the installed binary with stdout/stderr captured next to the test cwd
RunResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path dir = fs::current_path() / "cli_test_out";
  fs::create_directories(dir);
  const fs::path out = dir / ("run" + std::to_string(counter++) + ".txt");
  const std::string cmd =
      std::string(COMPOP_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult res;
  if (WIFEXITED(status)) res.exit_code = WEXITSTATUS(status);
  res.out = slurp(out);
  return res;
}

const char* kFast = " --windows K=9,samples=512";

}  // namespace

TEST_CASE("check exit codes follow the verdict") {
  CHECK(run_cli("check --preset OM --phi x^2" + std::string(kFast)).exit_code == 0);
  CHECK(run_cli("check --preset OC --phi x^2" + std::string(kFast)).exit_code == 1);
  CHECK(run_cli("check --preset B --phi \"sin(x)\"" + std::string(kFast)).exit_code == 0);
  CHECK(run_cli("check --preset S --phi \"sin(x)\"" + std::string(kFast)).exit_code == 1);
  CHECK(run_cli("check --preset EXP --phi x" + std::string(kFast)).exit_code == 0);
}

TEST_CASE("membership exit codes follow the tag") {
  CHECK(run_cli("membership --f \"sin(x^2)\" --space OC" + std::string(kFast)).exit_code == 1);
  CHECK(run_cli("membership --f \"sin(x^2)\" --space OM" + std::string(kFast)).exit_code == 0);
  // non-smooth probes stay inconclusive rather than guessing
  CHECK(run_cli("membership --f \"abs(x)\" --space OM" + std::string(kFast)).exit_code == 2);
}

TEST_CASE("usage errors exit with 3") {
  CHECK(run_cli("check --phi x --preset NOPE").exit_code == 3);
  CHECK(run_cli("check --phi x --preset OMn").exit_code == 3);
  CHECK(run_cli("check --phi x --preset S --bounds Q=2").exit_code == 3);
  CHECK(run_cli("check --preset S").exit_code == 3);  // --phi is required
  CHECK(run_cli("frobnicate").exit_code == 3);
}

TEST_CASE("malformed expressions exit with 4") {
  const RunResult bad = run_cli("check --phi \"1+\" --preset S");
  CHECK(bad.exit_code == 4);
  CHECK(bad.out.find("syntax error") != std::string::npos);
  CHECK(run_cli("check --phi \"abs(x)\" --preset S" + std::string(kFast)).exit_code == 4);
  CHECK(run_cli("membership --f \"sin(y)\" --space OM").exit_code == 4);
}

TEST_CASE("reports default to stdout and move behind --out") {
  const RunResult direct = run_cli("check --preset OM --phi x^2" + std::string(kFast));
  const nlohmann::json doc = nlohmann::json::parse(direct.out);
  CHECK(doc.at("schema") == "compop-check/1");
  CHECK(doc.at("overall") == "pass");

  const fs::path target = fs::current_path() / "cli_test_out" / "report.json";
  const RunResult filed =
      run_cli("check --preset OM --phi x^2" + std::string(kFast) + " --out " + target.string());
  CHECK(filed.exit_code == 0);
  // stdout shrinks to a one-line summary
  CHECK(filed.out == "check: pass (part III)\n");
  const nlohmann::json on_disk = nlohmann::json::parse(slurp(target));
  CHECK(on_disk.at("overall") == "pass");
  CHECK(on_disk == doc);
}

TEST_CASE("harness subcommands run and summarize") {
  const RunResult gorny = run_cli("harness gorny --j 1 --m 2");
  CHECK(gorny.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(gorny.out);
  CHECK(doc.at("violations") == 0);
  CHECK(doc.at("stable") == true);

  const RunResult lemma = run_cli("harness lemma1 --phi x --p 1 --n 1" + std::string(kFast));
  CHECK(lemma.exit_code == 0);
  CHECK(nlohmann::json::parse(lemma.out).at("implication_ok") == true);

  const RunResult cross =
      run_cli("harness crosscheck --phi x^2 --preset OM" + std::string(kFast));
  CHECK(cross.exit_code == 0);
  const nlohmann::json cdoc = nlohmann::json::parse(cross.out);
  CHECK(cdoc.at("discrepancies") == 0);
}

TEST_CASE("worker count never changes the written report") {
  const fs::path dir = fs::current_path() / "cli_test_out";
  fs::create_directories(dir);
  const fs::path one = dir / "jobs1.json";
  const fs::path eight = dir / "jobs8.json";
  const std::string base = "check --preset S --phi \"x^3+x\"" + std::string(kFast);
  CHECK(run_cli(base + " --jobs 1 --out " + one.string()).exit_code == 0);
  CHECK(run_cli(base + " --jobs 8 --out " + eight.string()).exit_code == 0);
  const std::string a = slurp(one);
  const std::string b = slurp(eight);
  CHECK(!a.empty());
  CHECK(a == b);

  const fs::path m1 = dir / "m1.json";
  const fs::path m8 = dir / "m8.json";
  const std::string mem = "membership --f \"sin(x^2)\" --space OC" + std::string(kFast);
  CHECK(run_cli(mem + " --jobs 1 --out " + m1.string()).exit_code == 1);
  CHECK(run_cli(mem + " --jobs 8 --out " + m8.string()).exit_code == 1);
  CHECK(slurp(m1) == slurp(m8));
}

TEST_CASE("config files merge under explicit flags") {
  const fs::path dir = fs::current_path() / "cli_test_out";
  fs::create_directories(dir);
  const fs::path cfg = dir / "config.json";
  {
    std::ofstream out(cfg);
    out << R"j({"windows":{"K":9,"samples":512},"bounds":{"p_max":3}})j";
  }
  const RunResult r = run_cli("check --preset B --phi \"sin(x)\" --config " + cfg.string());
  CHECK(r.exit_code == 0);
  const nlohmann::json doc = nlohmann::json::parse(r.out);
  CHECK(doc.at("config").at("windows").at("annuli") == 9);
  CHECK(doc.at("config").at("bounds").at("p_max") == 3);
  // a flag beats the file
  const RunResult flag =
      run_cli("check --preset B --phi \"sin(x)\" --config " + cfg.string() + " --bounds p=2");
  CHECK(nlohmann::json::parse(flag.out).at("config").at("bounds").at("p_max") == 2);

  CHECK(run_cli("check --preset B --phi x --config " + (dir / "missing.json").string()).exit_code ==
        4);
}
