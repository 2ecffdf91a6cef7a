// End-to-end checks of the command-line binary: exit codes, emitted files,
// determinism, and option overrides. The binary path arrives through the
// HARDYLAB_BIN compile definition.
#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kDir = fs::temp_directory_path() / "hardylab_cli_test";

int run_cmd(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string binary() { return std::string(HARDYLAB_BIN); }

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kDir);
  const fs::path p = kDir / name;
  std::ofstream f(p, std::ios::binary);
  f << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kCapConfig =
    R"({"command":"cap",
        "domain":{"variant":"cone_cap","N":2,"cap_angle":3.141592653589793},
        "options":{"levels":1}})";

}  // namespace

TEST_CASE("cap run succeeds and reruns byte-identically") {
  const fs::path cfg = write_config("cap.json", kCapConfig);
  const fs::path out1 = kDir / "cap_out1";
  const fs::path out2 = kDir / "cap_out2";
  fs::create_directories(out1);
  fs::create_directories(out2);

  // Identical effective configs: write into distinct working directories
  // rather than passing --out (overrides become part of the hashed config).
  CHECK(run_cmd("cd " + out1.string() + " && " + binary() + " cap --config " + cfg.string() +
                " --quiet") == 0);
  CHECK(run_cmd("cd " + out2.string() + " && " + binary() + " --config " + cfg.string() +
                " --quiet") == 0);

  const std::string r1 = slurp(out1 / "report.json");
  const std::string r2 = slurp(out2 / "report.json");
  CHECK(r1 == r2);
  const json rep = json::parse(r1);
  CHECK(rep.at("schema") == "hardylab-report-v1");
  CHECK(rep.at("command") == "cap");
  CHECK(rep.at("result").contains("value"));
}

TEST_CASE("status line is printed unless quieted") {
  const fs::path cfg = write_config("cap.json", kCapConfig);
  const fs::path out = kDir / "cap_loud";
  const fs::path errfile = kDir / "cap_loud.err";
  CHECK(run_cmd(binary() + " cap --config " + cfg.string() + " --out " + out.string() +
                " 2> " + errfile.string()) == 0);
  CHECK(slurp(errfile).find("report.json") != std::string::npos);
}

TEST_CASE("seed override changes the recorded seed and the config hash") {
  const fs::path cfg = write_config(
      "lind.json", R"({"command":"verify","check":{"name":"lindqvist","samples":2000}})");
  const fs::path out7 = kDir / "lind7";
  const fs::path out8 = kDir / "lind8";
  CHECK(run_cmd(binary() + " verify --config " + cfg.string() + " --seed 7 --out " +
                out7.string() + " --quiet") == 0);
  CHECK(run_cmd(binary() + " verify --config " + cfg.string() + " --seed 8 --out " +
                out8.string() + " --quiet") == 0);
  const json a = json::parse(slurp(out7 / "report.json"));
  const json b = json::parse(slurp(out8 / "report.json"));
  CHECK(a.at("seed") == 7);
  CHECK(b.at("seed") == 8);
  CHECK(a.at("config_hash") != b.at("config_hash"));
  CHECK(a.at("result").at("pass") == true);
  CHECK(b.at("result").at("pass") == true);
}

TEST_CASE("level override is recorded in the effective config") {
  const fs::path cfg = write_config("cap_nolevel.json",
                                    R"({"command":"cap",
        "domain":{"variant":"cone_cap","N":2,"cap_angle":3.141592653589793}})");
  const fs::path out = kDir / "cap_levels";
  CHECK(run_cmd(binary() + " cap --config " + cfg.string() + " --levels 1 --out " +
                out.string() + " --quiet") == 0);
  const json rep = json::parse(slurp(out / "report.json"));
  CHECK(rep.at("config").at("options").at("levels") == 1);
}

TEST_CASE("configuration errors exit with code 2") {
  const fs::path bad_p = write_config(
      "badp.json", R"({"command":"solve","domain":{"variant":"interval","length":1},
                       "problem":{"p":0.5},"options":{"levels":1}})");
  const fs::path errfile = kDir / "badp.err";
  CHECK(run_cmd(binary() + " solve --config " + bad_p.string() + " --quiet 2> " +
                errfile.string()) == 2);
  CHECK(slurp(errfile).find("configuration error: p must exceed 1") != std::string::npos);

  const fs::path malformed = write_config("broken.json", "{ not json");
  CHECK(run_cmd(binary() + " --config " + malformed.string() + " --quiet 2> /dev/null") == 2);

  CHECK(run_cmd(binary() + " solve --quiet 2> /dev/null") == 2);

  const fs::path cap = write_config("cap.json", kCapConfig);
  CHECK(run_cmd(binary() + " solve --config " + cap.string() + " --quiet 2> /dev/null") == 2);
}

TEST_CASE("violated sweep bounds exit with code 1 and still write the table") {
  const fs::path cfg = write_config(
      "sweep_bad.json", R"({"command":"sweep","sweep":{"kind":"lens_radius","values":[2]},
                            "options":{"levels":1}})");
  const fs::path out = kDir / "sweep_bad";
  CHECK(run_cmd(binary() + " sweep --config " + cfg.string() + " --out " + out.string() +
                " --quiet") == 1);
  const std::string csv = slurp(out / "table.csv");
  CHECK(csv.rfind("parameter,value,converged,iterations,level,mass_near_singularity\n", 0) ==
        0);
}

TEST_CASE("sweep results do not depend on the worker thread count") {
  const fs::path cfg = write_config(
      "sweep_th.json", R"({"command":"sweep","sweep":{"kind":"lens_radius","values":[12,25]},
                           "options":{"levels":1}})");
  const fs::path out1 = kDir / "sweep_t1";
  const fs::path out2 = kDir / "sweep_t2";
  fs::create_directories(out1);
  fs::create_directories(out2);
  CHECK(run_cmd("cd " + out1.string() + " && HARDYLAB_THREADS=1 " + binary() +
                " sweep --config " + cfg.string() + " --quiet") == 0);
  CHECK(run_cmd("cd " + out2.string() + " && HARDYLAB_THREADS=2 " + binary() +
                " sweep --config " + cfg.string() + " --quiet") == 0);
  CHECK(slurp(out1 / "report.json") == slurp(out2 / "report.json"));
  CHECK(slurp(out1 / "table.csv") == slurp(out2 / "table.csv"));
}

TEST_CASE("passing verify runs exit cleanly") {
  const fs::path cfg = write_config(
      "dist.json",
      R"({"command":"verify","check":{"name":"distance-substitution","p":2,"samples":2000}})");
  const fs::path out = kDir / "dist";
  CHECK(run_cmd(binary() + " verify --config " + cfg.string() + " --out " + out.string() +
                " --quiet") == 0);
  const json rep = json::parse(slurp(out / "report.json"));
  CHECK(rep.at("result").at("check") == "distance_substitution");
  CHECK(rep.at("result").at("pass") == true);
}
