// Command-line front-end: one verb per run, configured by a JSON document.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hardylab/cli.hh"

int main(int argc, char** argv) {
  CLI::App app{"variational laboratory for singular-weight Rayleigh quotients"};
  app.fallthrough();
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int levels = 0;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON run configuration file");
  auto* oo = app.add_option("--out", out_dir, "output directory (overrides config)");
  auto* so = app.add_option("--seed", seed, "seed override");
  auto* lo = app.add_option("--levels", levels, "refinement level override");
  app.add_flag("--quiet", quiet, "suppress status output");

  const std::vector<std::string> verbs = {"solve",  "cap",   "lambda-star",   "nu",
                                          "sweep",  "study", "sector-search", "verify"};
  std::string verb;
  for (const std::string& v : verbs) {
    CLI::App* sub = app.add_subcommand(v);
    sub->callback([&verb, v] { verb = v; });
  }
  app.require_subcommand(0, 1);
  CLI11_PARSE(app, argc, argv);

  try {
    if (config_path.empty()) throw hardylab::ConfigError("a --config file is required");
    std::ifstream f(config_path);
    if (!f) throw hardylab::ConfigError("cannot read config file: " + config_path);
    nlohmann::json cfg;
    try {
      cfg = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      throw hardylab::ConfigError(std::string("malformed config: ") + e.what());
    }
    if (so->count()) cfg["options"]["seed"] = seed;
    if (lo->count()) cfg["options"]["levels"] = levels;
    if (oo->count()) cfg["out"] = out_dir;
    hardylab::RunConfig rc = hardylab::parse_run_config(cfg, verb);
    rc.quiet = quiet;
    return hardylab::run_to_files(rc, std::cerr);
  } catch (const hardylab::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }
}
