#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lipstab/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for piecewise constant complex admittivities"};
  app.set_version_flag("--version", lipstab::version_string());
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("config", config, "Path to the config file")->required();
  auto* out_opt = run->add_option("--out", out_dir, "Output directory (overrides the config)");
  auto* seed_opt = run->add_option("--seed", seed, "Random seed (overrides the config)");
  run->add_option("--threads", threads, "Worker threads for column-parallel loops")->check(CLI::Range(1, 1024));

  bool as_json = false;
  auto* list = app.add_subcommand("list", "List the available experiments");
  list->add_flag("--json", as_json, "Print the catalog as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lipstab::kExitInvalid;
  }

  if (*list) {
    std::cout << (as_json ? lipstab::catalog_json() : lipstab::catalog_text());
    return lipstab::kExitOk;
  }

  lipstab::RunOptions options;
  if (*out_opt) options.out_dir = out_dir;
  if (*seed_opt) options.seed = seed;
  options.threads = threads;
  const auto result = lipstab::run_scenario(config, options, std::cerr);
  return result.exit_code;
}
