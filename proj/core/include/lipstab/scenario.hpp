#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lipstab {

/// One entry of the experiment catalog.
struct ExperimentInfo {
  std::string name;
  std::string summary;
  std::string anchor;  // the mathematical statement the experiment exercises
  std::vector<std::string> params;  // "key: type = default (meaning)"
  std::vector<std::string> outputs;
};

const std::vector<ExperimentInfo>& experiment_catalog();
std::string catalog_text();
std::string catalog_json();

struct RunOptions {
  std::optional<std::string> out_dir;  // overrides the config's "output"
  std::optional<std::uint64_t> seed;   // overrides the config's "seed"
  int threads = 0;                     // 0 keeps the library default
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 invalid input, 3 numeric failure
  std::string message;
  std::string out_dir;
  std::vector<std::string> outputs;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNumeric = 3;

/// Parses, validates and runs a scenario file. Diagnostics go to `log`.
RunResult run_scenario(const std::string& path, const RunOptions& options, std::ostream& log);
/// Same for config text already in memory; `origin` names it in diagnostics.
RunResult run_scenario_text(const std::string& text, const std::string& origin, const RunOptions& options,
                            std::ostream& log);

std::string version_string();

}  // namespace lipstab
