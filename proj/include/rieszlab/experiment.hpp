#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace rieszlab::experiment {

inline constexpr const char* kToolName = "rieszlab";
inline constexpr const char* kToolVersion = "0.1.0";

using json = nlohmann::json;

/// Experiment kinds accepted by run().
const std::vector<std::string>& kinds();

struct RunContext {
  std::filesystem::path base_dir;  ///< relative input paths resolve here
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct RunResult {
  std::vector<json> records;
  /// Names of failed invariant checks, across all sub-runs.
  std::vector<std::string> violations;
};

/// Parses a config file. Throws InputError with line/field diagnostics.
json load_config(const std::filesystem::path& path);

/// Runs every sub-run of a config ("runs" entries override the base
/// record). Throws InputError on malformed input.
RunResult run(const json& config, const RunContext& ctx);

/// Appends records to <out>/report.jsonl and rewrites <out>/summary.txt.
void write_report(const RunResult& result, const std::filesystem::path& out_dir);

/// Table view of a report.jsonl file.
std::string format_report(const std::filesystem::path& report);

/// Drops wall_time entries, recursively.
json without_timing(json record);

/// Builtin generator names.
std::vector<std::string> builtin_names();

/// Writes the named builtin to <out>/<stem>.json (+ .bin). Parameters are
/// strings as given on the command line; lengths may carry an "h" suffix
/// meaning multiples of the grid spacing. Returns the header paths written.
std::vector<std::filesystem::path> generate(const std::string& name, const std::map<std::string, std::string>& params,
                                            const std::filesystem::path& out_dir);

}  // namespace rieszlab::experiment
