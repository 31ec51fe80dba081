#pragma once

#include "deficitlab/estimate.hpp"
#include "deficitlab/io.hpp"
#include "deficitlab/svg.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace deficit {

inline constexpr int kSchemaVersion = 1;

/// One entry of "suites". `params` holds the op specific keys; they are
/// checked when the config is parsed.
struct SuiteSpec {
  std::string name;
  std::string op;  // eval | check | clt | hyper | geom
  Json params;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t master_seed = 0;
  std::vector<SuiteSpec> suites;
  std::filesystem::path output_dir = "out";
};

/// Throws InvalidConfig with a readable message.
RunConfig parse_config(const Json& j);
RunConfig load_config(const std::filesystem::path& p);
/// Validates one suite without running it.
void validate_suite(const SuiteSpec& s);

const std::vector<std::string>& suite_ops();

/// "a:b:step" (inclusive, step > 0) or a comma separated list.
std::vector<double> parse_grid(const std::string& s);

struct SuiteOutput {
  std::string name;
  std::string op;
  Csv csv;
  /// Additional tables, written as <name>_<suffix>.csv
  std::vector<std::pair<std::string, Csv>> extra;
  std::vector<DeficitReport> reports;
  std::vector<std::pair<std::string, LineChart>> charts;
};

/// Runs one suite. `seed` is the suite seed; `artifacts` receives files the
/// suite writes itself (geom counterexamples).
SuiteOutput run_suite(const SuiteSpec& s, std::uint64_t seed,
                      const std::optional<std::filesystem::path>& artifacts = std::nullopt);

struct RunResult {
  Json summary;
  /// 0 ok, 1 an asserted report was violated
  int exit_code = 0;
};

/// Executes every suite in index order and writes CSV, SVG and summary.json
/// into cfg.output_dir.
RunResult run(const RunConfig& cfg);

}  // namespace deficit
