#pragma once

#include "deficitlab/density.hpp"
#include "deficitlab/estimate.hpp"
#include "deficitlab/functionals.hpp"
#include "deficitlab/geometry.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace deficit {

using Json = nlohmann::json;

/// Shortest decimal that parses back to the same double; "inf", "-inf", "nan"
/// for non-finite values.
std::string format_double(double v);
double parse_double(std::string_view s);

// densities: {"kind": "mixture" | "grid" | "samples", ...}
Json to_json(const Density& x);
Density density_from_json(const Json& j);
Density load_density(const std::filesystem::path& p);
void save_density(const Density& x, const std::filesystem::path& p);

/// Built-in laws by name (std-gaussian-1d/2d/3d, bimodal-1d, bimodal-2d,
/// skewed-1d, gaussian-var2-1d); anything else is read as a JSON file.
Density resolve_density(const std::string& name_or_path);
std::vector<std::string> density_presets();

// bodies: {"dim": d, "vertices": [[...], ...]}
Json to_json(const ConvexBody& b);
ConvexBody body_from_json(const Json& j);

Json to_json(const Estimate& e);
Json to_json(const FunctionalCatalog& c);
Json to_json(const DeficitReport& r);

/// Table with a mandatory header row. Cells are stored as text.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  std::string str() const;
  void write(const std::filesystem::path& p) const;
  static Csv read(const std::filesystem::path& p);
  /// Column index by name, or -1.
  long column(std::string_view name) const;
};

/// name,theta,lambda,lhs,rhs,deficit,err,verdict
std::vector<std::string> report_header();
std::vector<std::string> report_row(const DeficitReport& r);
Csv reports_csv(const std::vector<DeficitReport>& reports);

std::vector<std::string> catalog_header();
std::vector<std::string> catalog_row(const FunctionalCatalog& c);

/// Verdict counts over every CSV with a "verdict" column; rows of all
/// files are concatenated in argument order.
Json merge_reports(const std::vector<std::filesystem::path>& csvs);

}  // namespace deficit
