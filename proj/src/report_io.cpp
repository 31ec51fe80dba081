#include "deficitlab/error.hpp"
#include "deficitlab/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace deficit {

Json to_json(const Estimate& e) {
  Json j{{"method", to_string(e.method)}, {"finite", e.finite}};
  // JSON has no infinity; non-finite values are written as strings
  if (std::isfinite(e.value))
    j["value"] = e.value;
  else
    j["value"] = format_double(e.value);
  j["stderr"] = e.error;
  return j;
}

Json to_json(const FunctionalCatalog& c) {
  return {{"entropy", to_json(c.entropy)},         {"entropy_power", to_json(c.entropy_power)},
          {"fisher", to_json(c.fisher)},           {"rel_entropy", to_json(c.rel_entropy)},
          {"rel_fisher", to_json(c.rel_fisher)},   {"lsi_deficit", to_json(c.lsi_deficit)},
          {"stam_defect", to_json(c.stam_defect)}};
}

Json to_json(const DeficitReport& r) {
  auto num = [](double v) -> Json { return std::isfinite(v) ? Json(v) : Json(format_double(v)); };
  return {{"name", r.name},       {"lhs", to_json(r.lhs)},           {"rhs", to_json(r.rhs)},
          {"deficit", num(r.deficit)}, {"err", num(r.err)},           {"verdict", to_string(r.verdict)},
          {"params", r.params},   {"asserted", r.asserted}};
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

}  // namespace

void Csv::add(std::vector<std::string> row) {
  if (row.size() != header.size()) throw Error(ErrorKind::InvalidConfig, "CSV row width differs from header");
  rows.push_back(std::move(row));
}

std::string Csv::str() const {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << quote(cells[i]);
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

void Csv::write(const std::filesystem::path& p) const {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write " + p.string());
  out << str();
}

Csv Csv::read(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open " + p.string());
  Csv csv;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::InvalidConfig, p.string() + ": missing header row");
  csv.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != csv.header.size())
      throw Error(ErrorKind::InvalidConfig, p.string() + ": row width differs from header");
    csv.rows.push_back(std::move(cells));
  }
  return csv;
}

long Csv::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return long(i);
  return -1;
}

std::vector<std::string> report_header() {
  return {"name", "theta", "lambda", "lhs", "rhs", "deficit", "err", "verdict"};
}

std::vector<std::string> report_row(const DeficitReport& r) {
  auto param = [&](const char* k) {
    const auto it = r.params.find(k);
    return it == r.params.end() ? std::string() : format_double(it->second);
  };
  return {r.name,
          param("theta"),
          param("lambda"),
          format_double(r.lhs.finite ? r.lhs.value : std::numeric_limits<double>::infinity()),
          format_double(r.rhs.finite ? r.rhs.value : std::numeric_limits<double>::infinity()),
          format_double(r.deficit),
          format_double(r.err),
          std::string(to_string(r.verdict))};
}

Csv reports_csv(const std::vector<DeficitReport>& reports) {
  Csv csv{report_header(), {}};
  for (const auto& r : reports) csv.add(report_row(r));
  return csv;
}

std::vector<std::string> catalog_header() {
  return {"h", "h_err", "N", "N_err", "J", "J_err", "D", "D_err", "I", "I_err", "dLSI", "dLSI_err", "p", "p_err",
          "method"};
}

std::vector<std::string> catalog_row(const FunctionalCatalog& c) {
  std::vector<std::string> row;
  for (const Estimate* e : {&c.entropy, &c.entropy_power, &c.fisher, &c.rel_entropy, &c.rel_fisher, &c.lsi_deficit,
                            &c.stam_defect}) {
    row.push_back(format_double(e->finite ? e->value : std::numeric_limits<double>::infinity()));
    row.push_back(format_double(e->error));
  }
  row.emplace_back(to_string(c.entropy.method));
  return row;
}

Json merge_reports(const std::vector<std::filesystem::path>& csvs) {
  std::size_t holds = 0, within = 0, violated = 0, rows = 0;
  Json files = Json::array();
  Json by_name = Json::object();
  for (const auto& p : csvs) {
    const Csv csv = Csv::read(p);
    const long v = csv.column("verdict");
    const long n = csv.column("name");
    files.push_back({{"path", p.string()}, {"rows", csv.rows.size()}});
    rows += csv.rows.size();
    if (v < 0) continue;
    for (const auto& r : csv.rows) {
      const std::string& verdict = r[std::size_t(v)];
      if (verdict == "holds") ++holds;
      else if (verdict == "holds_within_error") ++within;
      else if (verdict == "violated") ++violated;
      if (n >= 0) {
        Json& entry = by_name[r[std::size_t(n)]];
        if (entry.is_null()) entry = {{"holds", 0}, {"holds_within_error", 0}, {"violated", 0}};
        if (entry.contains(verdict)) entry[verdict] = entry[verdict].get<std::size_t>() + 1;
      }
    }
  }
  return {{"files", files},
          {"rows", rows},
          {"holds", holds},
          {"holds_within_error", within},
          {"violated", violated},
          {"by_name", by_name}};
}

}  // namespace deficit
