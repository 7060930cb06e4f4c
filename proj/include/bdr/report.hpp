#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "errors.hpp"
#include "experiments.hpp"

#ifndef BDR_VERSION
#define BDR_VERSION "1.0.0"
#endif

namespace bdr {

constexpr int kReportSchema = 1;

// A plot-ready table with provenance: every output of the command line tool is one of these.
struct Report {
  std::string id;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json params = nlohmann::json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
  Verdict verdict;
  nlohmann::json extra = nlohmann::json::object();
};

inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_cell(const nlohmann::json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) return format_number(v.get<double>());
  return v.dump();
}

inline void write_csv(std::ostream& os, const Report& r) {
  os << "# bdrep " << BDR_VERSION << " schema " << kReportSchema << "\n";
  os << "# id: " << r.id << "\n";
  os << "# config: " << r.config.dump() << "\n";
  os << "# params: " << r.params.dump() << "\n";
  if (!r.extra.empty()) os << "# extra: " << r.extra.dump() << "\n";
  os << "# verdict: " << (r.verdict.pass ? "pass" : "fail") << " " << r.verdict.detail << "\n";
  for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
  os << "\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
    os << "\n";
  }
}

inline nlohmann::json to_json(const Report& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json o = nlohmann::json::object();
    for (std::size_t i = 0; i < row.size(); ++i) o[r.columns[i]] = row[i];
    rows.push_back(o);
  }
  return {{"schema", kReportSchema}, {"version", BDR_VERSION}, {"id", r.id},         {"config", r.config},
          {"params", r.params},      {"columns", r.columns},   {"rows", rows},
          {"verdict", {{"pass", r.verdict.pass}, {"detail", r.verdict.detail}}},     {"extra", r.extra}};
}

inline void write_report(std::ostream& os, const Report& r, const std::string& format) {
  if (format == "json")
    os << to_json(r).dump(2) << "\n";
  else
    write_csv(os, r);
}

inline nlohmann::json error_json(const std::string& code, const std::string& message) {
  return {{"schema", kReportSchema}, {"version", BDR_VERSION}, {"error", {{"code", code}, {"message", message}}}};
}

// Writes to a sibling temporary file and renames it over the target.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot move report into place at " + path.string() + ": " + ec.message());
  }
}

inline std::vector<std::string> convergence_columns(bool timings) {
  std::vector<std::string> c{"n", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "abs_error", "rel_error", "work"};
  if (timings) c.push_back("wall_ms");
  return c;
}

inline Report to_report(const ExperimentReport& e, const nlohmann::json& config, bool timings) {
  Report r;
  r.id = e.id;
  r.config = config;
  r.params = e.params;
  r.columns = convergence_columns(timings);
  for (const auto& row : e.rows) {
    std::vector<nlohmann::json> cells{row.n,          row.lhs.real(),  row.lhs.imag(), row.rhs.real(),
                                      row.rhs.imag(), row.abs_error,   row.rel_error,  row.work};
    if (timings) cells.push_back(row.wall_ms);
    r.rows.push_back(std::move(cells));
  }
  r.verdict = e.verdict;
  r.extra = e.extra;
  return r;
}

}  // namespace bdr
