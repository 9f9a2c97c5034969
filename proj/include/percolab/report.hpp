#pragma once

// Tabular results with a provenance header, rendered as CSV or JSON.

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "percolab/version.hpp"

namespace percolab {

// Shortest round-trip representation; identical doubles print identically.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

struct Table {
  std::string command;                               // canonical re-runnable invocation
  std::vector<std::pair<std::string, std::string>> notes;
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;
};

inline std::string render_cell(const nlohmann::json& v) {
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

inline void write_csv(std::ostream& os, const Table& t) {
  os << "# percolab schema=" << kCsvSchema << " version=" << kVersion << " command=" << t.command << '\n';
  for (const auto& [key, value] : t.notes) os << "# " << key << '=' << value << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << render_cell(row[i]);
    os << '\n';
  }
}

inline nlohmann::json to_json(const Table& t) {
  nlohmann::json j;
  j["schema"] = kCsvSchema;
  j["version"] = kVersion;
  j["command"] = t.command;
  nlohmann::json notes = nlohmann::json::object();
  for (const auto& [key, value] : t.notes) notes[key] = value;
  j["notes"] = notes;
  j["columns"] = t.columns;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    nlohmann::json r = nlohmann::json::object();
    for (std::size_t i = 0; i < row.size() && i < t.columns.size(); ++i) r[t.columns[i]] = row[i];
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  return j;
}

inline void write_table(std::ostream& os, const Table& t, const std::string& format) {
  if (format == "json") {
    os << to_json(t).dump(2) << '\n';
  } else {
    write_csv(os, t);
  }
}

}  // namespace percolab
