// Deterministic serialization: round-trip exact floats, CSV with fixed line
// endings, and the run manifest that pairs with every output file.
#pragma once

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "viso/version.hpp"

namespace viso {

// fixed %.17g rather than shortest-digits: every double round-trips exactly
// and the byte stream does not depend on the formatting library version.
// The process never calls setlocale, so the decimal point stays '.'.
inline std::string format_float(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

inline double parse_double(const std::string& s) {
  if (s.empty()) throw std::runtime_error("parse_double: empty field");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw std::runtime_error("parse_double: malformed number '" + s + "'");
  return v;
}

inline long long parse_int(const std::string& s) {
  if (s.empty()) throw std::runtime_error("parse_int: empty field");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || errno == ERANGE)
    throw std::runtime_error("parse_int: malformed integer '" + s + "'");
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// '\n' endings, no quoting; cells must not contain separators
inline std::string csv_serialize(const CsvTable& t) {
  std::string out;
  const auto line = [&out](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); i++) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) {
    if (r.size() != t.header.size())
      throw std::invalid_argument("csv_serialize: row width differs from header");
    line(r);
  }
  return out;
}

inline CsvTable csv_parse(const std::string& text) {
  CsvTable t;
  bool have_header = false;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string row = text.substr(pos, end - pos);
    pos = end + 1;
    if (row.empty()) continue;
    std::vector<std::string> cells;
    size_t c = 0;
    while (true) {
      const size_t comma = row.find(',', c);
      if (comma == std::string::npos) {
        cells.push_back(row.substr(c));
        break;
      }
      cells.push_back(row.substr(c, comma - c));
      c = comma + 1;
    }
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
    } else {
      if (cells.size() != t.header.size())
        throw std::runtime_error("csv_parse: row width differs from header");
      t.rows.push_back(std::move(cells));
    }
  }
  if (!have_header) throw std::runtime_error("csv_parse: empty input");
  return t;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_file: cannot open " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  f.flush();
  if (!f) throw std::runtime_error("write_file: write failed for " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_file: cannot open " + path);
  std::string out;
  char buf[1 << 16];
  while (f.read(buf, sizeof buf) || f.gcount() > 0)
    out.append(buf, static_cast<size_t>(f.gcount()));
  return out;
}

// Reproduction record paired with every output file: replaying the same
// command with the same manifest yields bit-identical output.
struct RunManifest {
  std::string command;
  std::uint64_t master_seed = 0;
  std::string artifact_version = version_string;
  std::string schema_version = output_schema_version;
  std::vector<std::pair<std::string, std::string>> params;  // full set, fixed order
};

inline std::string manifest_serialize(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["master_seed"] = m.master_seed;
  j["artifact_version"] = m.artifact_version;
  j["schema_version"] = m.schema_version;
  nlohmann::ordered_json p = nlohmann::ordered_json::object();
  for (const auto& [key, value] : m.params) p[key] = value;
  j["params"] = std::move(p);
  return j.dump(2) + "\n";
}

inline RunManifest manifest_parse(const std::string& text) {
  const auto j = nlohmann::ordered_json::parse(text);
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  m.artifact_version = j.at("artifact_version").get<std::string>();
  m.schema_version = j.at("schema_version").get<std::string>();
  for (const auto& [key, value] : j.at("params").items())
    m.params.emplace_back(key, value.get<std::string>());
  return m;
}

// column layout of trajectory files: the step columns gamma, rho, psi
// describe the step leaving dimension n (nan on the final row, which has no
// outgoing step); min_gap and max_gap describe the state at dimension n
inline const std::vector<std::string>& track_csv_header() {
  static const std::vector<std::string> h = {"n",     "k",   "theta",   "rescaled", "gamma",
                                             "rho",   "psi", "min_gap", "max_gap"};
  return h;
}

}  // namespace viso
