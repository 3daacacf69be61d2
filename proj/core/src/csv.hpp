#pragma once

// Minimal reader for the comma-separated files this library writes: an
// optional "# key=value" preamble, one header row, then numeric rows.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bindiar/types.hpp"

namespace bindiar::csv {

struct Table {
  std::map<std::string, std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  Table t;
  std::string line;
  while (std::getline(in, line)) {
    const auto s = trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      const auto eq = s.find('=');
      if (eq != std::string::npos) t.meta[trim(s.substr(1, eq - 1))] = trim(s.substr(eq + 1));
      continue;
    }
    if (t.header.empty()) {
      t.header = split(s);
    } else {
      t.rows.push_back(split(s));
      if (t.rows.back().size() != t.header.size()) {
        throw Error("'" + path.string() + "': row " + std::to_string(t.rows.size()) + " has " +
                    std::to_string(t.rows.back().size()) + " fields, header has " + std::to_string(t.header.size()));
      }
    }
  }
  if (t.header.empty()) throw Error("'" + path.string() + "' has no header row");
  return t;
}

inline double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw Error("");
    return v;
  } catch (const std::exception&) {
    throw Error("not a number: '" + s + "'");
  }
}

inline long long to_int(const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("not an integer: '" + s + "'");
  return v;
}

}  // namespace bindiar::csv
