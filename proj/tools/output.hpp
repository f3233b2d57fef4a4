#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "s2cubic/errors.hpp"

namespace s2cubic::cli {

using Json = nlohmann::ordered_json;

/// 17 significant digits, enough to round-trip a double.
inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Table {
  /// key=value pairs written as '#' lines above the header row.
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string to_csv() const {
    std::string out;
    for (const auto& [k, v] : meta) out += "# " + k + "=" + v + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + fmt_num(row[i]);
      out += "\n";
    }
    return out;
  }

  Json to_json() const {
    Json j = Json::object();
    for (const auto& [k, v] : meta) j[k] = v;
    j["columns"] = columns;
    j["rows"] = rows;
    return j;
  }
};

/// Writes to `path` through a sibling temp file and a rename, so readers
/// never see a partial file. An empty path means stdout.
inline void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::InvalidArgument, "cannot open " + tmp.string() + " for writing");
    f << text;
    f.close();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorKind::InvalidArgument, "write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::InvalidArgument, "cannot move output into place at " + path);
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace s2cubic::cli
