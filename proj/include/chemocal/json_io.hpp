#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "chemocal/error.hpp"

namespace chemocal {

using Json = nlohmann::ordered_json;

namespace detail {

inline void emit_json(const Json& j, std::string& out, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    out.push_back('\n');
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) { out += "{}"; return; }
      out.push_back('{');
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out.push_back(',');
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        emit_json(it.value(), out, indent, depth + 1);
      }
      newline(depth);
      out.push_back('}');
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) { out += "[]"; return; }
      // Numeric arrays stay on one line to keep matrices readable.
      bool scalars = true;
      for (const auto& v : j) scalars = scalars && v.is_primitive();
      out.push_back('[');
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += scalars ? ", " : ",";
        first = false;
        if (!scalars) newline(depth + 1);
        emit_json(v, out, scalars ? -1 : indent, depth + 1);
      }
      if (!scalars) newline(depth);
      out.push_back(']');
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) { out += "null"; return; }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Serializes with every floating value printed to 17 significant digits,
/// object keys in insertion order. Non-finite values become null.
inline std::string to_json_text(const Json& j, int indent = 2) {
  std::string out;
  detail::emit_json(j, out, indent, 0);
  out.push_back('\n');
  return out;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": invalid JSON: " + e.what());
  }
}

}  // namespace chemocal
