#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <vector>

#include "chemocal/error.hpp"

namespace chemocal {

/// Shortest round-trip decimal form. Deterministic across runs and platforms.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline std::string format_number(float v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline void append_number(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, end);
}

/// A parsed comma-separated file with a header row. No quoting: identifiers
/// used by the toolkit never contain commas.
class CsvTable {
 public:
  static CsvTable read(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path + ": cannot open for reading");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  static CsvTable parse(const std::string& text, std::string source = "<memory>") {
    CsvTable t;
    t.source_ = std::move(source);
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool have_header = false;
    while (pos < text.size()) {
      std::size_t eol = text.find('\n', pos);
      if (eol == std::string::npos) eol = text.size();
      std::string_view line(text.data() + pos, eol - pos);
      pos = eol + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      std::vector<std::string> cells = split(line);
      if (!have_header) {
        t.header_ = std::move(cells);
        for (std::size_t i = 0; i < t.header_.size(); ++i) t.index_[t.header_[i]] = i;
        have_header = true;
        continue;
      }
      if (cells.size() != t.header_.size()) {
        throw FormatError(t.source_ + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(t.header_.size()) + " fields, found " +
                          std::to_string(cells.size()));
      }
      t.rows_.push_back(std::move(cells));
      t.lines_.push_back(line_no);
    }
    if (!have_header) throw FormatError(t.source_ + ": empty file (no header)");
    return t;
  }

  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }
  const std::string& source() const { return source_; }

  bool has_column(const std::string& name) const { return index_.contains(name); }

  std::size_t column(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw FormatError(source_ + ": missing column '" + name + "'");
    return it->second;
  }

  const std::string& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }

  std::string where(std::size_t row) const {
    return source_ + ":" + std::to_string(lines_[row]);
  }

  double number(std::size_t row, std::size_t col) const {
    const std::string& s = rows_[row][col];
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw FormatError(where(row) + ": column '" + header_[col] + "': not a number: '" + s + "'");
    }
    return v;
  }

  float number_f(std::size_t row, std::size_t col) const {
    const std::string& s = rows_[row][col];
    float v = 0.0f;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw FormatError(where(row) + ": column '" + header_[col] + "': not a number: '" + s + "'");
    }
    return v;
  }

  long integer(std::size_t row, std::size_t col) const {
    const std::string& s = rows_[row][col];
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw FormatError(where(row) + ": column '" + header_[col] + "': not an integer: '" + s + "'");
    }
    return v;
  }

  /// Integer cell where an empty value means "none".
  std::optional<int> optional_integer(std::size_t row, std::size_t col) const {
    if (rows_[row][col].empty()) return std::nullopt;
    return static_cast<int>(integer(row, col));
  }

 private:
  static std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string_view::npos) {
        out.emplace_back(line.substr(start));
        break;
      }
      out.emplace_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    return out;
  }

  std::string source_;
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError(path + ": write failed");
}

}  // namespace chemocal
