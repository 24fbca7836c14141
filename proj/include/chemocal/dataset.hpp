#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chemocal/csv.hpp"
#include "chemocal/error.hpp"

namespace chemocal {

enum class Split { train, val, test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  return std::nullopt;
}

/// One image crop: identity, bulk membership, grain density and mean grain
/// spectrum. Rows in the cross-validation part carry split=train and a fold;
/// the validation view of a fold is derived from the fold index.
struct Subsample {
  std::string subsample_id;
  std::string bulk_id;
  Split split = Split::train;
  std::optional<int> fold;
  double density = 0.0;
  int row = 0;
  int col = 0;
  std::vector<double> mean_spectrum;
};

inline std::string band_column(std::size_t b) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "b%03zu", b);
  return buf;
}

/// CSV `subsample_id,bulk_id,split,fold,density,row,col,b000..bNNN`.
/// Spectra are written at single precision, which is what cube payloads hold.
inline std::string subsamples_to_csv(const std::vector<Subsample>& rows) {
  const std::size_t bands = rows.empty() ? 0 : rows.front().mean_spectrum.size();
  std::string out = "subsample_id,bulk_id,split,fold,density,row,col";
  for (std::size_t b = 0; b < bands; ++b) out += "," + band_column(b);
  out += '\n';
  out.reserve(rows.size() * (bands * 11 + 64));
  for (const auto& s : rows) {
    if (s.mean_spectrum.size() != bands) {
      throw PreconditionError("subsample " + s.subsample_id + ": band count differs from first row");
    }
    out += s.subsample_id;
    out += ',';
    out += s.bulk_id;
    out += ',';
    out += to_string(s.split);
    out += ',';
    if (s.fold) out += std::to_string(*s.fold);
    out += ',';
    append_number(out, s.density);
    out += ',' + std::to_string(s.row) + ',' + std::to_string(s.col);
    for (double v : s.mean_spectrum) {
      out += ',';
      out += format_number(static_cast<float>(v));
    }
    out += '\n';
  }
  return out;
}

inline std::vector<Subsample> subsamples_from_csv(const CsvTable& t) {
  const std::size_t c_id = t.column("subsample_id"), c_bulk = t.column("bulk_id"),
                    c_split = t.column("split"), c_fold = t.column("fold"),
                    c_density = t.column("density"), c_row = t.column("row"), c_col = t.column("col");
  std::vector<std::size_t> band_cols;
  for (std::size_t b = 0; t.has_column(band_column(b)); ++b) band_cols.push_back(t.column(band_column(b)));
  if (band_cols.empty()) throw FormatError(t.source() + ": no spectral columns (b000...)");
  std::vector<Subsample> out(t.size());
  for (std::size_t r = 0; r < t.size(); ++r) {
    Subsample& s = out[r];
    s.subsample_id = t.cell(r, c_id);
    s.bulk_id = t.cell(r, c_bulk);
    if (s.subsample_id.empty() || s.bulk_id.empty()) throw FormatError(t.where(r) + ": empty identifier");
    auto split = parse_split(t.cell(r, c_split));
    if (!split) throw FormatError(t.where(r) + ": unknown split '" + t.cell(r, c_split) + "'");
    s.split = *split;
    s.fold = t.optional_integer(r, c_fold);
    s.density = t.number(r, c_density);
    if (!(s.density >= 0.0 && s.density <= 1.0)) throw FormatError(t.where(r) + ": density outside [0,1]");
    s.row = static_cast<int>(t.integer(r, c_row));
    s.col = static_cast<int>(t.integer(r, c_col));
    s.mean_spectrum.resize(band_cols.size());
    for (std::size_t b = 0; b < band_cols.size(); ++b) {
      const double v = t.number_f(r, band_cols[b]);
      if (!std::isfinite(v)) throw FormatError(t.where(r) + ": non-finite spectrum value");
      s.mean_spectrum[b] = v;
    }
  }
  return out;
}

/// bulk_id -> reference value (protein %, or an integer class label).
class ReferenceTable {
 public:
  void set(const std::string& bulk_id, double value) {
    if (!std::isfinite(value)) throw PreconditionError("reference for bulk " + bulk_id + " is not finite");
    if (!values_.emplace(bulk_id, value).second) {
      throw PreconditionError("duplicate bulk_id in reference table: " + bulk_id);
    }
  }

  bool contains(const std::string& bulk_id) const { return values_.contains(bulk_id); }

  double at(const std::string& bulk_id) const {
    auto it = values_.find(bulk_id);
    if (it == values_.end()) throw PreconditionError("no reference for bulk_id " + bulk_id);
    return it->second;
  }

  std::size_t size() const { return values_.size(); }
  const std::map<std::string, double>& values() const { return values_; }

  std::string to_csv() const {
    std::string out = "bulk_id,reference\n";
    for (const auto& [id, v] : values_) out += id + "," + format_number(v) + "\n";
    return out;
  }

  static ReferenceTable from_csv(const CsvTable& t) {
    ReferenceTable table;
    const std::size_t c_id = t.column("bulk_id"), c_ref = t.column("reference");
    for (std::size_t r = 0; r < t.size(); ++r) {
      const std::string& id = t.cell(r, c_id);
      if (table.contains(id)) throw FormatError(t.where(r) + ": duplicate bulk_id " + id);
      table.set(id, t.number(r, c_ref));
    }
    return table;
  }

 private:
  std::map<std::string, double> values_;
};

/// Sorted unique bulk ids appearing in `rows`.
inline std::vector<std::string> bulk_ids(const std::vector<Subsample>& rows) {
  std::vector<std::string> ids;
  for (const auto& s : rows) ids.push_back(s.bulk_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace chemocal
