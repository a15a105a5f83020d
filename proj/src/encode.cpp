#include "tabinfill/encode.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include "tabinfill/error.hpp"

namespace tabinfill {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> present_values(std::span<const std::optional<double>> values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& v : values) {
    if (v && std::isfinite(*v)) out.push_back(*v);
  }
  return out;
}

// Makes each header unique by appending underscores to later duplicates.
void dedupe(std::vector<std::string>& headers) {
  std::set<std::string> seen;
  for (auto& h : headers) {
    while (seen.contains(h)) h += "_";
    seen.insert(h);
  }
}

}  // namespace

const char* to_string(Scheme s) noexcept {
  switch (s) {
    case Scheme::Zscore: return "zscore";
    case Scheme::Ordinal: return "ordinal";
    case Scheme::OneHot: return "onehot";
    case Scheme::Binarize: return "binarize";
    case Scheme::TwoValueBool: return "twovaluebool";
    case Scheme::Identity: return "identity";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& s) {
  for (Scheme sc : {Scheme::Zscore, Scheme::Ordinal, Scheme::OneHot, Scheme::Binarize,
                    Scheme::TwoValueBool, Scheme::Identity}) {
    if (s == to_string(sc)) return sc;
  }
  throw ConfigError("unknown encoding scheme '" + s + "'");
}

bool is_categoric(Scheme s) noexcept { return s != Scheme::Zscore && s != Scheme::Identity; }

std::string to_string(const InfillStrategy& s) {
  using K = InfillStrategy::Kind;
  switch (s.kind) {
    case K::Mean: return "mean";
    case K::Median: return "median";
    case K::Mode: return "mode";
    case K::AdjacentCell: return "adjacent";
    case K::Arbitrary: return "arbitrary";
    case K::DistinctActivation: return "distinct";
    case K::MLInfill: return "ml";
  }
  return "?";
}

std::size_t CategoricStats::index_of(const std::string& entry) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), entry);
  if (it == entries.end() || *it != entry) return 0;
  return static_cast<std::size_t>(it - entries.begin()) + 1;
}

std::optional<std::string> CategoricStats::entry_for(std::span<const double> row) const {
  for (std::size_t k = 1; k < activations.size(); ++k) {
    if (std::equal(row.begin(), row.end(), activations[k].begin(), activations[k].end())) {
      return entries[k - 1];
    }
  }
  return std::nullopt;
}

void EncodedFrame::add(std::string header, std::vector<double> values) {
  if (headers.empty() && columns.empty()) rows = values.size();
  if (values.size() != rows) throw DataError("frame column '" + header + "' has wrong length");
  if (std::find(headers.begin(), headers.end(), header) != headers.end()) {
    throw DataError("duplicate returned header '" + header + "'");
  }
  headers.push_back(std::move(header));
  columns.push_back(std::move(values));
}

std::size_t EncodedFrame::index_of(const std::string& header) const {
  auto it = std::find(headers.begin(), headers.end(), header);
  if (it == headers.end()) throw DataError("no encoded column named '" + header + "'");
  return static_cast<std::size_t>(it - headers.begin());
}

EncodedFrame EncodedFrame::select_columns(std::span<const std::string> keep) const {
  EncodedFrame out;
  out.rows = rows;
  for (const auto& h : keep) out.add(h, columns[index_of(h)]);
  return out;
}

EncodedFrame EncodedFrame::select_rows(std::span<const std::size_t> keep) const {
  EncodedFrame out;
  out.rows = keep.size();
  out.headers = headers;
  out.columns.reserve(columns.size());
  for (const auto& c : columns) {
    std::vector<double> v;
    v.reserve(keep.size());
    for (auto r : keep) v.push_back(c.at(r));
    out.columns.push_back(std::move(v));
  }
  return out;
}

bool bit_identical(const EncodedFrame& a, const EncodedFrame& b) {
  if (a.rows != b.rows || a.headers != b.headers || a.columns.size() != b.columns.size()) {
    return false;
  }
  for (std::size_t j = 0; j < a.columns.size(); ++j) {
    const auto& x = a.columns[j];
    const auto& y = b.columns[j];
    if (x.size() != y.size()) return false;
    if (!x.empty() && std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

void write_frame_csv(std::ostream& out, const EncodedFrame& frame) {
  for (std::size_t j = 0; j < frame.headers.size(); ++j) {
    if (j) out << ',';
    out << csv_escape(frame.headers[j]);
  }
  out << '\n';
  for (std::size_t r = 0; r < frame.rows; ++r) {
    for (std::size_t j = 0; j < frame.columns.size(); ++j) {
      if (j) out << ',';
      const double v = frame.columns[j][r];
      if (std::isfinite(v)) {
        out << format_real(v);
      } else if (frame.columns.size() == 1) {
        out << "\"\"";
      }
    }
    out << '\n';
  }
}

void save_frame_csv(const std::string& path, const EncodedFrame& frame) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_frame_csv(out, frame);
}

EncodedFrame read_frame_csv(std::istream& in) {
  auto records = parse_csv_records(in);
  if (records.empty()) throw ParseError(0, "missing header row");
  EncodedFrame frame;
  frame.rows = records.size() - 1;
  for (std::size_t j = 0; j < records[0].size(); ++j) {
    std::vector<double> col(frame.rows);
    for (std::size_t r = 0; r < frame.rows; ++r) {
      if (records[r + 1].size() != records[0].size()) throw ParseError(r + 1, "ragged row");
      const auto& text = records[r + 1][j];
      if (text.empty()) {
        col[r] = kNaN;
      } else if (auto v = parse_finite(text)) {
        col[r] = *v;
      } else {
        throw ParseError(r + 1, "non-numeric encoded value '" + text + "'");
      }
    }
    frame.add(records[0][j], std::move(col));
  }
  return frame;
}

NumericStats fit_zscore(std::span<const std::optional<double>> values) {
  auto v = present_values(values);
  if (v.empty()) throw DataError("cannot fit numeric statistics without any value");
  const auto n = static_cast<double>(v.size());
  NumericStats s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  std::sort(v.begin(), v.end());
  s.min = v.front();
  s.max = v.back();
  const std::size_t mid = v.size() / 2;
  s.median = v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0;
  // Sorted ascending, so the first run of maximal length is the smallest mode.
  std::size_t best = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    if (j - i > best) {
      best = j - i;
      s.mode = v[i];
    }
    i = j;
  }
  return s;
}

double zscore_value(double raw, const NumericStats& stats) {
  if (stats.std == 0.0) return 0.0;
  return (raw - stats.mean) / stats.std;
}

std::vector<double> apply_zscore(std::span<const std::optional<double>> values,
                                 const NumericStats& stats) {
  std::vector<double> out(values.size(), kNaN);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] && std::isfinite(*values[i])) out[i] = zscore_value(*values[i], stats);
  }
  return out;
}

CategoricStats fit_categoric(std::span<const std::optional<std::string>> values, Scheme scheme) {
  if (!is_categoric(scheme)) throw DataError("scheme is not categoric");
  std::map<std::string, std::size_t> counts;
  for (const auto& v : values) {
    if (v) ++counts[*v];
  }
  CategoricStats s;
  std::size_t best = 0;
  for (const auto& [entry, count] : counts) {
    s.entries.push_back(entry);
    if (count > best) {
      best = count;
      s.mode = entry;
    }
  }
  const std::size_t k = s.entries.size();

  switch (scheme) {
    case Scheme::Ordinal:
      for (std::size_t i = 0; i <= k; ++i) s.activations.push_back({static_cast<double>(i)});
      break;
    case Scheme::OneHot:
      // Columns: one per entry, then the missing column.
      for (std::size_t i = 0; i <= k; ++i) {
        std::vector<double> row(k + 1, 0.0);
        row[i == 0 ? k : i - 1] = 1.0;
        s.activations.push_back(std::move(row));
      }
      break;
    case Scheme::Binarize: {
      const std::size_t width = std::max<std::size_t>(1, std::bit_width(k));
      for (std::size_t i = 0; i <= k; ++i) {
        std::vector<double> row(width, 0.0);
        for (std::size_t b = 0; b < width; ++b) {
          row[width - 1 - b] = static_cast<double>((i >> b) & 1U);
        }
        s.activations.push_back(std::move(row));
      }
      break;
    }
    case Scheme::TwoValueBool: {
      if (k != 2) {
        throw DataError("two-value boolean encoding needs exactly 2 unique entries, found " +
                        std::to_string(k));
      }
      const std::size_t common = s.index_of(s.mode);
      s.activations.assign(3, {0.0});
      s.activations[0] = {1.0};
      s.activations[common] = {1.0};
      break;
    }
    default:
      break;
  }
  return s;
}

EncodedColumns apply_categoric(std::span<const std::optional<std::string>> values,
                               const CategoricStats& stats) {
  const std::size_t width = stats.width();
  EncodedColumns out;
  out.columns.assign(width, std::vector<double>(values.size(), 0.0));
  std::vector<std::uint8_t> bits(values.size(), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t idx = values[i] ? stats.index_of(*values[i]) : 0;
    if (idx == 0) bits[i] = 1;
    const auto& row = stats.activations[idx];
    for (std::size_t c = 0; c < width; ++c) out.columns[c][i] = row[c];
  }
  out.mask = MissingMask::from_bits(std::move(bits));
  return out;
}

std::vector<std::string> returned_headers_for(const std::string& input_header, Scheme scheme,
                                              const CategoricStats& stats) {
  std::vector<std::string> out;
  switch (scheme) {
    case Scheme::Zscore: out.push_back(input_header + "_zs"); break;
    case Scheme::Identity: out.push_back(input_header + "_inf"); break;
    case Scheme::Ordinal: out.push_back(input_header + "_ord"); break;
    case Scheme::TwoValueBool: out.push_back(input_header + "_bool"); break;
    case Scheme::OneHot:
      for (const auto& e : stats.entries) out.push_back(input_header + "_oh_" + e);
      out.push_back(input_header + "_oh_missing");
      break;
    case Scheme::Binarize:
      for (std::size_t b = 0; b < stats.width(); ++b) {
        out.push_back(input_header + "_bin_" + std::to_string(b));
      }
      break;
  }
  dedupe(out);
  return out;
}

Scheme default_scheme(const Column& column) {
  if (column.kind() == ColumnKind::Numeric) return Scheme::Zscore;
  std::set<std::string> unique;
  for (const auto& v : column.categoric_cells()) {
    if (v) unique.insert(*v);
    if (unique.size() > 2) break;
  }
  return unique.size() == 2 ? Scheme::TwoValueBool : Scheme::Binarize;
}

Scheme default_label_scheme(const Column& column) {
  return column.kind() == ColumnKind::Numeric ? Scheme::Zscore : Scheme::Ordinal;
}

InfillStrategy default_infill_for(Scheme scheme) {
  return is_categoric(scheme) ? InfillStrategy::distinct() : InfillStrategy::mean();
}

EncodingSpec fit_encoding(const std::string& header, const Column& column, Scheme scheme) {
  EncodingSpec spec;
  spec.input_header = header;
  spec.input_kind = column.kind();
  spec.scheme = scheme;
  if (is_categoric(scheme)) {
    if (column.kind() != ColumnKind::Categoric) {
      throw DataError("column '" + header + "' is numeric; scheme " + to_string(scheme) +
                      " needs categoric input");
    }
    spec.categoric = fit_categoric(column.categoric_cells(), scheme);
  } else {
    if (column.kind() != ColumnKind::Numeric) {
      throw DataError("column '" + header + "' is categoric; scheme " + to_string(scheme) +
                      " needs numeric input");
    }
    // All-missing: zero statistics, so every cell encodes to the constant 0.
    if (column.missing_count() < column.size()) spec.numeric = fit_zscore(column.numeric_cells());
  }
  spec.returned_headers = returned_headers_for(header, scheme, spec.categoric);
  spec.default_infill = default_infill_for(scheme);
  return spec;
}

EncodedColumns apply_encoding(const Column& column, const EncodingSpec& spec) {
  if (column.kind() != spec.input_kind) {
    throw DataError("column '" + spec.input_header + "' changed kind since fit");
  }
  if (is_categoric(spec.scheme)) return apply_categoric(column.categoric_cells(), spec.categoric);

  EncodedColumns out;
  out.mask = narw(column);
  if (spec.scheme == Scheme::Zscore) {
    out.columns.push_back(apply_zscore(column.numeric_cells(), spec.numeric));
  } else {
    std::vector<double> raw(column.size(), kNaN);
    const auto& cells = column.numeric_cells();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (!out.mask.bits[i]) raw[i] = *cells[i];
    }
    out.columns.push_back(std::move(raw));
  }
  return out;
}

bool strategy_valid_for(const InfillStrategy& strategy, Scheme scheme) {
  using K = InfillStrategy::Kind;
  switch (strategy.kind) {
    case K::Mean:
    case K::Median: return !is_categoric(scheme);
    case K::DistinctActivation: return is_categoric(scheme);
    default: return true;
  }
}

namespace {

double encode_numeric(double raw, const EncodingSpec& spec) {
  return spec.scheme == Scheme::Zscore ? zscore_value(raw, spec.numeric) : raw;
}

void fill_row(std::vector<std::vector<double>>& columns, std::size_t row,
              std::span<const double> values) {
  for (std::size_t c = 0; c < columns.size(); ++c) columns[c][row] = values[c];
}

}  // namespace

void static_impute(std::vector<std::vector<double>>& columns, const MissingMask& mask,
                   const InfillStrategy& strategy, const EncodingSpec& spec) {
  using K = InfillStrategy::Kind;
  if (!strategy_valid_for(strategy, spec.scheme)) {
    throw ConfigError("infill strategy " + to_string(strategy) + " is invalid for scheme " +
                      to_string(spec.scheme) + " of column '" + spec.input_header + "'");
  }
  if (mask.count == 0) return;
  const std::size_t n = mask.size();

  std::vector<double> fill;
  switch (strategy.kind) {
    case K::Mean: fill = {encode_numeric(spec.numeric.mean, spec)}; break;
    case K::Median: fill = {encode_numeric(spec.numeric.median, spec)}; break;
    case K::Mode:
      if (is_categoric(spec.scheme)) {
        fill = spec.categoric.activations[spec.categoric.index_of(spec.categoric.mode)];
      } else {
        fill = {encode_numeric(spec.numeric.mode, spec)};
      }
      break;
    case K::Arbitrary: fill.assign(columns.size(), strategy.value); break;
    case K::DistinctActivation:
      fill = spec.categoric.activations.front();
      break;
    case K::AdjacentCell: {
      if (mask.count == n) {
        throw DataError("adjacent-cell infill on column '" + spec.input_header +
                        "' with no unmasked entry");
      }
      std::vector<double> row(columns.size());
      auto load = [&](std::size_t r) {
        for (std::size_t c = 0; c < columns.size(); ++c) row[c] = columns[c][r];
      };
      std::size_t first = 0;
      while (mask.bits[first]) ++first;
      load(first);
      for (std::size_t r = 0; r < first; ++r) fill_row(columns, r, row);
      for (std::size_t r = first; r < n; ++r) {
        if (mask.bits[r]) {
          fill_row(columns, r, row);
        } else {
          load(r);
        }
      }
      return;
    }
    case K::MLInfill:
      throw ConfigError("ML infill is not a static imputation strategy");
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (mask.bits[r]) fill_row(columns, r, fill);
  }
}

LabelMap::LabelMap(std::vector<std::vector<double>> rows) {
  for (auto& row : rows) {
    if (index_.emplace(row, rows_.size()).second) rows_.push_back(std::move(row));
  }
}

LabelMap LabelMap::fit(const std::vector<const std::vector<double>*>& columns,
                       std::span<const std::size_t> rows) {
  std::vector<std::vector<double>> act;
  act.reserve(rows.size());
  for (auto r : rows) {
    std::vector<double> row(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) row[c] = (*columns[c])[r];
    act.push_back(std::move(row));
  }
  return LabelMap(std::move(act));
}

std::size_t LabelMap::to_class(std::span<const double> row) const {
  auto it = index_.find(std::vector<double>(row.begin(), row.end()));
  if (it == index_.end()) throw DataError("activation row not present in label map");
  return it->second;
}

const std::vector<double>& LabelMap::to_row(std::size_t cls) const {
  if (cls >= rows_.size()) throw DataError("class index outside label map");
  return rows_[cls];
}

LabelConversion labels_for_learner(const std::vector<std::vector<double>>& activation_rows) {
  LabelConversion out;
  out.map = LabelMap(activation_rows);
  out.classes.reserve(activation_rows.size());
  for (const auto& row : activation_rows) {
    out.classes.push_back(static_cast<double>(out.map.to_class(row)));
  }
  return out;
}

std::vector<std::vector<double>> inverse_labels(std::span<const double> classes,
                                                const LabelMap& map) {
  std::vector<std::vector<double>> out;
  out.reserve(classes.size());
  for (double c : classes) {
    if (c < 0 || c != std::floor(c)) throw DataError("class label is not a class index");
    out.push_back(map.to_row(static_cast<std::size_t>(c)));
  }
  return out;
}

}  // namespace tabinfill
