#include "tabinfill/table.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

#include "tabinfill/error.hpp"
#include "tabinfill/rng.hpp"

namespace tabinfill {

const char* to_string(ColumnKind kind) noexcept {
  return kind == ColumnKind::Numeric ? "numeric" : "categoric";
}

ColumnKind column_kind_from_string(const std::string& s) {
  if (s == "numeric") return ColumnKind::Numeric;
  if (s == "categoric") return ColumnKind::Categoric;
  throw ConfigError("unknown column kind '" + s + "'");
}

Column Column::numeric(std::vector<std::optional<double>> cells) {
  Column c;
  c.kind_ = ColumnKind::Numeric;
  for (auto& v : cells) {
    if (v && !std::isfinite(*v)) v.reset();
  }
  c.numeric_ = std::move(cells);
  return c;
}

Column Column::categoric(std::vector<std::optional<std::string>> cells) {
  Column c;
  c.kind_ = ColumnKind::Categoric;
  for (auto& v : cells) {
    if (v && v->empty()) v.reset();
  }
  c.categoric_ = std::move(cells);
  return c;
}

std::size_t Column::size() const noexcept {
  return kind_ == ColumnKind::Numeric ? numeric_.size() : categoric_.size();
}

bool Column::is_missing(std::size_t i) const {
  if (kind_ == ColumnKind::Numeric) {
    const auto& v = numeric_.at(i);
    return !v || !std::isfinite(*v);
  }
  return !categoric_.at(i).has_value();
}

std::size_t Column::missing_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < size(); ++i) n += is_missing(i) ? 1 : 0;
  return n;
}

void Column::set_missing(std::size_t i) {
  if (kind_ == ColumnKind::Numeric) {
    numeric_.at(i).reset();
  } else {
    categoric_.at(i).reset();
  }
}

Column Column::select_rows(std::span<const std::size_t> rows) const {
  Column c;
  c.kind_ = kind_;
  if (kind_ == ColumnKind::Numeric) {
    c.numeric_.reserve(rows.size());
    for (auto r : rows) c.numeric_.push_back(numeric_.at(r));
  } else {
    c.categoric_.reserve(rows.size());
    for (auto r : rows) c.categoric_.push_back(categoric_.at(r));
  }
  return c;
}

MissingMask MissingMask::from_bits(std::vector<std::uint8_t> bits) {
  MissingMask m;
  m.count = static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
  m.bits = std::move(bits);
  return m;
}

void Table::add_column(std::string header, Column column) {
  if (header.empty()) throw DataError("column headers must be nonempty");
  if (index_.contains(header)) throw DataError("duplicate column header '" + header + "'");
  if (columns_.empty() && headers_.empty() && row_count_ == 0) row_count_ = column.size();
  if (column.size() != row_count_) {
    throw DataError("column '" + header + "' has " + std::to_string(column.size()) +
                    " rows, table has " + std::to_string(row_count_));
  }
  index_.emplace(header, columns_.size());
  headers_.push_back(std::move(header));
  columns_.push_back(std::move(column));
}

void Table::replace_column(const std::string& header, Column column) {
  if (column.size() != row_count_) throw DataError("replacement column has wrong length");
  columns_.at(index_of(header)) = std::move(column);
}

void Table::drop_column(const std::string& header) {
  const std::size_t i = index_of(header);
  headers_.erase(headers_.begin() + static_cast<std::ptrdiff_t>(i));
  columns_.erase(columns_.begin() + static_cast<std::ptrdiff_t>(i));
  index_.clear();
  for (std::size_t j = 0; j < headers_.size(); ++j) index_.emplace(headers_[j], j);
}

bool Table::has(const std::string& header) const { return index_.contains(header); }

std::size_t Table::index_of(const std::string& header) const {
  auto it = index_.find(header);
  if (it == index_.end()) throw DataError("no column named '" + header + "'");
  return it->second;
}

const Column& Table::column(const std::string& header) const {
  return columns_[index_of(header)];
}

Table Table::select_rows(std::span<const std::size_t> rows) const {
  Table t(rows.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    t.add_column(headers_[j], columns_[j].select_rows(rows));
  }
  t.warnings_ = warnings_;
  return t;
}

Table Table::select_columns(std::span<const std::string> headers) const {
  Table t(row_count_);
  for (const auto& h : headers) t.add_column(h, column(h));
  return t;
}

std::optional<double> parse_finite(const std::string& text) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  double v = 0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || first == last) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

KindInference infer_kind(std::span<const std::optional<std::string>> cells) {
  KindInference out;
  bool any = false;
  bool all_numeric = true;
  for (const auto& c : cells) {
    if (!c) continue;
    any = true;
    if (!parse_finite(*c)) {
      all_numeric = false;
      break;
    }
  }
  if (!any) {
    out.kind = ColumnKind::Categoric;
    out.all_missing = true;
    return out;
  }
  out.kind = all_numeric ? ColumnKind::Numeric : ColumnKind::Categoric;
  return out;
}

MissingMask narw(const Column& column) {
  std::vector<std::uint8_t> bits(column.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = column.is_missing(i) ? 1 : 0;
  return MissingMask::from_bits(std::move(bits));
}

std::pair<Table, Table> split_validation(const Table& table, double val_ratio, bool shuffle,
                                         std::uint64_t seed) {
  if (!(val_ratio >= 0.0 && val_ratio < 1.0)) {
    throw ConfigError("validation ratio must lie in [0, 1)");
  }
  const std::size_t n = table.row_count();
  const auto n_val = static_cast<std::size_t>(std::llround(val_ratio * static_cast<double>(n)));
  if (n_val >= n && n > 0 && n_val > 0) {
    throw DataError("validation split leaves no training rows");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    Rng rng(derive_seed(seed, {0x5e1ec7}));
    rng.shuffle(order);
  }
  std::span<const std::size_t> all(order);
  return {table.select_rows(all.first(n - n_val)), table.select_rows(all.subspan(n - n_val))};
}

}  // namespace tabinfill
