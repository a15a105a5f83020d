#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tabinfill {

enum class ColumnKind { Numeric, Categoric };

const char* to_string(ColumnKind kind) noexcept;
ColumnKind column_kind_from_string(const std::string& s);

// One column of raw tabular data. Exactly one of the two cell vectors is in
// use, selected by kind. Numeric cells are finite or missing; categoric cells
// are nonempty or missing.
class Column {
 public:
  static Column numeric(std::vector<std::optional<double>> cells);
  static Column categoric(std::vector<std::optional<std::string>> cells);

  ColumnKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept;
  bool is_missing(std::size_t i) const;
  std::size_t missing_count() const;

  const std::vector<std::optional<double>>& numeric_cells() const { return numeric_; }
  const std::vector<std::optional<std::string>>& categoric_cells() const { return categoric_; }

  void set_missing(std::size_t i);

  Column select_rows(std::span<const std::size_t> rows) const;

  bool operator==(const Column&) const = default;

 private:
  ColumnKind kind_ = ColumnKind::Numeric;
  std::vector<std::optional<double>> numeric_;
  std::vector<std::optional<std::string>> categoric_;
};

// Boolean-integer marker of entries subject to infill for one column.
struct MissingMask {
  std::vector<std::uint8_t> bits;
  std::size_t count = 0;

  static MissingMask from_bits(std::vector<std::uint8_t> bits);
  std::size_t size() const noexcept { return bits.size(); }
  bool operator==(const MissingMask&) const = default;
};

class Table {
 public:
  Table() = default;
  explicit Table(std::size_t row_count) : row_count_(row_count) {}

  void add_column(std::string header, Column column);
  void replace_column(const std::string& header, Column column);
  void drop_column(const std::string& header);

  const std::vector<std::string>& headers() const noexcept { return headers_; }
  std::size_t row_count() const noexcept { return row_count_; }
  std::size_t column_count() const noexcept { return columns_.size(); }

  bool has(const std::string& header) const;
  std::size_t index_of(const std::string& header) const;
  const Column& column(std::size_t i) const { return columns_.at(i); }
  const Column& column(const std::string& header) const;

  Table select_rows(std::span<const std::size_t> rows) const;
  Table select_columns(std::span<const std::string> headers) const;

  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

  bool operator==(const Table& o) const {
    return row_count_ == o.row_count_ && headers_ == o.headers_ && columns_ == o.columns_;
  }

 private:
  std::size_t row_count_ = 0;
  std::vector<std::string> headers_;
  std::vector<Column> columns_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::string> warnings_;
};

struct KindInference {
  ColumnKind kind = ColumnKind::Categoric;
  bool all_missing = false;
};

// Numeric iff every non-missing cell parses as a finite real.
KindInference infer_kind(std::span<const std::optional<std::string>> cells);

// Parses a finite real; rejects trailing garbage, inf and nan.
std::optional<double> parse_finite(const std::string& text);

MissingMask narw(const Column& column);

std::pair<Table, Table> split_validation(const Table& table, double val_ratio, bool shuffle,
                                         std::uint64_t seed);

struct CsvOptions {
  std::set<std::string> missing_tokens = {"", "NaN", "NA", "None", "nan"};
  std::map<std::string, ColumnKind> kind_overrides;
};

// RFC-4180 style with a mandatory header row.
Table read_csv(std::istream& in, const CsvOptions& options = {});
Table read_csv_string(const std::string& text, const CsvOptions& options = {});
Table load_csv(const std::string& path, const CsvOptions& options = {});

// Missing cells are written as empty fields; reals with 17 significant digits.
void write_csv(std::ostream& out, const Table& table);
void save_csv(const std::string& path, const Table& table);

// Low-level record helpers shared by every CSV writer in the project.
std::vector<std::vector<std::string>> parse_csv_records(std::istream& in);
std::string csv_escape(const std::string& field);
std::string format_real(double v);

}  // namespace tabinfill
