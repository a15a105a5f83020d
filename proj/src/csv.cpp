#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tabinfill/error.hpp"
#include "tabinfill/table.hpp"

namespace tabinfill {

std::vector<std::vector<std::string>> parse_csv_records(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool line_touched = false;
  std::size_t line = 0;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A line holding nothing at all is skipped, so trailing newlines are harmless.
    if (line_touched) records.push_back(std::move(record));
    record.clear();
    line_touched = false;
    ++line;
  };

  char c;
  while (in.get(c)) {
    if (c != '\r' && c != '\n') line_touched = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (in.peek() == '\n') in.get(c);
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError(line, "unterminated quoted field");
  if (line_touched) end_record();
  return records;
}

Table read_csv(std::istream& in, const CsvOptions& options) {
  auto records = parse_csv_records(in);
  if (records.empty()) throw ParseError(0, "missing header row");
  const auto& header = records.front();
  const std::size_t width = header.size();
  const std::size_t n = records.size() - 1;

  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != width) {
      throw ParseError(r, "expected " + std::to_string(width) + " fields, found " +
                              std::to_string(records[r].size()));
    }
  }

  Table table(n);
  for (std::size_t j = 0; j < width; ++j) {
    std::vector<std::optional<std::string>> raw(n);
    for (std::size_t r = 0; r < n; ++r) {
      const std::string& text = records[r + 1][j];
      if (!options.missing_tokens.contains(text)) raw[r] = text;
    }
    ColumnKind kind;
    auto override_it = options.kind_overrides.find(header[j]);
    if (override_it != options.kind_overrides.end()) {
      kind = override_it->second;
    } else {
      auto inferred = infer_kind(raw);
      kind = inferred.kind;
      if (inferred.all_missing) {
        table.add_warning("column '" + header[j] + "' is entirely missing; treated as categoric");
      }
    }
    if (kind == ColumnKind::Numeric) {
      std::vector<std::optional<double>> cells(n);
      for (std::size_t r = 0; r < n; ++r) {
        if (raw[r]) cells[r] = parse_finite(*raw[r]);
      }
      table.add_column(header[j], Column::numeric(std::move(cells)));
    } else {
      table.add_column(header[j], Column::categoric(std::move(raw)));
    }
  }
  return table;
}

Table read_csv_string(const std::string& text, const CsvOptions& options) {
  std::istringstream in(text);
  return read_csv(in, options);
}

Table load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_csv(in, options);
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_real(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 17);
  return std::string(buf.data(), ptr);
}

void write_csv(std::ostream& out, const Table& table) {
  const auto& headers = table.headers();
  for (std::size_t j = 0; j < headers.size(); ++j) {
    if (j) out << ',';
    out << csv_escape(headers[j]);
  }
  out << '\n';
  for (std::size_t r = 0; r < table.row_count(); ++r) {
    for (std::size_t j = 0; j < headers.size(); ++j) {
      if (j) out << ',';
      const Column& col = table.column(j);
      if (col.is_missing(r)) {
        // A lone empty field would read back as a blank line.
        if (headers.size() == 1) out << "\"\"";
        continue;
      }
      if (col.kind() == ColumnKind::Numeric) {
        out << format_real(*col.numeric_cells()[r]);
      } else {
        out << csv_escape(*col.categoric_cells()[r]);
      }
    }
    out << '\n';
  }
}

void save_csv(const std::string& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_csv(out, table);
}

}  // namespace tabinfill
