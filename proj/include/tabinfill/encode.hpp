#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabinfill/table.hpp"

namespace tabinfill {

enum class Scheme { Zscore, Ordinal, OneHot, Binarize, TwoValueBool, Identity };

const char* to_string(Scheme s) noexcept;
Scheme scheme_from_string(const std::string& s);
bool is_categoric(Scheme s) noexcept;

struct InfillStrategy {
  enum class Kind { Mean, Median, Mode, AdjacentCell, Arbitrary, DistinctActivation, MLInfill };
  Kind kind = Kind::Mean;
  double value = 0.0;  // Arbitrary only

  static InfillStrategy mean() { return {Kind::Mean}; }
  static InfillStrategy median() { return {Kind::Median}; }
  static InfillStrategy mode() { return {Kind::Mode}; }
  static InfillStrategy adjacent() { return {Kind::AdjacentCell}; }
  static InfillStrategy arbitrary(double v) { return {Kind::Arbitrary, v}; }
  static InfillStrategy distinct() { return {Kind::DistinctActivation}; }
  static InfillStrategy ml() { return {Kind::MLInfill}; }

  bool operator==(const InfillStrategy&) const = default;
};

std::string to_string(const InfillStrategy& s);

struct NumericStats {
  double mean = 0.0;
  double std = 0.0;  // sample (n-1) standard deviation
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
  double mode = 0.0;

  bool operator==(const NumericStats&) const = default;
};

// Activation rows are indexed by category index: 0 is the missing encoding
// (grouped with the most common entry for TwoValueBool), k >= 1 is entries[k-1].
struct CategoricStats {
  std::vector<std::string> entries;  // lexicographically sorted unique entries
  std::vector<std::vector<double>> activations;
  std::string mode;

  std::size_t width() const { return activations.empty() ? 0 : activations.front().size(); }
  // Category index of an entry; 0 when unseen.
  std::size_t index_of(const std::string& entry) const;
  // Inverse of the activation map; nullopt for the missing encoding or unknown rows.
  std::optional<std::string> entry_for(std::span<const double> row) const;

  bool operator==(const CategoricStats&) const = default;
};

struct EncodingSpec {
  std::string input_header;
  ColumnKind input_kind = ColumnKind::Numeric;
  Scheme scheme = Scheme::Zscore;
  NumericStats numeric;
  CategoricStats categoric;
  std::vector<std::string> returned_headers;
  InfillStrategy default_infill;

  bool operator==(const EncodingSpec&) const = default;
};

// Column-major numeric frame with headers; the encoded form of a table.
struct EncodedFrame {
  std::vector<std::string> headers;
  std::vector<std::vector<double>> columns;
  std::size_t rows = 0;

  void add(std::string header, std::vector<double> values);
  std::size_t index_of(const std::string& header) const;
  EncodedFrame select_columns(std::span<const std::string> keep) const;
  EncodedFrame select_rows(std::span<const std::size_t> rows) const;

  bool operator==(const EncodedFrame&) const = default;
};

// Bitwise equality, NaN-aware.
bool bit_identical(const EncodedFrame& a, const EncodedFrame& b);

void write_frame_csv(std::ostream& out, const EncodedFrame& frame);
void save_frame_csv(const std::string& path, const EncodedFrame& frame);
EncodedFrame read_frame_csv(std::istream& in);

NumericStats fit_zscore(std::span<const std::optional<double>> values);
std::vector<double> apply_zscore(std::span<const std::optional<double>> values,
                                 const NumericStats& stats);
double zscore_value(double raw, const NumericStats& stats);

CategoricStats fit_categoric(std::span<const std::optional<std::string>> values, Scheme scheme);

// Encoded columns plus the mask of entries that need infill (missing or unseen).
struct EncodedColumns {
  std::vector<std::vector<double>> columns;
  MissingMask mask;
};

EncodedColumns apply_categoric(std::span<const std::optional<std::string>> values,
                               const CategoricStats& stats);

std::vector<std::string> returned_headers_for(const std::string& input_header, Scheme scheme,
                                              const CategoricStats& stats);

// Default scheme under automation for feature columns.
Scheme default_scheme(const Column& column);
// Default scheme for label columns.
Scheme default_label_scheme(const Column& column);
InfillStrategy default_infill_for(Scheme scheme);

// Fits one column. Throws DataError on a scheme/kind mismatch. A numeric
// column without any value gets all-zero statistics.
EncodingSpec fit_encoding(const std::string& header, const Column& column, Scheme scheme);

// Applies a fitted spec. Missing numeric cells hold NaN placeholders; missing
// categoric cells hold the missing encoding.
EncodedColumns apply_encoding(const Column& column, const EncodingSpec& spec);

bool strategy_valid_for(const InfillStrategy& strategy, Scheme scheme);

// Overwrites masked rows of the encoded columns of one feature. MLInfill is
// not a static strategy and is rejected.
void static_impute(std::vector<std::vector<double>>& columns, const MissingMask& mask,
                   const InfillStrategy& strategy, const EncodingSpec& spec);

// Categoric targets as ordinal classes for a learner, numbered in order of
// first appearance.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::vector<double>> rows);

  // Builds the map from the activation rows in `rows` of the given columns.
  static LabelMap fit(const std::vector<const std::vector<double>*>& columns,
                      std::span<const std::size_t> rows);

  std::size_t class_count() const { return rows_.size(); }
  const std::vector<std::vector<double>>& rows() const { return rows_; }

  std::size_t to_class(std::span<const double> row) const;
  const std::vector<double>& to_row(std::size_t cls) const;

  bool operator==(const LabelMap& o) const { return rows_ == o.rows_; }

 private:
  std::vector<std::vector<double>> rows_;
  std::map<std::vector<double>, std::size_t> index_;
};

struct LabelConversion {
  std::vector<double> classes;
  LabelMap map;
};

// Converts a multi-column activation set (row-major rows) to ordinal labels.
LabelConversion labels_for_learner(const std::vector<std::vector<double>>& activation_rows);
std::vector<std::vector<double>> inverse_labels(std::span<const double> classes,
                                                const LabelMap& map);

}  // namespace tabinfill
