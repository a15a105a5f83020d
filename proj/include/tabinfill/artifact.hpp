#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabinfill/encode.hpp"
#include "tabinfill/forest.hpp"
#include "tabinfill/infill.hpp"
#include "tabinfill/table.hpp"

namespace tabinfill {

// Knobs of the ML infill engine, named after the ml_cmnd config section.
struct MlCommand {
  LeakageConfig leakage;
  HaltTolerances halt;
  NoiseParams noise;
  LearnerConfig learner;

  bool operator==(const MlCommand&) const = default;
};

// Strategy name -> headers (input headers or returned headers).
using InfillAssignments = std::map<std::string, std::vector<std::string>>;

struct PrepareConfig {
  std::optional<std::string> labels_column;
  std::vector<std::string> id_columns;
  double val_ratio = 0.0;
  bool shuffle_train = true;
  bool shuffle_test = false;
  bool ml_infill = true;
  bool narw_marker = true;
  bool infill_only = false;
  std::map<std::string, std::vector<std::string>> assigncat;  // scheme name -> input headers
  InfillAssignments assigninfill;
  MlCommand ml_cmnd;
  std::uint64_t seed = 0;

  bool operator==(const PrepareConfig&) const = default;
};

// Static strategy for an assigninfill key. "MLinfill" maps to MLInfill and
// "stdrdinfill" to nullopt (the scheme default).
std::optional<InfillStrategy> infill_strategy_from_name(const std::string& name);

// Precedence: returned-header assignment, then input-header assignment, then
// the ML infill default, then the scheme default.
InfillStrategy resolve_infill_assignment(const InfillAssignments& assigninfill,
                                         const std::string& input_header,
                                         const std::string& returned_header, bool ml_infill,
                                         const InfillStrategy& scheme_default);

constexpr int kArtifactFormatVersion = 1;

struct FitArtifact {
  int format_version = kArtifactFormatVersion;
  PrepareConfig config;
  std::vector<std::string> input_headers;  // feature inputs, in table order
  std::vector<EncodingSpec> specs;         // parallel to input_headers
  std::optional<EncodingSpec> label_spec;
  // Resolved strategy per returned column, parallel to each spec's headers.
  std::vector<std::vector<InfillStrategy>> infill;
  ExclusionPlan plan;
  std::vector<std::string> order;
  std::vector<ModelSet> iterations;
  std::vector<HaltCheck> halt_checks;
  std::string learner_name;
  std::map<std::string, std::size_t> train_missing_counts;
  std::vector<std::string> output_headers;
  std::map<std::string, std::vector<std::string>> column_map;  // input -> returned headers
  std::map<std::string, std::string> columntype_report;        // returned -> type

  const EncodingSpec& spec(const std::string& input_header) const;
};

struct PreparedTrain {
  EncodedFrame train;
  Table train_ids;
  EncodedFrame labels;
  EncodedFrame val;
  Table val_ids;
  EncodedFrame val_labels;
  FitArtifact artifact;
};

struct PreparedTest {
  EncodedFrame data;
  Table ids;
  EncodedFrame labels;
  std::size_t inference_calls = 0;
};

PreparedTrain prepare_train(const Table& raw, const PrepareConfig& config,
                            const Learner& learner = default_learner());

PreparedTest prepare_test(const FitArtifact& artifact, const Table& raw);

// Kinds the artifact expects, for use as CSV kind overrides.
std::map<std::string, ColumnKind> expected_kinds(const FitArtifact& artifact);

std::string save_artifact(const FitArtifact& artifact);
FitArtifact load_artifact(std::string_view bytes);
void save_artifact_file(const std::string& path, const FitArtifact& artifact);
FitArtifact load_artifact_file(const std::string& path);

// Structural equality through the serialized form.
bool same_artifact(const FitArtifact& a, const FitArtifact& b);

PrepareConfig parse_prepare_config(std::string_view json_text);
PrepareConfig load_prepare_config(const std::string& path);
std::string prepare_config_to_json(const PrepareConfig& config);

}  // namespace tabinfill
