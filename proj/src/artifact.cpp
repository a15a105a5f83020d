#include "tabinfill/artifact.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "tabinfill/error.hpp"
#include "tabinfill/rng.hpp"

namespace tabinfill {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5f;
constexpr std::uint64_t kFitStream = 0xf17;
constexpr std::uint64_t kTransformStream = 0x7f0;

const char* columntype_for(Scheme s) {
  switch (s) {
    case Scheme::Zscore:
    case Scheme::Identity: return "continuous";
    case Scheme::TwoValueBool: return "boolean";
    case Scheme::Ordinal: return "ordinal";
    case Scheme::OneHot: return "onehot";
    case Scheme::Binarize: return "binary";
  }
  return "continuous";
}

std::string narw_header(const std::string& input) { return input + "_NArw"; }

// Brings a column to the kind the artifact was fitted on. Cells that do not
// parse as numbers become missing and are infilled downstream.
Column coerce(const Column& c, ColumnKind kind) {
  if (c.kind() == kind) return c;
  if (kind == ColumnKind::Numeric) {
    std::vector<std::optional<double>> cells(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (const auto& v = c.categoric_cells()[i]) cells[i] = parse_finite(*v);
    }
    return Column::numeric(std::move(cells));
  }
  std::vector<std::optional<std::string>> cells(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (const auto& v = c.numeric_cells()[i]) cells[i] = format_real(*v);
  }
  return Column::categoric(std::move(cells));
}

struct Working {
  EncodedFrame frame;
  MaskMap masks;
  InfillLayout layout;
};

InfillStrategy precursor_for(const InfillStrategy& s, const EncodingSpec& spec,
                             const MissingMask& mask) {
  if (s.kind == InfillStrategy::Kind::MLInfill) return spec.default_infill;
  // Adjacent cell has nothing to copy from in a fully masked column.
  if (s.kind == InfillStrategy::Kind::AdjacentCell && mask.count == mask.size()) {
    return spec.default_infill;
  }
  return s;
}

Working build_working(const Table& raw, const FitArtifact& a) {
  Working w;
  w.frame.rows = raw.row_count();
  std::vector<std::pair<std::string, std::vector<double>>> narw_columns;

  for (std::size_t i = 0; i < a.specs.size(); ++i) {
    const EncodingSpec& spec = a.specs[i];
    const auto& strategies = a.infill[i];
    EncodedColumns enc = apply_encoding(coerce(raw.column(spec.input_header), spec.input_kind), spec);

    std::vector<std::vector<double>> out = enc.columns;
    std::vector<InfillStrategy> done;
    for (std::size_t j = 0; j < strategies.size(); ++j) {
      const InfillStrategy s = precursor_for(strategies[j], spec, enc.mask);
      if (std::find(done.begin(), done.end(), s) != done.end()) continue;
      done.push_back(s);
      auto filled = enc.columns;
      static_impute(filled, enc.mask, s, spec);
      for (std::size_t k = j; k < strategies.size(); ++k) {
        if (precursor_for(strategies[k], spec, enc.mask) == s) out[k] = std::move(filled[k]);
      }
    }

    FeatureLayout feature;
    feature.header = spec.input_header;
    feature.task = is_categoric(spec.scheme) ? Task::Classification : Task::Regression;
    for (std::size_t j = 0; j < out.size(); ++j) {
      feature.columns.push_back(w.frame.headers.size());
      feature.ml_columns.push_back(strategies[j].kind == InfillStrategy::Kind::MLInfill);
      w.frame.add(spec.returned_headers[j], std::move(out[j]));
    }
    if (!is_categoric(spec.scheme)) {
      const bool z = spec.scheme == Scheme::Zscore;
      feature.noise_min = z ? zscore_value(spec.numeric.min, spec.numeric) : spec.numeric.min;
      feature.noise_max = z ? zscore_value(spec.numeric.max, spec.numeric) : spec.numeric.max;
    }
    std::vector<double> bits(enc.mask.bits.begin(), enc.mask.bits.end());
    narw_columns.emplace_back(narw_header(spec.input_header), std::move(bits));
    w.masks.emplace(spec.input_header, std::move(enc.mask));
    w.layout.features.push_back(std::move(feature));
  }
  for (std::size_t i = 0; i < narw_columns.size(); ++i) {
    w.layout.features[i].narw_column = w.frame.headers.size();
    w.frame.add(std::move(narw_columns[i].first), std::move(narw_columns[i].second));
  }
  return w;
}

EncodedFrame output_frame(const Working& w, const FitArtifact& a) {
  return w.frame.select_columns(a.output_headers);
}

EncodedFrame encode_labels(const Table& raw, const FitArtifact& a) {
  EncodedFrame labels;
  if (!a.label_spec || !raw.has(a.label_spec->input_header)) return labels;
  const auto& spec = *a.label_spec;
  auto enc = apply_encoding(coerce(raw.column(spec.input_header), spec.input_kind), spec);
  for (std::size_t j = 0; j < enc.columns.size(); ++j) {
    labels.add(spec.returned_headers[j], std::move(enc.columns[j]));
  }
  return labels;
}

Table select_ids(const Table& raw, const FitArtifact& a) {
  std::vector<std::string> present;
  for (const auto& h : a.config.id_columns) {
    if (raw.has(h)) present.push_back(h);
  }
  if (present.empty()) return Table(raw.row_count());
  return raw.select_columns(present);
}

void require_header(const Table& raw, const std::string& h, const char* role) {
  if (!raw.has(h)) throw DataError(std::string(role) + " column '" + h + "' is not in the data");
}

PreparedTest transform(const FitArtifact& a, const Table& raw) {
  Working w = build_working(raw, a);
  PreparedTest out;
  const NoiseParams& noise = a.config.ml_cmnd.noise;
  out.inference_calls = replay_ml_infill(w.frame, w.layout, a.iterations, w.masks, a.order, noise,
                                         derive_seed(a.config.seed, {kTransformStream}));
  out.data = output_frame(w, a);
  out.ids = select_ids(raw, a);
  out.labels = encode_labels(raw, a);
  return out;
}

}  // namespace

std::optional<InfillStrategy> infill_strategy_from_name(const std::string& name) {
  if (name == "meaninfill") return InfillStrategy::mean();
  if (name == "medianinfill") return InfillStrategy::median();
  if (name == "modeinfill") return InfillStrategy::mode();
  if (name == "adjinfill") return InfillStrategy::adjacent();
  if (name == "zeroinfill") return InfillStrategy::arbitrary(0.0);
  if (name == "oneinfill") return InfillStrategy::arbitrary(1.0);
  if (name == "distinctinfill") return InfillStrategy::distinct();
  if (name == "MLinfill") return InfillStrategy::ml();
  if (name == "stdrdinfill") return std::nullopt;
  throw ConfigError("unknown infill strategy '" + name + "'");
}

InfillStrategy resolve_infill_assignment(const InfillAssignments& assigninfill,
                                         const std::string& input_header,
                                         const std::string& returned_header, bool ml_infill,
                                         const InfillStrategy& scheme_default) {
  auto lookup = [&](const std::string& header) -> std::optional<std::string> {
    std::optional<std::string> found;
    for (const auto& [name, headers] : assigninfill) {
      if (std::find(headers.begin(), headers.end(), header) == headers.end()) continue;
      if (found) {
        throw ConfigError("column '" + header + "' is assigned to both " + *found + " and " + name);
      }
      found = name;
    }
    return found;
  };
  auto named = lookup(returned_header);
  if (!named) named = lookup(input_header);
  if (named) return infill_strategy_from_name(*named).value_or(scheme_default);
  return ml_infill ? InfillStrategy::ml() : scheme_default;
}

const EncodingSpec& FitArtifact::spec(const std::string& input_header) const {
  for (const auto& s : specs) {
    if (s.input_header == input_header) return s;
  }
  throw DataError("artifact has no column '" + input_header + "'");
}

PreparedTrain prepare_train(const Table& raw, const PrepareConfig& config, const Learner& learner) {
  const MlCommand& ml = config.ml_cmnd;
  ml.noise.validate();
  ml.halt.validate();
  expand_grid(ml.learner);

  std::set<std::string> reserved;
  if (config.labels_column) {
    require_header(raw, *config.labels_column, "label");
    reserved.insert(*config.labels_column);
  }
  for (const auto& h : config.id_columns) {
    require_header(raw, h, "id");
    reserved.insert(h);
  }

  std::map<std::string, Scheme> scheme_override;
  for (const auto& [name, headers] : config.assigncat) {
    const Scheme s = scheme_from_string(name);
    for (const auto& h : headers) {
      require_header(raw, h, "assigncat");
      scheme_override[h] = s;
    }
  }

  auto [train_raw, val_raw] = split_validation(raw, config.val_ratio, config.shuffle_train,
                                               derive_seed(config.seed, {kShuffleStream}));
  if (train_raw.row_count() == 0) throw DataError("training set is empty");

  FitArtifact a;
  a.config = config;
  a.learner_name = learner.name();

  std::set<std::string> known_headers;
  for (const auto& h : train_raw.headers()) {
    if (reserved.contains(h)) continue;
    const Column& col = train_raw.column(h);
    Scheme scheme = default_scheme(col);
    if (config.infill_only && col.kind() == ColumnKind::Numeric) scheme = Scheme::Identity;
    if (auto it = scheme_override.find(h); it != scheme_override.end()) scheme = it->second;

    a.input_headers.push_back(h);
    a.specs.push_back(fit_encoding(h, col, scheme));
    known_headers.insert(h);
    for (const auto& r : a.specs.back().returned_headers) known_headers.insert(r);
  }

  for (const auto& [name, headers] : config.assigninfill) {
    infill_strategy_from_name(name);
    for (const auto& h : headers) {
      if (!known_headers.contains(h)) {
        throw ConfigError("assigninfill " + name + " names unknown column '" + h + "'");
      }
    }
  }
  for (const auto& spec : a.specs) {
    std::vector<InfillStrategy> resolved;
    for (const auto& r : spec.returned_headers) {
      InfillStrategy s = resolve_infill_assignment(config.assigninfill, spec.input_header, r,
                                                   config.ml_infill, spec.default_infill);
      if (!strategy_valid_for(s, spec.scheme)) {
        throw ConfigError("infill strategy " + to_string(s) + " cannot apply to '" + r + "'");
      }
      resolved.push_back(s);
    }
    a.infill.push_back(std::move(resolved));
  }

  if (config.labels_column) {
    const Column& col = train_raw.column(*config.labels_column);
    Scheme scheme = default_label_scheme(col);
    if (auto it = scheme_override.find(*config.labels_column); it != scheme_override.end()) {
      scheme = it->second;
    }
    a.label_spec = fit_encoding(*config.labels_column, col, scheme);
  }

  Working w = build_working(train_raw, a);
  for (const auto& [h, m] : w.masks) a.train_missing_counts[h] = m.count;
  a.plan = plan_exclusions(w.masks, ml.leakage);

  const bool any_ml = std::any_of(w.layout.features.begin(), w.layout.features.end(),
                                  [](const FeatureLayout& f) { return f.ml_target(); });
  if (any_ml) {
    InfillRun run = run_ml_infill(w.frame, w.layout, w.masks, a.plan, learner, ml.learner,
                                  ml.noise, ml.halt,
                                  derive_seed(config.seed, {kFitStream, ml.learner.seed}));
    a.order = std::move(run.order);
    a.iterations = std::move(run.iterations);
    a.halt_checks = std::move(run.halt_checks);
  } else {
    a.order = order_targets(w.masks);
  }

  for (const auto& spec : a.specs) {
    auto& mapped = a.column_map[spec.input_header];
    for (const auto& r : spec.returned_headers) {
      a.output_headers.push_back(r);
      mapped.push_back(r);
      a.columntype_report[r] = columntype_for(spec.scheme);
    }
  }
  if (config.narw_marker) {
    for (const auto& spec : a.specs) {
      const std::string h = narw_header(spec.input_header);
      a.output_headers.push_back(h);
      a.column_map[spec.input_header].push_back(h);
      a.columntype_report[h] = "boolean";
    }
  }

  PreparedTrain out;
  out.train = output_frame(w, a);
  out.train_ids = select_ids(train_raw, a);
  out.labels = encode_labels(train_raw, a);
  if (val_raw.row_count() > 0) {
    PreparedTest val = transform(a, val_raw);
    out.val = std::move(val.data);
    out.val_ids = std::move(val.ids);
    out.val_labels = std::move(val.labels);
  } else {
    out.val.headers = a.output_headers;
    out.val.columns.assign(a.output_headers.size(), {});
  }
  out.artifact = std::move(a);
  return out;
}

PreparedTest prepare_test(const FitArtifact& artifact, const Table& raw) {
  for (const auto& h : artifact.input_headers) require_header(raw, h, "expected input");
  if (!artifact.config.shuffle_test) return transform(artifact, raw);
  Rng rng(derive_seed(artifact.config.seed, {kShuffleStream, 1}));
  const auto perm = rng.permutation(raw.row_count());
  return transform(artifact, raw.select_rows(perm));
}

std::map<std::string, ColumnKind> expected_kinds(const FitArtifact& artifact) {
  std::map<std::string, ColumnKind> kinds;
  for (const auto& s : artifact.specs) kinds[s.input_header] = s.input_kind;
  if (artifact.label_spec) kinds[artifact.label_spec->input_header] = artifact.label_spec->input_kind;
  return kinds;
}

}  // namespace tabinfill
