#include "tabinfill/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "tabinfill/artifact.hpp"
#include "tabinfill/bench.hpp"
#include "tabinfill/error.hpp"

namespace tabinfill::cli {
namespace {

struct FitArgs {
  std::string train, test, labels, config, out;
  std::vector<std::string> ids;
  double val_ratio = 0.0;
  std::uint64_t seed = 0;
  bool ml_infill = true, narw = true, halt = false, infill_only = false;
  int iterations = 1;
};

struct TransformArgs {
  std::string artifact, data, out;
};

struct BenchArgs {
  std::string dataset = "synthetic", label, target, out;
  std::vector<std::string> mechanisms = {"mar", "mnar"};
  std::vector<double> ratios = {0.0, 0.1, 0.33, 0.67, 1.0};
  std::vector<std::string> strategies = {"default", "mode", "adjacent", "ml"};
  std::size_t repeats = 30, rows = 1000, top_features = 0;
  int trees = 100;
  std::uint64_t seed = 0;
};

void write_if(const std::string& path, const EncodedFrame& frame, bool cond) {
  if (cond) save_frame_csv(path, frame);
}

PrepareConfig build_config(const FitArgs& a, const CLI::App& cmd) {
  PrepareConfig cfg = a.config.empty() ? PrepareConfig{} : load_prepare_config(a.config);
  if (cmd.count("--labels")) cfg.labels_column = a.labels;
  if (cmd.count("--id")) cfg.id_columns = a.ids;
  if (cmd.count("--val-ratio")) cfg.val_ratio = a.val_ratio;
  if (cmd.count("--seed")) cfg.seed = a.seed;
  if (cmd.count("--ml-infill")) cfg.ml_infill = a.ml_infill;
  if (cmd.count("--narw")) cfg.narw_marker = a.narw;
  if (cmd.count("--iterations")) cfg.ml_cmnd.halt.max_iterations = a.iterations;
  if (cmd.count("--halt")) cfg.ml_cmnd.halt.halt_enabled = true;
  if (cmd.count("--infill-only")) cfg.infill_only = true;
  return cfg;
}

void run_fit(const FitArgs& a, const CLI::App& cmd) {
  const PrepareConfig cfg = build_config(a, cmd);
  const Table raw = load_csv(a.train);
  const PreparedTrain p = prepare_train(raw, cfg);
  save_artifact_file(a.out, p.artifact);
  save_frame_csv(sibling_path(a.out, "train"), p.train);
  write_if(sibling_path(a.out, "labels"), p.labels, cfg.labels_column.has_value());
  if (!cfg.id_columns.empty()) save_csv(sibling_path(a.out, "ids"), p.train_ids);
  if (p.val.rows > 0) {
    save_frame_csv(sibling_path(a.out, "val"), p.val);
    write_if(sibling_path(a.out, "val_labels"), p.val_labels, cfg.labels_column.has_value());
    if (!cfg.id_columns.empty()) save_csv(sibling_path(a.out, "val_ids"), p.val_ids);
  }
  if (!a.test.empty()) {
    CsvOptions opts;
    opts.kind_overrides = expected_kinds(p.artifact);
    const PreparedTest t = prepare_test(p.artifact, load_csv(a.test, opts));
    save_frame_csv(sibling_path(a.out, "test"), t.data);
    write_if(sibling_path(a.out, "test_labels"), t.labels, t.labels.rows > 0);
    if (t.ids.column_count() > 0) save_csv(sibling_path(a.out, "test_ids"), t.ids);
  }
}

void run_transform(const TransformArgs& a) {
  const FitArtifact artifact = load_artifact_file(a.artifact);
  CsvOptions opts;
  opts.kind_overrides = expected_kinds(artifact);
  const PreparedTest t = prepare_test(artifact, load_csv(a.data, opts));
  save_frame_csv(a.out, t.data);
  write_if(sibling_path(a.out, "labels"), t.labels, t.labels.rows > 0);
  if (t.ids.column_count() > 0) save_csv(sibling_path(a.out, "ids"), t.ids);
}

void run_inspect(const std::string& path, std::ostream& out) {
  const FitArtifact a = load_artifact_file(path);
  std::map<std::string, std::string> source;
  for (const auto& [input, returned] : a.column_map) {
    for (const auto& r : returned) source[r] = input;
  }
  nlohmann::ordered_json doc;
  doc["columns"] = nlohmann::ordered_json::array();
  for (const auto& h : a.output_headers) {
    doc["columns"].push_back(
        {{"header", h}, {"type", a.columntype_report.at(h)}, {"source", source.at(h)}});
  }
  doc["missing_counts"] = a.train_missing_counts;
  doc["learner"] = a.learner_name;
  doc["iterations"] = a.iterations.size();
  out << doc.dump(2) << '\n';
}

void run_bench(const BenchArgs& a, std::ostream& out) {
  bench::SyntheticOptions so;
  so.rows = a.rows;
  Table data;
  std::string label = a.label, target = a.target;
  if (a.dataset == "synthetic") {
    data = bench::synthetic_numeric(so, a.seed);
    if (label.empty()) label = "y";
    if (target.empty()) target = "t";
  } else if (a.dataset == "synthetic-mixed") {
    data = bench::synthetic_mixed(so, a.seed);
    if (label.empty()) label = "y";
    if (target.empty()) target = "c1";
  } else {
    data = load_csv(a.dataset);
  }

  bench::ExperimentConfig cfg;
  cfg.label = label;
  cfg.target = target;
  cfg.mechanisms = a.mechanisms;
  cfg.ratios = a.ratios;
  cfg.strategies = a.strategies;
  cfg.repeats = a.repeats;
  cfg.seed = a.seed;
  cfg.downstream_learner.n_estimators = a.trees;
  if (a.top_features > 0) cfg.top_features = a.top_features;

  const bench::ExperimentResult result = bench::run_experiment(data, cfg);
  if (a.out.empty()) {
    bench::write_results_csv(out, result);
  } else {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw DataError("cannot write '" + a.out + "'");
    bench::write_results_csv(f, result);
  }
  for (const auto& failure : result.failures) std::cerr << "repetition failed: " << failure << '\n';
}

}  // namespace

std::string sibling_path(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  p.replace_extension();
  return p.string() + "." + suffix + ".csv";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Missing-data preparation for tabular learning"};
  app.name("tabinfill");
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit on a training CSV and write an artifact");
  fit_cmd->add_option("--train", fit.train, "Training CSV")->required();
  fit_cmd->add_option("--test", fit.test, "Test CSV prepared with the fitted artifact");
  fit_cmd->add_option("--labels", fit.labels, "Label column");
  fit_cmd->add_option("--id", fit.ids, "ID column (repeatable)");
  fit_cmd->add_option("--val-ratio", fit.val_ratio, "Validation fraction")
      ->check(CLI::Range(0.0, 1.0));
  fit_cmd->add_option("--seed", fit.seed, "Master seed");
  fit_cmd->add_flag("--ml-infill,!--no-ml-infill", fit.ml_infill, "ML infill by default");
  fit_cmd->add_flag("--narw,!--no-narw", fit.narw, "Append missing-marker columns");
  fit_cmd->add_option("--iterations", fit.iterations, "Maximum infill iterations")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_flag("--halt", fit.halt, "Stop iterating once tolerances are met");
  fit_cmd->add_flag("--infill-only", fit.infill_only, "Impute without encoding numeric columns");
  fit_cmd->add_option("--config", fit.config, "JSON configuration");
  fit_cmd->add_option("--out", fit.out, "Artifact path (.tifa)")->required();

  TransformArgs tr;
  auto* tr_cmd = app.add_subcommand("transform", "Prepare data with a fitted artifact");
  tr_cmd->add_option("--artifact", tr.artifact, "Artifact path")->required();
  tr_cmd->add_option("--data", tr.data, "CSV to prepare")->required();
  tr_cmd->add_option("--out", tr.out, "Encoded CSV path")->required();

  std::string inspect_path;
  auto* in_cmd = app.add_subcommand("inspect", "Print an artifact's column report as JSON");
  in_cmd->add_option("--artifact", inspect_path, "Artifact path")->required();

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Run the missing-data experiment grid");
  bench_cmd->add_option("--dataset", bench_args.dataset,
                        "CSV path, or 'synthetic' / 'synthetic-mixed'");
  bench_cmd->add_option("--rows", bench_args.rows, "Rows of a synthetic dataset");
  bench_cmd->add_option("--label", bench_args.label, "Label column");
  bench_cmd->add_option("--target", bench_args.target, "Column receiving injections");
  bench_cmd->add_option("--mechanism", bench_args.mechanisms, "mar and/or mnar")
      ->delimiter(',');
  bench_cmd->add_option("--ratios", bench_args.ratios, "Injection ratios")->delimiter(',');
  bench_cmd->add_option("--strategies", bench_args.strategies,
                        "default, mode, adjacent, ml, ml+narw")
      ->delimiter(',');
  bench_cmd->add_option("--repeats", bench_args.repeats, "Repetitions per cell");
  bench_cmd->add_option("--seed", bench_args.seed, "Master seed");
  bench_cmd->add_option("--top-features", bench_args.top_features,
                        "Keep only the most important inputs (0 keeps all)");
  bench_cmd->add_option("--trees", bench_args.trees, "Trees in the downstream forest");
  bench_cmd->add_option("--out", bench_args.out, "Results CSV (stdout when omitted)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*fit_cmd) run_fit(fit, *fit_cmd);
    if (*tr_cmd) run_transform(tr);
    if (*in_cmd) run_inspect(inspect_path, out);
    if (*bench_cmd) run_bench(bench_args, out);
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace tabinfill::cli
