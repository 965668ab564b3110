// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner behind `naga train` and `naga ablate`: configuration,
// repeated seeded runs, the ablation grid, and CSV/Markdown reports.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "naga/config.hpp"
#include "naga/data.hpp"
#include "naga/model.hpp"
#include "naga/trainer.hpp"

namespace naga {

struct ExperimentConfig {
  /// CSV dataset; when empty the synthetic bilinear generator is used.
  std::filesystem::path dataset;
  std::optional<std::string> target;  // column name, defaults to the last
  SynthSpec synth;
  SplitSpec split;
  std::optional<std::size_t> lookback;  // default 96, or synth.window for synthetic data
  ModelConfig model;
  TrainConfig train;
  std::size_t repeats = 10;
  std::filesystem::path out = "naga-out";
  bool timing = true;  // false prints "-" for runtimes so reports are byte-stable
  bool write_checkpoints = true;
  bool verbose = true;     // one progress line per run on stderr
  bool d_in_explicit = false;

  bool synthetic() const { return dataset.empty(); }
  std::size_t resolved_lookback() const;
  /// Seed of repeat i.
  std::uint64_t seed_for(std::size_t repeat) const { return train.seed + repeat; }
  void validate() const;
};

/// Reads the key = value file; model and training keys share the namespace.
ExperimentConfig parse_experiment(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_experiment(const std::filesystem::path& path);
/// Applies one key, throwing ConfigError when no section knows it.
void apply_experiment_key(ExperimentConfig& cfg, const KeyValue& kv);
std::string to_key_values(const ExperimentConfig& cfg);

struct PreparedData {
  WindowedDataset data;
  std::optional<IngestionReport> ingestion;  // CSV sources only
};

/// Loads or synthesises the series and windows it. Sets model.d_in to the
/// feature count when the config left it at the default, and rejects an
/// explicit mismatch.
PreparedData prepare_data(ExperimentConfig& cfg);

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // population std across repeats
};

Aggregate aggregate(const std::vector<double>& values);

struct ResultRow {
  std::string label;
  Aggregate epochs, seconds, mse, mae, rmse;
  std::size_t repeats = 0;
  bool baseline = false;
  bool best = false;
  double d_rmse_pct = 0.0;
  double d_mae_pct = 0.0;
};

/// (baseline - value) / baseline * 100: degradations come out negative.
double relative_change(double baseline, double value);

/// Fills the relative-change columns against rows[baseline] and marks the
/// lowest mean RMSE as best.
void finalize_rows(std::vector<ResultRow>& rows, std::size_t baseline);

enum class ReportFormat { kCsv, kMarkdown };

/// Columns: Configuration, Epochs, Runtime[s], MSE, MAE, RMSE, dRMSE%, dMAE%.
/// Metrics carry 4 decimals and percentages 2. CSV appends std columns and a
/// best flag after these.
std::string format_report(const std::vector<ResultRow>& rows, ReportFormat format, bool timing = true);
void emit_report(const std::vector<ResultRow>& rows, ReportFormat format,
                 const std::filesystem::path& path, bool timing = true);
/// Parses a CSV written by emit_report.
std::vector<ResultRow> read_report_csv(const std::string& text);

struct RunOutcome {
  ResultRow row;
  std::vector<TrainReport> reports;  // one per repeat
};

/// `repeats` seeded runs of one configuration on prepared data. Checkpoints
/// of each run land in `checkpoint_dir` when it is non-empty.
RunOutcome run_repeats(const std::string& label, const ModelConfig& model, const ExperimentConfig& cfg,
                       const WindowedDataset& data, const std::filesystem::path& checkpoint_dir = {});

struct AblationVariant {
  std::string label;
  ModelConfig model;
};

/// Baseline, encoder removed, single cell, flip off, input masking 0.1.
std::vector<AblationVariant> ablation_grid(const ModelConfig& base);

/// Writes results.{csv,md}, config.txt, checkpoints and ingestion.json under
/// cfg.out; returns the aggregated row.
ResultRow cmd_train(ExperimentConfig cfg);
/// Writes ablation.{csv,md} and config.txt under cfg.out.
std::vector<ResultRow> cmd_ablate(ExperimentConfig cfg);

}  // namespace naga
