// SPDX-License-Identifier: Apache-2.0
//
// Series ingestion, chronological splits, train-only normalisation and
// look-back / horizon windowing, plus a synthetic bilinear generator.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "naga/tensor.hpp"

namespace naga {

class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SplitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class WindowError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SeriesTable {
  std::vector<std::string> timestamps;  // as written in the source
  std::vector<std::int64_t> time_keys;  // strictly increasing
  Tensor values;                        // N x n_features
  std::vector<std::string> feature_names;
  std::size_t first_row = 0;  // offset of row 0 in the table this was cut from

  std::size_t rows() const { return timestamps.size(); }
  std::size_t features() const { return feature_names.size(); }
  /// Rows [begin, end) as a new table; first_row tracks the origin.
  SeriesTable slice(std::size_t begin, std::size_t end) const;
};

struct CsvSchema {
  char delimiter = ',';
  /// Target column by header name; defaults to the last column.
  std::optional<std::string> target;
};

struct IngestionReport {
  std::string source;
  std::size_t rows = 0;
  std::size_t features = 0;
  std::size_t filled_cells = 0;
  std::vector<std::string> feature_names;
  std::size_t target_index = 0;

  std::string to_json() const;
};

struct LoadedSeries {
  SeriesTable table;
  IngestionReport report;
};

/// Header row, first column timestamp (ISO-8601 date/time or integer index),
/// remaining columns numeric. Blank or unparseable cells are forward-filled
/// (back-filled if the column starts with a gap) and counted.
LoadedSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
LoadedSeries parse_csv(const std::string& text, const CsvSchema& schema = {},
                       const std::string& source = "<memory>");

/// Seconds since 1970-01-01 for "YYYY-MM-DD[ T]HH:MM[:SS]" or a plain integer.
std::optional<std::int64_t> parse_time_key(const std::string& text);

struct SplitSpec {
  enum class Mode { kRatio, kCounts };

  Mode mode = Mode::kRatio;
  double train = 0.7, val = 0.15, test = 0.15;  // ratio mode
  std::size_t train_rows = 0, val_rows = 0, test_rows = 0;  // counts mode

  static SplitSpec ratio(double train, double val, double test);
  static SplitSpec counts(std::size_t train, std::size_t val, std::size_t test);
  void validate() const;
};

struct SplitTables {
  SeriesTable train, val, test;
};

/// Contiguous chronological segments. Ratio mode floors the train and
/// validation lengths and gives the test split the remainder.
SplitTables split_series(const SeriesTable& table, const SplitSpec& spec);

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<bool> clamped;  // zero-variance feature, std forced to 1

  bool any_clamped() const;
};

/// Per-feature mean and population standard deviation.
NormStats fit_norm(const SeriesTable& train);
SeriesTable apply_norm(const SeriesTable& table, const NormStats& stats);
SeriesTable invert_norm(const SeriesTable& table, const NormStats& stats);

struct WindowSet {
  Tensor x;  // N x lookback x n_features
  Tensor y;  // N x horizon
  std::vector<std::size_t> start_rows;  // raw row of each window's first step

  std::size_t size() const { return start_rows.size(); }
  bool empty() const { return start_rows.empty(); }
  /// Windows at the given positions, in that order.
  WindowSet gather(const std::vector<std::size_t>& idx) const;
};

/// Stride-1 windows: x = rows t-d+1..t (all features), y = target rows
/// t+1..t+h. Yields rows - d - h + 1 windows.
WindowSet make_windows(const SeriesTable& table, std::size_t lookback, std::size_t horizon,
                       std::size_t target_idx);

struct WindowedDataset {
  std::size_t lookback = 0;
  std::size_t horizon = 0;
  std::size_t target = 0;
  NormStats stats;
  WindowSet train, val, test;

  std::size_t features() const { return train.x.dim(2); }
};

/// split -> fit_norm(train) -> apply_norm(all) -> make_windows per split.
WindowedDataset build_dataset(const SeriesTable& table, const SplitSpec& split,
                              std::size_t lookback, std::size_t horizon, std::size_t target_idx);

/// Quadratic cross-time target over a window of T steps:
///   y = sum_ab C[a,b] x[t, a] x[t', b] + sum_{s,a} L[s, a] x[s, a]
struct BilinearTarget {
  Tensor C;              // d x d
  std::size_t rank = 0;
  std::size_t t = 0;     // 0-indexed position of the left factor
  std::size_t t_prime = 0;
  Tensor linear;         // T x d

  std::size_t steps() const { return linear.dim(0); }
  std::size_t dim() const { return C.dim(0); }
  bool mirrored() const { return t + t_prime + 1 == steps(); }
  double evaluate(const Tensor& window) const;
};

struct SynthSpec {
  std::size_t rows = 2000;
  std::size_t window = 8;      // T
  std::size_t d_in = 3;
  std::size_t rank = 1;
  double noise = 0.01;
  double linear_scale = 0.1;   // 0 disables the linear part
  std::uint64_t seed = 42;
  std::optional<std::size_t> position;  // t; defaults to T-1 (paired with 0)
};

struct SynthSeries {
  SeriesTable table;  // d_in input columns followed by "target"
  BilinearTarget target;
};

/// Inputs i.i.d. N(0, 1). Row s >= T carries target(rows s-T..s-1) plus
/// N(0, noise^2); earlier rows carry noise only. Windowing the table with
/// lookback T and horizon 1 pairs each window with its own target.
SynthSeries synth_bilinear(const SynthSpec& spec);

/// Random rank-r matrix with singular values in [0.5, 2].
Tensor random_rank_matrix(std::size_t d, std::size_t rank, std::uint64_t seed);

void write_csv(const SeriesTable& table, const std::filesystem::path& path);

}  // namespace naga
