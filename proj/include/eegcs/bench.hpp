#pragma once

#include "eegcs/dataio.hpp"
#include "eegcs/dsp.hpp"
#include "eegcs/layout.hpp"
#include "eegcs/model.hpp"
#include "eegcs/selection.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace eegcs {

struct RunRecord {
  std::string task;
  std::string cluster;
  std::string arch;
  std::string band;
  std::string regime;
  std::uint64_t seed = 0;
  double metric = 0.0;   // NaN for failed runs
  double seconds = 0.0;  // the CSV column; zero unless wall timing is requested
  double elapsed = 0.0;  // always measured, never serialised
  std::string error;     // empty on success

  bool ok() const { return error.empty(); }
};

struct Aggregate {
  std::string task;
  std::string cluster;
  std::string arch;
  std::string band;
  std::string regime;
  size_t n = 0;  // successful runs
  size_t failures = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 when n < 2
};

struct BenchmarkResult {
  std::vector<RunRecord> records;

  /// One entry per (task, cluster, arch, band, regime) in order of first appearance.
  std::vector<Aggregate> aggregates() const;
};

/// A preprocessed, split dataset for one (regime, band).
struct RegimeData {
  std::string regime;
  std::string band;
  DatasetSplit split;
};

enum class TimingMode { none, wall };

struct GridOptions {
  TrainConfig train;
  size_t jobs = 1;
  TimingMode timing = TimingMode::none;
  std::function<void(const RunRecord&)> on_record;  // called from worker threads, serialised
};

/// Trains and tests every (data, cluster, arch, task, seed) cell. Failures are
/// recorded, not thrown. Records come back in grid order whatever `jobs` is.
BenchmarkResult run_grid(std::span<const RegimeData> data, const ElectrodeLayout& layout,
                         std::span<const ClusterConfig> clusters, std::span<const Arch> archs,
                         std::span<const Task> tasks, std::span<const std::uint64_t> seeds, const GridOptions& opts);

struct BandscanOptions {
  PreprocessConfig preprocess;  // band is overridden per scan entry
  SplitRatios ratios;
  std::uint64_t split_seed = 1;
  std::vector<int> cluster_ids;  // empty: all electrodes
  GridOptions grid;
};

/// Preprocesses the recording once per band, windows, splits and runs the LR
/// grid on it.
BenchmarkResult bandscan(const Recording& rec, const ElectrodeLayout& layout, std::span<const BandSpec> bands,
                         std::span<const Arch> archs, std::span<const std::uint64_t> seeds,
                         const BandscanOptions& opts);

/// Selection objective: retrains a fresh model restricted to the candidate
/// cluster once per seed and reports the mean and sample std of the
/// validation loss. Seeds run concurrently up to `jobs`.
ClusterEval retrain_evaluator(const DatasetSplit& split, const ElectrodeLayout& layout, ModelSpec spec,
                              TrainConfig train, std::vector<std::uint64_t> seeds, size_t jobs = 1);

/// Seeds 1..n.
std::vector<std::uint64_t> default_seeds(size_t n = 5);

enum class TableStyle { markdown, csv };

/// "98.12 ± 0.18" for n >= 2, "98.12" for a single run, "failed" for none.
std::string format_cell(const Aggregate& agg);

/// markdown: one row per cluster and arch (plus regime/band columns when
/// those vary), one column per task. csv: one line per record, shortest
/// round-trip formatting.
std::string format_table(const BenchmarkResult& result, TableStyle style);

BenchmarkResult parse_results_csv(std::istream& in);

inline constexpr const char* kResultsCsvHeader = "task,cluster,arch,band,regime,seed,metric,seconds";

}  // namespace eegcs
