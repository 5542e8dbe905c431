#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ansrec/config.hpp"
#include "ansrec/diagnostics.hpp"
#include "ansrec/evaluation.hpp"
#include "ansrec/trainer.hpp"

namespace ansrec {

/// Loads (or generates) the interactions named by the config and splits them.
Splits prepare_splits(const RunConfig& config);

/// Order-sensitive hash of a split's (user, item) pairs.
std::uint64_t fingerprint(const InteractionSet& set);

struct EpochRecord {
  std::size_t epoch = 0;
  MetricReport validation;
  LossBreakdown loss;
  OverlapStat overlap;
  double mean_gain = 0;
  double seconds = 0;
};

struct RunRecord {
  RunConfig config;
  double initial_validation = 0;  // select_k NDCG before any training
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_validation = 0;
  MetricReport test;
  HitSet test_hits;  // at select_k
  std::uint64_t test_fingerprint = 0;
  std::vector<ScoreHistogram> histograms;
  std::vector<MinMaxPoint> minmax;
  OverlapStat overlap;  // whole run
  std::string checkpoint_path;
  double seconds = 0;
};

struct RunHooks {
  std::function<void(const AnsSample&)> on_ans_sample;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Trains with early stopping on validation NDCG@select_k, restores the best
/// epoch's parameters and evaluates them once on test.
RunRecord run_experiment(const RunConfig& config, const RunHooks& hooks = {});

enum class ReportFormat { csv, json };

/// Writes the record; `json` is the full structured record, `csv` the flat
/// `split,k,metric,value` table. Neither contains wall-clock fields unless
/// `include_timing` is set.
void emit_report(const RunRecord& record, ReportFormat format, const std::filesystem::path& path,
                 bool include_timing = false);
std::string report_string(const RunRecord& record, ReportFormat format, bool include_timing = false);

/// Reads back a JSON report (config, metrics, hit set, history).
RunRecord load_report(const std::filesystem::path& path);
RunRecord parse_report(const std::string& json_text);

/// Test metrics from a CSV report.
MetricReport parse_metrics_csv(const std::string& csv_text);

struct RunComparison {
  std::vector<std::string> names;
  std::size_t k = 20;
  std::vector<std::vector<double>> per;  // per[x][y] = PER(x, y)
  /// metric deltas relative to the first record, per K: rows follow names.
  std::vector<std::vector<MetricsAtK>> deltas;
};

RunComparison compare_runs(std::span<const RunRecord> records, std::span<const std::string> names);
std::string format_comparison(const RunComparison& cmp);

}  // namespace ansrec
