#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ansrec/dataset.hpp"
#include "ansrec/params.hpp"
#include "ansrec/rng.hpp"

namespace ansrec {

/// Uniformly drawn (user, item) pairs the user never interacted with in train.
std::vector<std::pair<UserId, ItemId>> sample_unobserved_pairs(const InteractionSet& train,
                                                               std::size_t count, Rng& rng);

/// Nearest-rank percentile: the ceil(q * n)-th smallest value.
double percentile(std::vector<double> values, double q);

struct ScoreHistogram {
  std::size_t epoch = 0;
  std::vector<double> edges;          // n_bins + 1, strictly increasing
  std::vector<std::size_t> counts;    // n_bins
  std::size_t samples = 0;
  double marker = 0;                  // score threshold the fraction is measured against
  double fraction_below = 0;          // share of scores <= marker
};

/// Histogram of inner-product scores over `pairs`, with uniform bins across
/// the observed range. Without `marker` the 80th percentile of these very
/// scores is used, so the fraction is ~0.8 by construction; passing an
/// earlier checkpoint's marker tracks how much mass drifts below it.
ScoreHistogram score_histogram(const ParamStore& params,
                               std::span<const std::pair<UserId, ItemId>> pairs, std::size_t n_bins,
                               std::optional<double> marker = std::nullopt, std::size_t epoch = 0);

/// Running per-epoch summary of first-pass candidate scores: the mean over
/// draws of each draw's minimum and maximum score.
struct FirstPassStats {
  std::size_t epoch = 0;
  double sum_min = 0;
  double sum_max = 0;
  std::size_t draws = 0;

  void add(std::span<const double> candidate_scores);
};

struct MinMaxPoint {
  std::size_t epoch = 0;
  double min = 0;
  double max = 0;
};

/// Per-epoch mean min/max candidate scores, min-max normalised jointly over
/// the whole run (run minimum -> 0, run maximum -> 1).
std::vector<MinMaxPoint> minmax_curve(std::span<const FirstPassStats> epochs);

struct OverlapStat {
  std::size_t epoch_begin = 0;
  std::size_t epoch_end = 0;  // inclusive
  std::size_t agreements = 0;
  std::size_t events = 0;
  double value = 0;
};

/// Share of events where two samplers picked the same item from the same
/// candidate set. Each pair is (first choice, second choice).
OverlapStat overlap_ratio(std::span<const std::pair<ItemId, ItemId>> paired);
OverlapStat merge_overlap(std::span<const OverlapStat> parts);

void write_histograms_csv(const std::filesystem::path& path, std::span<const ScoreHistogram> hists);
void write_minmax_csv(const std::filesystem::path& path, std::span<const MinMaxPoint> curve);
void write_overlap_csv(const std::filesystem::path& path, std::span<const OverlapStat> stats);

std::string render_histograms_svg(std::span<const ScoreHistogram> hists);
std::string render_minmax_svg(std::span<const MinMaxPoint> curve);

}  // namespace ansrec
