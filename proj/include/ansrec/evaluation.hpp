#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ansrec/dataset.hpp"
#include "ansrec/params.hpp"

namespace ansrec {

struct RankedList {
  UserId user = 0;
  std::vector<ItemId> items;
};

/// Top-K items for `user` by inner-product score, skipping `exclusions`
/// (sorted ascending). Ties go to the lowest item id.
RankedList rank_topk(const ParamStore& params, UserId user, std::size_t k,
                     std::span<const ItemId> exclusions);

struct UserMetrics {
  double hit = 0;
  double recall = 0;
  double ndcg = 0;
};

/// Binary-relevance metrics of the first `k` entries of `ranked`.
/// NDCG's ideal DCG is taken over min(k, |test_items|) hits.
UserMetrics metrics_at_k(const RankedList& ranked, std::span<const ItemId> test_items, std::size_t k);

/// Test interactions one method ranked inside its top-K.
struct HitSet {
  std::string method;
  std::size_t k = 0;
  std::vector<std::pair<UserId, ItemId>> hits;  // sorted

  std::size_t size() const { return hits.size(); }
};

/// |H_x - H_y| / |H_x|.
double per(const HitSet& hits_x, const HitSet& hits_y);

struct MetricsAtK {
  std::size_t k = 0;
  double hit_ratio = 0;
  double recall = 0;
  double ndcg = 0;
};

struct MetricReport {
  std::vector<MetricsAtK> at_k;  // ascending k
  std::size_t evaluated_users = 0;

  const MetricsAtK& at(std::size_t k) const;
};

struct Evaluation {
  MetricReport report;
  std::map<std::size_t, HitSet> hits;  // keyed by k
};

/// Macro-averaged full-ranking evaluation over users with a non-empty
/// held-out set. Each user's items in every set of `exclude` are skipped
/// when ranking.
Evaluation evaluate(const ParamStore& params, const InteractionSet& held_out,
                    std::span<const InteractionSet* const> exclude, std::span<const std::size_t> ks,
                    const std::string& method = {});

}  // namespace ansrec
