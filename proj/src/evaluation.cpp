#include "ansrec/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ansrec/math.hpp"

namespace ansrec {

RankedList rank_topk(const ParamStore& params, UserId user, std::size_t k,
                     std::span<const ItemId> exclusions) {
  if (k == 0) throw std::invalid_argument("rank_topk: K must be at least 1");
  const auto u = params.user_emb.row(user);
  const auto n_items = static_cast<ItemId>(params.n_items());

  std::vector<std::pair<Real, ItemId>> scored;
  scored.reserve(static_cast<std::size_t>(n_items));
  auto ex = exclusions.begin();
  for (ItemId i = 0; i < n_items; ++i) {
    while (ex != exclusions.end() && *ex < i) ++ex;
    if (ex != exclusions.end() && *ex == i) continue;
    scored.emplace_back(score(u, params.item_emb.row(i)), i);
  }
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  RankedList out{user, {}};
  out.items.reserve(take);
  for (std::size_t r = 0; r < take; ++r) out.items.push_back(scored[r].second);
  return out;
}

UserMetrics metrics_at_k(const RankedList& ranked, std::span<const ItemId> test_items, std::size_t k) {
  if (test_items.empty()) throw std::invalid_argument("metrics_at_k: empty test set");
  std::vector<ItemId> test(test_items.begin(), test_items.end());
  std::sort(test.begin(), test.end());

  const std::size_t depth = std::min(k, ranked.items.size());
  std::size_t found = 0;
  double dcg = 0;
  for (std::size_t r = 0; r < depth; ++r) {
    if (std::binary_search(test.begin(), test.end(), ranked.items[r])) {
      ++found;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0;
  for (std::size_t r = 0; r < std::min(k, test.size()); ++r)
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);

  UserMetrics m;
  m.hit = found > 0 ? 1.0 : 0.0;
  m.recall = static_cast<double>(found) / static_cast<double>(test.size());
  m.ndcg = dcg / idcg;
  return m;
}

double per(const HitSet& hits_x, const HitSet& hits_y) {
  if (hits_x.hits.empty()) throw std::invalid_argument("PER undefined: first hit set is empty");
  std::size_t exclusive = 0;
  for (const auto& h : hits_x.hits)
    if (!std::binary_search(hits_y.hits.begin(), hits_y.hits.end(), h)) ++exclusive;
  return static_cast<double>(exclusive) / static_cast<double>(hits_x.hits.size());
}

const MetricsAtK& MetricReport::at(std::size_t k) const {
  for (const auto& m : at_k)
    if (m.k == k) return m;
  throw std::out_of_range("no metrics recorded at K=" + std::to_string(k));
}

Evaluation evaluate(const ParamStore& params, const InteractionSet& held_out,
                    std::span<const InteractionSet* const> exclude, std::span<const std::size_t> ks,
                    const std::string& method) {
  if (ks.empty()) throw std::invalid_argument("evaluate: no cutoffs given");
  std::vector<std::size_t> cutoffs(ks.begin(), ks.end());
  std::sort(cutoffs.begin(), cutoffs.end());
  cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
  const std::size_t max_k = cutoffs.back();

  Evaluation ev;
  std::vector<UserMetrics> sums(cutoffs.size());
  for (std::size_t c = 0; c < cutoffs.size(); ++c) ev.hits[cutoffs[c]] = HitSet{method, cutoffs[c], {}};

  std::vector<ItemId> excluded;
  for (std::size_t u = 0; u < held_out.user_items.size(); ++u) {
    const auto& test = held_out.user_items[u];
    if (test.empty()) continue;
    excluded.clear();
    for (const InteractionSet* set : exclude) {
      if (u < set->user_items.size())
        excluded.insert(excluded.end(), set->user_items[u].begin(), set->user_items[u].end());
    }
    std::sort(excluded.begin(), excluded.end());
    excluded.erase(std::unique(excluded.begin(), excluded.end()), excluded.end());

    const auto user = static_cast<UserId>(u);
    const RankedList ranked = rank_topk(params, user, max_k, excluded);
    ++ev.report.evaluated_users;
    for (std::size_t c = 0; c < cutoffs.size(); ++c) {
      const auto m = metrics_at_k(ranked, test, cutoffs[c]);
      sums[c].hit += m.hit;
      sums[c].recall += m.recall;
      sums[c].ndcg += m.ndcg;
      auto& hs = ev.hits[cutoffs[c]].hits;
      const std::size_t depth = std::min(cutoffs[c], ranked.items.size());
      for (std::size_t r = 0; r < depth; ++r)
        if (std::binary_search(test.begin(), test.end(), ranked.items[r]))
          hs.emplace_back(user, ranked.items[r]);
    }
  }

  const double n = static_cast<double>(std::max<std::size_t>(ev.report.evaluated_users, 1));
  for (std::size_t c = 0; c < cutoffs.size(); ++c) {
    ev.report.at_k.push_back({cutoffs[c], sums[c].hit / n, sums[c].recall / n, sums[c].ndcg / n});
    std::sort(ev.hits[cutoffs[c]].hits.begin(), ev.hits[cutoffs[c]].hits.end());
  }
  return ev;
}

}  // namespace ansrec
