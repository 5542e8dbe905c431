#include "ansrec/samplers.hpp"

#include <algorithm>
#include <stdexcept>

namespace ansrec {

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::rns: return "rns";
    case SamplerKind::dns: return "dns";
    case SamplerKind::ans: return "ans";
    case SamplerKind::hns: return "hns";
  }
  return "?";
}

SamplerKind parse_sampler_kind(std::string_view name) {
  if (name == "rns") return SamplerKind::rns;
  if (name == "dns") return SamplerKind::dns;
  if (name == "ans") return SamplerKind::ans;
  if (name == "hns") return SamplerKind::hns;
  throw std::invalid_argument("unknown sampler `" + std::string(name) + "` (rns|dns|ans|hns)");
}

CandidateSet draw_candidates(UserId user, ItemId positive, const InteractionSet& train,
                             std::size_t m, Rng& rng) {
  if (user < 0 || static_cast<std::size_t>(user) >= train.n_users)
    throw std::out_of_range("draw_candidates: unknown user");
  if (m == 0) throw std::invalid_argument("draw_candidates: M must be at least 1");
  const auto& seen = train.user_items[static_cast<std::size_t>(user)];
  const std::size_t pool = train.n_items - seen.size();
  if (m > pool)
    throw std::invalid_argument("draw_candidates: M=" + std::to_string(m) + " exceeds the " +
                                std::to_string(pool) + " unobserved items");

  CandidateSet out{user, positive, {}};
  out.items.reserve(m);
  if (2 * m > pool) {
    // Dense regime: enumerate the pool and take a partial Fisher-Yates prefix.
    std::vector<ItemId> all;
    all.reserve(pool);
    auto it = seen.begin();
    for (ItemId i = 0; i < static_cast<ItemId>(train.n_items); ++i) {
      if (it != seen.end() && *it == i) {
        ++it;
        continue;
      }
      all.push_back(i);
    }
    for (std::size_t k = 0; k < m; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, all.size() - 1);
      std::swap(all[k], all[pick(rng)]);
      out.items.push_back(all[k]);
    }
    return out;
  }

  std::uniform_int_distribution<ItemId> pick(0, static_cast<ItemId>(train.n_items) - 1);
  while (out.items.size() < m) {
    const ItemId i = pick(rng);
    if (std::binary_search(seen.begin(), seen.end(), i)) continue;
    if (std::find(out.items.begin(), out.items.end(), i) != out.items.end()) continue;
    out.items.push_back(i);
  }
  return out;
}

SamplerOutput rns_select(const CandidateSet& pool, Rng& rng) {
  if (pool.items.empty()) throw std::invalid_argument("rns_select: empty pool");
  std::uniform_int_distribution<std::size_t> pick(0, pool.items.size() - 1);
  SamplerOutput out;
  out.provenance = SamplerKind::rns;
  out.user = pool.user;
  out.positive = pool.positive;
  out.final_item = pool.items[pick(rng)];
  return out;
}

SamplerOutput dns_select(const Vector& u_vec, const CandidateSet& candidates,
                         const ParamStore& params) {
  SamplerOutput out;
  out.provenance = SamplerKind::dns;
  out.user = candidates.user;
  out.positive = candidates.positive;
  out.final_item = candidates.items[dns_argmax(u_vec, candidates.items, params.item_emb)];
  return out;
}

}  // namespace ansrec
