#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ansrec/dataset.hpp"
#include "ansrec/params.hpp"
#include "ansrec/rng.hpp"
#include "ansrec/types.hpp"

namespace ansrec {

enum class SamplerKind { rns, dns, ans, hns };

std::string_view to_string(SamplerKind kind);
SamplerKind parse_sampler_kind(std::string_view name);

/// First-pass draw for one (user, positive) pair: distinct items the user
/// has not interacted with in train.
struct CandidateSet {
  UserId user = 0;
  ItemId positive = 0;
  std::vector<ItemId> items;

  std::size_t size() const { return items.size(); }
};

/// The discrete choices made while augmenting, kept so the objective can be
/// re-evaluated as a function of the parameters with these choices held fixed.
struct AugmentationTrace {
  std::size_t selected = 0;  // index into SamplerOutput::candidates
  Vector direction;
  Vector raw_noise;
  bool rescaled = false;
  bool clamped = false;
  double clamped_denominator = 0.0;
};

struct SamplerOutput {
  SamplerKind provenance = SamplerKind::rns;
  UserId user = 0;
  ItemId positive = 0;
  ItemId final_item = 0;  // the selected item, or the base item of a synthetic negative
  Vector final_vec;       // synthetic negative (ans, hns); empty for rns/dns
  double aux_contrastive = 0.0;
  double aux_disentangle = 0.0;
  std::vector<ItemId> candidates;
  std::optional<AugmentationTrace> augmentation;

  bool synthetic() const { return final_vec.size() > 0; }
};

/// M distinct uniform draws without replacement from the items `user` has
/// not interacted with in `train`.
CandidateSet draw_candidates(UserId user, ItemId positive, const InteractionSet& train,
                             std::size_t m, Rng& rng);

SamplerOutput rns_select(const CandidateSet& pool, Rng& rng);

/// Index of the highest-scoring item; ties go to the lowest item id.
template <typename U>
std::size_t dns_argmax(const Eigen::MatrixBase<U>& u_vec, std::span<const ItemId> items,
                       const EmbeddingTable<Real>& item_emb);

SamplerOutput dns_select(const Vector& u_vec, const CandidateSet& candidates,
                         const ParamStore& params);

}  // namespace ansrec

#include "ansrec/math.hpp"

namespace ansrec {

template <typename U>
std::size_t dns_argmax(const Eigen::MatrixBase<U>& u_vec, std::span<const ItemId> items,
                       const EmbeddingTable<Real>& item_emb) {
  if (items.empty()) throw std::invalid_argument("dns_select: empty candidate set");
  std::size_t best = 0;
  Real best_score = score(u_vec, item_emb.row(items[0]).transpose());
  for (std::size_t j = 1; j < items.size(); ++j) {
    const Real s = score(u_vec, item_emb.row(items[j]).transpose());
    if (s > best_score || (s == best_score && items[j] < items[best])) {
      best = j;
      best_score = s;
    }
  }
  return best;
}

}  // namespace ansrec
