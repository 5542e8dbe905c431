#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ansrec/params.hpp"
#include "ansrec/samplers.hpp"

namespace ansrec {

struct TrainBatch {
  std::vector<std::pair<UserId, ItemId>> pairs;
  std::size_t size() const { return pairs.size(); }
};

struct ObjectiveWeights {
  double gamma = 0.0;   // weight of the contrastive + disentanglement terms
  double lambda = 1e-4; // L2 strength
};

/// Batch means of every term; total = bpr + gamma * (contrastive + disentangle) + lambda * l2.
struct LossBreakdown {
  double bpr = 0;
  double contrastive = 0;
  double disentangle = 0;
  double l2 = 0;
  double total = 0;
  double gamma = 0;
  double lambda = 0;

  static LossBreakdown combine(double bpr, double contrastive, double disentangle, double l2,
                               double gamma, double lambda) {
    return {bpr, contrastive, disentangle, l2, bpr + gamma * (contrastive + disentangle) + lambda * l2,
            gamma, lambda};
  }
};

struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Joint objective over a batch. The sampler outputs' discrete choices
/// (selected candidate, sign direction, noise draw, rescale/clamp branch) are
/// constants; everything else is re-evaluated from `params`.
///
/// L2 covers the rows of the batch's users, positives and final (base)
/// negatives, plus the gate transforms when the sampler uses them, all
/// divided by the batch size.
LossBreakdown joint_loss(const TrainBatch& batch, const ParamStore& params,
                         std::span<const SamplerOutput> outputs, const ObjectiveWeights& weights);

/// Exact gradient of joint_loss.
Gradients backward(const TrainBatch& batch, const ParamStore& params,
                   std::span<const SamplerOutput> outputs, const ObjectiveWeights& weights);

/// Loss and gradient in one pass; `grads` may be null. When non-null it must
/// be congruent with `params` and is overwritten.
LossBreakdown evaluate_objective(const TrainBatch& batch, const ParamStore& params,
                                 std::span<const SamplerOutput> outputs,
                                 const ObjectiveWeights& weights, Gradients* grads);

}  // namespace ansrec
