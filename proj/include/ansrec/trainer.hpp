#pragma once

#include <functional>
#include <vector>

#include "ansrec/ans.hpp"
#include "ansrec/dataset.hpp"
#include "ansrec/diagnostics.hpp"
#include "ansrec/objective.hpp"
#include "ansrec/params.hpp"
#include "ansrec/samplers.hpp"

namespace ansrec {

struct TrainerConfig {
  SamplerKind sampler = SamplerKind::dns;
  std::size_t dim = 64;
  std::size_t batch_size = 2048;
  std::size_t candidates = 8;  // M
  AdamConfig adam;
  ObjectiveWeights weights;
  AnsConfig ans;
  bool freeze_gates = false;
  std::uint64_t seed = 2024;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based index of the epoch just trained
  std::size_t steps = 0;
  LossBreakdown mean_loss;
  OverlapStat overlap;       // ans only: agreement of the base item with DNS on the same set
  double mean_gain = 0;      // ans only: augmentation gain of the selected negatives
  FirstPassStats first_pass;
};

/// Mini-batch trainer for MF-BPR with a pluggable negative sampler.
///
/// Randomness is split by label from the root seed: "shuffle" per epoch,
/// "candidates" and "noise" per (epoch, step, element). Two trainers that
/// share a seed therefore draw identical candidate sets regardless of
/// sampler.
class Trainer {
 public:
  Trainer(const InteractionSet& train, TrainerConfig config);
  Trainer(const InteractionSet& train, TrainerConfig config, ParamStore initial);

  EpochStats run_epoch();

  const ParamStore& params() const { return params_; }
  const OptimizerState& optimizer() const { return optimizer_; }
  const TrainerConfig& config() const { return config_; }
  std::size_t epochs_done() const { return epoch_; }

  /// Called with every ANS sample before the update is applied.
  void on_ans_sample(std::function<void(const AnsSample&)> fn) { ans_observer_ = std::move(fn); }

 private:
  SamplerOutput sample_one(UserId user, ItemId pos, std::size_t step, std::size_t element,
                           EpochStats& stats);

  const InteractionSet& train_;
  TrainerConfig config_;
  ParamStore params_;
  OptimizerState optimizer_;
  Gradients grads_;
  std::size_t epoch_ = 0;
  std::function<void(const AnsSample&)> ans_observer_;
};

}  // namespace ansrec
