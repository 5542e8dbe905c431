#include "ansrec/trainer.hpp"

#include <algorithm>
#include <numeric>

namespace ansrec {

Trainer::Trainer(const InteractionSet& train, TrainerConfig config)
    : Trainer(train, config, init_params(train.n_users, train.n_items, config.dim, config.seed)) {}

Trainer::Trainer(const InteractionSet& train, TrainerConfig config, ParamStore initial)
    : train_(train),
      config_(config),
      params_(std::move(initial)),
      optimizer_(OptimizerState::for_params(params_, config.adam)),
      grads_(params_.zeros_like()) {
  if (config_.batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
  if (config_.candidates == 0) throw std::invalid_argument("M must be at least 1");
  if (train_.interactions.empty()) throw std::invalid_argument("empty training set");
}

SamplerOutput Trainer::sample_one(UserId user, ItemId pos, std::size_t step, std::size_t element,
                                  EpochStats& stats) {
  const std::uint64_t e = epoch_, s = step, i = element;
  Rng cand_rng = derive_rng(config_.seed, "candidates", {e, s, i});
  const std::size_t m =
      config_.sampler == SamplerKind::rns || config_.sampler == SamplerKind::hns ? 1 : config_.candidates;
  const CandidateSet cs = draw_candidates(user, pos, train_, m, cand_rng);

  const Vector u = params_.user_emb.row(user).transpose();
  std::vector<double> first_pass(cs.size());
  for (std::size_t j = 0; j < cs.size(); ++j)
    first_pass[j] = score(u, params_.item_emb.row(cs.items[j]).transpose());
  stats.first_pass.add(first_pass);

  switch (config_.sampler) {
    case SamplerKind::rns:
      return rns_select(cs, cand_rng);
    case SamplerKind::dns:
      return dns_select(u, cs, params_);
    case SamplerKind::hns:
      return hns_select(cs, params_, cand_rng);
    case SamplerKind::ans: {
      Rng noise_rng = derive_rng(config_.seed, "noise", {e, s, i});
      AnsSample a = ans_sample(cs, params_, config_.ans, noise_rng);
      const ItemId dns_choice = cs.items[dns_argmax(u, cs.items, params_.item_emb)];
      stats.overlap.events++;
      stats.overlap.agreements += dns_choice == a.output.final_item ? 1 : 0;
      stats.mean_gain += a.augmented[a.output.augmentation->selected].gain;
      if (ans_observer_) ans_observer_(a);
      return std::move(a.output);
    }
  }
  throw std::logic_error("unknown sampler");
}

EpochStats Trainer::run_epoch() {
  EpochStats stats;
  stats.epoch = epoch_ + 1;
  stats.first_pass.epoch = stats.epoch;
  stats.overlap.epoch_begin = stats.overlap.epoch_end = stats.epoch;

  std::vector<std::size_t> order(train_.interactions.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng = derive_rng(config_.seed, "shuffle", {static_cast<std::uint64_t>(epoch_)});
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  const bool gated = config_.sampler == SamplerKind::ans || config_.sampler == SamplerKind::hns;
  const AdamMask mask{true, gated && !config_.freeze_gates};

  TrainBatch batch;
  std::vector<SamplerOutput> outputs;
  double loss_weight = 0;
  for (std::size_t start = 0, step = 0; start < order.size(); start += config_.batch_size, ++step) {
    const std::size_t end = std::min(order.size(), start + config_.batch_size);
    batch.pairs.clear();
    outputs.clear();
    for (std::size_t k = start; k < end; ++k) {
      const auto& x = train_.interactions[order[k]];
      batch.pairs.emplace_back(x.user, x.item);
      outputs.push_back(sample_one(x.user, x.item, step, k - start, stats));
    }
    const LossBreakdown loss = evaluate_objective(batch, params_, outputs, config_.weights, &grads_);
    adam_step(params_, grads_, optimizer_, mask);

    const double w = static_cast<double>(end - start);
    stats.mean_loss.bpr += w * loss.bpr;
    stats.mean_loss.contrastive += w * loss.contrastive;
    stats.mean_loss.disentangle += w * loss.disentangle;
    stats.mean_loss.l2 += w * loss.l2;
    stats.mean_loss.total += w * loss.total;
    loss_weight += w;
    ++stats.steps;
  }
  stats.mean_loss.bpr /= loss_weight;
  stats.mean_loss.contrastive /= loss_weight;
  stats.mean_loss.disentangle /= loss_weight;
  stats.mean_loss.l2 /= loss_weight;
  stats.mean_loss.total /= loss_weight;
  stats.mean_loss.gamma = config_.weights.gamma;
  stats.mean_loss.lambda = config_.weights.lambda;
  if (stats.overlap.events) {
    stats.overlap.value =
        static_cast<double>(stats.overlap.agreements) / static_cast<double>(stats.overlap.events);
    stats.mean_gain /= static_cast<double>(stats.overlap.events);
  }
  ++epoch_;
  return stats;
}

}  // namespace ansrec
