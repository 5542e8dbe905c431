#pragma once

// Shared fixtures for the unit and acceptance suites: random small
// instances, a finite-difference oracle and sampler plumbing.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ansrec/ans.hpp"
#include "ansrec/dataset.hpp"
#include "ansrec/objective.hpp"
#include "ansrec/params.hpp"
#include "ansrec/rng.hpp"
#include "ansrec/samplers.hpp"

namespace ansrec::testing {

/// Random interaction set where every user keeps at least `min_free` unobserved items.
inline InteractionSet random_interactions(std::size_t n_users, std::size_t n_items, std::size_t per_user,
                                          Rng& rng) {
  std::vector<RawInteraction> raw;
  std::vector<ItemId> items(n_items);
  for (std::size_t u = 0; u < n_users; ++u) {
    for (std::size_t i = 0; i < n_items; ++i) items[i] = static_cast<ItemId>(i);
    std::shuffle(items.begin(), items.end(), rng);
    for (std::size_t k = 0; k < per_user; ++k)
      raw.push_back({"u" + std::to_string(u), "i" + std::to_string(items[k]), static_cast<Timestamp>(k)});
  }
  // Make sure every item exists so the id space is the full range.
  for (std::size_t i = 0; i < n_items; ++i) raw.push_back({"u0", "i" + std::to_string(i), 0});
  InteractionSet set = build_interaction_set(raw, true);
  return set;
}

struct Instance {
  ParamStore params;
  InteractionSet train;  // only user_items is consulted by the samplers
  TrainBatch batch;
  std::vector<SamplerOutput> outputs;
  ObjectiveWeights weights;
};

/// Builds a small problem and runs the requested sampler over one batch.
inline Instance make_instance(std::uint64_t seed, SamplerKind kind, std::size_t n_users,
                              std::size_t n_items, std::size_t d, std::size_t m, double gamma,
                              double lambda, double epsilon, double noise_high = 0.1) {
  Rng rng = derive_rng(seed, "test.instance");
  Instance inst;
  inst.params = init_params(n_users, n_items, d, seed);
  // Scale up so the gate and margin are not in their linear regime.
  inst.params.w_item *= 3.0;
  inst.params.w_user *= 3.0;
  inst.params.w_mag *= 3.0;
  inst.params.user_emb *= 2.0;
  inst.params.item_emb *= 2.0;

  inst.train.n_users = n_users;
  inst.train.n_items = n_items;
  inst.train.user_items.assign(n_users, {});
  std::uniform_int_distribution<ItemId> item(0, static_cast<ItemId>(n_items) - 1);
  for (std::size_t u = 0; u < n_users; ++u) {
    // one observed positive per user
    const ItemId p = item(rng);
    inst.train.user_items[u] = {p};
    inst.train.interactions.push_back({static_cast<UserId>(u), p, 0});
  }
  inst.weights = {gamma, lambda};

  AnsConfig ans;
  ans.epsilon = epsilon;
  ans.magnitude.noise_high = noise_high;
  const std::size_t batch = n_users;
  for (std::size_t b = 0; b < batch; ++b) {
    const auto& x = inst.train.interactions[b];
    inst.batch.pairs.emplace_back(x.user, x.item);
    const std::size_t mm = kind == SamplerKind::rns || kind == SamplerKind::hns ? 1 : m;
    const CandidateSet cs = draw_candidates(x.user, x.item, inst.train, mm, rng);
    const Vector u = inst.params.user_emb.row(x.user).transpose();
    switch (kind) {
      case SamplerKind::rns: inst.outputs.push_back(rns_select(cs, rng)); break;
      case SamplerKind::dns: inst.outputs.push_back(dns_select(u, cs, inst.params)); break;
      case SamplerKind::hns: inst.outputs.push_back(hns_select(cs, inst.params, rng)); break;
      case SamplerKind::ans: inst.outputs.push_back(ans_sample(cs, inst.params, ans, rng).output); break;
    }
  }
  return inst;
}

/// Central finite differences of joint_loss, coordinate by coordinate.
inline Gradients finite_difference(const Instance& inst, double h = 1e-4) {
  ParamStore p = inst.params;
  Gradients g = p.zeros_like();
  auto loss = [&]() { return joint_loss(inst.batch, p, inst.outputs, inst.weights).total; };
  p.zip(g, [&](auto& block, auto& grad) {
    for (Eigen::Index k = 0; k < block.size(); ++k) {
      double& x = block.data()[k];
      const double saved = x;
      x = saved + h;
      const double up = loss();
      x = saved - h;
      const double down = loss();
      x = saved;
      grad.data()[k] = (up - down) / (2 * h);
    }
  });
  return g;
}

/// max over coordinates of |a - b| / max(|a|, |b|, floor).
inline double max_relative_error(const Gradients& a, Gradients b, double floor = 1e-6) {
  double worst = 0;
  Gradients ca = a;
  ca.zip(b, [&](auto& x, auto& y) {
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double xa = x.data()[k], yb = y.data()[k];
      const double denom = std::max({std::abs(xa), std::abs(yb), floor});
      worst = std::max(worst, std::abs(xa - yb) / denom);
    }
  });
  return worst;
}

}  // namespace ansrec::testing
