#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "ansrec/types.hpp"

namespace ansrec {

/// All learnable parameters: user/item embedding tables and the three gate
/// transforms used by augmented sampling. Gradients share this type.
template <typename Scalar>
struct BasicParamStore {
  EmbeddingTable<Scalar> user_emb;  // n_users x d
  EmbeddingTable<Scalar> item_emb;  // n_items x d
  MatrixX<Scalar> w_item;           // d x d
  MatrixX<Scalar> w_user;           // d x d
  RowVectorX<Scalar> w_mag;         // 1 x d

  Eigen::Index dim() const { return user_emb.cols(); }
  Eigen::Index n_users() const { return user_emb.rows(); }
  Eigen::Index n_items() const { return item_emb.rows(); }

  static BasicParamStore zeros(Eigen::Index n_users, Eigen::Index n_items, Eigen::Index d) {
    BasicParamStore p;
    p.user_emb = EmbeddingTable<Scalar>::Zero(n_users, d);
    p.item_emb = EmbeddingTable<Scalar>::Zero(n_items, d);
    p.w_item = MatrixX<Scalar>::Zero(d, d);
    p.w_user = MatrixX<Scalar>::Zero(d, d);
    p.w_mag = RowVectorX<Scalar>::Zero(d);
    return p;
  }

  BasicParamStore zeros_like() const { return zeros(n_users(), n_items(), dim()); }

  bool same_shape(const BasicParamStore& o) const {
    return user_emb.rows() == o.user_emb.rows() && user_emb.cols() == o.user_emb.cols() &&
           item_emb.rows() == o.item_emb.rows() && item_emb.cols() == o.item_emb.cols() &&
           w_item.rows() == o.w_item.rows() && w_item.cols() == o.w_item.cols() &&
           w_user.rows() == o.w_user.rows() && w_user.cols() == o.w_user.cols() &&
           w_mag.cols() == o.w_mag.cols();
  }

  bool all_finite() const {
    return user_emb.allFinite() && item_emb.allFinite() && w_item.allFinite() &&
           w_user.allFinite() && w_mag.allFinite();
  }

  /// Visits every parameter block in a fixed order together with the matching
  /// block of `other`.
  template <typename Other, typename Fn>
  void zip(Other& other, Fn&& fn) {
    fn(user_emb, other.user_emb);
    fn(item_emb, other.item_emb);
    fn(w_item, other.w_item);
    fn(w_user, other.w_user);
    fn(w_mag, other.w_mag);
  }

  friend bool operator==(const BasicParamStore& a, const BasicParamStore& b) {
    return a.same_shape(b) && a.user_emb == b.user_emb && a.item_emb == b.item_emb &&
           a.w_item == b.w_item && a.w_user == b.w_user && a.w_mag == b.w_mag;
  }
};

using ParamStore = BasicParamStore<Real>;
using Gradients = ParamStore;

/// Xavier-uniform init. Every block, including the embedding tables, uses
/// the (d, d) fan so the bound is sqrt(6 / 2d).
ParamStore init_params(std::size_t n_users, std::size_t n_items, std::size_t d, std::uint64_t seed);

double xavier_bound(std::size_t fan_in, std::size_t fan_out);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimizerState {
  AdamConfig config;
  ParamStore first_moment;
  ParamStore second_moment;
  std::uint64_t step = 0;

  static OptimizerState for_params(const ParamStore& params, AdamConfig config = {}) {
    return {config, params.zeros_like(), params.zeros_like(), 0};
  }
};

struct AdamMask {
  bool embeddings = true;
  bool gates = true;
};

/// One dense Adam update. Blocks masked out keep both their values and
/// their moment accumulators.
void adam_step(ParamStore& params, const Gradients& grads, OptimizerState& state,
               AdamMask mask = {});

struct Checkpoint {
  ParamStore params;
  OptimizerState optimizer;
  std::uint64_t root_seed = 0;
  std::uint64_t epoch = 0;
};

/// Binary checkpoint; layout documented in the README.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ansrec
