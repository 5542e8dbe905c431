#include "ansrec/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "ansrec/rng.hpp"

namespace ansrec {

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

namespace {

template <typename Derived>
void fill_uniform(Eigen::DenseBase<Derived>& m, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = dist(rng);
}

}  // namespace

ParamStore init_params(std::size_t n_users, std::size_t n_items, std::size_t d, std::uint64_t seed) {
  if (d == 0) throw std::invalid_argument("embedding size must be at least 1");
  if (n_users == 0 || n_items == 0) throw std::invalid_argument("need at least one user and item");

  auto p = ParamStore::zeros(static_cast<Eigen::Index>(n_users), static_cast<Eigen::Index>(n_items),
                             static_cast<Eigen::Index>(d));
  const double bound = xavier_bound(d, d);
  Rng rng = derive_rng(seed, "init");
  fill_uniform(p.user_emb, bound, rng);
  fill_uniform(p.item_emb, bound, rng);
  fill_uniform(p.w_item, bound, rng);
  fill_uniform(p.w_user, bound, rng);
  fill_uniform(p.w_mag, bound, rng);
  return p;
}

void adam_step(ParamStore& params, const Gradients& grads, OptimizerState& state, AdamMask mask) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
      !params.same_shape(state.second_moment))
    throw std::invalid_argument("adam_step: parameter, gradient and moment shapes differ");

  ++state.step;
  const auto& cfg = state.config;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);

  auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    theta.array() -= cfg.lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + cfg.eps);
  };
  if (mask.embeddings) {
    update(params.user_emb, grads.user_emb, state.first_moment.user_emb, state.second_moment.user_emb);
    update(params.item_emb, grads.item_emb, state.first_moment.item_emb, state.second_moment.item_emb);
  }
  if (mask.gates) {
    update(params.w_item, grads.w_item, state.first_moment.w_item, state.second_moment.w_item);
    update(params.w_user, grads.w_user, state.first_moment.w_user, state.second_moment.w_user);
    update(params.w_mag, grads.w_mag, state.first_moment.w_mag, state.second_moment.w_mag);
  }
  if (!params.all_finite()) throw std::runtime_error("adam_step produced non-finite parameters");
}

// Checkpoint layout (little-endian, host doubles):
//   magic "ANSCKPT\0" | u32 version | u64 n_users n_items d
//   u64 root_seed epoch adam_step | f64 lr beta1 beta2 eps
//   params, first moment, second moment; each as
//   user_emb, item_emb (row-major), w_item, w_user (column-major), w_mag
namespace {

constexpr char kMagic[8] = {'A', 'N', 'S', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return v;
}

void put_store(std::ostream& out, const ParamStore& p) {
  auto blob = [&](const auto& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
  };
  blob(p.user_emb);
  blob(p.item_emb);
  blob(p.w_item);
  blob(p.w_user);
  blob(p.w_mag);
}

void get_store(std::istream& in, ParamStore& p) {
  auto blob = [&](auto& m) {
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
    if (!in) throw std::runtime_error("checkpoint truncated");
  };
  blob(p.user_emb);
  blob(p.item_emb);
  blob(p.w_item);
  blob(p.w_user);
  blob(p.w_mag);
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put(out, kVersion);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(ckpt.params.n_users()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(ckpt.params.n_items()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(ckpt.params.dim()));
  put(out, ckpt.root_seed);
  put(out, ckpt.epoch);
  put(out, ckpt.optimizer.step);
  put(out, ckpt.optimizer.config.lr);
  put(out, ckpt.optimizer.config.beta1);
  put(out, ckpt.optimizer.config.beta2);
  put(out, ckpt.optimizer.config.eps);
  put_store(out, ckpt.params);
  put_store(out, ckpt.optimizer.first_moment);
  put_store(out, ckpt.optimizer.second_moment);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error(path.string() + " is not a checkpoint");
  if (get<std::uint32_t>(in) != kVersion) throw std::runtime_error("unsupported checkpoint version");

  const auto n_users = static_cast<Eigen::Index>(get<std::uint64_t>(in));
  const auto n_items = static_cast<Eigen::Index>(get<std::uint64_t>(in));
  const auto d = static_cast<Eigen::Index>(get<std::uint64_t>(in));
  Checkpoint ckpt;
  ckpt.root_seed = get<std::uint64_t>(in);
  ckpt.epoch = get<std::uint64_t>(in);
  ckpt.optimizer.step = get<std::uint64_t>(in);
  ckpt.optimizer.config.lr = get<double>(in);
  ckpt.optimizer.config.beta1 = get<double>(in);
  ckpt.optimizer.config.beta2 = get<double>(in);
  ckpt.optimizer.config.eps = get<double>(in);
  ckpt.params = ParamStore::zeros(n_users, n_items, d);
  ckpt.optimizer.first_moment = ParamStore::zeros(n_users, n_items, d);
  ckpt.optimizer.second_moment = ParamStore::zeros(n_users, n_items, d);
  get_store(in, ckpt.params);
  get_store(in, ckpt.optimizer.first_moment);
  get_store(in, ckpt.optimizer.second_moment);
  return ckpt;
}

}  // namespace ansrec
