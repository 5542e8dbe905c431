#include "ansrec/ans.hpp"

namespace ansrec {

Magnitude augment_magnitude(const Vector& hard, const Vector& p_prime, const RowVector& w_mag,
                            const MagnitudeConfig& config, Rng& rng) {
  if (!(config.noise_high >= 0.0)) throw std::invalid_argument("noise_high must be non-negative");
  if (!(config.clamp > 0.0)) throw std::invalid_argument("mag_clamp must be positive");

  Magnitude out;
  out.denominator = margin_denominator(hard, p_prime, w_mag, config.clamp);
  out.margin = margin_from_denominator(out.denominator.value).value;

  std::uniform_real_distribution<double> noise(0.0, config.noise_high);
  out.raw.resize(hard.size());
  for (Eigen::Index k = 0; k < out.raw.size(); ++k) out.raw(k) = noise(rng);

  const Real norm = out.raw.norm();
  out.rescaled = norm > out.margin;
  out.delta = out.rescaled ? Vector(out.raw * ball_scale(out.raw, norm, out.margin)) : out.raw;
  return out;
}

std::size_t select_final(std::span<const AugmentedNegative> augmented, double epsilon) {
  if (augmented.empty()) throw std::invalid_argument("select_final: empty candidate list");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
  std::size_t best = 0;
  Real best_value = augmented[0].score_after + epsilon * augmented[0].gain;
  for (std::size_t j = 1; j < augmented.size(); ++j) {
    const Real v = augmented[j].score_after + epsilon * augmented[j].gain;
    if (v > best_value || (v == best_value && augmented[j].base_item < augmented[best].base_item)) {
      best = j;
      best_value = v;
    }
  }
  return best;
}

AnsSample ans_sample(const CandidateSet& candidates, const ParamStore& params,
                     const AnsConfig& config, Rng& rng) {
  if (candidates.items.empty()) throw std::invalid_argument("ans_sample: empty candidate set");
  const Vector u = params.user_emb.row(candidates.user).transpose();
  const Vector p = params.item_emb.row(candidates.positive).transpose();
  const Vector wu_u = params.w_user * u;

  AnsSample s;
  const std::size_t m = candidates.items.size();
  s.factors.reserve(m);
  s.positives.reserve(m);
  s.augmented.reserve(m);

  const auto cols = static_cast<Eigen::Index>(m);
  Matrix cand(params.dim(), cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    cand.col(j) = params.item_emb.row(candidates.items[static_cast<std::size_t>(j)]).transpose();
  const Matrix gates = sigmoid((params.w_item * cand).array().colwise() * wu_u.array()).matrix();

  std::vector<Magnitude> magnitudes;
  magnitudes.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const ItemId item = candidates.items[j];
    const Vector n = cand.col(static_cast<Eigen::Index>(j));
    const Vector gate = gates.col(static_cast<Eigen::Index>(j));
    auto& f = s.factors.emplace_back(disentangle(n, gate));
    auto& pf = s.positives.emplace_back(positive_factors(p, gate));

    AugmentedNegative a;
    a.base_item = item;
    a.direction = augment_direction(pf.dprime, f.easy);
    auto& mag = magnitudes.emplace_back(augment_magnitude(f.hard, pf.prime, params.w_mag,
                                                          config.magnitude, rng));
    a.delta = mag.delta;
    a.margin = mag.margin;
    a.aug_vec = augment(f, a.delta, a.direction);
    a.score_before = score(u, n);
    a.score_after = score(u, a.aug_vec);
    a.gain = a.score_after - a.score_before;
    s.augmented.push_back(std::move(a));
  }

  const std::size_t pick = select_final(s.augmented, config.epsilon);
  auto& out = s.output;
  out.provenance = SamplerKind::ans;
  out.user = candidates.user;
  out.positive = candidates.positive;
  out.final_item = s.augmented[pick].base_item;
  out.final_vec = s.augmented[pick].aug_vec;
  out.aux_contrastive = contrastive_loss(u, s.factors);
  out.aux_disentangle = disentanglement_loss(s.positives, s.factors);
  out.candidates = candidates.items;
  out.augmentation = AugmentationTrace{pick,
                                       s.augmented[pick].direction,
                                       magnitudes[pick].raw,
                                       magnitudes[pick].rescaled,
                                       magnitudes[pick].denominator.clamped,
                                       magnitudes[pick].denominator.value};
  return s;
}

Vector hns_transform(const Vector& n_vec, const Vector& u_vec, const ParamStore& params) {
  if (n_vec.size() != params.dim() || u_vec.size() != params.dim())
    throw std::invalid_argument("hns_transform: length mismatch");
  return disentangle(n_vec, compute_gate(u_vec, n_vec, params)).hard;
}

SamplerOutput hns_select(const CandidateSet& pool, const ParamStore& params, Rng& rng) {
  SamplerOutput out = rns_select(pool, rng);
  out.provenance = SamplerKind::hns;
  const Vector u = params.user_emb.row(pool.user).transpose();
  const Vector n = params.item_emb.row(out.final_item).transpose();
  out.final_vec = hns_transform(n, u, params);
  return out;
}

}  // namespace ansrec
