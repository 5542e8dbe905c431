#pragma once

#include <cmath>
#include <iterator>
#include <limits>
#include <span>
#include <type_traits>
#include <stdexcept>
#include <vector>

#include "ansrec/math.hpp"
#include "ansrec/params.hpp"
#include "ansrec/rng.hpp"
#include "ansrec/samplers.hpp"

namespace ansrec {

/// A negative embedding split into the dimensions that look like the user
/// (hard) and the rest (easy). `source` is the embedding that was split.
template <typename Scalar>
struct BasicFactorPair {
  VectorX<Scalar> gate;
  VectorX<Scalar> hard;
  VectorX<Scalar> easy;
  VectorX<Scalar> source;
};

template <typename Scalar>
struct BasicPositiveFactors {
  VectorX<Scalar> prime;   // p * gate
  VectorX<Scalar> dprime;  // p - prime
};

using FactorPair = BasicFactorPair<Real>;
using PositiveFactors = BasicPositiveFactors<Real>;

struct AugmentedNegative {
  ItemId base_item = 0;
  Vector aug_vec;
  Vector direction;
  Vector delta;
  Real margin = 0;
  Real score_before = 0;
  Real score_after = 0;
  Real gain = 0;
};

/// sigmoid(W_item n * W_user u), elementwise.
template <typename U, typename N, typename W>
auto compute_gate(const Eigen::MatrixBase<U>& u_vec, const Eigen::MatrixBase<N>& n_vec,
                  const Eigen::MatrixBase<W>& w_item, const Eigen::MatrixBase<W>& w_user) {
  using Scalar = typename U::Scalar;
  VectorX<Scalar> z = (w_item * n_vec).cwiseProduct(w_user * u_vec);
  return VectorX<Scalar>(sigmoid(z.array()).matrix());
}

template <typename U, typename N>
Vector compute_gate(const Eigen::MatrixBase<U>& u_vec, const Eigen::MatrixBase<N>& n_vec,
                    const ParamStore& params) {
  return compute_gate(u_vec, n_vec, params.w_item, params.w_user);
}

template <typename N, typename G>
auto disentangle(const Eigen::MatrixBase<N>& n_vec, const Eigen::MatrixBase<G>& gate) {
  using Scalar = typename N::Scalar;
  BasicFactorPair<Scalar> f;
  f.gate = gate;
  f.source = n_vec;
  f.hard = n_vec.cwiseProduct(gate);
  f.easy = n_vec - f.hard;
  return f;
}

template <typename P, typename G>
auto positive_factors(const Eigen::MatrixBase<P>& p_vec, const Eigen::MatrixBase<G>& gate) {
  using Scalar = typename P::Scalar;
  BasicPositiveFactors<Scalar> f;
  f.prime = p_vec.cwiseProduct(gate);
  f.dprime = p_vec - f.prime;
  return f;
}

/// Mean over candidates of s(u, easy) - s(u, hard).
template <typename U, typename Factors>
typename U::Scalar contrastive_loss(const Eigen::MatrixBase<U>& u_vec, const Factors& factors) {
  using Scalar = typename U::Scalar;
  if (std::empty(factors)) throw std::invalid_argument("contrastive_loss: empty candidate set");
  Scalar acc(0);
  for (const auto& f : factors) acc += score(u_vec, f.easy) - score(u_vec, f.hard);
  return acc / static_cast<Scalar>(std::size(factors));
}

/// Mean over candidates of ||p' - hard||^2 + s(p'', easy).
template <typename Positives, typename Factors>
auto disentanglement_loss(const Positives& pos, const Factors& factors) {
  using Scalar = typename std::remove_cvref_t<decltype(factors[0].hard)>::Scalar;
  if (std::empty(factors)) throw std::invalid_argument("disentanglement_loss: empty candidate set");
  if (std::size(pos) != std::size(factors))
    throw std::invalid_argument("disentanglement_loss: one positive split per candidate expected");
  Scalar acc(0);
  for (std::size_t j = 0; j < std::size(factors); ++j)
    acc += (pos[j].prime - factors[j].hard).squaredNorm() + score(pos[j].dprime, factors[j].easy);
  return acc / static_cast<Scalar>(std::size(factors));
}

/// sgn(p'' - easy) with sgn(0) = 0.
template <typename P, typename E>
auto augment_direction(const Eigen::MatrixBase<P>& p_dprime, const Eigen::MatrixBase<E>& easy) {
  using Scalar = typename P::Scalar;
  if (p_dprime.size() != easy.size()) throw std::invalid_argument("augment_direction: length mismatch");
  return VectorX<Scalar>((p_dprime - easy).unaryExpr([](Scalar x) { return sign(x); }));
}

struct MagnitudeConfig {
  double noise_high = 0.1;
  double clamp = 1e-8;
};

/// W_mag (hard * p'), pushed away from zero to magnitude `clamp`.
struct MarginDenominator {
  Real value = 0;
  bool clamped = false;
};

template <typename H, typename P>
MarginDenominator margin_denominator(const Eigen::MatrixBase<H>& hard,
                                     const Eigen::MatrixBase<P>& p_prime, const RowVector& w_mag,
                                     double clamp) {
  if (hard.size() != p_prime.size() || hard.size() != w_mag.size())
    throw std::invalid_argument("margin: length mismatch");
  const Real t = score(w_mag.transpose(), hard.cwiseProduct(p_prime));
  if (std::abs(t) >= clamp) return {t, false};
  return {t < 0 ? -clamp : clamp, true};
}

/// sigmoid(1 / t), held strictly inside (0, 1). In double precision the
/// sigmoid rounds to exactly 1 once 1/t passes ~37 (and to 0 below ~-745);
/// such values are pinned to the nearest representable interior point and
/// carry no gradient.
struct MarginValue {
  Real value = 0;
  bool saturated = false;
};

inline MarginValue margin_from_denominator(Real t) {
  constexpr Real lo = std::numeric_limits<Real>::min();
  const Real hi = std::nextafter(Real(1), Real(0));
  const Real m = sigmoid(Real(1) / t);
  if (m >= hi) return {hi, true};
  if (m <= lo) return {lo, true};
  return {m, false};
}

/// Scale factor taking a vector of length `norm` onto the sphere of radius
/// `radius`, shaved where rounding would leave the result outside. The shave
/// grows geometrically because near the subnormal range norm() is only
/// accurate to far more than an ulp.
inline Real ball_scale(const Vector& raw, Real norm, Real radius) {
  Real c = radius / norm;
  Real shave = std::numeric_limits<Real>::epsilon();
  while ((raw * c).norm() > radius) {
    c *= Real(1) - shave;
    shave = std::min(Real(2) * shave, Real(0.5));
  }
  return c;
}

struct Magnitude {
  Vector delta;
  Vector raw;
  Real margin = 0;
  MarginDenominator denominator;
  bool rescaled = false;
};

/// Uniform[0, noise_high] noise, shrunk onto the L2 ball of radius
/// sigmoid(1 / (W_mag (hard * p'))) when it falls outside.
Magnitude augment_magnitude(const Vector& hard, const Vector& p_prime, const RowVector& w_mag,
                            const MagnitudeConfig& config, Rng& rng);

/// (easy + delta * direction) + hard. Since easy + hard is the source
/// embedding this is evaluated as source + delta * direction, which keeps a
/// zero delta bitwise-neutral.
template <typename Scalar, typename D, typename R>
VectorX<Scalar> augment(const BasicFactorPair<Scalar>& factors, const Eigen::MatrixBase<D>& delta,
                        const Eigen::MatrixBase<R>& direction) {
  return factors.source + delta.cwiseProduct(direction);
}

/// argmax of score_after + epsilon * gain; ties go to the lowest base item.
std::size_t select_final(std::span<const AugmentedNegative> augmented, double epsilon);

struct AnsConfig {
  double epsilon = 0.5;
  MagnitudeConfig magnitude;
};

struct AnsSample {
  SamplerOutput output;
  std::vector<FactorPair> factors;
  std::vector<PositiveFactors> positives;
  std::vector<AugmentedNegative> augmented;
};

/// Gate, split, augment and select over every candidate of one pair.
AnsSample ans_sample(const CandidateSet& candidates, const ParamStore& params,
                     const AnsConfig& config, Rng& rng);

/// Hard factor of `n_vec` for the user `u_vec`.
Vector hns_transform(const Vector& n_vec, const Vector& u_vec, const ParamStore& params);

/// Uniform draw from `pool`, then only its hard factor is kept as the negative.
SamplerOutput hns_select(const CandidateSet& pool, const ParamStore& params, Rng& rng);

}  // namespace ansrec
