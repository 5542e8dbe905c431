#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <stdexcept>

#include "ansrec/types.hpp"

namespace ansrec {

/// Inner-product score. Accumulates left to right so that a score is
/// bitwise-reproducible whatever the storage or alignment of its operands.
template <typename A, typename B>
typename A::Scalar score(const Eigen::MatrixBase<A>& u, const Eigen::MatrixBase<B>& i) {
  if (u.size() != i.size()) throw std::invalid_argument("score: length mismatch");
  typename A::Scalar acc(0);
  for (Eigen::Index k = 0; k < u.size(); ++k) acc += u(k) * i(k);
  return acc;
}

template <std::floating_point Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// log(1 + exp(x)) without overflow.
template <std::floating_point Scalar>
Scalar softplus(Scalar x) {
  return std::max(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
}

/// -ln sigmoid(s_pos - s_neg).
template <std::floating_point Scalar>
Scalar bpr_loss(Scalar s_pos, Scalar s_neg) {
  return softplus(s_neg - s_pos);
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  return x.unaryExpr([](typename Derived::Scalar v) { return sigmoid(v); });
}

template <std::floating_point Scalar>
Scalar sign(Scalar x) {
  return Scalar((Scalar(0) < x) - (x < Scalar(0)));
}

}  // namespace ansrec
