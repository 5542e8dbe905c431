#pragma once

#include <cstdint>
#include <Eigen/Dense>

namespace ansrec {

using UserId = std::int32_t;
using ItemId = std::int32_t;
using Timestamp = std::int64_t;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Row-major so that one embedding row is a contiguous d-vector.
template <typename Scalar>
using EmbeddingTable = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Real = double;
using Vector = VectorX<Real>;
using RowVector = RowVectorX<Real>;
using Matrix = MatrixX<Real>;

}  // namespace ansrec
