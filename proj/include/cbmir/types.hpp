#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace cbmir {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Feature vectors are stored at 32-bit precision, one record per row.
using FeatureMatrix = RowMatrix<float>;
using FeatureVector = Vector<float>;

using ItemId = std::uint64_t;
using Label = std::uint32_t;

} // namespace cbmir
