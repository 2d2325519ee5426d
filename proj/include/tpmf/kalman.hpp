#pragma once

#include "tpmf/grid.hpp"
#include "tpmf/tan_model.hpp"

#include <array>

namespace tpmf {

/// The grid filters keep their tensors in the order [p_x, v_x, p_y, v_y] so
/// that the dynamics are block diagonal. The permutation is an involution:
/// internal axis k is public axis kInternalOrder[k] and vice versa.
inline constexpr std::array<std::size_t, 4> kInternalOrder{0, 2, 1, 3};

Eigen::Vector4d permute_state(const Eigen::Vector4d& x);
Eigen::Matrix4d permute_matrix(const Eigen::Matrix4d& m);
GaussianMoments permute_moments(const GaussianMoments& m);
Shape permute_counts(const std::array<std::size_t, 4>& counts);

/// mean <- F mean + u_k, cov <- F cov F^T + Q
GaussianMoments kf_predict(const GaussianMoments& moments, const CvModel& model, std::size_t k = 0);

/// Axes-aligned grid for step k + 1 from posterior moments given in the
/// internal order; the span follows the predicted variances. Throws
/// DivergenceError when a predicted variance is not positive.
AxisGrid predictive_grid(const GaussianMoments& posterior_internal, const CvModel& model, std::size_t k,
                         double sigma_mult, const Shape& counts_internal);

/// Inverse of F in the internal order, assembled from its two 2x2 diagonal
/// blocks. Throws InvalidArgument unless F couples only (p_x, v_x) and
/// (p_y, v_y) and each block is upper triangular.
Eigen::Matrix4d block_inverse_internal(const CvModel& model);

}  // namespace tpmf
