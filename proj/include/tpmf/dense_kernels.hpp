#pragma once

// Full-tensor kernels of the Lagrangian grid filter for any dimension D.
// These are the OpenMP versions; tpmf::reference holds serial ones.

#include "tpmf/grid.hpp"

namespace tpmf {

/// Element-wise product of two dense tensors of equal shape.
DenseTensor multiply_dense(const DenseTensor& a, const DenseTensor& b);

/// Dense tensor whose entry at (i_0, ..., i_{D-1}) is m(i_a, i_b), constant
/// along every other mode.
DenseTensor broadcast_matrix(const Eigen::MatrixXd& m, std::size_t mode_a, std::size_t mode_b, const Shape& shape,
                             std::size_t cap = kDenseOracleCap);

/// Lagrangian advection: the weight at target point xi is the multilinear
/// interpolation of `weights` (on `source`) at f_inverse * (xi - input),
/// zero when that point leaves the source grid.
DenseTensor advect_dense(const DenseTensor& weights, const AxisGrid& source, const Eigen::MatrixXd& f_inverse,
                         const Eigen::VectorXd& input, const AxisGrid& target);

/// Direct "same" convolution along one mode, scaled by delta.
DenseTensor convolve_dense_axis(const DenseTensor& weights, std::size_t mode, const Eigen::VectorXd& kernel,
                                double delta);

/// Separable diffusion with Gaussian kernels of variances q_diag along each
/// mode of `grid` (no renormalisation).
DenseTensor diffuse_dense(const DenseTensor& weights, const AxisGrid& grid, const Eigen::VectorXd& q_diag);

}  // namespace tpmf
