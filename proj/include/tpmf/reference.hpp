#pragma once

// Serial reference implementations of the parallel kernels. They favour
// the most literal formulation over speed and are kept for tests and for
// the benchmark comparison.

#include "tpmf/cpd.hpp"
#include "tpmf/grid.hpp"

namespace tpmf::reference {

CpdTensor hadamard(const CpdTensor& a, const CpdTensor& b);

/// Per target point: solve F x = xi - u with a fresh LU factorisation,
/// then sum the 2^D surrounding source weights.
DenseTensor advect_dense(const DenseTensor& weights, const AxisGrid& source, const Eigen::MatrixXd& f,
                         const Eigen::VectorXd& input, const AxisGrid& target);

/// Separable diffusion, one mode after the other, explicit index walk.
DenseTensor diffuse_dense(const DenseTensor& weights, const AxisGrid& grid, const Eigen::VectorXd& q_diag);

/// Entry-wise product of the dense renderings.
DenseTensor hadamard_dense(const DenseTensor& a, const DenseTensor& b);

}  // namespace tpmf::reference
