#pragma once

#include "tpmf/cpd.hpp"

namespace tpmf {

/// Leading singular triplets of `m`: the smallest R whose singular values
/// carry at least `energy_fraction` of the total singular value sum.
/// A zero matrix yields a single zero triplet.
SvdFactors svd_truncated(const Eigen::MatrixXd& m, double energy_fraction);

/// Rank index R from a nonincreasing singular value vector, as above.
Index truncation_rank(const Eigen::VectorXd& singular, double energy_fraction);

}  // namespace tpmf
