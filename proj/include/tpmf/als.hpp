#pragma once

#include "tpmf/cpd.hpp"

#include <cstdint>
#include <vector>

namespace tpmf {

/// Starting factors: leading left singular vectors of each mode unfolding
/// (padded with random columns when a mode is shorter than the rank), or
/// uniform random numbers on [0, 1).
enum class AlsInit { svd, random };

struct AlsOptions {
    int max_iters = 50;
    /// Stop once the fit changes by less than this between sweeps.
    double tol = 1e-6;
    std::uint64_t seed = 0;
    AlsInit init = AlsInit::svd;
    /// Extrapolate along the last sweep's update and keep the result when
    /// it improves the fit.
    bool line_search = true;
};

struct AlsResult {
    CpdTensor tensor;
    /// 1 - ||X - Y|| / ||X|| of the returned iterate.
    double fit = 1.0;
    int sweeps = 0;
    bool converged = false;
    std::vector<double> fit_history;
};

/// CP-ALS rank rounding of a tensor that is itself in CP form. Normal
/// equations and fit are evaluated from factor Gram matrices; the input is
/// never densified. Random numbers (padding or random starts) come from
/// `seed`. Inputs whose rank already fits are returned unchanged with fit 1.
AlsResult rank_reduce_als(const CpdTensor& t, Index target_rank, const AlsOptions& options = {});

/// CP-ALS of a full tensor, same initialisation and stopping rule.
AlsResult decompose_dense(const DenseTensor& m, Index rank, const AlsOptions& options = {});

}  // namespace tpmf
