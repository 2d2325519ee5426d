#pragma once

// Axes-aligned equidistant grids and point-mass densities over them.

#include "tpmf/cpd.hpp"

#include <optional>
#include <variant>

namespace tpmf {

/// Cartesian product of D equidistant one-dimensional axes. Every axis has
/// an odd point count so that its middle point is the grid centre.
class AxisGrid {
public:
    explicit AxisGrid(std::vector<Eigen::VectorXd> axes);

    /// Axis j = centre_j + (i - (N_j - 1) / 2) * delta_j, i = 0..N_j-1.
    static AxisGrid centered(const Eigen::VectorXd& centre, const Eigen::VectorXd& delta, const Shape& counts);

    std::size_t dims() const noexcept { return axes_.size(); }
    const Eigen::VectorXd& axis(std::size_t j) const { return axes_[j]; }
    const std::vector<Eigen::VectorXd>& axes() const noexcept { return axes_; }
    double delta(std::size_t j) const { return deltas_[j]; }
    std::size_t count(std::size_t j) const { return static_cast<std::size_t>(axes_[j].size()); }
    Shape counts() const;
    /// delta = prod_j Delta_j
    double cell_volume() const noexcept { return volume_; }

    /// Same grid with axes listed in `order` (new axis k = old axis order[k]).
    AxisGrid permuted(std::span<const std::size_t> order) const;

private:
    std::vector<Eigen::VectorXd> axes_;
    std::vector<double> deltas_;
    double volume_ = 1.0;
};

using PmdWeights = std::variant<CpdTensor, DenseTensor>;

/// Piecewise-constant density: weights P(i) on the grid points, each held
/// constant over a cell of volume delta around its point.
class Pmd {
public:
    Pmd(AxisGrid grid, PmdWeights weights);

    const AxisGrid& grid() const noexcept { return grid_; }
    const PmdWeights& weights() const noexcept { return weights_; }
    double volume() const noexcept { return grid_.cell_volume(); }

    bool is_cpd() const noexcept { return std::holds_alternative<CpdTensor>(weights_); }
    const CpdTensor& cpd() const { return std::get<CpdTensor>(weights_); }
    const DenseTensor& dense() const { return std::get<DenseTensor>(weights_); }

    /// delta * sum of weights
    double mass() const;

private:
    AxisGrid grid_;
    PmdWeights weights_;
};

struct GaussianMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    /// Throws InvalidArgument unless cov is square, matches mean, is
    /// symmetric and has no eigenvalue below -1e-9 (relative).
    void validate() const;
};

/// Axis j spans mean_j +- sigma_mult * sqrt(cov_jj) with counts[j] points;
/// the middle point equals mean_j exactly.
AxisGrid design_grid(const GaussianMoments& moments, double sigma_mult, const Shape& counts);

/// Rescales the weights so that delta * sum = 1.
Pmd normalize(const Pmd& p);

/// Rank-one density from a Gaussian with diagonal covariance.
Pmd gaussian_pmd_init(const GaussianMoments& moments, const AxisGrid& grid);

/// Mean and covariance of a normalised PMD, weighted sums over the grid
/// points. CP weights are handled in factored form.
GaussianMoments moments_from_pmd(const Pmd& p);

/// Bracketing interval of x on an increasing axis: value = v[lower] * (1 - t)
/// + v[lower + 1] * t. Empty when x lies outside the axis span.
struct AxisLocation {
    Index lower;
    double t;
};
std::optional<AxisLocation> locate_on_axis(const Eigen::VectorXd& axis, double x);

/// Piecewise-linear interpolation; queries outside [src.front(), src.back()]
/// return 0.
Eigen::VectorXd interp_axis(const Eigen::VectorXd& src_points, const Eigen::VectorXd& src_values,
                            const Eigen::VectorXd& dst_points);

/// W(i) = N((i - c) * delta; 0, variance), c the middle index.
Eigen::VectorXd gaussian_kernel_axis(std::size_t count, double delta, double variance);

/// "Same"-size direct convolution with a centred kernel, zero padding,
/// scaled by delta.
Eigen::VectorXd convolve_axis(const Eigen::VectorXd& values, const Eigen::VectorXd& kernel, double delta);

/// 1-D normal density.
double normal_pdf(double x, double mean, double variance);

}  // namespace tpmf
