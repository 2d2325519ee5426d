#pragma once

// Lagrangian grid-based filters for the four-state terrain-aided
// navigation model: the CP-tensor filter and its full-tensor counterpart.
// Both keep their grids and weights in the internal state order
// [p_x, v_x, p_y, v_y] (see kalman.hpp); inputs and estimates use the
// public order [p_x, p_y, v_x, v_y].

#include "tpmf/grid.hpp"
#include "tpmf/kalman.hpp"
#include "tpmf/tan_model.hpp"

#include <array>
#include <cstdint>
#include <utility>

namespace tpmf {

struct CpdFilterConfig {
    /// Grid points per axis in the public order; each odd and >= 3.
    std::array<std::size_t, 4> counts{21, 21, 21, 21};
    double sigma_mult = 4.0;
    /// Rank cap after every rounding.
    Index max_rank = 10;
    int als_iters = 50;
    double als_tol = 1e-6;
    std::uint64_t seed = 0;
    /// Fraction of the singular value sum kept by every SVD truncation.
    double svd_energy = 0.9999;

    void validate() const;
};

struct LgbfConfig {
    std::array<std::size_t, 4> counts{21, 21, 21, 21};
    double sigma_mult = 4.0;
    std::size_t cap = kDenseOracleCap;

    void validate() const;
};

/// Weights on the internal-order grid; `step` is the time index the
/// density refers to.
struct FilterStateCpd {
    Pmd pmd;
    std::size_t step = 0;
};

struct FilterStateDense {
    Pmd pmd;
    std::size_t step = 0;
};

/// Skewed-grid projections of one 2x2 dynamics block. Target axes t1
/// (position, N1 points) and t2 (velocity, N2 points) map back in time to
/// the N1*N2 positions pi1 and the N2 velocities pi2; point i of pi1
/// belongs to the target pair mu(i).
struct BackProjectionMap {
    Eigen::VectorXd pi1;
    Eigen::VectorXd pi2;
    std::size_t n1 = 0;
    std::size_t n2 = 0;

    std::pair<std::size_t, std::size_t> mu(std::size_t i) const { return {i / n2, i % n2}; }
};

/// pi1[i1 * N2 + i2] = B00 (t1[i1] - u1) + B01 (t2[i2] - u2),
/// pi2[i2] = B11 (t2[i2] - u2), with B the inverse block (B10 must be 0).
BackProjectionMap back_projection(const Eigen::VectorXd& t1, const Eigen::VectorXd& t2, const Eigen::Matrix2d& b_inv,
                                  const Eigen::Vector2d& u);

/// Result of a rank-changing CP operation.
struct CpdUpdate {
    FilterStateCpd state;
    /// Structural rank before rank rounding.
    Index rank_before_rounding = 0;
    /// ALS fit of the rounding (1 when no rounding was needed).
    double fit = 1.0;
};

/// Rank-one prior from Gaussian initial moments (public order, diagonal).
FilterStateCpd init_cpd_state(const GaussianMoments& initial, const CpdFilterConfig& cfg, std::size_t step = 0);

/// Position and velocity likelihoods as 4-mode CP tensors on the internal
/// grid, each scaled to a unit maximum and truncated by `svd_energy`.
std::pair<CpdTensor, CpdTensor> likelihood_cpd(const AxisGrid& grid, const Eigen::Vector3d& z, double psi,
                                               const TerrainMap& map, const MeasModel& meas, double svd_energy);

CpdUpdate measurement_update_cpd(const FilterStateCpd& prior, const Eigen::Vector3d& z, double psi,
                                 const TerrainMap& map, const MeasModel& meas, const CpdFilterConfig& cfg);

/// Advection onto the grid designed from the Kalman-predicted moments.
CpdUpdate advect_cpd(const FilterStateCpd& posterior, const CvModel& model, const CpdFilterConfig& cfg);

/// Advection onto a given internal-order target grid.
CpdUpdate advect_cpd_to_grid(const FilterStateCpd& posterior, const CvModel& model, const AxisGrid& target,
                             const CpdFilterConfig& cfg);

FilterStateCpd diffuse_cpd(const FilterStateCpd& state, const CvModel& model);

struct StepDiagnostics {
    Index update_rank = 0;
    double update_fit = 1.0;
    Index advection_rank = 0;
    double advection_fit = 1.0;
    /// max |delta * sum - 1| over the states returned by the step.
    double mass_error = 0.0;
};

struct CpdStepResult {
    FilterStateCpd prior;
    /// Posterior mean at the measurement time, public order.
    Eigen::Vector4d estimate;
    StepDiagnostics diagnostics;
};

/// Measurement update, posterior mean, advection, diffusion.
CpdStepResult lgbf_cpd_step(const FilterStateCpd& prior, const Eigen::Vector3d& z, double psi, const TerrainMap& map,
                            const CvModel& model, const MeasModel& meas, const CpdFilterConfig& cfg);

FilterStateDense init_full_state(const GaussianMoments& initial, const LgbfConfig& cfg, std::size_t step = 0);

/// Dense likelihood tensor on the internal grid (unit maximum).
DenseTensor likelihood_dense(const AxisGrid& grid, const Eigen::Vector3d& z, double psi, const TerrainMap& map,
                             const MeasModel& meas, std::size_t cap = kDenseOracleCap);

FilterStateDense measurement_update_full(const FilterStateDense& prior, const Eigen::Vector3d& z, double psi,
                                         const TerrainMap& map, const MeasModel& meas, const LgbfConfig& cfg);
FilterStateDense advect_full(const FilterStateDense& posterior, const CvModel& model, const LgbfConfig& cfg);
FilterStateDense advect_full_to_grid(const FilterStateDense& posterior, const CvModel& model, const AxisGrid& target);
FilterStateDense diffuse_full(const FilterStateDense& state, const CvModel& model);

struct DenseStepResult {
    FilterStateDense prior;
    Eigen::Vector4d estimate;
    double mass_error = 0.0;
};

DenseStepResult lgbf_full_step(const FilterStateDense& prior, const Eigen::Vector3d& z, double psi,
                               const TerrainMap& map, const CvModel& model, const MeasModel& meas,
                               const LgbfConfig& cfg);

/// Posterior mean in the public order of an internal-order PMD.
Eigen::Vector4d public_mean(const Pmd& p);

// ---------------------------------------------------------------------------
// Baselines

/// Equally weighted after resampling; x is 4 x N in the public order.
struct ParticleSet {
    Eigen::MatrixXd x;
    Eigen::VectorXd w;
    std::size_t step = 0;
};

ParticleSet pf_init(const GaussianMoments& initial, std::size_t count, std::uint64_t seed, std::size_t step = 0);

struct PfStepResult {
    ParticleSet particles;
    Eigen::Vector4d estimate;
};

/// Weight by the measurement likelihood, take the weighted mean, resample
/// systematically, then propagate through the dynamics with sampled
/// process noise. Off-map particles get zero weight; all-zero weights
/// raise DivergenceError.
PfStepResult pf_bootstrap_step(const ParticleSet& particles, const Eigen::Vector3d& z, double psi,
                               const TerrainMap& map, const CvModel& model, const MeasModel& meas,
                               std::uint64_t seed);

/// Systematic resampling indices for normalised weights and offset u in [0, 1).
std::vector<std::size_t> systematic_resample(const Eigen::VectorXd& weights, double u);

struct UkfParams {
    double alpha = 1e-3;
    double beta = 2.0;
    double kappa = 0.0;
};

struct UkfState {
    GaussianMoments moments;
    std::size_t step = 0;
};

struct UkfStepResult {
    UkfState prior;
    Eigen::Vector4d estimate;
    GaussianMoments posterior;
};

/// Sigma points (columns) and mean/covariance weights for n = mean.size().
struct SigmaPoints {
    Eigen::MatrixXd points;
    Eigen::VectorXd wm;
    Eigen::VectorXd wc;
};
SigmaPoints sigma_points(const GaussianMoments& m, const UkfParams& params);

/// Unscented measurement update followed by the exact linear prediction.
/// Throws DivergenceError when a covariance loses positive definiteness or
/// a sigma point leaves the terrain map.
UkfStepResult ukf_step(const UkfState& prior, const Eigen::Vector3d& z, double psi, const TerrainMap& map,
                       const CvModel& model, const MeasModel& meas, const UkfParams& params = {});

}  // namespace tpmf
