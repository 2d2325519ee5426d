#include "tpmf/dense_kernels.hpp"
#include "tpmf/errors.hpp"
#include "tpmf/lgbf.hpp"

#include <cmath>
#include <string>

namespace tpmf {

void LgbfConfig::validate() const {
    for (std::size_t j = 0; j < 4; ++j) {
        if (counts[j] < 3 || counts[j] % 2 == 0) {
            throw InvalidArgument("grid count " + std::to_string(counts[j]) + " on axis " + std::to_string(j) +
                                  " must be odd and at least 3");
        }
    }
    if (!(sigma_mult > 0.0) || !std::isfinite(sigma_mult)) throw InvalidArgument("sigma_mult must be positive");
    Shape shape(counts.begin(), counts.end());
    (void)checked_volume(shape, cap);
}

FilterStateDense init_full_state(const GaussianMoments& initial, const LgbfConfig& cfg, std::size_t step) {
    cfg.validate();
    const GaussianMoments m = permute_moments(initial);
    const AxisGrid grid = design_grid(m, cfg.sigma_mult, permute_counts(cfg.counts));
    const Pmd rank_one = gaussian_pmd_init(m, grid);
    return {Pmd(grid, to_dense(rank_one.cpd(), cfg.cap)), step};
}

DenseTensor likelihood_dense(const AxisGrid& grid, const Eigen::Vector3d& z, double psi, const TerrainMap& map,
                             const MeasModel& meas, std::size_t cap) {
    if (grid.dims() != 4) throw ShapeError("the navigation filter needs a four-dimensional grid");
    const Shape shape = grid.counts();
    Eigen::MatrixXd lpos = likelihood_position_matrix(map, z(0), grid.axis(0), grid.axis(2), meas.sigma_alt());
    Eigen::MatrixXd lvel = likelihood_velocity_matrix(z.tail<2>(), psi, grid.axis(1), grid.axis(3), meas.r_vel());
    const double ppos = lpos.maxCoeff();
    const double pvel = lvel.maxCoeff();
    if (!(ppos > 0.0) || !std::isfinite(ppos)) throw DivergenceError("altitude likelihood vanishes on the whole grid");
    if (!(pvel > 0.0) || !std::isfinite(pvel)) throw DivergenceError("velocity likelihood vanishes on the whole grid");
    lpos /= ppos;
    lvel /= pvel;
    return multiply_dense(broadcast_matrix(lpos, 0, 2, shape, cap), broadcast_matrix(lvel, 1, 3, shape, cap));
}

FilterStateDense measurement_update_full(const FilterStateDense& prior, const Eigen::Vector3d& z, double psi,
                                         const TerrainMap& map, const MeasModel& meas, const LgbfConfig& cfg) {
    if (prior.pmd.is_cpd()) throw InvalidArgument("full-tensor filter state holds CP weights");
    const DenseTensor lik = likelihood_dense(prior.pmd.grid(), z, psi, map, meas, cfg.cap);
    return {normalize(Pmd(prior.pmd.grid(), multiply_dense(prior.pmd.dense(), lik))), prior.step};
}

FilterStateDense advect_full(const FilterStateDense& posterior, const CvModel& model, const LgbfConfig& cfg) {
    const GaussianMoments m = moments_from_pmd(posterior.pmd);
    const AxisGrid target =
        predictive_grid(m, model, posterior.step, cfg.sigma_mult, posterior.pmd.grid().counts());
    return advect_full_to_grid(posterior, model, target);
}

FilterStateDense advect_full_to_grid(const FilterStateDense& posterior, const CvModel& model, const AxisGrid& target) {
    if (posterior.pmd.is_cpd()) throw InvalidArgument("full-tensor filter state holds CP weights");
    const Eigen::Matrix4d f_inv = block_inverse_internal(model);
    const Eigen::Vector4d u = permute_state(model.input(posterior.step));
    DenseTensor w = advect_dense(posterior.pmd.dense(), posterior.pmd.grid(), f_inv, u, target);
    return {normalize(Pmd(target, std::move(w))), posterior.step + 1};
}

FilterStateDense diffuse_full(const FilterStateDense& state, const CvModel& model) {
    if (state.pmd.is_cpd()) throw InvalidArgument("full-tensor filter state holds CP weights");
    const Eigen::Vector4d q = permute_state(model.q_diag);
    DenseTensor w = diffuse_dense(state.pmd.dense(), state.pmd.grid(), q);
    return {normalize(Pmd(state.pmd.grid(), std::move(w))), state.step};
}

DenseStepResult lgbf_full_step(const FilterStateDense& prior, const Eigen::Vector3d& z, double psi,
                               const TerrainMap& map, const CvModel& model, const MeasModel& meas,
                               const LgbfConfig& cfg) {
    const FilterStateDense post = measurement_update_full(prior, z, psi, map, meas, cfg);
    const Eigen::Vector4d estimate = public_mean(post.pmd);
    const FilterStateDense next = diffuse_full(advect_full(post, model, cfg), model);
    const double err = std::max(std::abs(post.pmd.mass() - 1.0), std::abs(next.pmd.mass() - 1.0));
    return {next, estimate, err};
}

}  // namespace tpmf
