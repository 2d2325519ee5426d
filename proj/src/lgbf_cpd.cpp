#include "tpmf/als.hpp"
#include "tpmf/errors.hpp"
#include "tpmf/lgbf.hpp"
#include "tpmf/seed.hpp"
#include "tpmf/svd.hpp"

#include <cmath>
#include <string>

namespace tpmf {

namespace {

constexpr std::array<std::size_t, 2> kPositionModes{0, 2};
constexpr std::array<std::size_t, 2> kVelocityModes{1, 3};

enum class Phase : std::uint64_t { update = 1, advection = 2 };

void check_counts(const std::array<std::size_t, 4>& counts) {
    for (std::size_t j = 0; j < 4; ++j) {
        if (counts[j] < 3 || counts[j] % 2 == 0) {
            throw InvalidArgument("grid count " + std::to_string(counts[j]) + " on axis " + std::to_string(j) +
                                  " must be odd and at least 3");
        }
    }
}

Eigen::MatrixXd scaled_to_unit_max(Eigen::MatrixXd m, const char* what) {
    const double peak = m.maxCoeff();
    if (!(peak > 0.0) || !std::isfinite(peak)) {
        throw DivergenceError(std::string(what) + " likelihood vanishes on the whole grid");
    }
    m /= peak;
    return m;
}

CpdUpdate round_and_normalize(const CpdTensor& t, const AxisGrid& grid, const CpdFilterConfig& cfg,
                              std::size_t step, Phase phase) {
    CpdUpdate out{FilterStateCpd{Pmd(grid, t), step}, t.rank(), 1.0};
    if (t.rank() > cfg.max_rank) {
        AlsOptions opts;
        opts.max_iters = cfg.als_iters;
        opts.tol = cfg.als_tol;
        opts.seed = derive_seed(cfg.seed, {step, static_cast<std::uint64_t>(phase)});
        AlsResult r = rank_reduce_als(t, cfg.max_rank, opts);
        out.fit = r.fit;
        out.state.pmd = Pmd(grid, std::move(r.tensor));
    }
    out.state.pmd = normalize(out.state.pmd);
    return out;
}

double mass_error(const Pmd& p) { return std::abs(p.mass() - 1.0); }

}  // namespace

void CpdFilterConfig::validate() const {
    check_counts(counts);
    if (!(sigma_mult > 0.0) || !std::isfinite(sigma_mult)) throw InvalidArgument("sigma_mult must be positive");
    if (max_rank < 1) throw InvalidArgument("max_rank must be at least 1");
    if (als_iters < 1) throw InvalidArgument("als_iters must be at least 1");
    if (!(als_tol >= 0.0)) throw InvalidArgument("als_tol must be nonnegative");
    if (!(svd_energy > 0.0 && svd_energy <= 1.0)) throw InvalidArgument("svd_energy must lie in (0, 1]");
}

BackProjectionMap back_projection(const Eigen::VectorXd& t1, const Eigen::VectorXd& t2, const Eigen::Matrix2d& b_inv,
                                  const Eigen::Vector2d& u) {
    if (b_inv(1, 0) != 0.0) throw InvalidArgument("inverse dynamics block must be upper triangular");
    BackProjectionMap map;
    map.n1 = static_cast<std::size_t>(t1.size());
    map.n2 = static_cast<std::size_t>(t2.size());
    map.pi1.resize(t1.size() * t2.size());
    map.pi2.resize(t2.size());
    for (Index i2 = 0; i2 < t2.size(); ++i2) map.pi2(i2) = b_inv(1, 1) * (t2(i2) - u(1));
    for (Index i1 = 0; i1 < t1.size(); ++i1) {
        const double s1 = t1(i1) - u(0);
        for (Index i2 = 0; i2 < t2.size(); ++i2) {
            const double s2 = t2(i2) - u(1);
            // Same accumulation order as the full-tensor advection kernel.
            double x = 0.0;
            x += b_inv(0, 0) * s1;
            x += b_inv(0, 1) * s2;
            map.pi1(i1 * t2.size() + i2) = x;
        }
    }
    return map;
}

FilterStateCpd init_cpd_state(const GaussianMoments& initial, const CpdFilterConfig& cfg, std::size_t step) {
    cfg.validate();
    const GaussianMoments m = permute_moments(initial);
    const AxisGrid grid = design_grid(m, cfg.sigma_mult, permute_counts(cfg.counts));
    return {gaussian_pmd_init(m, grid), step};
}

std::pair<CpdTensor, CpdTensor> likelihood_cpd(const AxisGrid& grid, const Eigen::Vector3d& z, double psi,
                                               const TerrainMap& map, const MeasModel& meas, double svd_energy) {
    if (grid.dims() != 4) throw ShapeError("the navigation filter needs a four-dimensional grid");
    const Shape shape = grid.counts();
    const Eigen::MatrixXd lpos = scaled_to_unit_max(
        likelihood_position_matrix(map, z(0), grid.axis(0), grid.axis(2), meas.sigma_alt()), "altitude");
    const Eigen::MatrixXd lvel = scaled_to_unit_max(
        likelihood_velocity_matrix(z.tail<2>(), psi, grid.axis(1), grid.axis(3), meas.r_vel()), "velocity");
    CpdTensor pos = embed_invariant_modes(cpd_from_svd(svd_truncated(lpos, svd_energy)), kPositionModes, shape);
    CpdTensor vel = embed_invariant_modes(cpd_from_svd(svd_truncated(lvel, svd_energy)), kVelocityModes, shape);
    return {std::move(pos), std::move(vel)};
}

CpdUpdate measurement_update_cpd(const FilterStateCpd& prior, const Eigen::Vector3d& z, double psi,
                                 const TerrainMap& map, const MeasModel& meas, const CpdFilterConfig& cfg) {
    if (!prior.pmd.is_cpd()) throw InvalidArgument("CP filter state holds dense weights");
    const auto [pos, vel] = likelihood_cpd(prior.pmd.grid(), z, psi, map, meas, cfg.svd_energy);
    const CpdTensor product = hadamard(hadamard(prior.pmd.cpd(), pos), vel);
    return round_and_normalize(product, prior.pmd.grid(), cfg, prior.step, Phase::update);
}

CpdUpdate advect_cpd(const FilterStateCpd& posterior, const CvModel& model, const CpdFilterConfig& cfg) {
    const GaussianMoments m = moments_from_pmd(posterior.pmd);
    const AxisGrid target =
        predictive_grid(m, model, posterior.step, cfg.sigma_mult, posterior.pmd.grid().counts());
    return advect_cpd_to_grid(posterior, model, target, cfg);
}

CpdUpdate advect_cpd_to_grid(const FilterStateCpd& posterior, const CvModel& model, const AxisGrid& target,
                             const CpdFilterConfig& cfg) {
    if (!posterior.pmd.is_cpd()) throw InvalidArgument("CP filter state holds dense weights");
    const AxisGrid& source = posterior.pmd.grid();
    if (source.dims() != 4 || target.dims() != 4) throw ShapeError("advection needs four-dimensional grids");
    const CpdTensor& t = posterior.pmd.cpd();
    const Eigen::Matrix4d f_inv = block_inverse_internal(model);
    const Eigen::Vector4d u = permute_state(model.input(posterior.step));

    std::array<BackProjectionMap, 2> maps;
    for (std::size_t b = 0; b < 2; ++b) {
        const auto o = static_cast<Index>(2 * b);
        maps[b] = back_projection(target.axis(2 * b), target.axis(2 * b + 1), f_inv.block<2, 2>(o, o),
                                  u.segment<2>(o));
    }

    const Index rank = t.rank();
    // blocks[r][b]: truncated SVD of the interpolated matrix of block b.
    std::vector<std::array<SvdFactors, 2>> blocks(static_cast<std::size_t>(rank));
    const auto rank_count = static_cast<std::ptrdiff_t>(rank);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t rr = 0; rr < rank_count; ++rr) {
        const auto r = static_cast<Index>(rr);
        for (std::size_t b = 0; b < 2; ++b) {
            const BackProjectionMap& bp = maps[b];
            const Eigen::VectorXd p1 = interp_axis(source.axis(2 * b), t.factor(2 * b).col(r), bp.pi1);
            const Eigen::VectorXd p2 = interp_axis(source.axis(2 * b + 1), t.factor(2 * b + 1).col(r), bp.pi2);
            Eigen::MatrixXd tilde(static_cast<Index>(bp.n1), static_cast<Index>(bp.n2));
            for (std::size_t i = 0; i < bp.n1 * bp.n2; ++i) {
                const auto [i1, i2] = bp.mu(i);
                tilde(static_cast<Index>(i1), static_cast<Index>(i2)) =
                    p1(static_cast<Index>(i)) * p2(static_cast<Index>(i2));
            }
            blocks[static_cast<std::size_t>(r)][b] = svd_truncated(tilde, cfg.svd_energy);
        }
    }

    Index total = 0;
    for (const auto& blk : blocks) total += blk[0].rank() * blk[1].rank();
    Eigen::VectorXd lambdas(total);
    std::vector<Eigen::MatrixXd> factors;
    for (std::size_t j = 0; j < 4; ++j) factors.emplace_back(static_cast<Index>(target.count(j)), total);
    Index c = 0;
    for (Index r = 0; r < rank; ++r) {
        const SvdFactors& x = blocks[static_cast<std::size_t>(r)][0];
        const SvdFactors& y = blocks[static_cast<std::size_t>(r)][1];
        for (Index rx = 0; rx < x.rank(); ++rx) {
            for (Index ry = 0; ry < y.rank(); ++ry, ++c) {
                lambdas(c) = t.lambdas()(r) * x.singular(rx) * y.singular(ry);
                factors[0].col(c) = x.left.col(rx);
                factors[1].col(c) = x.right.col(rx);
                factors[2].col(c) = y.left.col(ry);
                factors[3].col(c) = y.right.col(ry);
            }
        }
    }
    const CpdTensor advected(std::move(lambdas), std::move(factors));
    return round_and_normalize(advected, target, cfg, posterior.step + 1, Phase::advection);
}

FilterStateCpd diffuse_cpd(const FilterStateCpd& state, const CvModel& model) {
    if (!state.pmd.is_cpd()) throw InvalidArgument("CP filter state holds dense weights");
    const AxisGrid& g = state.pmd.grid();
    const CpdTensor& t = state.pmd.cpd();
    const Eigen::Vector4d q = permute_state(model.q_diag);
    std::vector<Eigen::MatrixXd> factors;
    for (std::size_t j = 0; j < t.order(); ++j) {
        const Eigen::VectorXd kernel = gaussian_kernel_axis(g.count(j), g.delta(j), q(static_cast<Index>(j)));
        Eigen::MatrixXd f(t.factor(j).rows(), t.rank());
        for (Index r = 0; r < t.rank(); ++r) f.col(r) = convolve_axis(t.factor(j).col(r), kernel, g.delta(j));
        factors.push_back(std::move(f));
    }
    return {normalize(Pmd(g, CpdTensor(t.lambdas(), std::move(factors)))), state.step};
}

Eigen::Vector4d public_mean(const Pmd& p) {
    const GaussianMoments m = moments_from_pmd(p);
    return permute_state(m.mean);
}

CpdStepResult lgbf_cpd_step(const FilterStateCpd& prior, const Eigen::Vector3d& z, double psi, const TerrainMap& map,
                            const CvModel& model, const MeasModel& meas, const CpdFilterConfig& cfg) {
    CpdStepResult out{prior, Eigen::Vector4d::Zero(), {}};
    const CpdUpdate post = measurement_update_cpd(prior, z, psi, map, meas, cfg);
    out.diagnostics.update_rank = post.rank_before_rounding;
    out.diagnostics.update_fit = post.fit;
    out.estimate = public_mean(post.state.pmd);
    const CpdUpdate adv = advect_cpd(post.state, model, cfg);
    out.diagnostics.advection_rank = adv.rank_before_rounding;
    out.diagnostics.advection_fit = adv.fit;
    out.prior = diffuse_cpd(adv.state, model);
    out.diagnostics.mass_error = std::max(mass_error(post.state.pmd), mass_error(out.prior.pmd));
    return out;
}

}  // namespace tpmf
