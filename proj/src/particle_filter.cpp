#include "tpmf/errors.hpp"
#include "tpmf/lgbf.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace tpmf {

namespace {

Eigen::Matrix4d lower_cholesky(const Eigen::MatrixXd& cov) {
    const Eigen::LLT<Eigen::Matrix4d> llt{Eigen::Matrix4d(cov)};
    if (llt.info() != Eigen::Success) throw InvalidArgument("initial covariance is not positive definite");
    return llt.matrixL();
}

}  // namespace

ParticleSet pf_init(const GaussianMoments& initial, std::size_t count, std::uint64_t seed, std::size_t step) {
    initial.validate();
    if (initial.mean.size() != 4) throw ShapeError("particle filter expects four-dimensional moments");
    if (count == 0) throw InvalidArgument("particle count must be positive");
    const Eigen::Matrix4d l = lower_cholesky(initial.cov);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ParticleSet p;
    p.step = step;
    const auto n = static_cast<Index>(count);
    p.x.resize(4, n);
    for (Index i = 0; i < n; ++i) {
        Eigen::Vector4d e;
        for (Index j = 0; j < 4; ++j) e(j) = gauss(rng);
        p.x.col(i) = initial.mean + l * e;
    }
    p.w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    return p;
}

std::vector<std::size_t> systematic_resample(const Eigen::VectorXd& weights, double u) {
    const Index n = weights.size();
    std::vector<std::size_t> idx(static_cast<std::size_t>(n));
    if (n == 0) return idx;
    const double step = 1.0 / static_cast<double>(n);
    double cumulative = weights(0);
    Index j = 0;
    for (Index i = 0; i < n; ++i) {
        const double target = (static_cast<double>(i) + u) * step;
        while (target > cumulative && j < n - 1) cumulative += weights(++j);
        idx[static_cast<std::size_t>(i)] = static_cast<std::size_t>(j);
    }
    return idx;
}

PfStepResult pf_bootstrap_step(const ParticleSet& particles, const Eigen::Vector3d& z, double psi,
                               const TerrainMap& map, const CvModel& model, const MeasModel& meas,
                               std::uint64_t seed) {
    const Index n = particles.x.cols();
    if (particles.x.rows() != 4 || particles.w.size() != n || n == 0) throw ShapeError("malformed particle set");
    const double var_alt = meas.r_diag(0);
    const Eigen::Vector2d r_vel = meas.r_vel();
    const Eigen::Matrix2d c = dcm(psi);

    // Log-likelihoods first; the maximum is subtracted before
    // exponentiation so that sharp likelihoods do not underflow.
    Eigen::VectorXd logw(n);
    const double neg_inf = -std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) {
        const auto h = map.try_sample(particles.x(0, i), particles.x(1, i));
        if (!h || !(particles.w(i) > 0.0)) {
            logw(i) = neg_inf;
            continue;
        }
        const Eigen::Vector2d dv = z.tail<2>() - c * particles.x.block<2, 1>(2, i);
        const double da = z(0) - *h;
        logw(i) = std::log(particles.w(i)) - 0.5 * (da * da / var_alt + dv(0) * dv(0) / r_vel(0) +
                                                    dv(1) * dv(1) / r_vel(1));
    }
    const double peak = logw.maxCoeff();
    if (!std::isfinite(peak)) throw DivergenceError("all particle weights vanished");
    Eigen::VectorXd w = (logw.array() - peak).exp().matrix();
    const double total = w.sum();
    w /= total;

    PfStepResult out;
    out.estimate = particles.x * w;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const std::vector<std::size_t> idx = systematic_resample(w, uniform(rng));

    std::normal_distribution<double> gauss(0.0, 1.0);
    const Eigen::Vector4d q_std = model.q_diag.cwiseSqrt();
    Eigen::MatrixXd noise(4, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < 4; ++j) noise(j, i) = q_std(j) * gauss(rng);

    const Eigen::Vector4d u = model.input(particles.step);
    out.particles.step = particles.step + 1;
    out.particles.x.resize(4, n);
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) {
        out.particles.x.col(i) =
            model.f * particles.x.col(idx[static_cast<std::size_t>(i)]) + u + noise.col(i);
    }
    out.particles.w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    return out;
}

}  // namespace tpmf
