#include "tpmf/errors.hpp"
#include "tpmf/lgbf.hpp"

#include <cmath>

namespace tpmf {

SigmaPoints sigma_points(const GaussianMoments& m, const UkfParams& params) {
    const Index n = m.mean.size();
    if (n == 0 || m.cov.rows() != n || m.cov.cols() != n) throw ShapeError("sigma points need square moments");
    const double nd = static_cast<double>(n);
    const double lambda = params.alpha * params.alpha * (nd + params.kappa) - nd;
    const double spread = nd + lambda;
    if (!(spread > 0.0)) throw InvalidArgument("unscented parameters give a nonpositive spread");
    const Eigen::LLT<Eigen::MatrixXd> llt(spread * m.cov);
    if (llt.info() != Eigen::Success) throw DivergenceError("covariance lost positive definiteness");
    const Eigen::MatrixXd l = llt.matrixL();

    SigmaPoints s;
    s.points.resize(n, 2 * n + 1);
    s.wm.resize(2 * n + 1);
    s.wc.resize(2 * n + 1);
    s.points.col(0) = m.mean;
    s.wm(0) = lambda / spread;
    s.wc(0) = s.wm(0) + (1.0 - params.alpha * params.alpha + params.beta);
    for (Index i = 0; i < n; ++i) {
        s.points.col(1 + i) = m.mean + l.col(i);
        s.points.col(1 + n + i) = m.mean - l.col(i);
        s.wm(1 + i) = s.wm(1 + n + i) = 0.5 / spread;
        s.wc(1 + i) = s.wc(1 + n + i) = 0.5 / spread;
    }
    return s;
}

UkfStepResult ukf_step(const UkfState& prior, const Eigen::Vector3d& z, double psi, const TerrainMap& map,
                       const CvModel& model, const MeasModel& meas, const UkfParams& params) {
    const GaussianMoments& m = prior.moments;
    if (m.mean.size() != 4) throw ShapeError("UKF expects four-dimensional moments");
    const SigmaPoints s = sigma_points(m, params);
    const Index count = s.points.cols();

    Eigen::MatrixXd y(3, count);
    const Eigen::Matrix2d c = dcm(psi);
    for (Index i = 0; i < count; ++i) {
        const auto h = map.try_sample(s.points(0, i), s.points(1, i));
        if (!h) throw DivergenceError("UKF sigma point left the terrain map");
        y(0, i) = *h;
        y.block<2, 1>(1, i) = c * s.points.block<2, 1>(2, i);
    }

    // Deviations from the central point keep the tiny-alpha weights from
    // cancelling catastrophically.
    Eigen::Vector3d y_mean = y.col(0);
    Eigen::Vector4d x_mean = s.points.col(0);
    for (Index i = 1; i < count; ++i) {
        y_mean += s.wm(i) * (y.col(i) - y.col(0));
        x_mean += s.wm(i) * (s.points.col(i) - s.points.col(0));
    }
    Eigen::Matrix3d pyy = meas.r_diag.asDiagonal();
    Eigen::Matrix<double, 4, 3> pxy = Eigen::Matrix<double, 4, 3>::Zero();
    for (Index i = 0; i < count; ++i) {
        const Eigen::Vector3d dy = y.col(i) - y_mean;
        const Eigen::Vector4d dx = s.points.col(i) - x_mean;
        pyy += s.wc(i) * dy * dy.transpose();
        pxy += s.wc(i) * dx * dy.transpose();
    }
    const Eigen::LLT<Eigen::Matrix3d> pyy_llt(pyy);
    if (pyy_llt.info() != Eigen::Success) throw DivergenceError("innovation covariance lost positive definiteness");
    const Eigen::Matrix<double, 4, 3> gain = pyy_llt.solve(pxy.transpose()).transpose();

    UkfStepResult out;
    out.posterior.mean = m.mean + gain * (z - y_mean);
    Eigen::Matrix4d cov = m.cov - gain * pyy * gain.transpose();
    cov = 0.5 * (cov + cov.transpose());
    out.posterior.cov = cov;
    if (!out.posterior.mean.allFinite() || Eigen::LLT<Eigen::Matrix4d>(cov).info() != Eigen::Success) {
        throw DivergenceError("posterior covariance lost positive definiteness");
    }
    out.estimate = out.posterior.mean;
    out.prior.moments = kf_predict(out.posterior, model, prior.step);
    out.prior.step = prior.step + 1;
    return out;
}

}  // namespace tpmf
