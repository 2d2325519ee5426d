#include "tpmf/errors.hpp"
#include "tpmf/kalman.hpp"

#include <cmath>
#include <string>

namespace tpmf {

Eigen::Vector4d permute_state(const Eigen::Vector4d& x) {
    Eigen::Vector4d y;
    for (Eigen::Index k = 0; k < 4; ++k) y(k) = x(static_cast<Eigen::Index>(kInternalOrder[static_cast<std::size_t>(k)]));
    return y;
}

Eigen::Matrix4d permute_matrix(const Eigen::Matrix4d& m) {
    Eigen::Matrix4d out;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                m(static_cast<Eigen::Index>(kInternalOrder[i]), static_cast<Eigen::Index>(kInternalOrder[j]));
    return out;
}

GaussianMoments permute_moments(const GaussianMoments& m) {
    if (m.mean.size() != 4 || m.cov.rows() != 4 || m.cov.cols() != 4) {
        throw ShapeError("state moments must be four-dimensional");
    }
    return {permute_state(m.mean), permute_matrix(m.cov)};
}

Shape permute_counts(const std::array<std::size_t, 4>& counts) {
    Shape out(4);
    for (std::size_t k = 0; k < 4; ++k) out[k] = counts[kInternalOrder[k]];
    return out;
}

GaussianMoments kf_predict(const GaussianMoments& moments, const CvModel& model, std::size_t k) {
    if (moments.mean.size() != 4 || moments.cov.rows() != 4 || moments.cov.cols() != 4) {
        throw ShapeError("kf_predict expects four-dimensional moments");
    }
    GaussianMoments out;
    out.mean = model.f * moments.mean + model.input(k);
    out.cov = model.f * moments.cov * model.f.transpose();
    out.cov += model.q();
    return out;
}

AxisGrid predictive_grid(const GaussianMoments& posterior_internal, const CvModel& model, std::size_t k,
                         double sigma_mult, const Shape& counts_internal) {
    const GaussianMoments pred = permute_moments(kf_predict(permute_moments(posterior_internal), model, k));
    Eigen::VectorXd delta(4);
    for (Eigen::Index j = 0; j < 4; ++j) {
        const double var = pred.cov(j, j);
        if (!(var > 0.0) || !std::isfinite(var) || !std::isfinite(pred.mean(j))) {
            throw DivergenceError("predicted variance on axis " + std::to_string(j) + " is not positive");
        }
        const auto n = static_cast<double>(counts_internal[static_cast<std::size_t>(j)]);
        delta(j) = 2.0 * sigma_mult * std::sqrt(var) / (n - 1.0);
    }
    return AxisGrid::centered(pred.mean, delta, counts_internal);
}

Eigen::Matrix4d block_inverse_internal(const CvModel& model) {
    const Eigen::Matrix4d f = permute_matrix(model.f);
    for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 4; ++j)
            if (i / 2 != j / 2 && f(i, j) != 0.0) {
                throw InvalidArgument("dynamics must not couple the x and y directions");
            }
    Eigen::Matrix4d inv = Eigen::Matrix4d::Zero();
    for (Eigen::Index b = 0; b < 4; b += 2) {
        const double a = f(b, b);
        const double c = f(b, b + 1);
        const double lower = f(b + 1, b);
        const double d = f(b + 1, b + 1);
        if (lower != 0.0) throw InvalidArgument("dynamics blocks must be upper triangular");
        if (a == 0.0 || d == 0.0) throw InvalidArgument("dynamics matrix must be invertible");
        inv(b, b) = 1.0 / a;
        inv(b, b + 1) = -c / (a * d);
        inv(b + 1, b + 1) = 1.0 / d;
    }
    return inv;
}

}  // namespace tpmf
