#include "tpmf/tan_model.hpp"

#include "tpmf/errors.hpp"
#include "tpmf/grid.hpp"

#include <fstream>
#include <iomanip>
#include <random>
#include <string>

namespace tpmf {

Eigen::Matrix2d dcm(double psi) {
    const double c = std::cos(psi);
    const double s = std::sin(psi);
    Eigen::Matrix2d m;
    m << c, -s, s, c;
    return m;
}

CvModel CvModel::nearly_constant_velocity(double dt, const Eigen::Vector4d& q_diag) {
    CvModel m;
    m.f.setIdentity();
    m.f(0, 2) = dt;
    m.f(1, 3) = dt;
    m.q_diag = q_diag;
    return m;
}

Eigen::Vector4d CvModel::input(std::size_t k) const {
    return k < inputs.size() ? inputs[k] : Eigen::Vector4d::Zero();
}

void CvModel::validate() const {
    if (!f.allFinite()) throw InvalidArgument("dynamics matrix is not finite");
    if (std::abs(f.determinant()) < 1e-12) throw InvalidArgument("dynamics matrix must be invertible");
    if (!(q_diag.array() > 0.0).all() || !q_diag.allFinite()) {
        throw InvalidArgument("process noise variances must be positive");
    }
}

void MeasModel::validate() const {
    if (!(r_diag.array() > 0.0).all() || !r_diag.allFinite()) {
        throw InvalidArgument("measurement noise variances must be positive");
    }
}

Eigen::Vector3d measurement_function(const TerrainMap& map, const Eigen::Vector4d& x, double psi) {
    Eigen::Vector3d z;
    z(0) = terrain_sample(map, x(0), x(1));
    z.tail<2>() = dcm(psi) * x.tail<2>();
    return z;
}

Trajectory simulate(const CvModel& model, const MeasModel& meas, const TerrainMap& map,
                    const Eigen::Vector4d& x0, std::size_t steps, std::uint64_t seed) {
    if (!(model.q_diag.array() >= 0.0).all()) throw InvalidArgument("process noise variances must be nonnegative");
    if (!(meas.r_diag.array() >= 0.0).all()) throw InvalidArgument("measurement noise variances must be nonnegative");
    const auto k_steps = static_cast<Eigen::Index>(steps);
    Trajectory t;
    t.seed = seed;
    t.states.resize(k_steps, 4);
    t.measurements.resize(k_steps, 3);
    t.psi.resize(k_steps);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Eigen::Vector4d q_std = model.q_diag.cwiseSqrt();
    const Eigen::Vector3d r_std = meas.r_diag.cwiseSqrt();

    Eigen::Vector4d x = x0;
    for (Eigen::Index k = 0; k < k_steps; ++k) {
        const auto height = map.try_sample(x(0), x(1));
        if (!height) {
            throw MapExit(static_cast<std::size_t>(k),
                          "trajectory leaves the terrain map at step " + std::to_string(k));
        }
        const double psi = std::atan2(x(3), x(2));
        Eigen::Vector3d v;
        for (int i = 0; i < 3; ++i) v(i) = r_std(i) * gauss(rng);
        Eigen::Vector3d z;
        z(0) = *height + v(0);
        z.tail<2>() = dcm(psi) * x.tail<2>() + v.tail<2>();

        t.states.row(k) = x.transpose();
        t.measurements.row(k) = z.transpose();
        t.psi(k) = psi;

        Eigen::Vector4d w;
        for (int i = 0; i < 4; ++i) w(i) = q_std(i) * gauss(rng);
        x = model.f * x + model.input(static_cast<std::size_t>(k)) + w;
    }
    return t;
}

Eigen::MatrixXd likelihood_position_matrix(const TerrainMap& map, double z_alt, const Eigen::VectorXd& px_axis,
                                           const Eigen::VectorXd& py_axis, double sigma_alt) {
    if (!(sigma_alt > 0.0)) throw InvalidArgument("altimeter standard deviation must be positive");
    const double var = sigma_alt * sigma_alt;
    Eigen::MatrixXd l(px_axis.size(), py_axis.size());
#pragma omp parallel for schedule(static)
    for (Eigen::Index b = 0; b < py_axis.size(); ++b) {
        for (Eigen::Index a = 0; a < px_axis.size(); ++a) {
            const auto h = map.try_sample(px_axis(a), py_axis(b));
            l(a, b) = h ? normal_pdf(z_alt, *h, var) : 0.0;
        }
    }
    return l;
}

Eigen::MatrixXd likelihood_velocity_matrix(const Eigen::Vector2d& z_vel, double psi, const Eigen::VectorXd& vx_axis,
                                           const Eigen::VectorXd& vy_axis, const Eigen::Vector2d& r_vel) {
    if (!(r_vel.array() > 0.0).all()) throw InvalidArgument("velocity noise variances must be positive");
    const Eigen::Matrix2d c = dcm(psi);
    Eigen::MatrixXd l(vx_axis.size(), vy_axis.size());
    for (Eigen::Index b = 0; b < vy_axis.size(); ++b) {
        for (Eigen::Index a = 0; a < vx_axis.size(); ++a) {
            const Eigen::Vector2d pred = c * Eigen::Vector2d(vx_axis(a), vy_axis(b));
            l(a, b) = normal_pdf(z_vel(0), pred(0), r_vel(0)) * normal_pdf(z_vel(1), pred(1), r_vel(1));
        }
    }
    return l;
}

void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trajectory CSV " + path.string());
    out << "k,px,py,vx,vy,z_alt,z_vbx,z_vby,psi\n" << std::setprecision(17);
    for (std::size_t k = 0; k < trajectory.steps(); ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        out << k;
        for (int i = 0; i < 4; ++i) out << ',' << trajectory.states(kk, i);
        for (int i = 0; i < 3; ++i) out << ',' << trajectory.measurements(kk, i);
        out << ',' << trajectory.psi(kk) << '\n';
    }
    if (!out) throw IoError("failed writing trajectory CSV " + path.string());
}

}  // namespace tpmf
