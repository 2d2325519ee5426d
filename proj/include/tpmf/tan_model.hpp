#pragma once

// Terrain-aided navigation problem instance. States use the world-frame
// order [p_x, p_y, v_x, v_y]; measurements are [altitude, v^B_x, v^B_y].

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace tpmf {

/// Elevation raster. heights(i, j) is the terrain height at
/// (origin_x + i * cell, origin_y + j * cell); NaN marks NODATA.
class TerrainMap {
public:
    TerrainMap(double origin_x, double origin_y, double cell, Eigen::MatrixXd heights);

    double origin_x() const noexcept { return origin_x_; }
    double origin_y() const noexcept { return origin_y_; }
    double cell() const noexcept { return cell_; }
    const Eigen::MatrixXd& heights() const noexcept { return heights_; }
    double max_x() const noexcept { return origin_x_ + cell_ * static_cast<double>(heights_.rows() - 1); }
    double max_y() const noexcept { return origin_y_ + cell_ * static_cast<double>(heights_.cols() - 1); }

    /// Bilinear sample; empty outside the raster hull or when a corner with
    /// nonzero weight is NODATA.
    std::optional<double> try_sample(double x, double y) const;

private:
    double origin_x_;
    double origin_y_;
    double cell_;
    Eigen::MatrixXd heights_;
};

/// Bilinear terrain height, throws OutOfMap.
double terrain_sample(const TerrainMap& map, double x, double y);

/// Sum of seeded Gaussian hills plus a low-frequency trend on a square
/// raster of side `extent` metres with origin (0, 0). roughness scales the
/// relief; roughness 0 gives a flat 300 m plateau.
TerrainMap synth_terrain(std::uint64_t seed, double extent, double cell, double roughness);

/// Affine raster z = base + slope_x * x + slope_y * y (bilinear sampling
/// reproduces it exactly).
TerrainMap ramp_terrain(double origin_x, double origin_y, double cell, Eigen::Index nx, Eigen::Index ny,
                        double base, double slope_x, double slope_y);

/// Body-from-world rotation [[cos, -sin], [sin, cos]].
Eigen::Matrix2d dcm(double psi);

/// x_{k+1} = F x_k + u_k + w_k with diagonal process noise.
struct CvModel {
    Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
    Eigen::Vector4d q_diag = Eigen::Vector4d::Ones();
    /// Known inputs per step; missing steps use zero.
    std::vector<Eigen::Vector4d> inputs;

    static CvModel nearly_constant_velocity(double dt, const Eigen::Vector4d& q_diag);

    Eigen::Vector4d input(std::size_t k) const;
    Eigen::Matrix4d q() const { return q_diag.asDiagonal(); }
    /// Throws InvalidArgument unless F is invertible and Q is positive diagonal.
    void validate() const;
};

/// Diagonal measurement noise: altitude, then the two body velocities.
struct MeasModel {
    Eigen::Vector3d r_diag = Eigen::Vector3d(9.0, 0.09, 0.09);

    double sigma_alt() const { return std::sqrt(r_diag(0)); }
    Eigen::Vector2d r_vel() const { return r_diag.tail<2>(); }
    void validate() const;
};

/// z = [terrain(p), C(psi) v]
Eigen::Vector3d measurement_function(const TerrainMap& map, const Eigen::Vector4d& x, double psi);

struct Trajectory {
    /// K x 4 reference states.
    Eigen::MatrixXd states;
    /// K x 3 measurements.
    Eigen::MatrixXd measurements;
    /// Heading per step, known to the filters.
    Eigen::VectorXd psi;
    std::uint64_t seed = 0;

    std::size_t steps() const noexcept { return static_cast<std::size_t>(states.rows()); }
    Eigen::Vector4d state(std::size_t k) const { return states.row(static_cast<Eigen::Index>(k)).transpose(); }
    Eigen::Vector3d measurement(std::size_t k) const {
        return measurements.row(static_cast<Eigen::Index>(k)).transpose();
    }
};

/// Seeded simulation of K steps from x0. Throws MapExit naming the first
/// step whose position leaves the raster.
Trajectory simulate(const CvModel& model, const MeasModel& meas, const TerrainMap& map,
                    const Eigen::Vector4d& x0, std::size_t steps, std::uint64_t seed);

/// Altitude likelihood over position axes: entry (a, b) is the normal
/// density of z_alt - terrain(px[a], py[b]); off-map points give 0.
Eigen::MatrixXd likelihood_position_matrix(const TerrainMap& map, double z_alt, const Eigen::VectorXd& px_axis,
                                           const Eigen::VectorXd& py_axis, double sigma_alt);

/// Odometer likelihood over velocity axes: entry (a, b) is the 2-D normal
/// density of z_vel - C(psi) [vx[a], vy[b]] with covariance diag(r_vel).
Eigen::MatrixXd likelihood_velocity_matrix(const Eigen::Vector2d& z_vel, double psi, const Eigen::VectorXd& vx_axis,
                                           const Eigen::VectorXd& vy_axis, const Eigen::Vector2d& r_vel);

/// ESRI ASCII grid. Header keys are case-insensitive; rows run north to
/// south; xllcorner/yllcorner or xllcenter/yllcenter are accepted.
TerrainMap load_esri_ascii(const std::filesystem::path& path);
void write_esri_ascii(const TerrainMap& map, const std::filesystem::path& path);

/// CSV with header k,px,py,vx,vy,z_alt,z_vbx,z_vby,psi.
void write_trajectory_csv(const Trajectory& trajectory, const std::filesystem::path& path);

}  // namespace tpmf
