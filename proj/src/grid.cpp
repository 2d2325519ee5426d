#include "tpmf/grid.hpp"

#include "tpmf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace tpmf {

AxisGrid::AxisGrid(std::vector<Eigen::VectorXd> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw InvalidArgument("grid needs at least one axis");
    deltas_.reserve(axes_.size());
    for (std::size_t j = 0; j < axes_.size(); ++j) {
        const Eigen::VectorXd& a = axes_[j];
        const Index n = a.size();
        if (n < 3 || n % 2 == 0) {
            throw InvalidArgument("axis " + std::to_string(j) + " has " + std::to_string(n) +
                                  " points; counts must be odd and at least 3");
        }
        if (!a.allFinite()) throw InvalidArgument("axis " + std::to_string(j) + " has non-finite points");
        const double delta = (a(n - 1) - a(0)) / static_cast<double>(n - 1);
        if (!(delta > 0.0)) throw InvalidArgument("axis " + std::to_string(j) + " is not increasing");
        const double slack = 1e-9 * delta + 8.0 * std::numeric_limits<double>::epsilon() * a.cwiseAbs().maxCoeff();
        for (Index i = 1; i < n; ++i) {
            if (std::abs(a(i) - a(i - 1) - delta) > slack) {
                throw InvalidArgument("axis " + std::to_string(j) + " is not equidistant");
            }
        }
        deltas_.push_back(delta);
        volume_ *= delta;
    }
}

AxisGrid AxisGrid::centered(const Eigen::VectorXd& centre, const Eigen::VectorXd& delta, const Shape& counts) {
    if (centre.size() != delta.size() || static_cast<std::size_t>(centre.size()) != counts.size()) {
        throw ShapeError("centre, delta and counts must have the same length");
    }
    std::vector<Eigen::VectorXd> axes;
    axes.reserve(counts.size());
    for (std::size_t j = 0; j < counts.size(); ++j) {
        const auto n = static_cast<Index>(counts[j]);
        if (n < 3 || n % 2 == 0) {
            throw InvalidArgument("count " + std::to_string(n) + " on axis " + std::to_string(j) +
                                  " must be odd and at least 3");
        }
        const Index mid = (n - 1) / 2;
        Eigen::VectorXd a(n);
        const auto jj = static_cast<Index>(j);
        for (Index i = 0; i < n; ++i) a(i) = centre(jj) + static_cast<double>(i - mid) * delta(jj);
        axes.push_back(std::move(a));
    }
    return AxisGrid(std::move(axes));
}

Shape AxisGrid::counts() const {
    Shape c(axes_.size());
    for (std::size_t j = 0; j < axes_.size(); ++j) c[j] = count(j);
    return c;
}

AxisGrid AxisGrid::permuted(std::span<const std::size_t> order) const {
    if (order.size() != axes_.size()) throw ShapeError("permutation length does not match grid dimension");
    std::vector<Eigen::VectorXd> axes;
    for (std::size_t k : order) axes.push_back(axes_.at(k));
    return AxisGrid(std::move(axes));
}

Pmd::Pmd(AxisGrid grid, PmdWeights weights) : grid_(std::move(grid)), weights_(std::move(weights)) {
    const Shape shape = std::visit([](const auto& w) { return Shape(w.shape()); }, weights_);
    if (shape != grid_.counts()) throw ShapeError("weight tensor shape does not match grid counts");
}

double Pmd::mass() const {
    if (is_cpd()) return volume() * sum_entries(cpd());
    return volume() * dense().sum();
}

void GaussianMoments::validate() const {
    const Index d = mean.size();
    if (d == 0 || cov.rows() != d || cov.cols() != d) throw InvalidArgument("moment dimensions disagree");
    if (!mean.allFinite() || !cov.allFinite()) throw InvalidArgument("moments are not finite");
    const double scale = std::max(cov.cwiseAbs().maxCoeff(), 1e-300);
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw InvalidArgument("covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (cov + cov.transpose()), Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-9 * scale) {
        throw InvalidArgument("covariance is not positive semidefinite");
    }
}

AxisGrid design_grid(const GaussianMoments& moments, double sigma_mult, const Shape& counts) {
    moments.validate();
    if (static_cast<std::size_t>(moments.mean.size()) != counts.size()) {
        throw ShapeError("grid counts do not match the moment dimension");
    }
    if (!(sigma_mult > 0.0)) throw InvalidArgument("sigma multiplier must be positive");
    Eigen::VectorXd delta(moments.mean.size());
    for (Index j = 0; j < moments.mean.size(); ++j) {
        const double var = moments.cov(j, j);
        if (!(var > 0.0)) throw InvalidArgument("nonpositive variance on axis " + std::to_string(j));
        const auto n = static_cast<double>(counts[static_cast<std::size_t>(j)]);
        delta(j) = 2.0 * sigma_mult * std::sqrt(var) / (n - 1.0);
    }
    return AxisGrid::centered(moments.mean, delta, counts);
}

Pmd normalize(const Pmd& p) {
    const double mass = p.mass();
    if (!(mass > 0.0) || !std::isfinite(mass)) {
        throw DivergenceError("PMD has nonpositive total mass " + std::to_string(mass));
    }
    const double s = 1.0 / mass;
    if (p.is_cpd()) return Pmd(p.grid(), scale(p.cpd(), s));
    DenseTensor w = p.dense();
    for (double& v : w.values()) v *= s;
    return Pmd(p.grid(), std::move(w));
}

double normal_pdf(double x, double mean, double variance) {
    const double d = x - mean;
    return std::exp(-0.5 * d * d / variance) / std::sqrt(2.0 * std::numbers::pi * variance);
}

Pmd gaussian_pmd_init(const GaussianMoments& moments, const AxisGrid& grid) {
    moments.validate();
    const Index d = moments.mean.size();
    if (static_cast<std::size_t>(d) != grid.dims()) throw ShapeError("moments and grid differ in dimension");
    const double scale = std::max(moments.cov.cwiseAbs().maxCoeff(), 1e-300);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j)
            if (i != j && std::abs(moments.cov(i, j)) > 1e-12 * scale) {
                throw InvalidArgument("rank-one initialisation needs a diagonal covariance");
            }
    std::vector<Eigen::MatrixXd> factors;
    for (Index j = 0; j < d; ++j) {
        const double var = moments.cov(j, j);
        if (!(var > 0.0)) throw InvalidArgument("nonpositive variance on axis " + std::to_string(j));
        const Eigen::VectorXd& axis = grid.axis(static_cast<std::size_t>(j));
        Eigen::MatrixXd f(axis.size(), 1);
        for (Index i = 0; i < axis.size(); ++i) f(i, 0) = normal_pdf(axis(i), moments.mean(j), var);
        factors.push_back(std::move(f));
    }
    return normalize(Pmd(grid, CpdTensor(Eigen::VectorXd::Ones(1), std::move(factors))));
}

namespace {

void check_normalized(const Pmd& p) {
    const double mass = p.mass();
    if (!(std::abs(mass - 1.0) <= 1e-8)) {
        throw InvalidArgument("moments need a normalised PMD, mass is " + std::to_string(mass));
    }
}

// Offsets from the grid centre keep E[x^2] - E[x]^2 well conditioned.
Eigen::VectorXd centre_of(const AxisGrid& g) {
    Eigen::VectorXd c(static_cast<Index>(g.dims()));
    for (std::size_t j = 0; j < g.dims(); ++j) c(static_cast<Index>(j)) = g.axis(j)((g.axis(j).size() - 1) / 2);
    return c;
}

GaussianMoments finish_moments(const Eigen::VectorXd& centre, const Eigen::VectorXd& first,
                               const Eigen::MatrixXd& second) {
    GaussianMoments m;
    m.mean = centre + first;
    m.cov = second - first * first.transpose();
    m.cov = 0.5 * (m.cov + m.cov.transpose());
    return m;
}

}  // namespace

GaussianMoments moments_from_pmd(const Pmd& p) {
    check_normalized(p);
    const AxisGrid& g = p.grid();
    const auto d = static_cast<Index>(g.dims());
    const Eigen::VectorXd centre = centre_of(g);
    const double vol = p.volume();
    Eigen::VectorXd first = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);

    if (p.is_cpd()) {
        const CpdTensor& t = p.cpd();
        const Index rank = t.rank();
        // sums(j, r) = 1^T p_j, lin(j, r) = x_j^T p_j, quad(j, r) = (x_j^2)^T p_j
        Eigen::MatrixXd sums(d, rank), lin(d, rank), quad(d, rank);
        for (Index j = 0; j < d; ++j) {
            const Eigen::ArrayXd x = g.axis(static_cast<std::size_t>(j)).array() - centre(j);
            const Eigen::MatrixXd& f = t.factor(static_cast<std::size_t>(j));
            sums.row(j) = f.colwise().sum();
            lin.row(j) = x.matrix().transpose() * f;
            quad.row(j) = x.square().matrix().transpose() * f;
        }
        for (Index r = 0; r < rank; ++r) {
            const double w = vol * t.lambdas()(r);
            for (Index j = 0; j < d; ++j) {
                double others = 1.0;
                for (Index l = 0; l < d; ++l)
                    if (l != j) others *= sums(l, r);
                first(j) += w * lin(j, r) * others;
                second(j, j) += w * quad(j, r) * others;
                for (Index l = j + 1; l < d; ++l) {
                    double rest = 1.0;
                    for (Index m = 0; m < d; ++m)
                        if (m != j && m != l) rest *= sums(m, r);
                    const double v = w * lin(j, r) * lin(l, r) * rest;
                    second(j, l) += v;
                    second(l, j) += v;
                }
            }
        }
        return finish_moments(centre, first, second);
    }

    const DenseTensor& w = p.dense();
    const Shape& shape = w.shape();
    std::vector<std::size_t> idx(shape.size(), 0);
    Eigen::VectorXd x(d);
    const auto values = w.values();
    for (std::size_t flat = 0; flat < w.size(); ++flat) {
        for (Index j = 0; j < d; ++j) x(j) = g.axis(static_cast<std::size_t>(j))(static_cast<Index>(idx[j])) - centre(j);
        const double pw = vol * values[flat];
        first += pw * x;
        second.noalias() += pw * x * x.transpose();
        for (std::size_t k = shape.size(); k-- > 0;) {
            if (++idx[k] < shape[k]) break;
            idx[k] = 0;
        }
    }
    return finish_moments(centre, first, second);
}

std::optional<AxisLocation> locate_on_axis(const Eigen::VectorXd& axis, double x) {
    const Index n = axis.size();
    if (n < 2 || !(x >= axis(0) && x <= axis(n - 1))) return std::nullopt;
    if (x == axis(n - 1)) return AxisLocation{n - 2, 1.0};
    const double* begin = axis.data();
    const Index hi = std::upper_bound(begin, begin + n, x) - begin;
    const Index lo = hi - 1;
    return AxisLocation{lo, (x - axis(lo)) / (axis(hi) - axis(lo))};
}

Eigen::VectorXd interp_axis(const Eigen::VectorXd& src_points, const Eigen::VectorXd& src_values,
                            const Eigen::VectorXd& dst_points) {
    const Index n = src_points.size();
    if (src_values.size() != n) throw ShapeError("interpolation points and values differ in length");
    for (Index i = 1; i < n; ++i) {
        if (!(src_points(i) > src_points(i - 1))) throw InvalidArgument("source points must be strictly increasing");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dst_points.size());
    if (n == 1) {
        for (Index q = 0; q < dst_points.size(); ++q)
            if (dst_points(q) == src_points(0)) out(q) = src_values(0);
        return out;
    }
    for (Index q = 0; q < dst_points.size(); ++q) {
        if (const auto loc = locate_on_axis(src_points, dst_points(q))) {
            out(q) = src_values(loc->lower) * (1.0 - loc->t) + src_values(loc->lower + 1) * loc->t;
        }
    }
    return out;
}

Eigen::VectorXd gaussian_kernel_axis(std::size_t count, double delta, double variance) {
    if (count == 0 || count % 2 == 0) throw InvalidArgument("kernel length must be odd");
    if (!(variance > 0.0)) throw InvalidArgument("kernel variance must be positive");
    if (!(delta > 0.0)) throw InvalidArgument("kernel spacing must be positive");
    const auto n = static_cast<Index>(count);
    const Index mid = (n - 1) / 2;
    Eigen::VectorXd w(n);
    for (Index i = 0; i < n; ++i) w(i) = normal_pdf(static_cast<double>(i - mid) * delta, 0.0, variance);
    return w;
}

Eigen::VectorXd convolve_axis(const Eigen::VectorXd& values, const Eigen::VectorXd& kernel, double delta) {
    const Index k = kernel.size();
    if (k % 2 == 0) throw InvalidArgument("kernel length must be odd");
    const Index c = (k - 1) / 2;
    const Index n = values.size();
    Eigen::VectorXd out(n);
    for (Index i = 0; i < n; ++i) {
        const Index m_lo = std::max<Index>(0, i - c);
        const Index m_hi = std::min<Index>(n - 1, i + c);
        double acc = 0.0;
        for (Index m = m_lo; m <= m_hi; ++m) acc += values(m) * kernel(i - m + c);
        out(i) = delta * acc;
    }
    return out;
}

}  // namespace tpmf
