#include "test_util.hpp"
#include "tpmf/errors.hpp"
#include "tpmf/grid.hpp"

#include <gtest/gtest.h>

using namespace tpmf;
using tpmf::testing::random_positive_cpd;

namespace {

GaussianMoments diag_moments(const Eigen::VectorXd& mean, const Eigen::VectorXd& var) {
    return {mean, var.asDiagonal()};
}

// Mean and covariance by explicit enumeration of the dense weights.
GaussianMoments brute_moments(const AxisGrid& g, const DenseTensor& w) {
    const std::size_t d = g.dims();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Index>(d));
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(static_cast<Index>(d), static_cast<Index>(d));
    double total = 0.0;
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t flat = 0; flat < w.size(); ++flat) {
        Eigen::VectorXd x(static_cast<Index>(d));
        for (std::size_t j = 0; j < d; ++j) x(static_cast<Index>(j)) = g.axis(j)(static_cast<Index>(idx[j]));
        const double p = w.values()[flat];
        total += p;
        mean += p * x;
        second += p * x * x.transpose();
        for (std::size_t k = d; k-- > 0;) {
            if (++idx[k] < w.shape()[k]) break;
            idx[k] = 0;
        }
    }
    mean /= total;
    return {mean, second / total - mean * mean.transpose()};
}

}  // namespace

TEST(AxisGrid, RejectsEvenAndIrregularAxes) {
    EXPECT_THROW(AxisGrid({Eigen::VectorXd::LinSpaced(4, 0.0, 3.0)}), InvalidArgument);
    Eigen::VectorXd irregular(3);
    irregular << 0.0, 1.0, 2.5;
    EXPECT_THROW(AxisGrid({irregular}), InvalidArgument);
    Eigen::VectorXd decreasing(3);
    decreasing << 2.0, 1.0, 0.0;
    EXPECT_THROW(AxisGrid({decreasing}), InvalidArgument);
    EXPECT_THROW(AxisGrid(std::vector<Eigen::VectorXd>{}), InvalidArgument);
}

TEST(AxisGrid, CenteredMiddlePointIsExact) {
    Eigen::VectorXd c(2), d(2);
    c << 4000.123, -17.7;
    d << 13.1, 0.37;
    const AxisGrid g = AxisGrid::centered(c, d, {21, 9});
    EXPECT_EQ(g.axis(0)(10), c(0));
    EXPECT_EQ(g.axis(1)(4), c(1));
    EXPECT_NEAR(g.delta(0), 13.1, 1e-9);
    EXPECT_NEAR(g.cell_volume(), 13.1 * 0.37, 1e-9);
    EXPECT_EQ(g.counts(), (Shape{21, 9}));
    EXPECT_THROW(AxisGrid::centered(c, d, {20, 9}), InvalidArgument);
}

TEST(AxisGrid, PermutedReordersAxes) {
    Eigen::VectorXd c(3), d(3);
    c << 1.0, 2.0, 3.0;
    d << 0.1, 0.2, 0.3;
    const AxisGrid g = AxisGrid::centered(c, d, {3, 5, 7});
    const std::array<std::size_t, 3> order{2, 0, 1};
    const AxisGrid p = g.permuted(order);
    EXPECT_EQ(p.counts(), (Shape{7, 3, 5}));
    EXPECT_EQ(p.axis(0), g.axis(2));
}

TEST(DesignGrid, SpansSigmaMultiple) {
    Eigen::VectorXd m(2), v(2);
    m << 100.0, -5.0;
    v << 400.0, 1.0;
    const AxisGrid g = design_grid(diag_moments(m, v), 4.0, {21, 11});
    EXPECT_NEAR(g.axis(0)(0), 100.0 - 80.0, 1e-9);
    EXPECT_NEAR(g.axis(0)(20), 100.0 + 80.0, 1e-9);
    EXPECT_NEAR(g.axis(1)(10), -1.0, 1e-12);
    EXPECT_EQ(g.axis(0)(10), 100.0);
    EXPECT_THROW(design_grid(diag_moments(m, v), 0.0, {21, 11}), InvalidArgument);
    EXPECT_THROW(design_grid(diag_moments(m, v), 4.0, {21}), ShapeError);
}

TEST(GaussianInit, IsRankOneAndNormalized) {
    Eigen::VectorXd m(3), v(3);
    m << 1.0, 2.0, 3.0;
    v << 4.0, 1.0, 0.25;
    const GaussianMoments g = diag_moments(m, v);
    const Pmd p = gaussian_pmd_init(g, design_grid(g, 4.0, {31, 31, 31}));
    ASSERT_TRUE(p.is_cpd());
    EXPECT_EQ(p.cpd().rank(), 1);
    EXPECT_NEAR(p.mass(), 1.0, 1e-12);
    const GaussianMoments back = moments_from_pmd(p);
    EXPECT_NEAR(back.mean(0), 1.0, 1e-9);
    EXPECT_NEAR(back.cov(0, 0), 4.0, 4.0 * 1e-3);
    EXPECT_NEAR(back.cov(2, 2), 0.25, 0.25 * 1e-3);
    EXPECT_NEAR(back.cov(0, 1), 0.0, 1e-9);

    GaussianMoments correlated = g;
    correlated.cov(0, 1) = correlated.cov(1, 0) = 0.5;
    EXPECT_THROW(gaussian_pmd_init(correlated, design_grid(g, 4.0, {5, 5, 5})), InvalidArgument);
}

TEST(GaussianMoments, ValidateRejectsBadCovariance) {
    GaussianMoments m{Eigen::Vector2d(0, 0), Eigen::Matrix2d::Identity()};
    EXPECT_NO_THROW(m.validate());
    m.cov(0, 1) = 0.5;
    EXPECT_THROW(m.validate(), InvalidArgument);
    m.cov(1, 0) = 0.5;
    m.cov(0, 0) = -1.0;
    EXPECT_THROW(m.validate(), InvalidArgument);
}

TEST(Moments, CpdDenseAndBruteForceAgree) {
    std::mt19937_64 rng(21);
    Eigen::VectorXd c(4), d(4);
    c << 4000.0, 10.0, 3000.0, -2.0;
    d << 25.0, 0.4, 30.0, 0.5;
    const AxisGrid g = AxisGrid::centered(c, d, {7, 5, 9, 5});
    for (int trial = 0; trial < 5; ++trial) {
        const Pmd cp = normalize(Pmd(g, random_positive_cpd(g.counts(), 3, rng)));
        const Pmd dense = Pmd(g, to_dense(cp.cpd()));
        const GaussianMoments a = moments_from_pmd(cp);
        const GaussianMoments b = moments_from_pmd(dense);
        const GaussianMoments e = brute_moments(g, dense.dense());
        EXPECT_LT((a.mean - e.mean).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((b.mean - e.mean).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((a.cov - e.cov).cwiseAbs().maxCoeff(), 1e-7 * e.cov.cwiseAbs().maxCoeff());
        EXPECT_LT((b.cov - e.cov).cwiseAbs().maxCoeff(), 1e-7 * e.cov.cwiseAbs().maxCoeff());
    }
}

TEST(Moments, RequireNormalizedInput) {
    const AxisGrid g = AxisGrid::centered(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), {3, 3});
    EXPECT_THROW(moments_from_pmd(Pmd(g, CpdTensor::ones({3, 3}))), InvalidArgument);
}

TEST(Normalize, ZeroMassIsDivergence) {
    const AxisGrid g = AxisGrid::centered(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1), {3, 3});
    EXPECT_THROW(normalize(Pmd(g, DenseTensor::zeros({3, 3}))), DivergenceError);
    EXPECT_THROW(normalize(Pmd(g, scale(CpdTensor::ones({3, 3}), -1.0))), DivergenceError);
    EXPECT_THROW(Pmd(g, DenseTensor::zeros({3, 5})), ShapeError);
}

TEST(Interp, LinearAndZeroOutside) {
    const Eigen::VectorXd src = Eigen::VectorXd::LinSpaced(5, 0.0, 4.0);
    Eigen::VectorXd vals(5);
    vals << 0.0, 2.0, 4.0, 6.0, 8.0;
    Eigen::VectorXd dst(6);
    dst << -0.5, 0.0, 1.25, 3.999, 4.0, 4.0001;
    const Eigen::VectorXd out = interp_axis(src, vals, dst);
    EXPECT_EQ(out(0), 0.0);
    EXPECT_DOUBLE_EQ(out(1), 0.0);
    EXPECT_DOUBLE_EQ(out(2), 2.5);
    EXPECT_NEAR(out(3), 7.998, 1e-12);
    EXPECT_DOUBLE_EQ(out(4), 8.0);
    EXPECT_EQ(out(5), 0.0);
    EXPECT_THROW(interp_axis(src, vals.head(4), dst), ShapeError);
}

TEST(Interp, LocateOnAxis) {
    const Eigen::VectorXd axis = Eigen::VectorXd::LinSpaced(3, 10.0, 30.0);
    EXPECT_FALSE(locate_on_axis(axis, 9.99).has_value());
    EXPECT_FALSE(locate_on_axis(axis, 30.01).has_value());
    const auto mid = locate_on_axis(axis, 25.0);
    ASSERT_TRUE(mid.has_value());
    EXPECT_EQ(mid->lower, 1);
    EXPECT_DOUBLE_EQ(mid->t, 0.5);
    const auto end = locate_on_axis(axis, 30.0);
    ASSERT_TRUE(end.has_value());
    EXPECT_EQ(end->lower, 1);
    EXPECT_EQ(end->t, 1.0);
}

TEST(Kernel, GaussianKernelIsCentredAndIntegratesToOne) {
    const Eigen::VectorXd k = gaussian_kernel_axis(41, 0.5, 1.0);
    EXPECT_DOUBLE_EQ(k(20), normal_pdf(0.0, 0.0, 1.0));
    EXPECT_DOUBLE_EQ(k(19), k(21));
    EXPECT_NEAR(0.5 * k.sum(), 1.0, 1e-9);
    EXPECT_THROW(gaussian_kernel_axis(4, 0.5, 1.0), InvalidArgument);
    EXPECT_THROW(gaussian_kernel_axis(5, 0.5, 0.0), InvalidArgument);
}

TEST(Kernel, ConvolutionConservesInteriorMass) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(61);
    v(30) = 1.0;
    v(25) = 2.0;
    const double delta = 0.25;
    const Eigen::VectorXd k = gaussian_kernel_axis(61, delta, 0.3);
    const Eigen::VectorXd out = convolve_axis(v, k, delta);
    EXPECT_NEAR(out.sum(), v.sum(), 1e-9);
    // Direct sum: out(i) = delta * sum_m v(m) k(i - m + centre).
    EXPECT_NEAR(out(33), delta * (k(33) + 2.0 * k(38)), 1e-15);
}
