#include "tpmf/svd.hpp"

#include "tpmf/errors.hpp"

#include <Eigen/SVD>

namespace tpmf {

Index truncation_rank(const Eigen::VectorXd& singular, double energy_fraction) {
    if (!(energy_fraction > 0.0 && energy_fraction <= 1.0)) {
        throw InvalidArgument("energy fraction must lie in (0, 1]");
    }
    // Same summation order as the cumulative sum below, so a fraction of 1
    // keeps every singular value that still changes the sum.
    double total = 0.0;
    for (Index r = 0; r < singular.size(); ++r) total += singular(r);
    if (singular.size() == 0 || total <= 0.0) return 1;
    const double needed = energy_fraction * total;
    double cumulative = 0.0;
    for (Index r = 0; r < singular.size(); ++r) {
        cumulative += singular(r);
        if (cumulative >= needed) return r + 1;
    }
    return singular.size();
}

SvdFactors svd_truncated(const Eigen::MatrixXd& m, double energy_fraction) {
    if (m.rows() == 0 || m.cols() == 0) throw InvalidArgument("SVD of an empty matrix");
    if (!m.allFinite()) throw InvalidArgument("SVD input has non-finite entries");
    constexpr int kThin = Eigen::ComputeThinU | Eigen::ComputeThinV;
    Eigen::MatrixXd u, v;
    Eigen::VectorXd s;
    {
        const Eigen::BDCSVD<Eigen::MatrixXd> svd(m, kThin);
        u = svd.matrixU();
        s = svd.singularValues();
        v = svd.matrixV();
    }
    // Eigen 3.4.0's divide-and-conquer SVD occasionally returns NaNs for
    // finite, well-scaled input (see tests/fixtures/bdcsvd_nan_41x41.txt);
    // the one-sided Jacobi SVD is slower but robust.
    if (!s.allFinite() || !u.allFinite() || !v.allFinite()) {
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, kThin);
        u = svd.matrixU();
        s = svd.singularValues();
        v = svd.matrixV();
        if (!s.allFinite() || !u.allFinite() || !v.allFinite()) {
            throw InvalidArgument("SVD did not produce finite factors");
        }
    }
    const Index r = truncation_rank(s, energy_fraction);
    SvdFactors out;
    out.left = u.leftCols(r);
    out.singular = s.head(r);
    out.right = v.leftCols(r);
    return out;
}

}  // namespace tpmf
