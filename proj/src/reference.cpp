#include "tpmf/reference.hpp"

#include "tpmf/errors.hpp"

#include <string>

namespace tpmf::reference {

CpdTensor hadamard(const CpdTensor& a, const CpdTensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("Hadamard product of tensors with different shapes");
    const Index ra = a.rank();
    const Index rb = b.rank();
    Eigen::VectorXd lambdas(ra * rb);
    std::vector<Eigen::MatrixXd> factors;
    for (std::size_t j = 0; j < a.order(); ++j) factors.emplace_back(a.factor(j).rows(), ra * rb);
    for (Index r = 0; r < ra; ++r) {
        for (Index s = 0; s < rb; ++s) {
            const Index c = r * rb + s;
            lambdas(c) = a.lambdas()(r) * b.lambdas()(s);
            for (std::size_t j = 0; j < a.order(); ++j) {
                for (Index i = 0; i < factors[j].rows(); ++i) factors[j](i, c) = a.factor(j)(i, r) * b.factor(j)(i, s);
            }
        }
    }
    return CpdTensor(std::move(lambdas), std::move(factors));
}

DenseTensor hadamard_dense(const DenseTensor& a, const DenseTensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("element-wise product of tensors with different shapes");
    DenseTensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= b.values()[i];
    return out;
}

namespace {

bool next_index(std::vector<std::size_t>& idx, const Shape& shape) {
    for (std::size_t k = shape.size(); k-- > 0;) {
        if (++idx[k] < shape[k]) return true;
        idx[k] = 0;
    }
    return false;
}

}  // namespace

DenseTensor advect_dense(const DenseTensor& weights, const AxisGrid& source, const Eigen::MatrixXd& f,
                         const Eigen::VectorXd& input, const AxisGrid& target) {
    const std::size_t d = source.dims();
    if (weights.shape() != source.counts()) throw ShapeError("advection source: weights do not match the grid");
    const Shape tshape = target.counts();
    DenseTensor out = DenseTensor::zeros(tshape);
    if (out.size() == 0) return out;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(f);
    std::vector<std::size_t> idx(d, 0);
    Eigen::VectorXd xi(static_cast<Index>(d));
    do {
        for (std::size_t j = 0; j < d; ++j) xi(static_cast<Index>(j)) = target.axis(j)(static_cast<Index>(idx[j]));
        const Eigen::VectorXd x = lu.solve(xi - input);
        std::vector<AxisLocation> loc;
        for (std::size_t j = 0; j < d; ++j) {
            const auto at = locate_on_axis(source.axis(j), x(static_cast<Index>(j)));
            if (!at) break;
            loc.push_back(*at);
        }
        if (loc.size() != d) continue;
        double acc = 0.0;
        std::vector<std::size_t> corner(d);
        for (std::size_t c = 0; c < (std::size_t{1} << d); ++c) {
            double w = 1.0;
            for (std::size_t j = 0; j < d; ++j) {
                const bool upper = ((c >> j) & 1U) != 0;
                w *= upper ? loc[j].t : 1.0 - loc[j].t;
                corner[j] = static_cast<std::size_t>(loc[j].lower) + (upper ? 1 : 0);
            }
            if (w != 0.0) acc += w * weights(corner);
        }
        out(idx) = acc;
    } while (next_index(idx, tshape));
    return out;
}

DenseTensor diffuse_dense(const DenseTensor& weights, const AxisGrid& grid, const Eigen::VectorXd& q_diag) {
    if (weights.shape() != grid.counts()) throw ShapeError("diffusion: weights do not match the grid");
    DenseTensor cur = weights;
    const Shape& shape = weights.shape();
    for (std::size_t j = 0; j < grid.dims(); ++j) {
        const Eigen::VectorXd kernel =
            gaussian_kernel_axis(grid.count(j), grid.delta(j), q_diag(static_cast<Index>(j)));
        const auto c = static_cast<std::ptrdiff_t>((kernel.size() - 1) / 2);
        DenseTensor next = DenseTensor::zeros(shape);
        std::vector<std::size_t> idx(shape.size(), 0);
        std::vector<std::size_t> src(shape.size());
        do {
            double acc = 0.0;
            src = idx;
            for (std::size_t m = 0; m < shape[j]; ++m) {
                const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(idx[j]) - static_cast<std::ptrdiff_t>(m) + c;
                if (k < 0 || k >= kernel.size()) continue;
                src[j] = m;
                acc += cur(src) * kernel(k);
            }
            next(idx) = grid.delta(j) * acc;
        } while (next_index(idx, shape));
        cur = std::move(next);
    }
    return cur;
}

}  // namespace tpmf::reference
