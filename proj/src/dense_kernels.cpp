#include "tpmf/dense_kernels.hpp"

#include "tpmf/errors.hpp"

#include <string>

namespace tpmf {

namespace {

void require_grid_shape(const DenseTensor& w, const AxisGrid& g, const char* what) {
    if (w.shape() != g.counts()) throw ShapeError(std::string(what) + ": weights do not match the grid counts");
}

}  // namespace

DenseTensor multiply_dense(const DenseTensor& a, const DenseTensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("element-wise product of tensors with different shapes");
    DenseTensor out = a;
    auto o = out.values();
    const auto bv = b.values();
    const auto n = static_cast<std::ptrdiff_t>(o.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) o[static_cast<std::size_t>(i)] *= bv[static_cast<std::size_t>(i)];
    return out;
}

DenseTensor broadcast_matrix(const Eigen::MatrixXd& m, std::size_t mode_a, std::size_t mode_b, const Shape& shape,
                             std::size_t cap) {
    if (mode_a >= shape.size() || mode_b >= shape.size() || mode_a == mode_b) {
        throw InvalidArgument("broadcast modes must be distinct and inside the tensor order");
    }
    if (static_cast<std::size_t>(m.rows()) != shape[mode_a] || static_cast<std::size_t>(m.cols()) != shape[mode_b]) {
        throw ShapeError("matrix extents do not match the broadcast modes");
    }
    DenseTensor out = DenseTensor::zeros(shape, cap);
    const auto& strides = out.strides();
    auto v = out.values();
    const auto n = static_cast<std::ptrdiff_t>(v.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t flat = 0; flat < n; ++flat) {
        const auto f = static_cast<std::size_t>(flat);
        const std::size_t ia = (f / strides[mode_a]) % shape[mode_a];
        const std::size_t ib = (f / strides[mode_b]) % shape[mode_b];
        v[f] = m(static_cast<Index>(ia), static_cast<Index>(ib));
    }
    return out;
}

DenseTensor advect_dense(const DenseTensor& weights, const AxisGrid& source, const Eigen::MatrixXd& f_inverse,
                         const Eigen::VectorXd& input, const AxisGrid& target) {
    require_grid_shape(weights, source, "advection source");
    const std::size_t d = source.dims();
    if (target.dims() != d || static_cast<std::size_t>(f_inverse.rows()) != d ||
        static_cast<std::size_t>(f_inverse.cols()) != d || static_cast<std::size_t>(input.size()) != d) {
        throw ShapeError("advection operands differ in dimension");
    }
    const Shape tshape = target.counts();
    DenseTensor out = DenseTensor::zeros(tshape);
    const auto& tstrides = out.strides();
    const auto& sstrides = weights.strides();
    const auto src = weights.values();
    auto dst = out.values();
    const auto n = static_cast<std::ptrdiff_t>(dst.size());
    const std::size_t corners = std::size_t{1} << d;

#pragma omp parallel
    {
        std::vector<double> shifted(d);
        std::vector<AxisLocation> loc(d);
#pragma omp for schedule(static)
        for (std::ptrdiff_t flat = 0; flat < n; ++flat) {
            const auto f = static_cast<std::size_t>(flat);
            for (std::size_t l = 0; l < d; ++l) {
                const std::size_t il = (f / tstrides[l]) % tshape[l];
                shifted[l] = target.axis(l)(static_cast<Index>(il)) - input(static_cast<Index>(l));
            }
            bool inside = true;
            for (std::size_t j = 0; j < d && inside; ++j) {
                // Summed left to right so that block-diagonal maps reproduce
                // the per-block projections of the factored path exactly.
                double x = 0.0;
                for (std::size_t l = 0; l < d; ++l)
                    x += f_inverse(static_cast<Index>(j), static_cast<Index>(l)) * shifted[l];
                const auto at = locate_on_axis(source.axis(j), x);
                if (!at) {
                    inside = false;
                } else {
                    loc[j] = *at;
                }
            }
            if (!inside) continue;
            double acc = 0.0;
            for (std::size_t c = 0; c < corners; ++c) {
                double w = 1.0;
                std::size_t off = 0;
                for (std::size_t j = 0; j < d; ++j) {
                    const bool upper = ((c >> (d - 1 - j)) & 1U) != 0;
                    w *= upper ? loc[j].t : 1.0 - loc[j].t;
                    off += static_cast<std::size_t>(loc[j].lower + (upper ? 1 : 0)) * sstrides[j];
                }
                if (w != 0.0) acc += w * src[off];
            }
            dst[f] = acc;
        }
    }
    return out;
}

DenseTensor convolve_dense_axis(const DenseTensor& weights, std::size_t mode, const Eigen::VectorXd& kernel,
                                double delta) {
    if (mode >= weights.order()) throw InvalidArgument("convolution mode outside the tensor order");
    const Shape& shape = weights.shape();
    const std::size_t len = shape[mode];
    const std::size_t stride = weights.strides()[mode];
    const std::size_t outer = weights.size() / (len * stride);
    DenseTensor out = weights;
    const auto src = weights.values();
    auto dst = out.values();
    const auto lines = static_cast<std::ptrdiff_t>(outer * stride);
#pragma omp parallel
    {
        Eigen::VectorXd line(static_cast<Index>(len));
#pragma omp for schedule(static)
        for (std::ptrdiff_t li = 0; li < lines; ++li) {
            const auto l = static_cast<std::size_t>(li);
            const std::size_t base = (l / stride) * len * stride + l % stride;
            for (std::size_t i = 0; i < len; ++i) line(static_cast<Index>(i)) = src[base + i * stride];
            const Eigen::VectorXd conv = convolve_axis(line, kernel, delta);
            for (std::size_t i = 0; i < len; ++i) dst[base + i * stride] = conv(static_cast<Index>(i));
        }
    }
    return out;
}

DenseTensor diffuse_dense(const DenseTensor& weights, const AxisGrid& grid, const Eigen::VectorXd& q_diag) {
    require_grid_shape(weights, grid, "diffusion");
    if (static_cast<std::size_t>(q_diag.size()) != grid.dims()) throw ShapeError("noise variances differ in dimension");
    DenseTensor out = weights;
    for (std::size_t j = 0; j < grid.dims(); ++j) {
        const Eigen::VectorXd kernel = gaussian_kernel_axis(grid.count(j), grid.delta(j), q_diag(static_cast<Index>(j)));
        out = convolve_dense_axis(out, j, kernel, grid.delta(j));
    }
    return out;
}

}  // namespace tpmf
