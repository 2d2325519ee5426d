#include "tpmf/cpd.hpp"

#include "tpmf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tpmf {

std::size_t checked_volume(const Shape& shape, std::size_t cap) {
    std::size_t total = 1;
    for (std::size_t n : shape) {
        if (n != 0 && total > cap / n) {
            throw CapExceeded("dense rendering exceeds the cap of " + std::to_string(cap) + " entries");
        }
        total *= n;
    }
    if (total > cap) {
        throw CapExceeded("dense rendering exceeds the cap of " + std::to_string(cap) + " entries");
    }
    return total;
}

namespace {

std::vector<std::size_t> row_major_strides(const Shape& shape) {
    std::vector<std::size_t> strides(shape.size(), 1);
    for (std::size_t d = shape.size(); d-- > 1;) strides[d - 1] = strides[d] * shape[d];
    return strides;
}

}  // namespace

DenseTensor::DenseTensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), strides_(row_major_strides(shape_)), values_(std::move(values)) {
    std::size_t expected = 1;
    for (std::size_t n : shape_) expected *= n;
    if (shape_.empty() || expected != values_.size()) {
        throw ShapeError("dense tensor holds " + std::to_string(values_.size()) + " values, shape needs " +
                         std::to_string(expected));
    }
}

DenseTensor DenseTensor::zeros(Shape shape, std::size_t cap) {
    const std::size_t n = checked_volume(shape, cap);
    return DenseTensor(std::move(shape), std::vector<double>(n, 0.0));
}

std::size_t DenseTensor::offset(std::span<const std::size_t> index) const {
    if (index.size() != shape_.size()) throw ShapeError("index order does not match tensor order");
    std::size_t off = 0;
    for (std::size_t d = 0; d < index.size(); ++d) {
        if (index[d] >= shape_[d]) throw ShapeError("index out of range in mode " + std::to_string(d));
        off += index[d] * strides_[d];
    }
    return off;
}

double DenseTensor::sum() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
}

CpdTensor::CpdTensor(Eigen::VectorXd lambdas, std::vector<Eigen::MatrixXd> factors)
    : lambdas_(std::move(lambdas)), factors_(std::move(factors)) {
    if (factors_.empty()) throw ShapeError("a CP tensor needs at least one factor matrix");
    const Index rank = factors_.front().cols();
    if (rank < 1) throw ShapeError("factor matrix of mode 0 has no columns");
    for (std::size_t j = 0; j < factors_.size(); ++j) {
        if (factors_[j].cols() != rank) {
            throw ShapeError("factor matrix of mode " + std::to_string(j) + " has " +
                             std::to_string(factors_[j].cols()) + " columns, mode 0 has " + std::to_string(rank));
        }
        if (factors_[j].rows() < 1) throw ShapeError("factor matrix of mode " + std::to_string(j) + " has no rows");
    }
    if (lambdas_.size() != rank) {
        throw ShapeError("lambda length " + std::to_string(lambdas_.size()) + " does not match rank " +
                         std::to_string(rank));
    }
}

Shape CpdTensor::shape() const {
    Shape s(factors_.size());
    for (std::size_t j = 0; j < factors_.size(); ++j) s[j] = static_cast<std::size_t>(factors_[j].rows());
    return s;
}

double CpdTensor::entry(std::span<const std::size_t> index) const {
    if (index.size() != factors_.size()) throw ShapeError("index order does not match tensor order");
    double total = 0.0;
    for (Index r = 0; r < rank(); ++r) {
        double term = lambdas_(r);
        for (std::size_t j = 0; j < factors_.size(); ++j) {
            term *= factors_[j](static_cast<Index>(index[j]), r);
        }
        total += term;
    }
    return total;
}

CpdTensor CpdTensor::ones(const Shape& shape) {
    std::vector<Eigen::MatrixXd> factors;
    factors.reserve(shape.size());
    for (std::size_t n : shape) factors.push_back(Eigen::MatrixXd::Ones(static_cast<Index>(n), 1));
    return CpdTensor(Eigen::VectorXd::Ones(1), std::move(factors));
}

CpdTensor cpd_new(Eigen::VectorXd lambdas, std::vector<Eigen::MatrixXd> factors) {
    return CpdTensor(std::move(lambdas), std::move(factors));
}

DenseTensor to_dense(const CpdTensor& t, std::size_t cap) {
    DenseTensor out = DenseTensor::zeros(t.shape(), cap);
    const std::size_t order = t.order();
    const Shape& shape = out.shape();
    const auto values = out.values();
    std::vector<std::size_t> idx(order, 0);
    // Row-major walk; the partial products over leading modes are cached per rank.
    Eigen::MatrixXd partial(t.rank(), static_cast<Index>(order));
    auto refresh = [&](std::size_t from) {
        for (std::size_t j = from; j < order; ++j) {
            for (Index r = 0; r < t.rank(); ++r) {
                const double prev = j == 0 ? t.lambdas()(r) : partial(r, static_cast<Index>(j - 1));
                partial(r, static_cast<Index>(j)) = prev * t.factor(j)(static_cast<Index>(idx[j]), r);
            }
        }
    };
    refresh(0);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        values[flat] = partial.col(static_cast<Index>(order - 1)).sum();
        std::size_t d = order;
        while (d-- > 0) {
            if (++idx[d] < shape[d]) break;
            idx[d] = 0;
        }
        if (d == static_cast<std::size_t>(-1)) break;
        refresh(d);
    }
    return out;
}

CpdTensor hadamard(const CpdTensor& a, const CpdTensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("hadamard operands have different shapes");
    const Index ra = a.rank();
    const Index rb = b.rank();
    const Index rc = ra * rb;
    Eigen::VectorXd lambdas(rc);
    std::vector<Eigen::MatrixXd> factors(a.order());
    for (std::size_t j = 0; j < a.order(); ++j) factors[j].resize(a.factor(j).rows(), rc);

#pragma omp parallel for schedule(static)
    for (Index c = 0; c < rc; ++c) {
        const Index r = c / rb;
        const Index s = c % rb;
        lambdas(c) = a.lambdas()(r) * b.lambdas()(s);
        for (std::size_t j = 0; j < a.order(); ++j) {
            factors[j].col(c) = a.factor(j).col(r).cwiseProduct(b.factor(j).col(s));
        }
    }
    return CpdTensor(std::move(lambdas), std::move(factors));
}

double sum_entries(const CpdTensor& t) {
    Eigen::ArrayXd prod = t.lambdas().array();
    for (const auto& f : t.factors()) prod *= f.colwise().sum().transpose().array();
    return prod.sum();
}

CpdTensor scale(const CpdTensor& t, double s) {
    return CpdTensor(t.lambdas() * s, t.factors());
}

double inner_product(const CpdTensor& a, const CpdTensor& b) {
    if (a.shape() != b.shape()) throw ShapeError("inner product operands have different shapes");
    Eigen::MatrixXd gram = Eigen::MatrixXd::Ones(a.rank(), b.rank());
    for (std::size_t j = 0; j < a.order(); ++j) {
        gram.array() *= (a.factor(j).transpose() * b.factor(j)).array();
    }
    return a.lambdas().dot(gram * b.lambdas());
}

double frobenius_norm(const CpdTensor& t) {
    return std::sqrt(std::max(inner_product(t, t), 0.0));
}

CpdTensor embed_invariant_modes(const CpdTensor& components,
                                std::span<const std::size_t> variant_positions,
                                const Shape& full_shape) {
    if (variant_positions.size() != components.order()) {
        throw ShapeError("need one variant position per component mode");
    }
    if (variant_positions.size() > full_shape.size()) {
        throw ShapeError("more variant modes than modes in the full shape");
    }
    for (std::size_t i = 0; i < variant_positions.size(); ++i) {
        if (variant_positions[i] >= full_shape.size()) {
            throw InvalidArgument("variant position " + std::to_string(variant_positions[i]) + " out of range");
        }
        if (i > 0 && variant_positions[i] <= variant_positions[i - 1]) {
            throw InvalidArgument("variant positions must be strictly increasing");
        }
        if (components.extent(i) != full_shape[variant_positions[i]]) {
            throw ShapeError("component mode " + std::to_string(i) + " has extent " +
                             std::to_string(components.extent(i)) + ", full shape mode " +
                             std::to_string(variant_positions[i]) + " needs " +
                             std::to_string(full_shape[variant_positions[i]]));
        }
    }
    std::vector<Eigen::MatrixXd> factors;
    factors.reserve(full_shape.size());
    std::size_t next = 0;
    for (std::size_t j = 0; j < full_shape.size(); ++j) {
        if (next < variant_positions.size() && variant_positions[next] == j) {
            factors.push_back(components.factor(next));
            ++next;
        } else {
            factors.push_back(Eigen::MatrixXd::Ones(static_cast<Index>(full_shape[j]), components.rank()));
        }
    }
    return CpdTensor(components.lambdas(), std::move(factors));
}

CpdTensor cpd_from_svd(const SvdFactors& svd) {
    return CpdTensor(svd.singular, {svd.left, svd.right});
}

nlohmann::json to_json(const CpdTensor& t) {
    nlohmann::json j;
    j["shape"] = t.shape();
    j["lambdas"] = std::vector<double>(t.lambdas().data(), t.lambdas().data() + t.rank());
    nlohmann::json factors = nlohmann::json::array();
    for (const auto& f : t.factors()) {
        std::vector<double> row_major;
        row_major.reserve(static_cast<std::size_t>(f.size()));
        for (Index i = 0; i < f.rows(); ++i)
            for (Index r = 0; r < f.cols(); ++r) row_major.push_back(f(i, r));
        factors.push_back(std::move(row_major));
    }
    j["factors"] = std::move(factors);
    return j;
}

CpdTensor cpd_from_json(const nlohmann::json& j) {
    try {
        const auto shape = j.at("shape").get<Shape>();
        const auto lambdas = j.at("lambdas").get<std::vector<double>>();
        const auto& factors = j.at("factors");
        if (factors.size() != shape.size()) throw ShapeError("factor count does not match shape");
        const auto rank = static_cast<Index>(lambdas.size());
        std::vector<Eigen::MatrixXd> mats;
        for (std::size_t m = 0; m < shape.size(); ++m) {
            const auto flat = factors[m].get<std::vector<double>>();
            if (flat.size() != shape[m] * lambdas.size()) {
                throw ShapeError("factor " + std::to_string(m) + " has the wrong number of entries");
            }
            Eigen::MatrixXd f(static_cast<Index>(shape[m]), rank);
            for (Index i = 0; i < f.rows(); ++i)
                for (Index r = 0; r < rank; ++r) f(i, r) = flat[static_cast<std::size_t>(i * rank + r)];
            mats.push_back(std::move(f));
        }
        Eigen::VectorXd lam = Eigen::Map<const Eigen::VectorXd>(lambdas.data(), rank);
        return CpdTensor(std::move(lam), std::move(mats));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("CP tensor JSON: ") + e.what());
    }
}

}  // namespace tpmf
