#pragma once

// Canonical polyadic (CP) tensors and the factored operations the grid
// filters need: element-wise products, entry sums, scaling, embedding of
// low-order tensors into tensors with invariant modes.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace tpmf {

using Index = Eigen::Index;
using Shape = std::vector<std::size_t>;

/// Default entry cap for dense renderings of CP tensors.
inline constexpr std::size_t kDenseOracleCap = 10'000'000;

/// Product of the extents, throwing CapExceeded once it passes `cap`.
std::size_t checked_volume(const Shape& shape, std::size_t cap);

/// Full tensor stored row-major (last index fastest).
class DenseTensor {
public:
    DenseTensor() = default;
    DenseTensor(Shape shape, std::vector<double> values);

    static DenseTensor zeros(Shape shape, std::size_t cap = kDenseOracleCap);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t order() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return values_.size(); }
    const std::vector<std::size_t>& strides() const noexcept { return strides_; }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    std::size_t offset(std::span<const std::size_t> index) const;
    double operator()(std::span<const std::size_t> index) const { return values_[offset(index)]; }
    double& operator()(std::span<const std::size_t> index) { return values_[offset(index)]; }

    double sum() const;

private:
    Shape shape_;
    std::vector<std::size_t> strides_;
    std::vector<double> values_;
};

/// Sum of R weighted rank-one terms. Column r of factor j is the loading
/// vector of mode j for component r. Construction validates but never
/// rescales; values are immutable afterwards.
class CpdTensor {
public:
    CpdTensor(Eigen::VectorXd lambdas, std::vector<Eigen::MatrixXd> factors);

    Index rank() const noexcept { return lambdas_.size(); }
    std::size_t order() const noexcept { return factors_.size(); }
    Shape shape() const;
    std::size_t extent(std::size_t mode) const { return static_cast<std::size_t>(factors_[mode].rows()); }

    const Eigen::VectorXd& lambdas() const noexcept { return lambdas_; }
    const std::vector<Eigen::MatrixXd>& factors() const noexcept { return factors_; }
    const Eigen::MatrixXd& factor(std::size_t mode) const { return factors_[mode]; }

    double entry(std::span<const std::size_t> index) const;

    /// Rank-one tensor of ones with the given shape.
    static CpdTensor ones(const Shape& shape);

private:
    Eigen::VectorXd lambdas_;
    std::vector<Eigen::MatrixXd> factors_;
};

/// Truncated singular value decomposition, U diag(S) V^T.
struct SvdFactors {
    Eigen::MatrixXd left;
    Eigen::VectorXd singular;
    Eigen::MatrixXd right;

    Index rank() const noexcept { return singular.size(); }
};

/// Validating constructor; same as CpdTensor's, spelled as a function.
CpdTensor cpd_new(Eigen::VectorXd lambdas, std::vector<Eigen::MatrixXd> factors);

DenseTensor to_dense(const CpdTensor& t, std::size_t cap = kDenseOracleCap);

/// Element-wise product. Component (r, s) of the result sits at column
/// r * b.rank() + s and carries lambda_a(r) * lambda_b(s).
CpdTensor hadamard(const CpdTensor& a, const CpdTensor& b);

double sum_entries(const CpdTensor& t);

CpdTensor scale(const CpdTensor& t, double s);

/// <a, b> in factored form through Gram matrices of the factors.
double inner_product(const CpdTensor& a, const CpdTensor& b);
double frobenius_norm(const CpdTensor& t);

/// Lifts a tensor over the modes listed in `variant_positions` (strictly
/// increasing) to `full_shape`; every other mode gets all-ones loadings.
CpdTensor embed_invariant_modes(const CpdTensor& components,
                                std::span<const std::size_t> variant_positions,
                                const Shape& full_shape);

/// Rank-R CP tensor over two modes from a matrix SVD.
CpdTensor cpd_from_svd(const SvdFactors& svd);

/// Debug dump: {"shape": [...], "lambdas": [...], "factors": [[row-major], ...]}.
nlohmann::json to_json(const CpdTensor& t);
CpdTensor cpd_from_json(const nlohmann::json& j);

}  // namespace tpmf
