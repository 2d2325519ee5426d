#include "tpmf/als.hpp"

#include "tpmf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace tpmf {

namespace {

Eigen::MatrixXd random_factor(Index rows, Index cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd f(rows, cols);
    // Column-major fill keeps the draw order independent of Eigen internals.
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r) f(r, c) = unit(rng);
    return f;
}

// A V = M with V symmetric positive semidefinite.
Eigen::MatrixXd solve_normal_equations(const Eigen::MatrixXd& m, const Eigen::MatrixXd& v) {
    return v.completeOrthogonalDecomposition().solve(m.transpose()).transpose();
}

Eigen::VectorXd normalize_columns(Eigen::MatrixXd& a) {
    Eigen::VectorXd norms = a.colwise().norm().transpose();
    for (Index r = 0; r < a.cols(); ++r) {
        if (norms(r) > 0.0) a.col(r) /= norms(r);
    }
    return norms;
}

// Leading `cols` eigenvectors of the unfolding Gram matrix X_(n) X_(n)^T
// (the left singular vectors of the unfolding), largest first. Modes
// shorter than the rank are padded with seeded random columns.
Eigen::MatrixXd leading_vectors(const Eigen::MatrixXd& gram, Index cols, std::mt19937_64& rng) {
    const Index n = gram.rows();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    Eigen::MatrixXd out = random_factor(n, cols, rng);
    const Index take = std::min(n, cols);
    for (Index c = 0; c < take; ++c) {
        Eigen::VectorXd v = eig.eigenvectors().col(n - 1 - c);
        // Fix the sign so the result does not depend on the eigensolver.
        Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        out.col(c) = v;
    }
    return out;
}

std::vector<Eigen::MatrixXd> initial_factors(const std::vector<Eigen::MatrixXd>& grams, Index rank, AlsInit init,
                                             std::mt19937_64& rng) {
    std::vector<Eigen::MatrixXd> out;
    for (const auto& g : grams) {
        out.push_back(init == AlsInit::svd ? leading_vectors(g, rank, rng) : random_factor(g.rows(), rank, rng));
    }
    return out;
}

// Factors with the weights absorbed into the last mode, the form in which
// consecutive iterates are compared for extrapolation.
std::vector<Eigen::MatrixXd> absorbed(const std::vector<Eigen::MatrixXd>& factors, const Eigen::VectorXd& lambdas) {
    std::vector<Eigen::MatrixXd> out = factors;
    out.back() = out.back() * lambdas.asDiagonal();
    return out;
}

// Extrapolation factor after sweep `it` (1-based).
double extrapolation_step(int it) { return std::cbrt(static_cast<double>(it)); }

void check_options(Index rank, const AlsOptions& options) {
    if (rank < 1) throw InvalidArgument("target rank must be at least 1, got " + std::to_string(rank));
    if (options.max_iters < 1) throw InvalidArgument("ALS needs at least one sweep");
}

CpdTensor zero_tensor(const Shape& shape, Index rank) {
    std::vector<Eigen::MatrixXd> factors;
    for (std::size_t n : shape) factors.push_back(Eigen::MatrixXd::Ones(static_cast<Index>(n), rank));
    return CpdTensor(Eigen::VectorXd::Zero(rank), std::move(factors));
}

Eigen::MatrixXd hadamard_all_but(const std::vector<Eigen::MatrixXd>& mats, std::size_t skip) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Ones(mats.front().rows(), mats.front().cols());
    for (std::size_t m = 0; m < mats.size(); ++m) {
        if (m != skip) out.array() *= mats[m].array();
    }
    return out;
}

// Bookkeeping shared by both ALS front ends.
struct Sweeper {
    std::vector<Eigen::MatrixXd> factors;
    Eigen::VectorXd lambdas;
    AlsResult result;
    double best_fit = -std::numeric_limits<double>::infinity();
    std::vector<Eigen::MatrixXd> best_factors;
    Eigen::VectorXd best_lambdas;

    // Returns true when the stopping rule fires.
    bool record(double fit, double tol) {
        result.fit_history.push_back(fit);
        ++result.sweeps;
        if (fit > best_fit) {
            best_fit = fit;
            best_factors = factors;
            best_lambdas = lambdas;
        }
        const std::size_t n = result.fit_history.size();
        return n > 1 && std::abs(result.fit_history[n - 1] - result.fit_history[n - 2]) < tol;
    }

    AlsResult finish(bool converged) {
        result.converged = converged;
        result.fit = best_fit;
        result.tensor = CpdTensor(std::move(best_lambdas), std::move(best_factors));
        return std::move(result);
    }
};

}  // namespace

namespace {

// X given in CP form; products with it go through the factor Gram matrices
// cross[j] = B_j^T A_j.
class CpdSource {
public:
    explicit CpdSource(const CpdTensor& t) : t_(t), cross_(t.order()) {
        Eigen::MatrixXd gram = Eigen::MatrixXd::Ones(t.rank(), t.rank());
        for (const auto& b : t.factors()) gram.array() *= (b.transpose() * b).array();
        norm2_ = t.lambdas().dot(gram * t.lambdas());
    }

    double norm2() const { return norm2_; }

    std::vector<Eigen::MatrixXd> unfolding_grams() const {
        const auto& in = t_.factors();
        std::vector<Eigen::MatrixXd> out;
        for (std::size_t n = 0; n < in.size(); ++n) {
            Eigen::MatrixXd inner = Eigen::MatrixXd::Ones(t_.rank(), t_.rank());
            for (std::size_t m = 0; m < in.size(); ++m)
                if (m != n) inner.array() *= (in[m].transpose() * in[m]).array();
            const Eigen::MatrixXd scaled = in[n] * t_.lambdas().asDiagonal();
            out.push_back(scaled * inner * scaled.transpose());
        }
        return out;
    }

    void set_factor(std::size_t n, const Eigen::MatrixXd& a) { cross_[n] = t_.factor(n).transpose() * a; }

    Eigen::MatrixXd mttkrp(std::size_t n) const {
        return t_.factor(n) * (t_.lambdas().asDiagonal() * hadamard_all_but(cross_, n));
    }

    double inner(const std::vector<Eigen::MatrixXd>& /*factors*/, const Eigen::VectorXd& lambdas) const {
        Eigen::MatrixXd all = Eigen::MatrixXd::Ones(cross_.front().rows(), cross_.front().cols());
        for (const auto& c : cross_) all.array() *= c.array();
        return t_.lambdas().dot(all * lambdas);
    }

private:
    const CpdTensor& t_;
    std::vector<Eigen::MatrixXd> cross_;
    double norm2_ = 0.0;
};

// M(i_n, r) = sum over all entries of X(idx) * prod_{m != n} A_m(i_m, r).
Eigen::MatrixXd dense_mttkrp(const DenseTensor& x, const std::vector<Eigen::MatrixXd>& factors, std::size_t mode) {
    const std::size_t order = x.order();
    const Index rank = factors.front().cols();
    const Shape& shape = x.shape();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Index>(shape[mode]), rank);
    std::vector<std::size_t> idx(order, 0);
    Eigen::VectorXd prod(rank);
    const auto values = x.values();
    for (std::size_t flat = 0; flat < x.size(); ++flat) {
        const double v = values[flat];
        if (v != 0.0) {
            prod.setConstant(v);
            for (std::size_t m = 0; m < order; ++m) {
                if (m != mode) prod.array() *= factors[m].row(static_cast<Index>(idx[m])).transpose().array();
            }
            out.row(static_cast<Index>(idx[mode])) += prod.transpose();
        }
        for (std::size_t d = order; d-- > 0;) {
            if (++idx[d] < shape[d]) break;
            idx[d] = 0;
        }
    }
    return out;
}

class DenseSource {
public:
    explicit DenseSource(const DenseTensor& x) : x_(x), factors_(x.order()) {
        for (const double v : x.values()) norm2_ += v * v;
    }

    double norm2() const { return norm2_; }

    std::vector<Eigen::MatrixXd> unfolding_grams() const {
        const Shape& shape = x_.shape();
        std::vector<Eigen::MatrixXd> out;
        for (std::size_t n = 0; n < shape.size(); ++n) {
            const auto rows = static_cast<Index>(shape[n]);
            const auto cols = static_cast<Index>(x_.size() / shape[n]);
            const std::size_t stride = x_.strides()[n];
            // Column index enumerates the other modes: outer part above the
            // mode times the inner part below it.
            Eigen::MatrixXd unfolding(rows, cols);
            for (std::size_t flat = 0; flat < x_.size(); ++flat) {
                const auto i = static_cast<Index>((flat / stride) % shape[n]);
                const std::size_t outer = flat / (stride * shape[n]);
                const auto c = static_cast<Index>(outer * stride + flat % stride);
                unfolding(i, c) = x_.values()[flat];
            }
            out.push_back(unfolding * unfolding.transpose());
        }
        return out;
    }

    void set_factor(std::size_t n, const Eigen::MatrixXd& a) { factors_[n] = a; }

    Eigen::MatrixXd mttkrp(std::size_t n) const { return dense_mttkrp(x_, factors_, n); }

    double inner(const std::vector<Eigen::MatrixXd>& factors, const Eigen::VectorXd& lambdas) const {
        const std::size_t last = factors.size() - 1;
        return lambdas.dot((factors[last].transpose() * dense_mttkrp(x_, factors_, last)).diagonal());
    }

private:
    const DenseTensor& x_;
    std::vector<Eigen::MatrixXd> factors_;
    double norm2_ = 0.0;
};

template <class Source>
double fit_of(const Source& src, const std::vector<Eigen::MatrixXd>& factors, const std::vector<Eigen::MatrixXd>& self,
              const Eigen::VectorXd& lambdas) {
    Eigen::MatrixXd self_all = Eigen::MatrixXd::Ones(lambdas.size(), lambdas.size());
    for (const auto& h : self) self_all.array() *= h.array();
    const double norm_y2 = lambdas.dot(self_all * lambdas);
    const double resid2 = std::max(src.norm2() + norm_y2 - 2.0 * src.inner(factors, lambdas), 0.0);
    return 1.0 - std::sqrt(resid2 / src.norm2());
}

template <class Source>
AlsResult run_als(Source& src, const CpdTensor& placeholder, Index rank, const AlsOptions& options) {
    const std::size_t order = placeholder.order();
    std::mt19937_64 rng(options.seed);
    Sweeper s{.factors = initial_factors(src.unfolding_grams(), rank, options.init, rng),
              .lambdas = Eigen::VectorXd::Ones(rank),
              .result = AlsResult{placeholder, 0.0, 0, false, {}},
              .best_factors = {},
              .best_lambdas = {}};
    std::vector<Eigen::MatrixXd> self(order);
    for (std::size_t j = 0; j < order; ++j) {
        src.set_factor(j, s.factors[j]);
        self[j] = s.factors[j].transpose() * s.factors[j];
    }

    std::vector<Eigen::MatrixXd> previous;
    bool converged = false;
    for (int it = 0; it < options.max_iters; ++it) {
        for (std::size_t n = 0; n < order; ++n) {
            Eigen::MatrixXd a = solve_normal_equations(src.mttkrp(n), hadamard_all_but(self, n));
            s.lambdas = normalize_columns(a);
            s.factors[n] = std::move(a);
            src.set_factor(n, s.factors[n]);
            self[n] = s.factors[n].transpose() * s.factors[n];
        }
        double fit = fit_of(src, s.factors, self, s.lambdas);

        std::vector<Eigen::MatrixXd> current = absorbed(s.factors, s.lambdas);
        if (options.line_search && !previous.empty()) {
            const double step = extrapolation_step(it + 1);
            std::vector<Eigen::MatrixXd> cand(order), cand_self(order);
            Eigen::VectorXd cand_lambdas = Eigen::VectorXd::Ones(rank);
            for (std::size_t j = 0; j < order; ++j) {
                cand[j] = previous[j] + step * (current[j] - previous[j]);
                cand_lambdas.array() *= normalize_columns(cand[j]).array();
                cand_self[j] = cand[j].transpose() * cand[j];
                src.set_factor(j, cand[j]);
            }
            const double cand_fit = fit_of(src, cand, cand_self, cand_lambdas);
            if (cand_fit > fit) {
                s.factors = std::move(cand);
                s.lambdas = std::move(cand_lambdas);
                self = std::move(cand_self);
                fit = cand_fit;
                current = absorbed(s.factors, s.lambdas);
            } else {
                for (std::size_t j = 0; j < order; ++j) src.set_factor(j, s.factors[j]);
            }
        }
        previous = std::move(current);

        if (s.record(fit, options.tol)) {
            converged = true;
            break;
        }
    }
    return s.finish(converged);
}

}  // namespace

AlsResult rank_reduce_als(const CpdTensor& t, Index target_rank, const AlsOptions& options) {
    check_options(target_rank, options);
    if (t.rank() <= target_rank) return AlsResult{t, 1.0, 0, true, {}};
    CpdSource src(t);
    if (!(src.norm2() > 0.0)) return AlsResult{zero_tensor(t.shape(), target_rank), 1.0, 0, true, {}};
    return run_als(src, t, target_rank, options);
}

AlsResult decompose_dense(const DenseTensor& m, Index rank, const AlsOptions& options) {
    check_options(rank, options);
    DenseSource src(m);
    if (!(src.norm2() > 0.0)) return AlsResult{zero_tensor(m.shape(), rank), 1.0, 0, true, {}};
    return run_als(src, CpdTensor::ones(m.shape()), rank, options);
}

}  // namespace tpmf
