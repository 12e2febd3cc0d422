// SPDX-License-Identifier: MIT
/**
 * @file operators.hpp
 * @brief Test operators with certified bound B, Lipschitz constant L and
 *        smoothness scale t.
 *
 * Families:
 *  - tent / bump functionals lifted onto one output coefficient,
 *  - clipped linear maps  X -> A X * min(1, B / |A X|),
 *  - the zero operator.
 *
 * Every certificate is analytic. Sampled difference quotients are only used
 * by the tests.
 */
#pragma once

#include "oplab/core.hpp"
#include "oplab/spectrum.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace oplab {

/// prod_{i<=d} max(1 - |x_i| / sqrt(lambda_i), 0), scaled by `amplitude`.
class TentFunctional {
public:
    TentFunctional(std::size_t d, const SpectrumProfile& spectrum, double amplitude = 1.0)
        : amplitude_(amplitude), inv_sum_(spectrum.inv_sum(d)) {
        if (d == 0) throw std::invalid_argument("tent needs d >= 1");
        if (!(amplitude >= 0.0)) throw std::invalid_argument("tent amplitude must be >= 0");
        sqrt_lambdas_.resize(d);
        for (std::size_t i = 0; i < d; ++i) sqrt_lambdas_[i] = std::sqrt(spectrum.eigenvalue(i + 1));
    }

    [[nodiscard]] std::size_t d() const noexcept { return sqrt_lambdas_.size(); }
    [[nodiscard]] double amplitude() const noexcept { return amplitude_; }

    [[nodiscard]] double value(std::span<const double> x) const noexcept {
        double product = amplitude_;
        for (std::size_t i = 0; i < sqrt_lambdas_.size() && product != 0.0; ++i) {
            product *= std::max(1.0 - std::abs(coord(x, i)) / sqrt_lambdas_[i], 0.0);
        }
        return product;
    }

    [[nodiscard]] double bound() const noexcept { return amplitude_; }
    /// amplitude * sqrt(sum_{i<=d} 1/lambda_i).
    [[nodiscard]] double lipschitz() const noexcept { return amplitude_ * std::sqrt(inv_sum_); }

private:
    std::vector<double> sqrt_lambdas_;
    double amplitude_;
    double inv_sum_;
};

[[nodiscard]] inline double tent(std::span<const double> x, std::size_t d,
                                 const SpectrumProfile& spectrum) {
    return TentFunctional(d, spectrum).value(x);
}

/**
 * Regular grid of floor(a/h)^d centers in whitened coordinates, spacing 2h,
 * first center at -a + h on every axis. The closed h-boxes around the centers
 * lie in [-a, a]^d and have pairwise disjoint interiors.
 */
struct CenterGrid {
    double a = 1.0;
    double h = 0.125;
    std::size_t d = 1;
    std::size_t per_axis = 8;

    CenterGrid() = default;
    CenterGrid(double a_, double h_, std::size_t d_) : a(a_), h(h_), d(d_) {
        if (!(a > 0.0) || !(h > 0.0)) throw std::invalid_argument("center grid needs a, h > 0");
        if (h / a > 0.125 + 1e-15) throw std::invalid_argument("center grid needs h/a <= 1/8");
        if (d == 0) throw std::invalid_argument("center grid needs d >= 1");
        // The small slack keeps a/h = 8 from rounding down to 7.
        per_axis = static_cast<std::size_t>(std::floor(a / h * (1.0 + 1e-12)));
    }

    /// floor(a/h)^d; nullopt when it does not fit in 64 bits.
    [[nodiscard]] std::optional<std::uint64_t> count() const noexcept {
        std::uint64_t n = 1;
        for (std::size_t i = 0; i < d; ++i) {
            if (n > std::numeric_limits<std::uint64_t>::max() / per_axis) return std::nullopt;
            n *= per_axis;
        }
        return n;
    }

    /// log floor(a/h)^d, valid at any size.
    [[nodiscard]] double log_count() const noexcept {
        return static_cast<double>(d) * std::log(static_cast<double>(per_axis));
    }

    [[nodiscard]] double axis_center(std::size_t k) const noexcept {
        return -a + h + 2.0 * h * static_cast<double>(k);
    }

    [[nodiscard]] std::vector<double> center(std::uint64_t index) const {
        std::vector<double> c(d);
        for (std::size_t i = 0; i < d; ++i) {
            c[i] = axis_center(static_cast<std::size_t>(index % per_axis));
            index /= per_axis;
        }
        return c;
    }
};

/// Parameters of F_theta = (L h / sqrt(sum 1/lambda)) sum_i theta_i tent((. - C_i)/h).
struct BumpFamilyParams {
    CenterGrid grid;
    std::vector<std::uint8_t> theta;  // one bit per center
    double L = 1.0;
    std::vector<double> lambdas;      // lambda_1..lambda_d
};

class BumpFunctional {
public:
    explicit BumpFunctional(BumpFamilyParams params) : params_(std::move(params)) {
        const auto& g = params_.grid;
        if (params_.lambdas.size() != g.d) throw std::invalid_argument("bump: need d eigenvalues");
        const auto n = g.count();
        if (!n || params_.theta.size() != *n) {
            throw std::invalid_argument("bump: theta length must equal the number of centers");
        }
        long double inv = 0.0L;
        sqrt_lambdas_.resize(g.d);
        for (std::size_t i = 0; i < g.d; ++i) {
            sqrt_lambdas_[i] = std::sqrt(params_.lambdas[i]);
            inv += 1.0L / params_.lambdas[i];
        }
        inv_sum_ = static_cast<double>(inv);
        peak_ = params_.L * g.h / std::sqrt(inv_sum_);
    }

    [[nodiscard]] const BumpFamilyParams& params() const noexcept { return params_; }
    [[nodiscard]] double inv_sum() const noexcept { return inv_sum_; }

    /// Lh / sqrt(sum_{j<=d} 1/lambda_j): the value at an active center.
    [[nodiscard]] double peak() const noexcept { return peak_; }
    [[nodiscard]] double bound() const noexcept { return peak_; }
    [[nodiscard]] double lipschitz() const noexcept { return params_.L; }

    /// Index of the center whose box contains x (in whitened coordinates)
    /// together with the unscaled tent value there.
    [[nodiscard]] std::pair<std::uint64_t, double> locate(std::span<const double> x) const noexcept {
        const auto& g = params_.grid;
        std::uint64_t index = 0;
        std::uint64_t stride = 1;
        double product = 1.0;
        for (std::size_t i = 0; i < g.d; ++i) {
            const double z = coord(x, i) / sqrt_lambdas_[i];
            const double t = std::floor((z + g.a) / (2.0 * g.h));
            if (t < 0.0 || t >= static_cast<double>(g.per_axis)) return {0, 0.0};
            const auto k = static_cast<std::size_t>(t);
            product *= std::max(1.0 - std::abs(z - g.axis_center(k)) / g.h, 0.0);
            if (product == 0.0) return {0, 0.0};
            index += k * stride;
            stride *= g.per_axis;
        }
        return {index, product};
    }

    [[nodiscard]] double value(std::span<const double> x) const noexcept {
        const auto [index, product] = locate(x);
        if (product == 0.0 || !params_.theta[index]) return 0.0;
        return peak_ * product;
    }

private:
    BumpFamilyParams params_;
    std::vector<double> sqrt_lambdas_;
    double inv_sum_ = 0.0;
    double peak_ = 0.0;
};

using Functional = std::variant<TentFunctional, BumpFunctional>;

[[nodiscard]] inline double functional_value(const Functional& f, std::span<const double> x) {
    return std::visit([&](const auto& g) { return g.value(x); }, f);
}

/// Largest singular value of `A` by power iteration on A^T A.
[[nodiscard]] inline double operator_norm(const Eigen::MatrixXd& A, double rel_tol = 1e-13,
                                          int max_iter = 100000) {
    if (A.size() == 0) return 0.0;
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(A.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd w = A.transpose() * (A * v);
        const double next = w.norm();
        if (next == 0.0) return 0.0;
        v = w / next;
        if (std::abs(next - estimate) <= rel_tol * next) {
            estimate = next;
            break;
        }
        estimate = next;
    }
    return std::sqrt(estimate);
}

/// X -> A X scaled by min(1, B / |A X|). Input coordinates beyond A.cols()
/// are ignored; output has A.rows() coefficients.
class ClippedLinear {
public:
    ClippedLinear(Eigen::MatrixXd weights, double B, double L)
        : weights_(std::move(weights)), B_(B), L_(L) {
        if (weights_.rows() == 0 || weights_.cols() == 0) {
            throw std::invalid_argument("clipped_linear needs a nonempty weight matrix");
        }
        if (!(B >= 0.0) || !(L >= 0.0)) throw std::invalid_argument("clipped_linear needs B, L >= 0");
        // Accepted when the power-iteration norm is within 1e-9 (relative) of L,
        // so a weight matrix with norm exactly L certifies.
        norm_ = operator_norm(weights_);
        if (norm_ > L_ * (1.0 + 1e-9)) {
            throw Error("clipped_linear: weight operator norm " + std::to_string(norm_) +
                        " exceeds the certified Lipschitz constant " + std::to_string(L_));
        }
    }

    [[nodiscard]] std::size_t output_dim() const noexcept {
        return static_cast<std::size_t>(weights_.rows());
    }
    [[nodiscard]] std::size_t input_dim() const noexcept {
        return static_cast<std::size_t>(weights_.cols());
    }
    [[nodiscard]] const Eigen::MatrixXd& weights() const noexcept { return weights_; }
    [[nodiscard]] double weight_norm() const noexcept { return norm_; }
    [[nodiscard]] double bound() const noexcept { return B_; }
    [[nodiscard]] double lipschitz() const noexcept { return L_; }

    void evaluate(std::span<const double> x, std::span<double> y) const {
        const auto cols = weights_.cols();
        Eigen::VectorXd in(cols);
        for (Eigen::Index j = 0; j < cols; ++j) in[j] = coord(x, static_cast<std::size_t>(j));
        Eigen::VectorXd out = weights_ * in;
        const double norm = out.norm();
        if (norm > B_) out *= B_ / norm;
        for (Eigen::Index i = 0; i < out.size(); ++i) y[static_cast<std::size_t>(i)] = out[i];
        for (std::size_t i = static_cast<std::size_t>(out.size()); i < y.size(); ++i) y[i] = 0.0;
    }

private:
    Eigen::MatrixXd weights_;
    double B_;
    double L_;
    double norm_ = 0.0;
};

/// Evaluates clipped_linear at one point.
[[nodiscard]] inline std::vector<double> clipped_linear(std::span<const double> x,
                                                        const ClippedLinear& op) {
    std::vector<double> y(op.output_dim());
    op.evaluate(x, y);
    return y;
}

/// X -> f(X) e_direction (direction is 1-based).
struct LiftedOperator {
    Functional functional;
    std::size_t direction = 1;
    std::size_t output_dim = 1;
};

struct ZeroOperator {
    std::size_t output_dim = 1;
};

/**
 * A certified member of F_{B,L} (and of F^t_{B,L} with the bound returned by
 * `smoothness_bound(t)`, using weights w_i = i).
 */
class TestOperator {
public:
    using Family = std::variant<ZeroOperator, LiftedOperator, ClippedLinear>;

    explicit TestOperator(Family family) : family_(std::move(family)) {}

    [[nodiscard]] static TestOperator zero(std::size_t output_dim = 1) {
        return TestOperator(ZeroOperator{output_dim});
    }

    [[nodiscard]] const Family& family() const noexcept { return family_; }

    [[nodiscard]] std::string family_name() const {
        struct Visitor {
            std::string operator()(const ZeroOperator&) const { return "zero"; }
            std::string operator()(const ClippedLinear&) const { return "clipped_linear"; }
            std::string operator()(const LiftedOperator& op) const {
                return std::holds_alternative<TentFunctional>(op.functional) ? "tent_product"
                                                                            : "bump_sum";
            }
        };
        return std::visit(Visitor{}, family_);
    }

    [[nodiscard]] std::size_t output_dim() const noexcept {
        struct Visitor {
            std::size_t operator()(const ZeroOperator& op) const { return op.output_dim; }
            std::size_t operator()(const LiftedOperator& op) const { return op.output_dim; }
            std::size_t operator()(const ClippedLinear& op) const { return op.output_dim(); }
        };
        return std::visit(Visitor{}, family_);
    }

    void evaluate(std::span<const double> x, std::span<double> y) const {
        std::fill(y.begin(), y.end(), 0.0);
        struct Visitor {
            std::span<const double> x;
            std::span<double> y;
            void operator()(const ZeroOperator&) const {}
            void operator()(const LiftedOperator& op) const {
                if (op.direction <= y.size()) y[op.direction - 1] = functional_value(op.functional, x);
            }
            void operator()(const ClippedLinear& op) const { op.evaluate(x, y); }
        };
        std::visit(Visitor{x, y}, family_);
    }

    [[nodiscard]] std::vector<double> operator()(std::span<const double> x) const {
        std::vector<double> y(output_dim());
        evaluate(x, y);
        return y;
    }

    /// Certified sup_X ||F(X)||_Y.
    [[nodiscard]] double bound() const { return smoothness_bound(0.0); }

    /// Certified sup_X ||F(X)||_{Y^t} with w_i = i.
    [[nodiscard]] double smoothness_bound(double t) const {
        struct Visitor {
            double t;
            double operator()(const ZeroOperator&) const { return 0.0; }
            double operator()(const LiftedOperator& op) const {
                const double b = std::visit([](const auto& f) { return f.bound(); }, op.functional);
                return std::pow(static_cast<double>(op.direction), t) * b;
            }
            double operator()(const ClippedLinear& op) const {
                return std::pow(static_cast<double>(op.output_dim()), t) * op.bound();
            }
        };
        return std::visit(Visitor{t}, family_);
    }

    /// Certified Lipschitz constant.
    [[nodiscard]] double lipschitz() const {
        struct Visitor {
            double operator()(const ZeroOperator&) const { return 0.0; }
            double operator()(const LiftedOperator& op) const {
                return std::visit([](const auto& f) { return f.lipschitz(); }, op.functional);
            }
            double operator()(const ClippedLinear& op) const { return op.lipschitz(); }
        };
        return std::visit(Visitor{}, family_);
    }

private:
    Family family_;
};

/// X -> f(X) e_direction. `output_dim` defaults to `direction`.
[[nodiscard]] inline TestOperator lift_to_operator(Functional f, std::size_t direction,
                                                   std::size_t output_dim = 0) {
    if (direction == 0) throw std::invalid_argument("lift direction is 1-based");
    if (output_dim == 0) output_dim = direction;
    if (output_dim < direction) throw std::invalid_argument("lift direction beyond output_dim");
    return TestOperator(LiftedOperator{std::move(f), direction, output_dim});
}

}  // namespace oplab
