// SPDX-License-Identifier: MIT
/**
 * @file spectrum.hpp
 * @brief Eigenvalue decay profiles and the aggregates the bound formulas use.
 *
 * Four profile kinds are supported:
 *   algebraic           lambda_i = i^-alpha             (alpha > 1)
 *   exponential         lambda_i = exp(-alpha i^beta)
 *   double_exponential  lambda_i = exp(-exp(alpha i))
 *   explicit_list       a finite, nonincreasing list of positive values
 *
 * Indices are 1-based throughout, matching the usual eigenvalue notation.
 * Quantities that leave double range (products of tiny eigenvalues, sums of
 * their reciprocals) are available in the log domain.
 */
#pragma once

#include "oplab/core.hpp"

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace oplab {

enum class SpectrumKind { algebraic, exponential, double_exponential, explicit_list };

[[nodiscard]] inline const char* to_string(SpectrumKind kind) noexcept {
    switch (kind) {
        case SpectrumKind::algebraic: return "algebraic";
        case SpectrumKind::exponential: return "exponential";
        case SpectrumKind::double_exponential: return "double_exponential";
        case SpectrumKind::explicit_list: return "explicit";
    }
    return "?";
}

class SpectrumProfile {
public:
    [[nodiscard]] static SpectrumProfile algebraic(double alpha) {
        if (!(alpha > 1.0) || !std::isfinite(alpha)) {
            throw std::invalid_argument("algebraic spectrum needs alpha > 1 for a finite trace");
        }
        return SpectrumProfile(SpectrumKind::algebraic, alpha, 0.0, {});
    }

    [[nodiscard]] static SpectrumProfile exponential(double alpha, double beta) {
        if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
            throw std::invalid_argument("exponential spectrum needs alpha > 0 and beta > 0");
        }
        return SpectrumProfile(SpectrumKind::exponential, alpha, beta, {});
    }

    [[nodiscard]] static SpectrumProfile double_exponential(double alpha) {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) {
            throw std::invalid_argument("double-exponential spectrum needs alpha > 0");
        }
        return SpectrumProfile(SpectrumKind::double_exponential, alpha, 0.0, {});
    }

    [[nodiscard]] static SpectrumProfile explicit_list(std::vector<double> values) {
        if (values.empty()) throw std::invalid_argument("explicit spectrum must be nonempty");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
                throw std::invalid_argument("explicit spectrum values must be positive and finite");
            }
            if (i > 0 && values[i] > values[i - 1]) {
                throw std::invalid_argument("explicit spectrum values must be nonincreasing");
            }
        }
        return SpectrumProfile(SpectrumKind::explicit_list, 0.0, 0.0, std::move(values));
    }

    [[nodiscard]] SpectrumKind kind() const noexcept { return kind_; }
    [[nodiscard]] double alpha() const noexcept { return alpha_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

    /// Number of eigenvalues for explicit lists; nullopt for infinite profiles.
    [[nodiscard]] std::optional<std::size_t> length() const noexcept {
        if (kind_ == SpectrumKind::explicit_list) return values_.size();
        return std::nullopt;
    }

    [[nodiscard]] double log_eigenvalue(std::size_t i) const {
        check_index(i);
        const double x = static_cast<double>(i);
        switch (kind_) {
            case SpectrumKind::algebraic: return -alpha_ * std::log(x);
            case SpectrumKind::exponential: return -alpha_ * std::pow(x, beta_);
            case SpectrumKind::double_exponential: return -std::exp(alpha_ * x);
            case SpectrumKind::explicit_list: return std::log(values_[i - 1]);
        }
        return 0.0;
    }

    /// lambda_i. Values below the smallest subnormal are clamped to it so the
    /// result stays positive; use log_eigenvalue for the exact magnitude.
    [[nodiscard]] double eigenvalue(std::size_t i) const {
        if (kind_ == SpectrumKind::explicit_list) {
            check_index(i);
            return values_[i - 1];
        }
        return std::max(std::exp(log_eigenvalue(i)), std::numeric_limits<double>::denorm_min());
    }

    /// log(sum_{j<=d} 1/lambda_j), stable for any magnitude.
    [[nodiscard]] double log_inv_sum(std::size_t d) const {
        if (d == 0) throw std::invalid_argument("inv_sum needs d >= 1");
        // The largest reciprocal is the last one (nonincreasing spectrum).
        const double top = -log_eigenvalue(d);
        long double acc = 0.0L;
        for (std::size_t j = 1; j <= d; ++j) {
            acc += std::exp(static_cast<long double>(-log_eigenvalue(j) - top));
        }
        return top + static_cast<double>(std::log(acc));
    }

    /// sum_{j<=d} 1/lambda_j. Throws OverflowError (carrying the log) when
    /// the sum exceeds double range.
    [[nodiscard]] double inv_sum(std::size_t d) const {
        const double log_value = log_inv_sum(d);
        if (log_value >= std::log(std::numeric_limits<double>::max())) {
            throw OverflowError("inv_sum exceeds double range", log_value);
        }
        long double acc = 0.0L;
        for (std::size_t j = 1; j <= d; ++j) {
            acc += std::exp(static_cast<long double>(-log_eigenvalue(j)));
        }
        return static_cast<double>(acc);
    }

    /// sum_{j<=d} log lambda_j.
    [[nodiscard]] double log_product(std::size_t d) const {
        if (d == 0) throw std::invalid_argument("log_product needs d >= 1");
        long double acc = 0.0L;
        for (std::size_t j = 1; j <= d; ++j) acc += log_eigenvalue(j);
        return static_cast<double>(acc);
    }

    /// sum_{j<=d} lambda_j (d may be zero).
    [[nodiscard]] double head_sum(std::size_t d) const {
        long double acc = 0.0L;
        for (std::size_t j = 1; j <= d; ++j) acc += eigenvalue(j);
        return static_cast<double>(acc);
    }

    /**
     * sum_{j>d} lambda_j to relative tolerance `rel_tol`.
     *
     * Terms are added one at a time; after each term the unsummed remainder
     * is bracketed with integral comparison bounds and the loop stops once
     * half the bracket width is within rel_tol of the running total. Where
     * lambda(x) is convex the bracket is
     *   [ int_{N+1}^inf + lambda_{N+1}/2 ,  int_{N+1/2}^inf ],
     * otherwise the monotone bracket [ int_{N+1}^inf, int_N^inf ] is used.
     */
    [[nodiscard]] double tail_sum(std::size_t d, double rel_tol = 1e-12) const {
        if (!(rel_tol > 0.0)) throw std::invalid_argument("tail_sum needs rel_tol > 0");
        if (kind_ == SpectrumKind::explicit_list) {
            long double acc = 0.0L;
            for (std::size_t j = d + 1; j <= values_.size(); ++j) acc += values_[j - 1];
            return static_cast<double>(acc);
        }
        long double partial = 0.0L;
        for (std::size_t n = d + 1;; ++n) {
            partial += eigenvalue(n);
            const double x = static_cast<double>(n);
            double lo = 0.0;
            double hi = 0.0;
            if (convex_from(x + 0.5)) {
                lo = tail_integral(x + 1.0) + 0.5 * std::exp(log_eigenvalue(n + 1));
                hi = tail_integral(x + 0.5);
            } else {
                lo = tail_integral(x + 1.0);
                hi = tail_integral(x);
            }
            if (hi < lo) hi = lo;  // rounding in the special functions
            const long double half_width = 0.5L * (static_cast<long double>(hi) - lo);
            if (hi == 0.0 ||
                half_width <= static_cast<long double>(rel_tol) * (partial + lo)) {
                return static_cast<double>(partial + 0.5L * (static_cast<long double>(lo) + hi));
            }
        }
    }

    [[nodiscard]] double trace(double rel_tol = 1e-12) const { return tail_sum(0, rel_tol); }

    /// int_x^inf lambda(t) dt for the closed-form kinds (x > 0).
    [[nodiscard]] double tail_integral(double x) const {
        switch (kind_) {
            case SpectrumKind::algebraic:
                return std::pow(x, 1.0 - alpha_) / (alpha_ - 1.0);
            case SpectrumKind::exponential: {
                const double z = alpha_ * std::pow(x, beta_);
                const double a = 1.0 / beta_;
                if (z > 745.0 + 50.0 * a) return 0.0;
                return boost::math::tgamma(a, z) / (beta_ * std::pow(alpha_, a));
            }
            case SpectrumKind::double_exponential: {
                const double z = std::exp(alpha_ * x);
                if (z > 740.0) return 0.0;
                return boost::math::expint(1, z) / alpha_;
            }
            case SpectrumKind::explicit_list:
                break;
        }
        throw std::logic_error("tail_integral is undefined for explicit spectra");
    }

    friend bool operator==(const SpectrumProfile&, const SpectrumProfile&) = default;

private:
    SpectrumProfile(SpectrumKind kind, double alpha, double beta, std::vector<double> values)
        : kind_(kind), alpha_(alpha), beta_(beta), values_(std::move(values)) {}

    void check_index(std::size_t i) const {
        if (i == 0) throw std::out_of_range("eigenvalue index is 1-based");
        if (kind_ == SpectrumKind::explicit_list && i > values_.size()) {
            throw std::out_of_range("eigenvalue index " + std::to_string(i) +
                                    " beyond explicit list of length " +
                                    std::to_string(values_.size()));
        }
    }

    // lambda(t) is convex on [x, inf).
    [[nodiscard]] bool convex_from(double x) const {
        if (kind_ != SpectrumKind::exponential || beta_ <= 1.0) return true;
        // (exp(-a t^b))'' >= 0  iff  a b t^b >= b - 1.
        return alpha_ * beta_ * std::pow(x, beta_) >= beta_ - 1.0;
    }

    SpectrumKind kind_;
    double alpha_;
    double beta_;
    std::vector<double> values_;
};

}  // namespace oplab
