// SPDX-License-Identifier: MIT
//
// Shared vocabulary for the oplab headers: error types, the dense point
// container used for designs/samples/datasets, and seeded random streams.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace oplab {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A quantity that does not fit in a double. Carries its natural log.
class OverflowError : public Error {
public:
    OverflowError(const std::string& what, double log_value)
        : Error(what), log_value_(log_value) {}
    [[nodiscard]] double log_value() const noexcept { return log_value_; }

private:
    double log_value_;
};

/// A parameter-selection or bound inequality that cannot be met.
///
/// `min_k` is the smallest m/sigma^2 that would satisfy the violated
/// inequality when one is known, otherwise NaN.
class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& what, double min_k = std::nan(""))
        : Error(what), min_k_(min_k) {}
    [[nodiscard]] double min_k() const noexcept { return min_k_; }

private:
    double min_k_;
};

using Rng = std::mt19937_64;

/// splitmix64 finalizer. Used to derive independent per-row and per-trial
/// seeds from one master seed.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                                  std::uint64_t stream) noexcept {
    return mix64(mix64(parent) ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Row-major block of equally sized real vectors.
///
/// Rows shorter than the ambient dimension are the norm here: a point with
/// `dim()` coordinates is read as having zeros in every later coordinate.
class PointSet {
public:
    PointSet() = default;
    PointSet(std::size_t count, std::size_t dim)
        : count_(count), dim_(dim), data_(count * dim, 0.0) {}

    [[nodiscard]] std::size_t size() const noexcept { return count_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] bool empty() const noexcept { return count_ == 0; }

    [[nodiscard]] std::span<double> row(std::size_t i) noexcept {
        return {data_.data() + i * dim_, dim_};
    }
    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * dim_, dim_};
    }
    [[nodiscard]] std::span<const double> operator[](std::size_t i) const noexcept {
        return row(i);
    }

    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

    void push_back(std::span<const double> values) {
        if (values.size() != dim_) {
            throw std::invalid_argument("PointSet::push_back: dimension mismatch");
        }
        data_.insert(data_.end(), values.begin(), values.end());
        ++count_;
    }

    friend bool operator==(const PointSet&, const PointSet&) = default;

private:
    std::size_t count_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

/// Anything that maps an input coordinate vector to output coefficients.
template <class P>
concept Predictor = requires(const P& p, std::span<const double> x, std::span<double> y) {
    { p.output_dim() } -> std::convertible_to<std::size_t>;
    p.evaluate(x, y);
};

/// Adapts a callable `void(std::span<const double>, std::span<double>)`.
template <class Fn>
class FunctionPredictor {
public:
    FunctionPredictor(std::size_t output_dim, Fn fn) : dim_(output_dim), fn_(std::move(fn)) {}
    [[nodiscard]] std::size_t output_dim() const noexcept { return dim_; }
    void evaluate(std::span<const double> x, std::span<double> y) const { fn_(x, y); }

private:
    std::size_t dim_;
    Fn fn_;
};

/// Coordinate `i` of `x`, reading missing trailing coordinates as zero.
[[nodiscard]] inline double coord(std::span<const double> x, std::size_t i) noexcept {
    return i < x.size() ? x[i] : 0.0;
}

[[nodiscard]] inline double euclidean_norm(std::span<const double> v) noexcept {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// ||a - b|| over max(|a|, |b|) coordinates, zero-padding the shorter one.
[[nodiscard]] inline double padded_distance(std::span<const double> a,
                                            std::span<const double> b) noexcept {
    const std::size_t n = std::max(a.size(), b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double diff = coord(a, i) - coord(b, i);
        s += diff * diff;
    }
    return std::sqrt(s);
}

}  // namespace oplab
