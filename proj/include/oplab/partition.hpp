// SPDX-License-Identifier: MIT
//
// Tensor-grid partition of the box D = { |x_i| <= sqrt(R lambda_i), i <= d }.
#pragma once

#include "oplab/core.hpp"
#include "oplab/spectrum.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oplab {

/// Flattened mixed-radix cell index. Axis 0 is the fastest-varying digit.
using CellIndex = std::uint64_t;

/**
 * Each axis interval [-sqrt(R lambda_i), sqrt(R lambda_i)] is cut into n_i
 * equal pieces. Pieces are half-open [left, right) except the last one on
 * each axis, which is closed, so every point of D has exactly one cell.
 */
class HistogramPartition {
public:
    HistogramPartition(double R, std::vector<std::size_t> counts, std::vector<double> lambdas)
        : R_(R), counts_(std::move(counts)), lambdas_(std::move(lambdas)) {
        if (counts_.empty()) throw std::invalid_argument("partition needs d >= 1");
        if (lambdas_.size() != counts_.size()) {
            throw std::invalid_argument("partition: one eigenvalue per axis required");
        }
        if (!(R_ > 0.0) || !std::isfinite(R_)) throw std::invalid_argument("partition needs R > 0");
        strides_.resize(counts_.size());
        half_widths_.resize(counts_.size());
        CellIndex total = 1;
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            if (counts_[i] == 0) throw std::invalid_argument("partition needs n_i >= 1");
            if (!(lambdas_[i] > 0.0)) throw std::invalid_argument("partition needs lambda_i > 0");
            strides_[i] = total;
            if (total > std::numeric_limits<CellIndex>::max() / counts_[i]) {
                throw InfeasibleError("partition has more than 2^64 cells");
            }
            total *= counts_[i];
            half_widths_[i] = std::sqrt(R_ * lambdas_[i]);
        }
        cell_count_ = total;
    }

    /// Partition over the first d eigencoordinates of `spectrum`.
    HistogramPartition(double R, std::vector<std::size_t> counts, const SpectrumProfile& spectrum)
        : HistogramPartition(R, counts, leading_eigenvalues(spectrum, counts.size())) {}

    [[nodiscard]] std::size_t d() const noexcept { return counts_.size(); }
    [[nodiscard]] double R() const noexcept { return R_; }
    [[nodiscard]] const std::vector<std::size_t>& counts() const noexcept { return counts_; }
    [[nodiscard]] const std::vector<double>& lambdas() const noexcept { return lambdas_; }
    [[nodiscard]] double half_width(std::size_t axis) const { return half_widths_.at(axis); }
    [[nodiscard]] CellIndex cell_count() const noexcept { return cell_count_; }

    /// Cell containing `x`, or nullopt when x lies outside D.
    [[nodiscard]] std::optional<CellIndex> cell_index(std::span<const double> x) const noexcept {
        CellIndex index = 0;
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            const double hw = half_widths_[i];
            const double v = coord(x, i);
            if (!(std::abs(v) <= hw)) return std::nullopt;
            const auto n = static_cast<double>(counts_[i]);
            double pos = std::floor((v / hw + 1.0) * 0.5 * n);
            if (pos < 0.0) pos = 0.0;
            if (pos >= n) pos = n - 1.0;
            index += static_cast<CellIndex>(pos) * strides_[i];
        }
        return index;
    }

    [[nodiscard]] std::vector<std::size_t> unflatten(CellIndex index) const {
        if (index >= cell_count_) throw std::out_of_range("cell index out of range");
        std::vector<std::size_t> digits(counts_.size());
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            digits[i] = static_cast<std::size_t>(index % counts_[i]);
            index /= counts_[i];
        }
        return digits;
    }

    [[nodiscard]] CellIndex flatten(std::span<const std::size_t> digits) const {
        if (digits.size() != counts_.size()) throw std::invalid_argument("digit count mismatch");
        CellIndex index = 0;
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            if (digits[i] >= counts_[i]) throw std::out_of_range("cell digit out of range");
            index += digits[i] * strides_[i];
        }
        return index;
    }

    /// Per-axis [lower, upper] bounds of a cell.
    [[nodiscard]] std::vector<std::pair<double, double>> cell_box(CellIndex index) const {
        const auto digits = unflatten(index);
        std::vector<std::pair<double, double>> box(counts_.size());
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            const double width = 2.0 * half_widths_[i] / static_cast<double>(counts_[i]);
            const double lo = -half_widths_[i] + width * static_cast<double>(digits[i]);
            box[i] = {lo, lo + width};
        }
        return box;
    }

    /// Coordinatewise midpoint of a cell (d coordinates).
    [[nodiscard]] std::vector<double> cell_midpoint(CellIndex index) const {
        const auto digits = unflatten(index);
        std::vector<double> mid(counts_.size());
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            const auto n = static_cast<double>(counts_[i]);
            mid[i] = half_widths_[i] * ((2.0 * static_cast<double>(digits[i]) + 1.0) / n - 1.0);
        }
        return mid;
    }

    /// sqrt(sum_j lambda_j / n_j^2): the per-cell spread term of the bias bound.
    [[nodiscard]] double resolution() const noexcept {
        double s = 0.0;
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            const auto n = static_cast<double>(counts_[i]);
            s += lambdas_[i] / (n * n);
        }
        return std::sqrt(s);
    }

    friend bool operator==(const HistogramPartition& a, const HistogramPartition& b) {
        return a.R_ == b.R_ && a.counts_ == b.counts_ && a.lambdas_ == b.lambdas_;
    }

    [[nodiscard]] static std::vector<double> leading_eigenvalues(const SpectrumProfile& spectrum,
                                                                 std::size_t d) {
        std::vector<double> out(d);
        for (std::size_t i = 0; i < d; ++i) out[i] = spectrum.eigenvalue(i + 1);
        return out;
    }

private:
    double R_;
    std::vector<std::size_t> counts_;
    std::vector<double> lambdas_;
    std::vector<CellIndex> strides_;
    std::vector<double> half_widths_;
    CellIndex cell_count_ = 0;
};

}  // namespace oplab
