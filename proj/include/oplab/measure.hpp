// SPDX-License-Identifier: MIT
//
// Input measures in eigencoordinates and the fixed / random designs.
#pragma once

#include "oplab/core.hpp"
#include "oplab/partition.hpp"
#include "oplab/spectrum.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace oplab {

enum class LawKind { uniform, gaussian };

[[nodiscard]] inline const char* to_string(LawKind kind) noexcept {
    return kind == LawKind::uniform ? "uniform" : "gaussian";
}

/// Constants of the density floor nu(x) >= b on [-a, a]; iota = 2ab.
struct LawConstants {
    double a = 1.0;
    double b = 0.5;
    double iota = 1.0;
};

/**
 * Law of a whitened coordinate xi: mean zero, unit variance.
 *
 * uniform   uniform on [-sqrt 3, sqrt 3]; a = sqrt 3, b = 1/(2 sqrt 3), iota = 1
 * gaussian  standard normal;             a = 1, b = phi(1),         iota = 2 phi(1)
 */
class CoordinateLaw {
public:
    explicit CoordinateLaw(LawKind kind = LawKind::uniform) : kind_(kind) {}

    [[nodiscard]] LawKind kind() const noexcept { return kind_; }

    [[nodiscard]] LawConstants constants() const noexcept {
        if (kind_ == LawKind::uniform) {
            const double a = std::numbers::sqrt3;
            const double b = 1.0 / (2.0 * std::numbers::sqrt3);
            return {a, b, 2.0 * a * b};
        }
        const double b = std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi);
        return {1.0, b, 2.0 * b};
    }

    [[nodiscard]] double density(double x) const noexcept {
        if (kind_ == LawKind::uniform) {
            return std::abs(x) <= std::numbers::sqrt3 ? 1.0 / (2.0 * std::numbers::sqrt3) : 0.0;
        }
        return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    }

    /// E|xi|^q in closed form.
    [[nodiscard]] double absolute_moment(double q) const {
        if (!(q >= 0.0)) throw std::invalid_argument("absolute_moment needs q >= 0");
        if (kind_ == LawKind::uniform) return std::pow(std::numbers::sqrt3, q) / (q + 1.0);
        return std::pow(2.0, 0.5 * q) * boost::math::tgamma(0.5 * (q + 1.0)) /
               std::sqrt(std::numbers::pi);
    }

    /// (E|xi|^p')^(1/p') with p' = max(p, 2).
    [[nodiscard]] double moment_bound(double p) const {
        const double q = std::max(p, 2.0);
        return std::pow(absolute_moment(q), 1.0 / q);
    }

    /// Stateful draw functor; keep one per stream so the normal
    /// distribution's cached second variate is not thrown away.
    class Sampler {
    public:
        explicit Sampler(LawKind kind) : kind_(kind) {}
        double operator()(Rng& rng) {
            return kind_ == LawKind::uniform ? uniform_(rng) : normal_(rng);
        }

    private:
        LawKind kind_;
        std::uniform_real_distribution<double> uniform_{-std::numbers::sqrt3, std::numbers::sqrt3};
        std::normal_distribution<double> normal_{0.0, 1.0};
    };

    [[nodiscard]] Sampler sampler() const { return Sampler(kind_); }

    [[nodiscard]] double sample(Rng& rng) const { return sampler()(rng); }

private:
    LawKind kind_;
};

/// Smallest D with sum_{j>D} lambda_j < fraction * lambda_1 (list length for
/// explicit spectra).
[[nodiscard]] inline std::size_t default_sim_dim(const SpectrumProfile& spectrum,
                                                 double fraction = 1e-3) {
    if (auto len = spectrum.length()) return *len;
    const double target = fraction * spectrum.eigenvalue(1);
    const double total = spectrum.trace();
    long double head = 0.0L;
    std::size_t dim = 0;
    while (static_cast<long double>(total) - head >= target) {
        head += spectrum.eigenvalue(++dim);
    }
    // Guard against rounding in the subtraction.
    while (spectrum.tail_sum(dim) >= target) ++dim;
    return dim;
}

/// The input measure mu realized in its first `sim_dim` eigencoordinates.
class InputMeasure {
public:
    InputMeasure(SpectrumProfile spectrum, CoordinateLaw law, std::optional<std::size_t> sim_dim = {})
        : spectrum_(std::move(spectrum)), law_(law),
          sim_dim_(sim_dim ? *sim_dim : default_sim_dim(spectrum_)) {
        if (sim_dim_ == 0) throw std::invalid_argument("sim_dim must be >= 1");
        if (auto len = spectrum_.length(); len && sim_dim_ > *len) {
            throw std::invalid_argument("sim_dim exceeds the explicit spectrum length");
        }
        scales_.resize(sim_dim_);
        for (std::size_t j = 0; j < sim_dim_; ++j) scales_[j] = std::sqrt(spectrum_.eigenvalue(j + 1));
        tail_energy_ = spectrum_.tail_sum(sim_dim_);
    }

    [[nodiscard]] const SpectrumProfile& spectrum() const noexcept { return spectrum_; }
    [[nodiscard]] const CoordinateLaw& law() const noexcept { return law_; }
    [[nodiscard]] std::size_t sim_dim() const noexcept { return sim_dim_; }
    /// Energy sum_{j > sim_dim} lambda_j that simulation drops.
    [[nodiscard]] double tail_energy() const noexcept { return tail_energy_; }

    /// Writes one sample (sim_dim coordinates) into `out`.
    void sample_into(CoordinateLaw::Sampler& draw, Rng& rng, std::span<double> out) const {
        for (std::size_t j = 0; j < sim_dim_; ++j) out[j] = scales_[j] * draw(rng);
    }

    [[nodiscard]] PointSet sample(std::size_t count, Rng& rng) const {
        if (count == 0) throw std::invalid_argument("sample_input needs count >= 1");
        PointSet points(count, sim_dim_);
        auto draw = law_.sampler();
        for (std::size_t i = 0; i < count; ++i) sample_into(draw, rng, points.row(i));
        return points;
    }

private:
    SpectrumProfile spectrum_;
    CoordinateLaw law_;
    std::size_t sim_dim_;
    std::vector<double> scales_;
    double tail_energy_ = 0.0;
};

[[nodiscard]] inline PointSet sample_input(const InputMeasure& measure, std::size_t count, Rng& rng) {
    return measure.sample(count, rng);
}

enum class DesignKind { fixed_stratified, random_box };

[[nodiscard]] inline const char* to_string(DesignKind kind) noexcept {
    return kind == DesignKind::fixed_stratified ? "fixed" : "random";
}

/// Materialized design points; each point carries d coordinates and is zero
/// beyond them.
struct Design {
    DesignKind kind = DesignKind::fixed_stratified;
    std::size_t d = 0;
    double R = 0.0;
    std::size_t m_requested = 0;
    PointSet points;
    /// fixed_stratified only: points per cell.
    std::size_t per_cell = 0;

    [[nodiscard]] std::size_t m() const noexcept { return points.size(); }
};

/**
 * m / n points in every cell, all placed at the cell midpoint. m is rounded
 * down to the largest multiple of n; the effective count is `points.size()`.
 */
[[nodiscard]] inline Design make_fixed_design(const HistogramPartition& partition, std::size_t m) {
    const CellIndex n = partition.cell_count();
    if (m < n) {
        throw InfeasibleError("fixed design needs m >= n (" + std::to_string(m) + " < " +
                              std::to_string(n) + " cells)");
    }
    Design design;
    design.kind = DesignKind::fixed_stratified;
    design.d = partition.d();
    design.R = partition.R();
    design.m_requested = m;
    design.per_cell = static_cast<std::size_t>(m / n);
    design.points = PointSet(0, partition.d());
    for (CellIndex cell = 0; cell < n; ++cell) {
        const auto mid = partition.cell_midpoint(cell);
        for (std::size_t k = 0; k < design.per_cell; ++k) design.points.push_back(mid);
    }
    return design;
}

/// i.i.d. points with coordinate i = sqrt(R lambda_i) zeta_i, zeta_i ~ U[-1, 1].
[[nodiscard]] inline Design make_random_design(double R, std::size_t d,
                                               const SpectrumProfile& spectrum,
                                               std::size_t m, Rng& rng) {
    if (!(R > 0.0)) throw std::invalid_argument("random design needs R > 0");
    if (d == 0) throw std::invalid_argument("random design needs d >= 1");
    if (m == 0) throw std::invalid_argument("random design needs m >= 1");
    Design design;
    design.kind = DesignKind::random_box;
    design.d = d;
    design.R = R;
    design.m_requested = m;
    design.points = PointSet(m, d);
    std::vector<double> scale(d);
    for (std::size_t i = 0; i < d; ++i) scale[i] = std::sqrt(R * spectrum.eigenvalue(i + 1));
    std::uniform_real_distribution<double> zeta(-1.0, 1.0);
    for (std::size_t k = 0; k < m; ++k) {
        auto row = design.points.row(k);
        for (std::size_t i = 0; i < d; ++i) row[i] = scale[i] * zeta(rng);
    }
    return design;
}

}  // namespace oplab
