// SPDX-License-Identifier: MIT
//
// Observation noise in output coefficients, and the (X_i, Y_i) datasets.
#pragma once

#include "oplab/core.hpp"
#include "oplab/measure.hpp"
#include "oplab/spectrum.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace oplab {

enum class NoiseKind { hilbert, white };

[[nodiscard]] inline const char* to_string(NoiseKind kind) noexcept {
    return kind == NoiseKind::hilbert ? "hilbert" : "white";
}

/**
 * hilbert  coefficient j ~ N(0, upsilon_j), upsilon = profile / trace(profile)
 * white    coefficient j ~ N(0, 1)
 *
 * Only the first `coeff_dim` coefficients are materialized. The draws are
 * unscaled; `observe` multiplies by sigma.
 */
class NoiseModel {
public:
    /// Geometric default upsilon_j = 2^-j (trace exactly 1).
    [[nodiscard]] static SpectrumProfile default_upsilon() {
        return SpectrumProfile::exponential(std::numbers::ln2, 1.0);
    }

    [[nodiscard]] static NoiseModel hilbert(double sigma, std::size_t coeff_dim,
                                            const SpectrumProfile& upsilon = default_upsilon()) {
        return NoiseModel(NoiseKind::hilbert, sigma, coeff_dim, upsilon);
    }

    [[nodiscard]] static NoiseModel white(double sigma, std::size_t coeff_dim) {
        return NoiseModel(NoiseKind::white, sigma, coeff_dim, std::nullopt);
    }

    [[nodiscard]] NoiseKind kind() const noexcept { return kind_; }
    [[nodiscard]] double sigma() const noexcept { return sigma_; }
    [[nodiscard]] std::size_t coeff_dim() const noexcept { return coeff_dim_; }
    [[nodiscard]] const std::optional<SpectrumProfile>& upsilon_profile() const noexcept {
        return profile_;
    }

    /// Variance of unscaled coefficient j (1-based): upsilon_j or 1.
    [[nodiscard]] double variance(std::size_t j) const {
        if (j == 0 || j > coeff_dim_) throw std::out_of_range("noise coefficient index");
        return variances_[j - 1];
    }
    [[nodiscard]] const std::vector<double>& variances() const noexcept { return variances_; }

    /// upsilon_1 for hilbert noise, 1 for white noise.
    [[nodiscard]] double top_variance() const noexcept { return variances_.front(); }

    /// Sum of the materialized variances.
    [[nodiscard]] double materialized_trace() const noexcept {
        long double s = 0.0L;
        for (double v : variances_) s += v;
        return static_cast<double>(s);
    }

    [[nodiscard]] NoiseModel with_sigma(double sigma) const {
        NoiseModel copy = *this;
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be >= 0");
        copy.sigma_ = sigma;
        return copy;
    }

private:
    NoiseModel(NoiseKind kind, double sigma, std::size_t coeff_dim,
               std::optional<SpectrumProfile> profile)
        : kind_(kind), sigma_(sigma), coeff_dim_(coeff_dim), profile_(std::move(profile)) {
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be >= 0");
        if (coeff_dim == 0) throw std::invalid_argument("coeff_dim must be >= 1");
        variances_.assign(coeff_dim, 1.0);
        if (kind_ == NoiseKind::hilbert) {
            if (auto len = profile_->length(); len && coeff_dim > *len) {
                throw std::invalid_argument("coeff_dim exceeds the explicit upsilon list");
            }
            const double trace = profile_->trace();
            for (std::size_t j = 0; j < coeff_dim; ++j) {
                variances_[j] = profile_->eigenvalue(j + 1) / trace;
            }
        }
    }

    NoiseKind kind_;
    double sigma_;
    std::size_t coeff_dim_;
    std::optional<SpectrumProfile> profile_;
    std::vector<double> variances_;
};

/// `count` unscaled noise vectors of length coeff_dim. All zeros when sigma = 0.
[[nodiscard]] inline PointSet sample_noise(const NoiseModel& model, std::size_t count, Rng& rng) {
    if (count == 0) throw std::invalid_argument("sample_noise needs count >= 1");
    PointSet out(count, model.coeff_dim());
    if (model.sigma() == 0.0) return out;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> scale(model.coeff_dim());
    for (std::size_t j = 0; j < scale.size(); ++j) scale[j] = std::sqrt(model.variances()[j]);
    for (std::size_t i = 0; i < count; ++i) {
        auto row = out.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = scale[j] * normal(rng);
    }
    return out;
}

/// Paired inputs and noisy output coefficients.
struct Dataset {
    PointSet inputs;
    PointSet outputs;

    [[nodiscard]] std::size_t size() const noexcept { return inputs.size(); }
    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/**
 * Y_i = F(X_i) + sigma E_i.
 *
 * Hilbert noise: outputs have max(coeff_dim, F.output_dim()) coefficients and
 * noise on the first coeff_dim of them. White noise: outputs are cut to
 * coeff_dim coefficients, the only ones a rank-r estimator with r <= coeff_dim
 * reads.
 */
template <Predictor F>
[[nodiscard]] Dataset observe(const F& op, const Design& design, const NoiseModel& model, Rng& rng) {
    const std::size_t m = design.m();
    if (m == 0) throw std::invalid_argument("observe needs a materialized design");
    const std::size_t width = model.kind() == NoiseKind::white
                                  ? model.coeff_dim()
                                  : std::max(model.coeff_dim(), op.output_dim());
    Dataset data{design.points, PointSet(m, width)};
    std::vector<double> value(std::max<std::size_t>(op.output_dim(), 1));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> scale(model.coeff_dim());
    for (std::size_t j = 0; j < scale.size(); ++j) {
        scale[j] = model.sigma() * std::sqrt(model.variances()[j]);
    }
    for (std::size_t i = 0; i < m; ++i) {
        op.evaluate(design.points.row(i), value);
        auto y = data.outputs.row(i);
        for (std::size_t j = 0; j < width; ++j) y[j] = coord(value, j);
        if (model.sigma() == 0.0) continue;
        for (std::size_t j = 0; j < scale.size(); ++j) y[j] += scale[j] * normal(rng);
    }
    return data;
}

}  // namespace oplab
