// SPDX-License-Identifier: MIT
/**
 * @file estimator.hpp
 * @brief Histogram estimator on the eigencoordinate box and its parameter
 *        selection rules.
 */
#pragma once

#include "oplab/core.hpp"
#include "oplab/noise.hpp"
#include "oplab/partition.hpp"
#include "oplab/spectrum.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace oplab {

/// Per-cell sample count and mean output coefficients.
struct CellStats {
    std::size_t count = 0;
    std::vector<double> mean;

    friend bool operator==(const CellStats&, const CellStats&) = default;
};

/**
 * F_hat = sum_C Y_C 1_C with Y_C the mean of the observations in C, and Y_C = 0
 * for empty cells. A finite rank r keeps only the first r output coefficients
 * (r = 0 means no truncation).
 */
class HistogramEstimator {
public:
    HistogramEstimator(HistogramPartition partition, std::size_t r, std::size_t coeff_dim)
        : partition_(std::move(partition)), r_(r), coeff_dim_(coeff_dim) {}

    [[nodiscard]] static HistogramEstimator fit(const Dataset& data,
                                                const HistogramPartition& partition,
                                                std::size_t r = 0) {
        if (data.size() == 0) throw std::invalid_argument("fit needs a nonempty dataset");
        const std::size_t width = data.outputs.dim();
        HistogramEstimator est(partition, r, width);
        const std::size_t kept = r == 0 ? width : std::min(r, width);
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto cell = partition.cell_index(data.inputs.row(i));
            if (!cell) continue;
            auto& stats = est.cells_[*cell];
            if (stats.mean.empty()) stats.mean.assign(width, 0.0);
            ++stats.count;
            const auto y = data.outputs.row(i);
            for (std::size_t j = 0; j < kept; ++j) stats.mean[j] += y[j];
        }
        for (auto& [index, stats] : est.cells_) {
            const double inv = 1.0 / static_cast<double>(stats.count);
            for (std::size_t j = 0; j < kept; ++j) stats.mean[j] *= inv;
        }
        return est;
    }

    [[nodiscard]] const HistogramPartition& partition() const noexcept { return partition_; }
    /// Truncation rank, 0 for none.
    [[nodiscard]] std::size_t r() const noexcept { return r_; }
    [[nodiscard]] std::size_t output_dim() const noexcept { return coeff_dim_; }
    [[nodiscard]] const std::unordered_map<CellIndex, CellStats>& cells() const noexcept {
        return cells_;
    }
    [[nodiscard]] std::size_t occupied() const noexcept { return cells_.size(); }

    /// Stored mean of x's cell; zeros outside D or in an empty cell.
    void evaluate(std::span<const double> x, std::span<double> y) const {
        std::fill(y.begin(), y.end(), 0.0);
        const auto cell = partition_.cell_index(x);
        if (!cell) return;
        const auto it = cells_.find(*cell);
        if (it == cells_.end()) return;
        const std::size_t n = std::min(y.size(), it->second.mean.size());
        std::copy_n(it->second.mean.begin(), n, y.begin());
    }

    [[nodiscard]] std::vector<double> predict(std::span<const double> x) const {
        std::vector<double> y(coeff_dim_);
        evaluate(x, y);
        return y;
    }

    /// {partition, r, coeff_dim, cells: [{index, count, mean}]} with cells
    /// sorted by index. Doubles are written shortest-round-trip.
    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json part = {{"d", partition_.d()},
                               {"R", partition_.R()},
                               {"n", partition_.counts()},
                               {"lambdas", partition_.lambdas()}};
        std::vector<CellIndex> keys;
        keys.reserve(cells_.size());
        for (const auto& [index, stats] : cells_) keys.push_back(index);
        std::sort(keys.begin(), keys.end());
        nlohmann::json cells = nlohmann::json::array();
        for (CellIndex k : keys) {
            const auto& stats = cells_.at(k);
            cells.push_back({{"index", k}, {"count", stats.count}, {"mean", stats.mean}});
        }
        return {{"partition", part}, {"r", r_}, {"coeff_dim", coeff_dim_}, {"cells", cells}};
    }

    [[nodiscard]] static HistogramEstimator from_json(const nlohmann::json& j) {
        const auto& part = j.at("partition");
        HistogramPartition partition(part.at("R").get<double>(),
                                     part.at("n").get<std::vector<std::size_t>>(),
                                     part.at("lambdas").get<std::vector<double>>());
        HistogramEstimator est(std::move(partition), j.at("r").get<std::size_t>(),
                               j.at("coeff_dim").get<std::size_t>());
        for (const auto& cell : j.at("cells")) {
            CellStats stats{cell.at("count").get<std::size_t>(),
                            cell.at("mean").get<std::vector<double>>()};
            if (stats.mean.size() != est.coeff_dim_) {
                throw std::invalid_argument("estimator json: cell mean has the wrong length");
            }
            est.cells_.emplace(cell.at("index").get<CellIndex>(), std::move(stats));
        }
        return est;
    }

    friend bool operator==(const HistogramEstimator&, const HistogramEstimator&) = default;

private:
    HistogramPartition partition_;
    std::size_t r_;
    std::size_t coeff_dim_;
    std::unordered_map<CellIndex, CellStats> cells_;
};

[[nodiscard]] inline HistogramEstimator fit(const Dataset& data, const HistogramPartition& partition,
                                            std::size_t r = 0) {
    return HistogramEstimator::fit(data, partition, r);
}

/// Overrides for the automatic selection.
struct SelectionHints {
    std::optional<std::size_t> d;        ///< pin d instead of the regime rule
    std::optional<std::size_t> r;        ///< pin the white-noise truncation rank
    std::optional<std::size_t> d_max;    ///< cap for the scanning rule
    double c_prime = 1.0;                ///< exponential-regime d constant
    double c_double_prime = 1.0;         ///< white-noise r constant
    double c_scale = 1.0;                ///< multiplies the displayed c
    std::optional<double> R;             ///< fixed box radius instead of the R formula
    /// Finite-dimensional mode: fixed box R and per-axis resolution
    /// (scale k)^(1/(2+d)), the bias/variance balance for a flat spectrum.
    std::optional<double> finite_dim_R;
    double finite_dim_scale = 1.0;
};

struct SelectionInput {
    std::size_t m = 0;
    double sigma = 1.0;
    SpectrumProfile spectrum = SpectrumProfile::algebraic(2.0);
    double B = 1.0;
    double L = 1.0;
    double p = 2.0;
    NoiseKind noise = NoiseKind::hilbert;
    double t = 1.0;  ///< output smoothness, white noise only
    SelectionHints hints;
};

struct ParameterSelection {
    std::size_t d = 0;
    double R = 0.0;
    double c = 0.0;
    std::vector<std::size_t> n;
    std::size_t r = 0;          ///< 0 for hilbert noise (no truncation)
    bool feasible = false;
    double margin = 0.0;        ///< c sqrt(lambda_d) - 1
    double k = 0.0;             ///< m / (r sigma^2), r = 1 for hilbert noise
    std::string rule;           ///< how d was chosen
    bool d_reduced = false;     ///< the regime d was shrunk to restore feasibility

    [[nodiscard]] HistogramPartition partition(const SpectrumProfile& spectrum) const {
        return HistogramPartition(R, n, spectrum);
    }
};

namespace detail {

inline constexpr double kFeasibleTol = 1e-12;

/// log c from the upper-bound display: E = (p+2)d + 4,
/// log c = ((p+2)/E)(log k - log sqrt(prod lambda)) + log(B^2p L^4 d^4)/E.
[[nodiscard]] inline double log_c(double log_k, std::size_t d, const SpectrumProfile& s,
                                  double B, double L, double p) {
    const double dd = static_cast<double>(d);
    const double E = (p + 2.0) * dd + 4.0;
    const double log_q = 2.0 * p * std::log(B) + 4.0 * std::log(L) + 4.0 * std::log(dd);
    return ((p + 2.0) / E) * (log_k - 0.5 * s.log_product(d)) + log_q / E;
}

/// log of the smallest k for which c sqrt(lambda_d) >= 1.
[[nodiscard]] inline double log_min_k(std::size_t d, const SpectrumProfile& s, double B, double L,
                                      double p) {
    const double dd = static_cast<double>(d);
    const double E = (p + 2.0) * dd + 4.0;
    const double log_q = 2.0 * p * std::log(B) + 4.0 * std::log(L) + 4.0 * std::log(dd);
    return 0.5 * s.log_product(d) - log_q / (p + 2.0) -
           (E / (2.0 * (p + 2.0))) * s.log_eigenvalue(d);
}

/// c sqrt(lambda_d) - 1 (the feasibility margin), in a form safe for huge c.
[[nodiscard]] inline double margin(double log_c_value, std::size_t d, const SpectrumProfile& s) {
    return std::exp(log_c_value + 0.5 * s.log_eigenvalue(d)) - 1.0;
}

[[nodiscard]] inline bool feasible(double log_c_value, std::size_t d, const SpectrumProfile& s) {
    return log_c_value + 0.5 * s.log_eigenvalue(d) >= -kFeasibleTol;
}

[[nodiscard]] inline std::vector<std::size_t> cell_counts(double log_c_value, std::size_t d,
                                                          const SpectrumProfile& s) {
    std::vector<std::size_t> n(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double v = std::exp(log_c_value + 0.5 * s.log_eigenvalue(i + 1));
        if (!(v < 4.0e18)) throw InfeasibleError("cell count per axis exceeds 64-bit range");
        // Inside the feasibility tolerance a value of 0.99999... counts as 1.
        n[i] = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(v * (1.0 + kFeasibleTol))));
    }
    return n;
}

/// R = (B d^(1/p) / (L sqrt(sum lambda_j / n_j^2)))^(2p/(p+2)).
[[nodiscard]] inline double box_radius(const std::vector<std::size_t>& n, const SpectrumProfile& s,
                                       double B, double L, double p) {
    long double res = 0.0L;
    for (std::size_t i = 0; i < n.size(); ++i) {
        const auto ni = static_cast<long double>(n[i]);
        res += static_cast<long double>(s.eigenvalue(i + 1)) / (ni * ni);
    }
    const double dd = static_cast<double>(n.size());
    const double base = B * std::pow(dd, 1.0 / p) / (L * std::sqrt(static_cast<double>(res)));
    return std::pow(base, 2.0 * p / (p + 2.0));
}

[[nodiscard]] inline double log_log_ratio(double log_k) {
    const double ll = std::log(log_k);
    if (!(ll > 0.0)) throw InfeasibleError("regime rule needs log log k > 0");
    return log_k / ll;
}

}  // namespace detail

/**
 * Chooses (d, c, n_i, R[, r]) from the upper-bound proofs.
 *
 * d: exponential spectra use floor((log k / c')^(1/(beta+1))), algebraic
 * spectra floor((4/((p+2)+alpha p)) log k / log log k); other kinds scan
 * d = 1, 2, ... and keep the largest d before the first infeasible one.
 * A regime d that violates c sqrt(lambda_d) >= 1 is reduced until it holds.
 *
 * White noise picks r first and then works with k = m / (r sigma^2).
 */
[[nodiscard]] inline ParameterSelection select_parameters(const SelectionInput& in) {
    if (in.m == 0) throw std::invalid_argument("select_parameters needs m >= 1");
    if (!(in.sigma > 0.0)) throw std::invalid_argument("select_parameters needs sigma > 0");
    if (!(in.B > 0.0) || !(in.L > 0.0)) throw std::invalid_argument("select_parameters needs B, L > 0");
    if (!(in.p >= 1.0) || !std::isfinite(in.p)) throw std::invalid_argument("select_parameters needs 1 <= p < inf");
    const auto& s = in.spectrum;
    const auto& hints = in.hints;
    const double log_k_raw = std::log(static_cast<double>(in.m)) - 2.0 * std::log(in.sigma);

    ParameterSelection sel;
    sel.r = 0;
    double log_k = log_k_raw;
    if (in.noise == NoiseKind::white) {
        if (hints.r) {
            sel.r = *hints.r;
        } else if (s.kind() == SpectrumKind::exponential) {
            const double beta = s.beta();
            const double target = hints.c_double_prime * std::pow(log_k_raw, beta / (beta + 1.0));
            sel.r = static_cast<std::size_t>(std::ceil(std::exp(target) * (1.0 - 1e-12)));
        } else if (s.kind() == SpectrumKind::algebraic) {
            if (!(in.t > 0.0)) throw std::invalid_argument("algebraic white-noise rule needs t > 0");
            const double target = hints.c_double_prime * ((s.alpha() - 1.0) / 2.0) *
                                  std::log(detail::log_log_ratio(log_k_raw)) / in.t;
            sel.r = static_cast<std::size_t>(std::ceil(std::exp(target) * (1.0 - 1e-12)));
        } else {
            throw std::invalid_argument(
                "white noise with an explicit or double-exponential spectrum needs an r hint");
        }
        sel.r = std::max<std::size_t>(sel.r, 1);
        log_k -= std::log(static_cast<double>(sel.r));
    }
    sel.k = std::exp(log_k);

    const auto len = s.length();
    std::size_t d_cap = hints.d_max.value_or(len.value_or(4096));
    if (len) d_cap = std::min(d_cap, *len);

    if (hints.finite_dim_R) {
        const std::size_t d = hints.d.value_or(len.value_or(1));
        if (d == 0 || (len && d > *len)) throw std::invalid_argument("finite_dim: d out of range");
        const double dd = static_cast<double>(d);
        const double lc = (std::log(hints.finite_dim_scale) + log_k) / (2.0 + dd) -
                          0.5 * s.log_eigenvalue(1);
        sel.d = d;
        sel.c = std::exp(lc);
        sel.n = detail::cell_counts(lc, d, s);
        sel.R = *hints.finite_dim_R;
        sel.margin = detail::margin(lc, d, s);
        sel.feasible = detail::feasible(lc, d, s);
        sel.rule = "finite_dim";
        if (!sel.feasible) {
            throw InfeasibleError("finite_dim selection gives fewer than one cell on axis d");
        }
        return sel;
    }

    if (!(hints.c_scale > 0.0)) throw std::invalid_argument("c_scale must be > 0");
    const double log_scale = std::log(hints.c_scale);
    std::size_t d = 0;
    if (hints.d) {
        d = *hints.d;
        if (d == 0 || (len && d > *len)) throw std::invalid_argument("hinted d out of range");
        sel.rule = "hint";
    } else if (s.kind() == SpectrumKind::exponential) {
        const double v = std::pow(std::max(log_k, 0.0) / hints.c_prime, 1.0 / (s.beta() + 1.0));
        d = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(v)), 1, d_cap);
        sel.rule = "exponential";
    } else if (s.kind() == SpectrumKind::algebraic) {
        const double v = (4.0 / ((in.p + 2.0) + s.alpha() * in.p)) * detail::log_log_ratio(log_k);
        d = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(v)), 1, d_cap);
        sel.rule = "algebraic";
    } else {
        d = 1;
        while (d < d_cap &&
               detail::feasible(detail::log_c(log_k, d + 1, s, in.B, in.L, in.p) + log_scale, d + 1, s)) {
            ++d;
        }
        sel.rule = "scan";
    }

    auto infeasible = [&](std::size_t dd) {
        // c scales like k^((p+2)/E), so c_scale shifts the threshold by c_scale^(-E/(p+2)).
        const double E = (in.p + 2.0) * static_cast<double>(dd) + 4.0;
        const double min_k = std::exp(detail::log_min_k(dd, s, in.B, in.L, in.p) -
                                      log_scale * E / (in.p + 2.0)) *
                             (sel.r > 0 ? static_cast<double>(sel.r) : 1.0);
        std::ostringstream msg;
        msg << "infeasible at d = " << dd << ": c sqrt(lambda_d) >= 1 fails, i.e. m/sigma^2 >= "
            << "sqrt(lambda_1...lambda_d) / ((B^2p L^4 d^4)^(1/(p+2)) lambda_d^(((p+2)d+4)/(2(p+2))))"
            << " needs m/sigma^2 >= " << min_k;
        return InfeasibleError(msg.str(), min_k);
    };

    double lc = detail::log_c(log_k, d, s, in.B, in.L, in.p) + log_scale;
    if (hints.d) {
        if (!detail::feasible(lc, d, s)) throw infeasible(d);
    } else {
        while (!detail::feasible(lc, d, s)) {
            if (d == 1) throw infeasible(1);
            --d;
            sel.d_reduced = true;
            lc = detail::log_c(log_k, d, s, in.B, in.L, in.p) + log_scale;
        }
    }
    sel.d = d;
    sel.c = std::exp(lc);
    sel.n = detail::cell_counts(lc, d, s);
    sel.R = hints.R ? *hints.R : detail::box_radius(sel.n, s, in.B, in.L, in.p);
    sel.margin = detail::margin(lc, d, s);
    sel.feasible = true;
    return sel;
}

}  // namespace oplab
