// SPDX-License-Identifier: MIT
/**
 * @file lowerbound.hpp
 * @brief Fano lower-bound instances: Varshamov-Gilbert codes, center packings,
 *        separated bump families and their KL budgets.
 */
#pragma once

#include "oplab/core.hpp"
#include "oplab/measure.hpp"
#include "oplab/noise.hpp"
#include "oplab/operators.hpp"
#include "oplab/risk.hpp"
#include "oplab/spectrum.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace oplab {

using Codeword = std::vector<std::uint8_t>;

[[nodiscard]] inline std::size_t hamming(const Codeword& a, const Codeword& b) {
    if (a.size() != b.size()) throw std::invalid_argument("hamming: length mismatch");
    std::size_t h = 0;
    for (std::size_t i = 0; i < a.size(); ++i) h += (a[i] != b[i]) ? 1 : 0;
    return h;
}

/// words[0] = 0^n, M = words.size() - 1 >= 2^(n/8), pairwise distance >= n/8.
struct VGCode {
    std::size_t n = 0;
    std::vector<Codeword> words;

    [[nodiscard]] std::size_t M() const noexcept { return words.empty() ? 0 : words.size() - 1; }
};

/// Smallest integer distance that is >= n/8.
[[nodiscard]] inline std::size_t vg_min_distance(std::size_t n) noexcept { return (n + 7) / 8; }

/// ceil(2^(n/8)) as a count; requires n < 8 * 62.
[[nodiscard]] inline std::size_t vg_target(std::size_t n) {
    if (n >= 8 * 62) throw std::invalid_argument("vg_target: n too large to materialize");
    return static_cast<std::size_t>(std::ceil(std::exp2(static_cast<double>(n) / 8.0) - 1e-9));
}

/// Checks all three code properties over every pair.
[[nodiscard]] inline bool verify_vg_code(const VGCode& code, std::string* why = nullptr) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (code.words.empty()) return fail("no words");
    for (const auto& w : code.words) {
        if (w.size() != code.n) return fail("word length differs from n");
    }
    for (auto bit : code.words[0]) {
        if (bit != 0) return fail("first word is not all-zero");
    }
    if (static_cast<double>(code.M()) < std::exp2(static_cast<double>(code.n) / 8.0) - 1e-9) {
        return fail("M < 2^(n/8)");
    }
    const double floor = static_cast<double>(code.n) / 8.0;
    for (std::size_t i = 0; i < code.words.size(); ++i) {
        for (std::size_t j = i + 1; j < code.words.size(); ++j) {
            if (static_cast<double>(hamming(code.words[i], code.words[j])) < floor) {
                return fail("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") closer than n/8");
            }
        }
    }
    return true;
}

/**
 * Random search: draw uniform words and keep those at distance >= n/8 from
 * every kept word, until ceil(2^(n/8)) words follow the zero word. The
 * result is verified exhaustively before it is returned.
 */
[[nodiscard]] inline VGCode vg_code(std::size_t n, Rng& rng, std::size_t max_draws = 1'000'000) {
    if (n < 8) throw std::invalid_argument("vg_code needs n >= 8");
    const std::size_t target = vg_target(n);
    const std::size_t min_dist = vg_min_distance(n);
    VGCode code{n, {Codeword(n, 0)}};
    std::bernoulli_distribution coin(0.5);
    Codeword candidate(n);
    std::size_t draws = 0;
    while (code.M() < target) {
        if (draws++ >= max_draws) {
            throw Error("vg_code: draw budget of " + std::to_string(max_draws) + " exhausted at M = " +
                        std::to_string(code.M()));
        }
        for (auto& bit : candidate) bit = coin(rng) ? 1 : 0;
        bool ok = true;
        for (const auto& w : code.words) {
            if (hamming(w, candidate) < min_dist) {
                ok = false;
                break;
            }
        }
        if (ok) code.words.push_back(candidate);
    }
    std::string why;
    if (!verify_vg_code(code, &why)) throw std::logic_error("vg_code produced an invalid code: " + why);
    return code;
}

/// floor(a/h)^d grid centers, spacing 2h, first center -a + h on every axis.
[[nodiscard]] inline PointSet packing_centers(double a, double h, std::size_t d) {
    const CenterGrid grid(a, h, d);
    const auto n = grid.count();
    if (!n || *n > 50'000'000ULL) throw std::invalid_argument("packing_centers: too many centers");
    PointSet out(0, d);
    for (std::uint64_t i = 0; i < *n; ++i) out.push_back(grid.center(i));
    return out;
}

/// (sqrt M/(1+sqrt M)) (1 - 2 alpha - 2 sqrt(alpha / log M)) with alpha = 1/16,
/// written in terms of log M so huge M is fine.
[[nodiscard]] inline double fano_factor(double log_M, double alpha = 1.0 / 16.0) {
    if (!(log_M > 0.0)) return 0.0;
    const double ratio = 1.0 / (1.0 + std::exp(-0.5 * log_M));
    return std::max(ratio * (1.0 - 2.0 * alpha - 2.0 * std::sqrt(alpha / log_M)), 0.0);
}

/// log ceil(2^(n/8)) for n = exp(log_n) centers.
[[nodiscard]] inline double vg_log_M(double log_n) {
    const double n = std::exp(log_n);
    const double bits = n / 8.0;
    if (bits < 60.0) return std::log(std::ceil(std::exp2(bits) - 1e-9));
    return bits * std::numbers::ln2;
}

/// The uniform-law separation constant ((floor(a/h) h / a)^d / 8)^(1/p).
[[nodiscard]] inline double default_c0(double a, double h, std::size_t d, double p) {
    const CenterGrid grid(a, h, d);
    const double ratio = static_cast<double>(grid.per_axis) * h / a;
    return std::pow(std::pow(ratio, static_cast<double>(d)) / 8.0, 1.0 / p);
}

/// KL constant: 1/(2 upsilon_1) for hilbert noise, 1/2 for white noise.
[[nodiscard]] inline double kl_constant(NoiseKind kind, double upsilon1) {
    return kind == NoiseKind::hilbert ? 1.0 / (2.0 * upsilon1) : 0.5;
}

struct FanoParams {
    std::size_t d = 1;
    double h = 0.0;
    std::size_t m = 1;
    double sigma = 1.0;
    double L = 1.0;
    double B = 1.0;
    SpectrumProfile spectrum = SpectrumProfile::algebraic(2.0);
    LawConstants law;
    double p = 2.0;
    NoiseKind noise = NoiseKind::hilbert;
    double upsilon1 = 0.5;
    std::optional<double> c0;        ///< override for the separation constant
    std::optional<double> c_h;       ///< override for the h-formula constant
    std::uint64_t seed = 0;
    std::size_t materialize_limit = 64;  ///< build VG codes only for n <= this
    std::size_t max_draws = 1'000'000;
};

struct FanoInstance {
    FanoParams params;
    CenterGrid grid;
    std::vector<double> lambdas;
    double inv_sum = 0.0;            ///< sum_{j<=d} 1/lambda_j
    double log_n = 0.0;              ///< log floor(a/h)^d
    std::optional<VGCode> code;      ///< present when n <= materialize_limit
    double log_M = 0.0;
    double c0 = 0.0;
    double c_kl = 0.0;
    double s_star = 0.0;
    double kl_budget = 0.0;
    bool fano_condition = false;
    double lower_bound_value = 0.0;
    std::string diagnostic;

    [[nodiscard]] double peak() const { return params.L * params.h / std::sqrt(inv_sum); }
};

/// Error unless a L / (8 sqrt(sum 1/lambda_j)) <= B.
inline void check_d_condition(double a, double L, double B, double inv_sum) {
    const double min_B = a * L / (8.0 * std::sqrt(inv_sum));
    if (min_B > B * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "bump family exceeds B: a L / (8 sqrt(sum 1/lambda_j)) <= B needs B >= " << min_B;
        throw InfeasibleError(msg.str());
    }
}

[[nodiscard]] inline FanoInstance build_instance(const FanoParams& params) {
    const auto& law = params.law;
    if (!(params.h > 0.0) || params.h / law.a > 0.125 + 1e-15) {
        throw std::invalid_argument("build_instance needs 0 < h/a <= 1/8");
    }
    if (!(params.sigma > 0.0) || !(params.L > 0.0) || !(params.p >= 1.0)) {
        throw std::invalid_argument("build_instance needs sigma, L > 0 and p >= 1");
    }
    FanoInstance inst;
    inst.params = params;
    inst.grid = CenterGrid(law.a, params.h, params.d);
    inst.lambdas = HistogramPartition::leading_eigenvalues(params.spectrum, params.d);
    inst.inv_sum = params.spectrum.inv_sum(params.d);
    check_d_condition(law.a, params.L, params.B, inst.inv_sum);

    inst.log_n = inst.grid.log_count();
    const auto n = inst.grid.count();
    if (n && *n <= params.materialize_limit) {
        Rng rng(derive_seed(params.seed, 0x76));
        inst.code = vg_code(static_cast<std::size_t>(*n), rng, params.max_draws);
        inst.log_M = std::log(static_cast<double>(inst.code->M()));
    } else {
        inst.log_M = vg_log_M(inst.log_n);
    }

    const double dd = static_cast<double>(params.d);
    inst.c0 = params.c0.value_or(default_c0(law.a, params.h, params.d, params.p));
    inst.c_kl = kl_constant(params.noise, params.upsilon1);
    inst.s_star = 0.5 * inst.c0 * (params.L / std::sqrt(inst.inv_sum)) *
                  std::pow(law.iota / (params.p + 1.0), dd / params.p) * params.h;
    inst.kl_budget = inst.c_kl * params.L * params.L * params.h * params.h *
                     static_cast<double>(params.m) / (params.sigma * params.sigma * inst.inv_sum);
    inst.fano_condition = inst.kl_budget <= inst.log_M / 16.0;
    if (inst.fano_condition) {
        inst.lower_bound_value = fano_factor(inst.log_M) * inst.s_star;
    } else {
        std::ostringstream msg;
        msg << "Fano condition fails: KL budget " << inst.kl_budget << " > log(M)/16 = "
            << inst.log_M / 16.0 << "; h is too large for this m";
        inst.diagnostic = msg.str();
        inst.lower_bound_value = 0.0;
    }
    return inst;
}

[[nodiscard]] inline double fano_lower_bound(const FanoInstance& inst) {
    return inst.fano_condition ? fano_factor(inst.log_M) * inst.s_star : 0.0;
}

/// F_{theta_j} for a materialized instance.
[[nodiscard]] inline BumpFunctional instance_functional(const FanoInstance& inst, std::size_t j) {
    if (!inst.code) throw std::logic_error("instance has no materialized code");
    if (j >= inst.code->words.size()) throw std::out_of_range("hypothesis index");
    return BumpFunctional(BumpFamilyParams{inst.grid, inst.code->words[j], inst.params.L, inst.lambdas});
}

/// G_j = F_j e_1: the top noise eigenvector for hilbert noise, psi_1 for white.
[[nodiscard]] inline TestOperator instance_operator(const FanoInstance& inst, std::size_t j,
                                                    std::size_t output_dim = 1) {
    return lift_to_operator(instance_functional(inst, j), 1, output_dim);
}

/**
 * D(P_j || P_0) for the design `points` conditional on the points:
 * (1/(2 sigma^2)) sum_i sum_c G_j(X_i)_c^2 / var_c. Only coefficient 1 is
 * nonzero, so the sum over materialized coefficients is exact.
 */
[[nodiscard]] inline double instance_kl(const FanoInstance& inst, std::size_t j, const PointSet& points,
                                        const NoiseModel& noise) {
    const auto f = instance_functional(inst, j);
    long double acc = 0.0L;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double v = f.value(points.row(i));
        acc += static_cast<long double>(v) * v;
    }
    const double s2 = noise.sigma() * noise.sigma();
    return static_cast<double>(acc) / (2.0 * s2 * noise.variance(1));
}

/// (1/M) sum_{j>=1} D(P_j || P_0).
[[nodiscard]] inline double mean_instance_kl(const FanoInstance& inst, const PointSet& points,
                                             const NoiseModel& noise) {
    if (!inst.code) throw std::logic_error("instance has no materialized code");
    long double acc = 0.0L;
    for (std::size_t j = 1; j < inst.code->words.size(); ++j) acc += instance_kl(inst, j, points, noise);
    return static_cast<double>(acc / static_cast<long double>(inst.code->M()));
}

struct SeparationResult {
    double mc_distance = 0.0;
    double mc_std_err = 0.0;
    double theoretical_floor = 0.0;
    std::size_t hamming = 0;
};

/**
 * Monte Carlo ||F_j - F_k||_{L^p_mu} next to the floor
 * (L/sqrt(sum 1/lambda)) (2b/(p+1))^(d/p) h^(d/p+1) H^(1/p).
 */
[[nodiscard]] inline SeparationResult separation_check(const FanoInstance& inst, std::size_t j,
                                                       std::size_t k, double p,
                                                       const InputMeasure& measure, std::size_t n_mc,
                                                       Rng& rng) {
    if (j == k) throw std::invalid_argument("separation_check needs j != k");
    if (n_mc < 2) throw std::invalid_argument("separation_check needs n_mc >= 2");
    const auto fj = instance_functional(inst, j);
    const auto fk = instance_functional(inst, k);
    SeparationResult out;
    out.hamming = hamming(inst.code->words[j], inst.code->words[k]);
    const double dd = static_cast<double>(inst.params.d);
    const auto& law = inst.params.law;
    out.theoretical_floor = (inst.params.L / std::sqrt(inst.inv_sum)) *
                            std::pow(2.0 * law.b / (p + 1.0), dd / p) *
                            std::pow(inst.params.h, dd / p + 1.0) *
                            std::pow(static_cast<double>(out.hamming), 1.0 / p);
    std::vector<double> x(measure.sim_dim());
    auto draw = measure.law().sampler();
    RunningStats z;
    for (std::size_t i = 0; i < n_mc; ++i) {
        measure.sample_into(draw, rng, x);
        const double diff = std::abs(fj.value(x) - fk.value(x));
        z.add(std::pow(diff, p));
    }
    const auto est = pth_root_estimate(z, p);
    out.mc_distance = est.value;
    out.mc_std_err = est.mc_std_err;
    return out;
}

/// h-formula constant (7/8)^d log 2 / (128 c_kl). With it the Fano condition
/// holds at h_star because floor(a/h) >= (7/8) a/h whenever a/h >= 8.
[[nodiscard]] inline double default_c_h(std::size_t d, double c_kl) {
    return std::pow(7.0 / 8.0, static_cast<double>(d)) * std::numbers::ln2 / (128.0 * c_kl);
}

/// min{a/8, (L^2 m / (c a^d sigma^2 sum 1/lambda))^(-1/(2+d))}.
[[nodiscard]] inline double h_star(double a, double L, double m, double sigma, std::size_t d,
                                   double log_inv_sum, double c_h) {
    const double dd = static_cast<double>(d);
    const double log_arg = 2.0 * std::log(L) + std::log(m) - std::log(c_h) - dd * std::log(a) -
                           2.0 * std::log(sigma) - log_inv_sum;
    const double h2 = std::exp(-log_arg / (2.0 + dd));
    return std::min(a / 8.0, h2);
}

struct OptimizedBound {
    double h_star = 0.0;
    double bound = 0.0;
    double c_h = 0.0;
    FanoInstance instance;
};

/// Builds the instance at h_star; `params.h` is ignored.
[[nodiscard]] inline OptimizedBound optimize_h(FanoParams params) {
    const double c_kl = kl_constant(params.noise, params.upsilon1);
    OptimizedBound out;
    out.c_h = params.c_h.value_or(default_c_h(params.d, c_kl));
    out.h_star = h_star(params.law.a, params.L, static_cast<double>(params.m), params.sigma, params.d,
                        params.spectrum.log_inv_sum(params.d), out.c_h);
    params.h = out.h_star;
    out.instance = build_instance(params);
    out.bound = out.instance.lower_bound_value;
    return out;
}

}  // namespace oplab
