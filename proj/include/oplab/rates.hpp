// SPDX-License-Identifier: MIT
/**
 * @file rates.hpp
 * @brief Closed-form upper and lower bound curves and leading-order log rates.
 *
 * Every unspecified proportionality constant defaults to 1 and is reported
 * next to the value it produced.
 */
#pragma once

#include "oplab/core.hpp"
#include "oplab/estimator.hpp"
#include "oplab/lowerbound.hpp"
#include "oplab/measure.hpp"
#include "oplab/noise.hpp"
#include "oplab/spectrum.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace oplab {

struct UpperBoundInput {
    SpectrumProfile spectrum = SpectrumProfile::algebraic(2.0);
    double log_k = 0.0;      ///< log(m / sigma^2)
    double B = 1.0;
    double L = 1.0;
    double p = 2.0;
    std::size_t d = 1;
    NoiseKind noise = NoiseKind::hilbert;
    std::size_t r = 1;       ///< white noise only
    double t = 1.0;          ///< white noise only; +inf drops the truncation term
};

/**
 * (k' / sqrt(lambda_1...lambda_d))^(-2/E) (B^2p L^4 d^4)^(d/(2E)) + L sqrt(sum_{j>d} lambda_j)
 * with E = (p+2)d + 4 and k' = k (hilbert) or k / r (white). White noise adds
 * B r^-t.
 */
[[nodiscard]] inline double eval_upper_bound(const UpperBoundInput& in) {
    const auto& s = in.spectrum;
    if (in.d == 0) throw std::invalid_argument("eval_upper_bound needs d >= 1");
    double log_k = in.log_k;
    if (in.noise == NoiseKind::white) {
        if (in.r == 0) throw std::invalid_argument("eval_upper_bound needs r >= 1");
        log_k -= std::log(static_cast<double>(in.r));
    }
    const double log_min = detail::log_min_k(in.d, s, in.B, in.L, in.p);
    if (log_k < log_min - detail::kFeasibleTol) {
        std::ostringstream msg;
        msg << "upper bound infeasible at d = " << in.d << ": needs m/(r sigma^2) >= "
            << std::exp(log_min);
        throw InfeasibleError(msg.str(), std::exp(log_min));
    }
    const double dd = static_cast<double>(in.d);
    const double E = (in.p + 2.0) * dd + 4.0;
    const double log_q = 2.0 * in.p * std::log(in.B) + 4.0 * std::log(in.L) + 4.0 * std::log(dd);
    const double log_first = (-2.0 / E) * (log_k - 0.5 * s.log_product(in.d)) + (dd / (2.0 * E)) * log_q;
    double value = std::exp(log_first) + in.L * std::sqrt(s.tail_sum(in.d));
    if (in.noise == NoiseKind::white && std::isfinite(in.t)) {
        value += in.B * std::pow(static_cast<double>(in.r), -in.t);
    }
    return value;
}

struct LowerBoundInput {
    SpectrumProfile spectrum = SpectrumProfile::algebraic(2.0);
    double m = 1.0;
    double sigma = 1.0;
    double L = 1.0;
    double B = 1.0;
    LawConstants law;
    double p = 2.0;
    NoiseKind noise = NoiseKind::hilbert;
    double upsilon1 = 0.5;
    std::optional<double> c_h;   ///< h-formula constant, default from the Fano condition
    std::optional<double> c0;    ///< separation constant, default uniform-law value
};

struct LowerBoundValue {
    double value = 0.0;
    double h = 0.0;
    double c_h = 0.0;
    double c0 = 0.0;
    double s_star = 0.0;
    double log_M = 0.0;
};

/**
 * Fano bound at a fixed d, evaluated without building an instance:
 * factor(M) (c0/2) (L/sqrt(mu_d)) (iota/(p+1))^(d/p) h with
 * h = min{a/8, (L^2 m/(c a^d sigma^2 mu_d))^(-1/(2+d))} and
 * log M = log ceil(2^(floor(a/h)^d / 8)).
 */
[[nodiscard]] inline LowerBoundValue eval_lower_bound_at(const LowerBoundInput& in, std::size_t d) {
    const auto& law = in.law;
    const double log_mu = in.spectrum.log_inv_sum(d);
    const double min_B = law.a * in.L / (8.0 * std::exp(0.5 * log_mu));
    if (min_B > in.B * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "lower bound needs a L / (8 sqrt(sum 1/lambda_j)) <= B, i.e. B >= " << min_B;
        throw InfeasibleError(msg.str());
    }
    const double c_kl = in.noise == NoiseKind::hilbert ? 1.0 / (2.0 * in.upsilon1) : 0.5;
    LowerBoundValue out;
    const double dd = static_cast<double>(d);
    out.c_h = in.c_h.value_or(std::pow(7.0 / 8.0, dd) * std::numbers::ln2 / (128.0 * c_kl));
    const double log_arg = 2.0 * std::log(in.L) + std::log(in.m) - std::log(out.c_h) -
                           dd * std::log(law.a) - 2.0 * std::log(in.sigma) - log_mu;
    out.h = std::min(law.a / 8.0, std::exp(-log_arg / (2.0 + dd)));
    const double per_axis = std::floor(law.a / out.h * (1.0 + 1e-12));
    out.c0 = in.c0.value_or(std::pow(std::pow(per_axis * out.h / law.a, dd) / 8.0, 1.0 / in.p));
    out.s_star = 0.5 * out.c0 * in.L * std::exp(-0.5 * log_mu) *
                 std::pow(law.iota / (in.p + 1.0), dd / in.p) * out.h;
    const double n = std::pow(per_axis, dd);
    const double bits = n / 8.0;
    out.log_M = bits < 60.0 ? std::log(std::ceil(std::exp2(bits) - 1e-9)) : bits * std::numbers::ln2;
    const double budget = c_kl * in.L * in.L * out.h * out.h * in.m /
                          (in.sigma * in.sigma * std::exp(log_mu));
    if (budget > out.log_M / 16.0) {
        out.value = 0.0;
        return out;
    }
    const double alpha = 1.0 / 16.0;
    const double ratio = 1.0 / (1.0 + std::exp(-0.5 * out.log_M));
    out.value = ratio * (1.0 - 2.0 * alpha - 2.0 * std::sqrt(alpha / out.log_M)) * out.s_star;
    return out;
}

struct LowerBoundScan {
    double value = 0.0;
    std::size_t d = 0;
    LowerBoundValue detail;
};

/// Best eval_lower_bound_at over d = 1..d_max, skipping d where the
/// bump family would exceed B and stopping when mu_d leaves double range.
[[nodiscard]] inline LowerBoundScan eval_lower_bound(const LowerBoundInput& in, std::size_t d_max = 64) {
    LowerBoundScan best;
    if (auto len = in.spectrum.length()) d_max = std::min(d_max, *len);
    for (std::size_t d = 1; d <= d_max; ++d) {
        if (in.spectrum.log_inv_sum(d) > 700.0) break;
        try {
            const auto v = eval_lower_bound_at(in, d);
            if (v.value > best.value || best.d == 0) best = {v.value, d, v};
        } catch (const InfeasibleError&) {
            continue;
        }
    }
    if (best.d == 0) {
        throw InfeasibleError("lower bound: no d in 1..d_max satisfies a L/(8 sqrt(sum 1/lambda_j)) <= B");
    }
    return best;
}

enum class RateRegime {
    exp_log_minimax,
    alg_upper,
    alg_lower,
    double_exp,
    finite_dim,
};

[[nodiscard]] inline const char* to_string(RateRegime r) noexcept {
    switch (r) {
        case RateRegime::exp_log_minimax: return "exp_log_minimax";
        case RateRegime::alg_upper: return "alg_upper";
        case RateRegime::alg_lower: return "alg_lower";
        case RateRegime::double_exp: return "double_exp";
        case RateRegime::finite_dim: return "finite_dim";
    }
    return "?";
}

struct RateExpression {
    RateRegime regime = RateRegime::exp_log_minimax;
    double alpha = 1.0;
    double beta = 1.0;
    std::size_t d = 1;       ///< finite_dim only
    double constant = 1.0;
};

/// Leading-order log rate -log(risk) with its band. `tight` is false where
/// only non-matching bounds are known; the band is then [lower, upper].
struct LogRate {
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool tight = true;
    std::string note;
};

/**
 *   exp_log_minimax  C (log k)^(beta/(beta+1)); for beta < 1 the upper end
 *                    of the band is C (log k)^(1/2)
 *   alg_upper        C sqrt(log k)
 *   alg_lower        C ((alpha-1)/2) log(log k / log log k)
 *   double_exp       C log k / log log k
 *   finite_dim       C log k / (2 + d)
 * Log-log forms need log log k > 1, the others k > 1.
 */
[[nodiscard]] inline LogRate asymptotic_log_rate(const RateExpression& e, double log_k) {
    const double C = e.constant;
    const bool loglog = e.regime == RateRegime::alg_upper || e.regime == RateRegime::alg_lower ||
                        e.regime == RateRegime::double_exp;
    if (loglog ? !(std::log(log_k) > 1.0) : !(log_k > 0.0)) {
        throw std::domain_error(std::string("k below the minimum for regime ") + to_string(e.regime));
    }
    LogRate out;
    switch (e.regime) {
        case RateRegime::exp_log_minimax: {
            out.value = C * std::pow(log_k, e.beta / (e.beta + 1.0));
            out.lower = out.value;
            out.upper = e.beta < 1.0 ? C * std::sqrt(log_k) : out.value;
            out.tight = e.beta >= 1.0;
            if (!out.tight) out.note = "non-tight for 0 < beta < 1";
            break;
        }
        case RateRegime::alg_upper:
        case RateRegime::alg_lower: {
            out.lower = C * 0.5 * (e.alpha - 1.0) * std::log(log_k / std::log(log_k));
            out.upper = C * std::sqrt(log_k);
            out.value = e.regime == RateRegime::alg_upper ? out.upper : out.lower;
            out.tight = false;
            out.note = "non-tight for algebraic decay";
            break;
        }
        case RateRegime::double_exp:
            out.value = C * log_k / std::log(log_k);
            out.lower = out.upper = out.value;
            break;
        case RateRegime::finite_dim:
            out.value = C * log_k / (2.0 + static_cast<double>(e.d));
            out.lower = out.upper = out.value;
            break;
    }
    return out;
}

}  // namespace oplab
