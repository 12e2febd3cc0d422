// SPDX-License-Identifier: MIT
/**
 * @file verify.hpp
 * @brief Invariant suite behind `oplab run verify`: code and packing
 *        combinatorics, separation, KL oracles and closed-form consistency.
 */
#pragma once

#include "oplab/core.hpp"
#include "oplab/lowerbound.hpp"
#include "oplab/measure.hpp"
#include "oplab/noise.hpp"
#include "oplab/rates.hpp"
#include "oplab/risk.hpp"
#include "oplab/spectrum.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace oplab {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct VerifyOptions {
    std::uint64_t seed = 0;
    std::size_t n_mc = 200000;        ///< separation draws per (d, p)
    std::size_t kl_instances = 100;
};

namespace verify_detail {

inline std::string num(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

/// Upper bound minimized over the d values where the selection is feasible.
[[nodiscard]] inline std::optional<double> best_upper_bound(const SpectrumProfile& s, double log_k, double B,
                                                            double L, double p, std::size_t d_max = 64) {
    std::optional<double> best;
    if (auto len = s.length()) d_max = std::min(d_max, *len);
    for (std::size_t d = 1; d <= d_max; ++d) {
        if (s.log_inv_sum(d) > 700.0) break;
        UpperBoundInput in{s, log_k, B, L, p, d};
        try {
            const double v = eval_upper_bound(in);
            if (!best || v < *best) best = v;
        } catch (const InfeasibleError&) {
            break;
        }
    }
    return best;
}

/// Rows of a Haar-like orthogonal matrix (QR of a Gaussian matrix).
[[nodiscard]] inline Eigen::MatrixXd random_rotation(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) = g(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace verify_detail

/// Every M >= 2^(n/8) with the zero word first and pairwise distance >= n/8.
[[nodiscard]] inline CheckResult check_vg_codes(std::uint64_t seed) {
    CheckResult r{"vg_code", true, ""};
    std::ostringstream msg;
    for (std::size_t n : {8, 16, 24, 32, 48}) {
        Rng rng(derive_seed(seed, n));
        const auto code = vg_code(n, rng);
        std::string why;
        const bool ok = verify_vg_code(code, &why);
        msg << "n=" << n << " M=" << code.M() << (ok ? "" : " FAIL " + why) << "; ";
        r.passed = r.passed && ok;
    }
    r.detail = msg.str();
    return r;
}

/// Centers inside [-a + h, a - h]^d, boxes of half-width h pairwise
/// interior-disjoint and inside [-a, a]^d, count floor(a/h)^d.
[[nodiscard]] inline CheckResult check_packing() {
    CheckResult r{"packing", true, ""};
    std::ostringstream msg;
    struct Case { double a, h; std::size_t d; };
    const double a = std::numbers::sqrt3;
    for (const Case c : {Case{a, a / 8, 1}, Case{a, a / 8, 2}, Case{a, a / 11.5, 2}, Case{1.0, 0.1, 3}}) {
        const auto pts = packing_centers(c.a, c.h, c.d);
        const CenterGrid grid(c.a, c.h, c.d);
        bool ok = pts.size() == *grid.count();
        const double tol = 1e-12 * c.a;
        for (std::size_t i = 0; i < pts.size() && ok; ++i) {
            for (double x : pts.row(i)) ok = ok && std::abs(x) <= c.a - c.h + tol;
            for (std::size_t j = i + 1; j < pts.size() && ok; ++j) {
                double sep = 0.0;
                for (std::size_t k = 0; k < c.d; ++k) sep = std::max(sep, std::abs(pts.row(i)[k] - pts.row(j)[k]));
                ok = sep >= 2.0 * c.h - tol;
            }
        }
        msg << "d=" << c.d << " a/h=" << verify_detail::num(c.a / c.h) << " n=" << pts.size()
            << (ok ? "" : " FAIL") << "; ";
        r.passed = r.passed && ok;
    }
    r.detail = msg.str();
    return r;
}

/// Monte Carlo distance between two bump hypotheses against the exact
/// uniform-law floor, within 3 standard errors.
[[nodiscard]] inline CheckResult check_separation(std::uint64_t seed, std::size_t n_mc) {
    CheckResult r{"separation", true, ""};
    std::ostringstream msg;
    const auto spectrum = SpectrumProfile::algebraic(2.0);
    const CoordinateLaw law(LawKind::uniform);
    for (std::size_t d : {1, 2}) {
        for (double p : {1.0, 2.0}) {
            FanoParams fp;
            fp.d = d;
            fp.law = law.constants();
            fp.h = fp.law.a / 8.0;
            fp.m = 1;
            fp.sigma = 1.0;
            fp.B = 10.0;
            fp.spectrum = spectrum;
            fp.p = p;
            fp.seed = derive_seed(seed, d * 10 + static_cast<std::size_t>(p));
            const auto inst = build_instance(fp);
            const InputMeasure measure(spectrum, law, d);
            Rng rng(derive_seed(fp.seed, 1));
            const auto s = separation_check(inst, 0, 1, p, measure, n_mc, rng);
            const bool ok = std::abs(s.mc_distance - s.theoretical_floor) <= 3.0 * s.mc_std_err;
            msg << "d=" << d << " p=" << p << " mc=" << verify_detail::num(s.mc_distance) << " floor="
                << verify_detail::num(s.theoretical_floor) << " se=" << verify_detail::num(s.mc_std_err)
                << (ok ? "" : " FAIL") << "; ";
            r.passed = r.passed && ok;
        }
    }
    r.detail = msg.str();
    return r;
}

/**
 * Instance KL against the dense Gaussian mean-shift formula
 * ||Sigma^(-1/2) delta||^2 / 2 computed in a randomly rotated basis, and
 * against the budget c L^2 h^2 m / (sigma^2 sum 1/lambda).
 */
[[nodiscard]] inline CheckResult check_kl_oracle(std::uint64_t seed, std::size_t instances) {
    CheckResult r{"kl_oracle", true, ""};
    Rng rng(derive_seed(seed, 0x6b6c));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const CoordinateLaw law(LawKind::uniform);
    double worst_rel = 0.0;
    double worst_ratio = 0.0;
    std::size_t failures = 0;
    for (std::size_t t = 0; t < instances; ++t) {
        FanoParams fp;
        fp.d = 1 + static_cast<std::size_t>(unit(rng) < 0.5);
        fp.law = law.constants();
        const double a = fp.law.a;
        // d = 2 needs floor(a/h) = 8 to keep the code materialized.
        fp.h = fp.d == 1 ? a / (8.0 + 50.0 * unit(rng)) : a / (8.0 + 0.9 * unit(rng));
        fp.m = 1 + static_cast<std::size_t>(16.0 * unit(rng)) % 16;
        fp.sigma = 0.05 + unit(rng);
        fp.L = 0.5 + unit(rng);
        fp.B = 100.0;
        fp.spectrum = unit(rng) < 0.5 ? SpectrumProfile::algebraic(1.5 + unit(rng))
                                      : SpectrumProfile::exponential(0.5 + unit(rng), 1.0);
        const bool white = unit(rng) < 0.5;
        const std::size_t coeff_dim = 1 + static_cast<std::size_t>(3.0 * unit(rng));
        const NoiseModel noise = white ? NoiseModel::white(fp.sigma, coeff_dim)
                                       : NoiseModel::hilbert(fp.sigma, coeff_dim);
        fp.noise = noise.kind();
        fp.upsilon1 = noise.top_variance();
        fp.seed = rng();
        const auto inst = build_instance(fp);
        const std::size_t j = 1 + static_cast<std::size_t>(unit(rng) * static_cast<double>(inst.code->M()));
        const auto hyp = std::min(j, inst.code->M());

        const InputMeasure measure(fp.spectrum, law, fp.d + 1);
        const PointSet pts = measure.sample(fp.m, rng);
        const double kl = instance_kl(inst, hyp, pts, noise);

        const auto op = instance_operator(inst, hyp, coeff_dim);
        const auto n = static_cast<Eigen::Index>(fp.m * coeff_dim);
        Eigen::VectorXd delta(n);
        Eigen::VectorXd var(n);
        std::vector<double> y(coeff_dim);
        for (std::size_t i = 0; i < fp.m; ++i) {
            op.evaluate(pts.row(i), y);
            for (std::size_t c = 0; c < coeff_dim; ++c) {
                const auto k = static_cast<Eigen::Index>(i * coeff_dim + c);
                delta(k) = y[c];
                var(k) = fp.sigma * fp.sigma * noise.variance(c + 1);
            }
        }
        const Eigen::MatrixXd Q = verify_detail::random_rotation(n, rng);
        const Eigen::MatrixXd sigma_rot = Q * var.asDiagonal() * Q.transpose();
        const Eigen::VectorXd delta_rot = Q * delta;
        const Eigen::LLT<Eigen::MatrixXd> llt(sigma_rot);
        const double oracle = 0.5 * delta_rot.dot(llt.solve(delta_rot));

        const double scale = std::max({std::abs(kl), std::abs(oracle), 1e-14 * inst.kl_budget});
        const double rel = std::abs(kl - oracle) / scale;
        worst_rel = std::max(worst_rel, rel);
        worst_ratio = std::max(worst_ratio, kl / inst.kl_budget);
        if (!(rel <= 1e-10) || !(kl <= inst.kl_budget * (1.0 + 1e-12))) ++failures;
    }
    r.passed = failures == 0;
    r.detail = std::to_string(instances) + " instances, worst relative gap " + verify_detail::num(worst_rel) +
               ", worst kl/budget " + verify_detail::num(worst_ratio) + ", failures " + std::to_string(failures);
    return r;
}

/// Both laws keep density >= b on [-a, a] and iota = 2ab <= 1.
[[nodiscard]] inline CheckResult check_density_floor() {
    CheckResult r{"density_floor", true, ""};
    std::ostringstream msg;
    for (LawKind kind : {LawKind::uniform, LawKind::gaussian}) {
        const CoordinateLaw law(kind);
        const auto c = law.constants();
        bool ok = c.iota <= 1.0 + 1e-15 && std::abs(c.iota - 2.0 * c.a * c.b) <= 1e-15;
        for (int i = 0; i <= 1000; ++i) {
            const double x = -c.a + 2.0 * c.a * i / 1000.0;
            ok = ok && law.density(std::clamp(x, -c.a, c.a)) >= c.b * (1.0 - 1e-15);
        }
        msg << to_string(kind) << " iota=" << verify_detail::num(c.iota) << (ok ? "" : " FAIL") << "; ";
        r.passed = r.passed && ok;
    }
    r.detail = msg.str();
    return r;
}

/// tail_sum(d) - tail_sum(d+1) = lambda_{d+1} across every spectrum kind.
[[nodiscard]] inline CheckResult check_telescoping() {
    CheckResult r{"telescoping", true, ""};
    double worst = 0.0;
    const std::vector<SpectrumProfile> spectra = {
        SpectrumProfile::algebraic(2.0), SpectrumProfile::algebraic(3.5), SpectrumProfile::exponential(1.0, 1.0),
        SpectrumProfile::exponential(0.3, 0.5), SpectrumProfile::double_exponential(0.5),
        SpectrumProfile::explicit_list({1.0, 0.5, 0.25, 0.2, 0.01})};
    for (const auto& s : spectra) {
        const std::size_t top = s.length() ? *s.length() - 1 : 12;
        for (std::size_t d = 0; d < top; ++d) {
            const double diff = s.tail_sum(d) - s.tail_sum(d + 1);
            const double lam = s.eigenvalue(d + 1);
            // tail sums carry a relative truncation error of 1e-12
            const double gap = std::abs(diff - lam) / std::max(lam, 1e-12 * s.tail_sum(d));
            worst = std::max(worst, gap);
        }
    }
    r.passed = worst <= 1e-6;
    r.detail = "worst relative gap " + verify_detail::num(worst);
    return r;
}

/// eval_lower_bound <= eval_upper_bound wherever both are feasible.
[[nodiscard]] inline CheckResult check_rates_sandwich() {
    CheckResult r{"rates_sandwich", true, ""};
    const std::vector<SpectrumProfile> spectra = {
        SpectrumProfile::exponential(1.0, 1.0), SpectrumProfile::exponential(1.0, 0.5),
        SpectrumProfile::exponential(0.5, 2.0), SpectrumProfile::algebraic(2.0), SpectrumProfile::algebraic(4.0),
        SpectrumProfile::double_exponential(0.5)};
    std::size_t compared = 0, violations = 0;
    const double sigma = 0.1;
    for (const auto& s : spectra) {
        for (int i = 0; i <= 40; ++i) {
            const double log_k = 2.0 + i;
            const auto upper = verify_detail::best_upper_bound(s, log_k, 1.0, 1.0, 2.0);
            LowerBoundInput lin;
            lin.spectrum = s;
            lin.sigma = sigma;
            lin.m = std::exp(log_k) * sigma * sigma;
            lin.law = CoordinateLaw(LawKind::uniform).constants();
            std::optional<double> lower;
            try {
                lower = eval_lower_bound(lin).value;
            } catch (const InfeasibleError&) {
            }
            if (!upper || !lower) continue;
            ++compared;
            if (*lower > *upper) ++violations;
        }
    }
    r.passed = violations == 0 && compared > 0;
    r.detail = std::to_string(compared) + " grid points compared, " + std::to_string(violations) + " violations";
    return r;
}

/// For q in {0.1, 0.5, 1}: lower(k) k^q increases over the tail of a log-k grid.
[[nodiscard]] inline CheckResult check_no_algebraic_decay() {
    CheckResult r{"no_algebraic_decay", true, ""};
    std::ostringstream msg;
    const std::vector<SpectrumProfile> spectra = {SpectrumProfile::exponential(1.0, 1.0),
                                                  SpectrumProfile::algebraic(2.0)};
    for (const auto& s : spectra) {
        std::vector<double> log_terms;
        for (int i = 0; i <= 60; ++i) {
            const double log_k = 10.0 + 5.0 * i;
            LowerBoundInput lin;
            lin.spectrum = s;
            lin.sigma = 1.0;
            lin.m = std::exp(log_k);
            lin.law = CoordinateLaw(LawKind::uniform).constants();
            log_terms.push_back(std::log(eval_lower_bound(lin).value));
        }
        for (double q : {0.1, 0.5, 1.0}) {
            // increasing over the last third of the grid
            bool ok = true;
            for (std::size_t i = 2 * log_terms.size() / 3; i + 1 < log_terms.size(); ++i) {
                const double a = log_terms[i] + q * (10.0 + 5.0 * static_cast<double>(i));
                const double b = log_terms[i + 1] + q * (10.0 + 5.0 * static_cast<double>(i + 1));
                ok = ok && b > a;
            }
            msg << to_string(s.kind()) << " q=" << q << (ok ? "" : " FAIL") << "; ";
            r.passed = r.passed && ok;
        }
    }
    r.detail = msg.str();
    return r;
}

/// -log(upper bound) against (log k)^(1/2) is close to linear for beta = 1.
[[nodiscard]] inline CheckResult check_exponent_consistency() {
    CheckResult r{"exponent_consistency", true, ""};
    const auto s = SpectrumProfile::exponential(1.0, 1.0);
    std::vector<double> xs, ys;
    for (int i = 0; i <= 45; ++i) {
        const double log_k = std::log(1e3) + (std::log(1e12) - std::log(1e3)) * i / 45.0;
        const auto upper = verify_detail::best_upper_bound(s, log_k, 1.0, 1.0, 2.0);
        if (!upper) continue;
        xs.push_back(std::sqrt(log_k));
        ys.push_back(-std::log(*upper));
    }
    if (xs.size() < 4) {
        r.passed = false;
        r.detail = "too few feasible grid points";
        return r;
    }
    const auto fit = fit_line(xs, ys);
    r.passed = fit.r_squared >= 0.99 && fit.slope > 0.0;
    r.detail = "slope " + verify_detail::num(fit.slope) + ", r2 " + verify_detail::num(fit.r_squared);
    return r;
}

/// Fano pipeline at h_star against the independent closed form, 1e-12.
[[nodiscard]] inline CheckResult check_pipeline_closed_form(std::uint64_t seed) {
    CheckResult r{"pipeline_closed_form", true, ""};
    double worst = 0.0;
    std::size_t cases = 0;
    const std::vector<SpectrumProfile> spectra = {SpectrumProfile::exponential(1.0, 1.0),
                                                  SpectrumProfile::algebraic(2.0),
                                                  SpectrumProfile::explicit_list({1.0, 1.0})};
    for (const auto& s : spectra) {
        for (std::size_t d : {1, 2}) {
            for (double m : {1.0, 10.0, 1e3, 1e5, 1e8}) {
                for (LawKind kind : {LawKind::uniform, LawKind::gaussian}) {
                    LowerBoundInput lin;
                    lin.spectrum = s;
                    lin.m = m;
                    lin.sigma = 0.1;
                    lin.B = 10.0;
                    lin.law = CoordinateLaw(kind).constants();
                    FanoParams fp;
                    fp.d = d;
                    fp.m = static_cast<std::size_t>(m);
                    fp.sigma = lin.sigma;
                    fp.B = lin.B;
                    fp.spectrum = s;
                    fp.law = lin.law;
                    fp.seed = derive_seed(seed, cases);
                    const double pipeline = optimize_h(fp).bound;
                    const double closed = eval_lower_bound_at(lin, d).value;
                    const double gap = std::abs(pipeline - closed) / std::max(std::abs(closed), 1e-300);
                    worst = std::max(worst, pipeline == closed ? 0.0 : gap);
                    ++cases;
                }
            }
        }
    }
    r.passed = worst <= 1e-12;
    r.detail = std::to_string(cases) + " cases, worst relative gap " + verify_detail::num(worst);
    return r;
}

/// Runs every check in a fixed order.
[[nodiscard]] inline std::vector<CheckResult> run_verify_suite(const VerifyOptions& opt) {
    const std::vector<std::pair<std::string, std::function<CheckResult()>>> checks = {
        {"vg_code", [&] { return check_vg_codes(opt.seed); }},
        {"packing", [] { return check_packing(); }},
        {"separation", [&] { return check_separation(opt.seed, opt.n_mc); }},
        {"kl_oracle", [&] { return check_kl_oracle(opt.seed, opt.kl_instances); }},
        {"density_floor", [] { return check_density_floor(); }},
        {"telescoping", [] { return check_telescoping(); }},
        {"rates_sandwich", [] { return check_rates_sandwich(); }},
        {"no_algebraic_decay", [] { return check_no_algebraic_decay(); }},
        {"exponent_consistency", [] { return check_exponent_consistency(); }},
        {"pipeline_closed_form", [&] { return check_pipeline_closed_form(opt.seed); }},
    };
    std::vector<CheckResult> out;
    for (const auto& [name, check] : checks) {
        const auto start = std::chrono::steady_clock::now();
        CheckResult res;
        try {
            res = check();
        } catch (const std::exception& e) {
            res.passed = false;
            res.detail = std::string("threw: ") + e.what();
        }
        res.name = name;
        res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.push_back(std::move(res));
    }
    return out;
}

}  // namespace oplab
