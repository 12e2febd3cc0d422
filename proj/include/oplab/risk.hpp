// SPDX-License-Identifier: MIT
/**
 * @file risk.hpp
 * @brief Monte Carlo L^p_mu risk and risk-versus-m curves.
 */
#pragma once

#include "oplab/core.hpp"
#include "oplab/estimator.hpp"
#include "oplab/measure.hpp"
#include "oplab/noise.hpp"
#include "oplab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace oplab {

struct RiskEstimate {
    double value = 0.0;
    double mc_std_err = 0.0;
    std::size_t n_mc = 0;
    double p = 2.0;
    double tail_energy_neglected = 0.0;
};

/// Mean, standard deviation and count of a sample, accumulated in one pass.
class RunningStats {
public:
    void add(double x) noexcept {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }
    [[nodiscard]] std::size_t count() const noexcept { return n_; }
    [[nodiscard]] double mean() const noexcept { return mean_; }
    [[nodiscard]] double variance() const noexcept {
        return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    }
    [[nodiscard]] double std_err() const noexcept {
        return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// (mean Z)^(1/p) with the delta-method standard error (1/p) mean^(1/p-1) se(Z).
[[nodiscard]] inline RiskEstimate pth_root_estimate(const RunningStats& z, double p) {
    RiskEstimate out;
    out.p = p;
    out.n_mc = z.count();
    const double mean = std::max(z.mean(), 0.0);
    out.value = std::pow(mean, 1.0 / p);
    out.mc_std_err = mean > 0.0 ? std::pow(mean, 1.0 / p - 1.0) * z.std_err() / p : 0.0;
    return out;
}

/**
 * (E ||F(X) - F_hat(X)||^p)^(1/p) over X ~ mu, estimated from n_mc fresh
 * draws. Output vectors are compared coefficientwise, zero-padding the
 * shorter one.
 */
template <Predictor A, Predictor B>
[[nodiscard]] RiskEstimate empirical_risk(const A& f_true, const B& f_hat, double p,
                                          const InputMeasure& measure, std::size_t n_mc, Rng& rng) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("empirical_risk needs 1 <= p < inf");
    if (n_mc < 2) throw std::invalid_argument("empirical_risk needs n_mc >= 2");
    std::vector<double> x(measure.sim_dim());
    std::vector<double> y_true(f_true.output_dim());
    std::vector<double> y_hat(f_hat.output_dim());
    auto draw = measure.law().sampler();
    RunningStats z;
    for (std::size_t i = 0; i < n_mc; ++i) {
        measure.sample_into(draw, rng, x);
        f_true.evaluate(x, y_true);
        f_hat.evaluate(x, y_hat);
        const double dist = padded_distance(y_true, y_hat);
        z.add(p == 2.0 ? dist * dist : std::pow(dist, p));
    }
    RiskEstimate out = pth_root_estimate(z, p);
    out.tail_energy_neglected = measure.tail_energy();
    return out;
}

/// Runs fn(i) for i in [0, count) on `workers` threads. Results must be
/// written by index so the reduction order never depends on scheduling.
template <class Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

[[nodiscard]] inline std::size_t default_workers() noexcept {
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Everything one risk-versus-m experiment needs.
struct RiskCurveSetup {
    SpectrumProfile spectrum = SpectrumProfile::algebraic(2.0);
    CoordinateLaw law{LawKind::uniform};
    std::optional<std::size_t> sim_dim;
    TestOperator op = TestOperator::zero();
    NoiseModel noise = NoiseModel::hilbert(0.1, 8);
    DesignKind design = DesignKind::fixed_stratified;
    std::vector<std::size_t> m_grid;
    std::size_t trials = 10;
    double p = 2.0;
    std::size_t n_mc = 2000;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    /// Smoothness index used by the white-noise r rule.
    double t = 1.0;
    SelectionHints hints;
};

struct RiskRow {
    std::size_t m_requested = 0;
    std::size_t m_effective = 0;
    std::size_t trials = 0;
    double mean_risk = 0.0;
    double std_err = 0.0;
    double mc_std_err = 0.0;  ///< mean of the per-trial Monte Carlo errors
    ParameterSelection selection;
    std::uint64_t seed = 0;
    std::string note;
};

struct RiskCurve {
    double sigma = 0.0;
    double p = 2.0;
    double tail_energy_neglected = 0.0;
    std::vector<RiskRow> rows;
};

/// One trial: design, observation, fit and risk evaluation on one stream.
[[nodiscard]] inline RiskEstimate run_trial(const RiskCurveSetup& setup, const InputMeasure& measure,
                                            const ParameterSelection& sel,
                                            const HistogramPartition& partition, std::size_t m,
                                            std::uint64_t seed) {
    Rng rng(seed);
    const Design design = setup.design == DesignKind::fixed_stratified
                              ? make_fixed_design(partition, m)
                              : make_random_design(sel.R, sel.d, setup.spectrum, m, rng);
    const Dataset data = observe(setup.op, design, setup.noise, rng);
    const auto est = HistogramEstimator::fit(data, partition, sel.r);
    return empirical_risk(setup.op, est, setup.p, measure, setup.n_mc, rng);
}

/**
 * For each m: select parameters, then run `trials` independent trials.
 * Row seed = derive_seed(seed, row), trial seed = derive_seed(row seed, trial).
 * An infeasible selection marks the row instead of aborting the grid.
 */
[[nodiscard]] inline RiskCurve risk_curve(const RiskCurveSetup& setup) {
    if (setup.trials == 0) throw std::invalid_argument("risk_curve needs trials >= 1");
    if (setup.m_grid.empty()) throw std::invalid_argument("risk_curve needs a nonempty m grid");
    const InputMeasure measure(setup.spectrum, setup.law, setup.sim_dim);
    RiskCurve curve;
    curve.sigma = setup.noise.sigma();
    curve.p = setup.p;
    curve.tail_energy_neglected = measure.tail_energy();

    for (std::size_t row_index = 0; row_index < setup.m_grid.size(); ++row_index) {
        RiskRow row;
        row.m_requested = setup.m_grid[row_index];
        row.seed = derive_seed(setup.seed, row_index);
        try {
            SelectionInput in;
            in.m = row.m_requested;
            in.sigma = setup.noise.sigma();
            in.spectrum = setup.spectrum;
            in.B = setup.op.bound();
            in.L = setup.op.lipschitz();
            in.p = setup.p;
            in.noise = setup.noise.kind();
            in.t = setup.t;
            in.hints = setup.hints;
            row.selection = select_parameters(in);
            if (row.selection.r > setup.noise.coeff_dim() && setup.noise.kind() == NoiseKind::white) {
                throw InfeasibleError("white-noise rank r exceeds coeff_dim");
            }
            const auto partition = row.selection.partition(setup.spectrum);
            row.m_effective = row.m_requested;
            if (setup.design == DesignKind::fixed_stratified) {
                const CellIndex n = partition.cell_count();
                if (row.m_requested < n) {
                    throw InfeasibleError("fixed design needs m >= n = " + std::to_string(n));
                }
                row.m_effective = static_cast<std::size_t>((row.m_requested / n) * n);
            }
            std::vector<RiskEstimate> results(setup.trials);
            parallel_for(setup.trials, setup.workers, [&](std::size_t trial) {
                results[trial] = run_trial(setup, measure, row.selection, partition, row.m_requested,
                                           derive_seed(row.seed, trial));
            });
            RunningStats across;
            double mc = 0.0;
            for (const auto& r : results) {
                across.add(r.value);
                mc += r.mc_std_err;
            }
            row.trials = setup.trials;
            row.mean_risk = across.mean();
            row.mc_std_err = mc / static_cast<double>(setup.trials);
            row.std_err = setup.trials > 1 ? across.std_err() : row.mc_std_err;
        } catch (const InfeasibleError& e) {
            row.selection.feasible = false;
            row.trials = 0;
            row.mean_risk = std::nan("");
            row.std_err = std::nan("");
            row.note = e.what();
        }
        curve.rows.push_back(std::move(row));
    }
    return curve;
}

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope x.
[[nodiscard]] inline RateFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_line: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("fit_line needs >= 2 points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: abscissa is constant");
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return fit;
}

enum class Abscissa { log_m, log_k_power, log_k_over_log_log_k };

/**
 * OLS of -log(mean risk) against the chosen abscissa:
 *   log_m                  log m
 *   log_k_power            (log k)^gamma,  k = m / sigma^2
 *   log_k_over_log_log_k   log k / log log k
 * Rows that are infeasible or have a non-positive risk are skipped.
 */
[[nodiscard]] inline RateFit fit_rate(const RiskCurve& curve, Abscissa abscissa, double gamma = 0.5) {
    std::vector<double> xs, ys;
    for (const auto& row : curve.rows) {
        if (!row.selection.feasible || !(row.mean_risk > 0.0) || !std::isfinite(row.mean_risk)) continue;
        const double m = static_cast<double>(row.m_effective);
        const double log_k = std::log(m) - 2.0 * std::log(curve.sigma);
        double x = 0.0;
        switch (abscissa) {
            case Abscissa::log_m: x = std::log(m); break;
            case Abscissa::log_k_power: x = std::pow(log_k, gamma); break;
            case Abscissa::log_k_over_log_log_k: x = log_k / std::log(log_k); break;
        }
        xs.push_back(x);
        ys.push_back(-std::log(row.mean_risk));
    }
    if (xs.size() < 4) throw std::invalid_argument("fit_rate needs >= 4 finite rows");
    return fit_line(xs, ys);
}

}  // namespace oplab
