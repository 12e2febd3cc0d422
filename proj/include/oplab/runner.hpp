// SPDX-License-Identifier: MIT
/**
 * @file runner.hpp
 * @brief Runs one validated experiment and writes its artifacts:
 *        results.csv, results.json (full provenance) and manifest.json.
 */
#pragma once

#include "oplab/config.hpp"
#include "oplab/io.hpp"
#include "oplab/lowerbound.hpp"
#include "oplab/rates.hpp"
#include "oplab/risk.hpp"
#include "oplab/verify.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#ifndef OPLAB_VERSION
#define OPLAB_VERSION "0.0.0"
#endif

namespace oplab {

inline constexpr const char* kVersion = OPLAB_VERSION;

/// Default output root: $OPLAB_OUT_DIR, else ./oplab-out.
[[nodiscard]] inline std::string default_out_root() {
    if (const char* env = std::getenv("OPLAB_OUT_DIR"); env && *env) return env;
    return "oplab-out";
}

/// FNV-1a over the canonical (key-sorted) config and the code version.
[[nodiscard]] inline std::string config_hash(const json& canonical) {
    return hex64(fnv1a(canonical.dump() + "\n" + kVersion));
}

struct RunOutput {
    int exit_code = 0;
    std::string directory;
    CsvTable table{{}};
    json mirror;
    json manifest;
};

// ---------------------------------------------------------------- risk curve

[[nodiscard]] inline RiskCurveSetup risk_setup(const ExperimentConfig& cfg) {
    RiskCurveSetup setup;
    setup.spectrum = cfg.spectrum;
    setup.law = cfg.law;
    setup.sim_dim = cfg.sim_dim;
    setup.op = cfg.op;
    setup.noise = cfg.noise;
    setup.design = cfg.design;
    setup.m_grid = cfg.m_grid;
    setup.trials = cfg.trials;
    setup.p = cfg.p;
    setup.n_mc = cfg.n_mc;
    setup.seed = cfg.seed;
    setup.workers = cfg.workers == 0 ? default_workers() : cfg.workers;
    setup.t = cfg.t;
    setup.hints = cfg.hints;
    return setup;
}

/// The Fano pipeline bound used for the sandwich column of a risk row: the
/// closed-form scan picks d, the pipeline is then built at h_star.
[[nodiscard]] inline std::optional<OptimizedBound> sandwich_bound(const ExperimentConfig& cfg, std::size_t m) {
    if (!(cfg.noise.sigma() > 0.0)) return std::nullopt;
    LowerBoundInput lin;
    lin.spectrum = cfg.spectrum;
    lin.m = static_cast<double>(m);
    lin.sigma = cfg.noise.sigma();
    lin.L = cfg.op.lipschitz();
    lin.B = cfg.op.bound();
    lin.law = cfg.law.constants();
    lin.p = cfg.p;
    lin.noise = cfg.noise.kind();
    lin.upsilon1 = cfg.noise.top_variance();
    try {
        const auto scan = eval_lower_bound(lin);
        FanoParams fp;
        fp.d = scan.d;
        fp.m = m;
        fp.sigma = lin.sigma;
        fp.L = lin.L;
        fp.B = lin.B;
        fp.spectrum = cfg.spectrum;
        fp.law = lin.law;
        fp.p = cfg.p;
        fp.noise = lin.noise;
        fp.upsilon1 = lin.upsilon1;
        fp.seed = derive_seed(cfg.seed, 0x5b);
        return optimize_h(fp);
    } catch (const InfeasibleError&) {
        return std::nullopt;
    }
}

[[nodiscard]] inline json selection_json(const ParameterSelection& s) {
    return {{"d", s.d},         {"R", s.R},       {"c", s.c},           {"n", s.n},
            {"r", s.r},         {"k", s.k},       {"margin", s.margin}, {"feasible", s.feasible},
            {"rule", s.rule},   {"d_reduced", s.d_reduced}};
}

/// JSON numbers cannot hold NaN; those become null.
[[nodiscard]] inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

[[nodiscard]] inline RunOutput run_risk_curve(const ExperimentConfig& cfg) {
    RunOutput out;
    out.table = CsvTable({"m", "trial_count", "mean_risk", "std_err", "d", "R", "c", "r", "feasible", "seed"});
    json rows = json::array();
    json fits = json::array();
    // One curve per truncation rank in r_grid; every rank reuses the master
    // seed so the sweep compares ranks on common random numbers.
    std::vector<std::optional<std::size_t>> ranks;
    if (cfg.r_grid.empty()) ranks.push_back(std::nullopt);
    for (auto r : cfg.r_grid) ranks.emplace_back(r);

    for (const auto& rank : ranks) {
        auto setup = risk_setup(cfg);
        if (rank) setup.hints.r = *rank;
        const RiskCurve curve = risk_curve(setup);
        for (const auto& row : curve.rows) {
            const auto& s = row.selection;
            out.table.add_row({std::to_string(row.m_effective ? row.m_effective : row.m_requested),
                               std::to_string(row.trials), format_double(row.mean_risk),
                               format_double(row.std_err), std::to_string(s.d), format_double(s.R),
                               format_double(s.c), std::to_string(s.r), s.feasible ? "true" : "false",
                               std::to_string(row.seed)});
            json j = {{"m_requested", row.m_requested},
                      {"m_effective", row.m_effective},
                      {"trials", row.trials},
                      {"mean_risk", number_or_null(row.mean_risk)},
                      {"std_err", number_or_null(row.std_err)},
                      {"mc_std_err", number_or_null(row.mc_std_err)},
                      {"seed", row.seed},
                      {"selection", selection_json(s)},
                      {"note", row.note}};
            if (rank) j["r_grid_value"] = *rank;
            if (cfg.sandwich && s.feasible) {
                if (const auto lb = sandwich_bound(cfg, row.m_effective)) {
                    j["lower_bound"] = {{"value", lb->bound},
                                        {"d", lb->instance.params.d},
                                        {"h", lb->h_star},
                                        {"c_h", lb->c_h},
                                        {"c0", lb->instance.c0},
                                        {"log_M", lb->instance.log_M},
                                        {"fano_condition", lb->instance.fano_condition}};
                }
            }
            rows.push_back(std::move(j));
        }
        json fit = {{"r", rank ? json(*rank) : json(nullptr)}};
        for (const auto& [name, abscissa] : {std::pair{"log_m", Abscissa::log_m},
                                            std::pair{"sqrt_log_k", Abscissa::log_k_power},
                                            std::pair{"log_k_over_log_log_k", Abscissa::log_k_over_log_log_k}}) {
            try {
                const auto f = fit_rate(curve, abscissa, 0.5);
                fit[name] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}};
            } catch (const std::invalid_argument&) {
                fit[name] = nullptr;
            }
        }
        fits.push_back(std::move(fit));
        out.mirror["tail_energy_neglected"] = curve.tail_energy_neglected;
    }
    out.mirror["rows"] = std::move(rows);
    out.mirror["fits"] = std::move(fits);
    out.mirror["operator"] = {{"family", cfg.op.family_name()},
                              {"B", cfg.op.bound()},
                              {"L", cfg.op.lipschitz()},
                              {"output_dim", cfg.op.output_dim()}};
    out.mirror["noise"] = {{"kind", to_string(cfg.noise.kind())},
                           {"sigma", cfg.noise.sigma()},
                           {"coeff_dim", cfg.noise.coeff_dim()},
                           {"variances", cfg.noise.variances()}};
    out.mirror["law_constants"] = {{"a", cfg.law.constants().a},
                                   {"b", cfg.law.constants().b},
                                   {"iota", cfg.law.constants().iota}};
    out.mirror["selection_hints"] = selection_to_json(cfg.hints);
    return out;
}

// --------------------------------------------------------------- lower bound

[[nodiscard]] inline RunOutput run_lower_bound(const ExperimentConfig& cfg) {
    RunOutput out;
    out.table = CsvTable({"m", "d", "h", "n_centers_log", "log_M", "s_star", "kl_budget", "fano_condition",
                          "lower_bound", "closed_form", "c0", "c_h", "materialized", "note"});
    json rows = json::array();
    const auto& lb = cfg.lower_bound;
    for (std::size_t i = 0; i < lb.m_grid.size(); ++i) {
        const std::size_t m = lb.m_grid[i];
        LowerBoundInput lin;
        lin.spectrum = cfg.spectrum;
        lin.m = static_cast<double>(m);
        lin.sigma = cfg.noise.sigma();
        lin.L = cfg.op.lipschitz();
        lin.B = cfg.op.bound();
        lin.law = cfg.law.constants();
        lin.p = cfg.p;
        lin.noise = cfg.noise.kind();
        lin.upsilon1 = cfg.noise.top_variance();
        lin.c_h = lb.c_h;
        lin.c0 = lb.c0;
        json j = {{"m", m}};
        try {
            const std::size_t d = lb.d ? *lb.d : eval_lower_bound(lin, lb.d_max).d;
            FanoParams fp;
            fp.d = d;
            fp.m = m;
            fp.sigma = lin.sigma;
            fp.L = lin.L;
            fp.B = lin.B;
            fp.spectrum = cfg.spectrum;
            fp.law = lin.law;
            fp.p = cfg.p;
            fp.noise = lin.noise;
            fp.upsilon1 = lin.upsilon1;
            fp.c0 = lb.c0;
            fp.c_h = lb.c_h;
            fp.seed = derive_seed(cfg.seed, i);
            fp.materialize_limit = lb.materialize_limit;
            FanoInstance inst;
            double c_h = std::nan("");
            if (lb.h) {
                fp.h = *lb.h;
                inst = build_instance(fp);
            } else {
                const auto opt = optimize_h(fp);
                inst = opt.instance;
                c_h = opt.c_h;
            }
            const double closed = lb.h ? std::nan("") : eval_lower_bound_at(lin, d).value;
            out.table.add_row({std::to_string(m), std::to_string(d), format_double(inst.params.h),
                               format_double(inst.log_n), format_double(inst.log_M), format_double(inst.s_star),
                               format_double(inst.kl_budget), inst.fano_condition ? "true" : "false",
                               format_double(fano_lower_bound(inst)), format_double(closed),
                               format_double(inst.c0), format_double(c_h), inst.code ? "true" : "false",
                               inst.diagnostic});
            j.update({{"d", d},
                      {"h", inst.params.h},
                      {"log_n", inst.log_n},
                      {"log_M", inst.log_M},
                      {"s_star", inst.s_star},
                      {"kl_budget", inst.kl_budget},
                      {"fano_condition", inst.fano_condition},
                      {"lower_bound", fano_lower_bound(inst)},
                      {"closed_form", number_or_null(closed)},
                      {"c0", inst.c0},
                      {"c_h", number_or_null(c_h)},
                      {"c_kl", inst.c_kl},
                      {"code_words", inst.code ? json(inst.code->words.size()) : json(nullptr)},
                      {"diagnostic", inst.diagnostic}});
        } catch (const InfeasibleError& e) {
            const std::string nan = format_double(std::nan(""));
            out.table.add_row({std::to_string(m), "0", nan, nan, nan, nan, nan, "false", nan, nan, nan, nan,
                               "false", e.what()});
            j["error"] = e.what();
        }
        rows.push_back(std::move(j));
    }
    out.mirror["rows"] = std::move(rows);
    return out;
}

// --------------------------------------------------------------------- rates

[[nodiscard]] inline RunOutput run_rates(const ExperimentConfig& cfg) {
    RunOutput out;
    out.table = CsvTable({"k", "log_k", "regime", "value", "lower", "upper", "tight", "constant", "note"});
    const auto& rc = cfg.rates;
    const double sigma = cfg.noise.sigma() > 0.0 ? cfg.noise.sigma() : 1.0;
    for (std::size_t i = 0; i < rc.points; ++i) {
        const double log_k = rc.log_k_from + (rc.log_k_to - rc.log_k_from) * static_cast<double>(i) /
                                                 static_cast<double>(rc.points - 1);
        const std::string k = format_double(std::exp(log_k));
        const std::string lk = format_double(log_k);
        for (const auto& e : rc.regimes) {
            try {
                const auto v = asymptotic_log_rate(e, log_k);
                out.table.add_row({k, lk, to_string(e.regime), format_double(v.value), format_double(v.lower),
                                   format_double(v.upper), v.tight ? "true" : "false", format_double(e.constant),
                                   v.note});
            } catch (const std::domain_error& err) {
                const std::string nan = format_double(std::nan(""));
                out.table.add_row({k, lk, to_string(e.regime), nan, nan, nan, "false", format_double(e.constant),
                                   err.what()});
            }
        }
        if (!rc.generic) continue;
        // Evaluated bounds for the configured spectrum, reported as -log(bound).
        std::optional<double> upper;
        std::size_t upper_d = 0;
        std::size_t d_max = rc.d_max;
        if (auto len = cfg.spectrum.length()) d_max = std::min(d_max, *len);
        for (std::size_t d = 1; d <= d_max; ++d) {
            if (cfg.spectrum.log_inv_sum(d) > 700.0) break;
            UpperBoundInput in{cfg.spectrum, log_k, cfg.op.bound(), cfg.op.lipschitz(), cfg.p, d,
                               cfg.noise.kind(), cfg.hints.r.value_or(1), cfg.t};
            try {
                const double v = eval_upper_bound(in);
                if (!upper || v < *upper) {
                    upper = v;
                    upper_d = d;
                }
            } catch (const InfeasibleError&) {
                break;
            }
        }
        const std::string nan = format_double(std::nan(""));
        if (upper) {
            out.table.add_row({k, lk, "upper_bound", format_double(-std::log(*upper)), nan, format_double(*upper),
                               "false", "1", "best d = " + std::to_string(upper_d)});
        } else {
            out.table.add_row({k, lk, "upper_bound", nan, nan, nan, "false", "1", "infeasible at every d"});
        }
        LowerBoundInput lin;
        lin.spectrum = cfg.spectrum;
        lin.m = std::exp(log_k) * sigma * sigma;
        lin.sigma = sigma;
        lin.L = cfg.op.lipschitz();
        lin.B = cfg.op.bound();
        lin.law = cfg.law.constants();
        lin.p = cfg.p;
        lin.noise = cfg.noise.kind();
        lin.upsilon1 = cfg.noise.top_variance();
        try {
            const auto scan = eval_lower_bound(lin, rc.d_max);
            out.table.add_row({k, lk, "lower_bound", format_double(-std::log(scan.value)), format_double(scan.value),
                               nan, "false", format_double(scan.detail.c_h),
                               "best d = " + std::to_string(scan.d)});
        } catch (const InfeasibleError& e) {
            out.table.add_row({k, lk, "lower_bound", nan, nan, nan, "false", "1", e.what()});
        }
    }
    json regimes = json::array();
    for (const auto& e : rc.regimes) {
        regimes.push_back({{"regime", to_string(e.regime)}, {"alpha", e.alpha}, {"beta", e.beta},
                           {"d", e.d}, {"constant", e.constant}});
    }
    out.mirror["regimes"] = std::move(regimes);
    out.mirror["columns"] = {
        {"value", "-log(risk) rate for regime rows; -log(bound) for upper_bound and lower_bound rows"},
        {"lower", "band lower end, or the lower bound itself"},
        {"upper", "band upper end, or the upper bound itself"}};
    return out;
}

// -------------------------------------------------------------------- verify

[[nodiscard]] inline RunOutput run_verify(const ExperimentConfig& cfg) {
    RunOutput out;
    out.table = CsvTable({"check", "passed", "detail"});
    VerifyOptions opt;
    opt.seed = cfg.seed;
    opt.n_mc = cfg.verify.n_mc;
    opt.kl_instances = cfg.verify.kl_instances;
    json checks = json::array();
    for (const auto& c : run_verify_suite(opt)) {
        out.table.add_row({c.name, c.passed ? "true" : "false", c.detail});
        checks.push_back({{"check", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        if (!c.passed) out.exit_code = 1;
    }
    out.mirror["checks"] = std::move(checks);
    return out;
}

// ------------------------------------------------------------------ dispatch

/**
 * Runs `cfg` and writes <out_root>/<name>/{results.csv, results.json,
 * manifest.json}. results.csv depends only on the config and the seed.
 */
[[nodiscard]] inline RunOutput run_experiment(const ExperimentConfig& cfg, const std::string& out_root) {
    const auto start = std::chrono::steady_clock::now();
    RunOutput out;
    if (cfg.experiment == "risk-curve") out = run_risk_curve(cfg);
    else if (cfg.experiment == "lower-bound") out = run_lower_bound(cfg);
    else if (cfg.experiment == "rates") out = run_rates(cfg);
    else out = run_verify(cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    namespace fs = std::filesystem;
    const fs::path dir = fs::path(out_root) / cfg.name;
    fs::create_directories(dir);
    out.directory = dir.string();
    out.table.save((dir / "results.csv").string());

    out.mirror["experiment"] = cfg.experiment;
    out.mirror["name"] = cfg.name;
    out.mirror["seed"] = cfg.seed;
    out.mirror["p"] = cfg.p;
    out.mirror["spectrum"] = spectrum_to_json(cfg.spectrum);
    out.mirror["law"] = to_string(cfg.law.kind());
    out.mirror["config"] = cfg.canonical;
    out.mirror["version"] = kVersion;
    {
        std::ofstream f(dir / "results.json", std::ios::binary);
        f << out.mirror.dump(2) << '\n';
    }
    out.manifest = {{"config_hash", config_hash(cfg.canonical)},
                    {"seed", cfg.seed},
                    {"versions", {{"oplab", kVersion}, {"compiler", __VERSION__}, {"cxx", __cplusplus}}},
                    {"wall_time_seconds", wall},
                    {"experiment", cfg.experiment},
                    {"exit_code", out.exit_code},
                    {"artifacts", {"results.csv", "results.json"}}};
    {
        std::ofstream f(dir / "manifest.json", std::ios::binary);
        f << out.manifest.dump(2) << '\n';
    }
    return out;
}

}  // namespace oplab
