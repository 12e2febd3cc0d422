// SPDX-License-Identifier: MIT
/**
 * @file config.hpp
 * @brief Experiment configuration: JSON (comments allowed), validated against
 *        a fixed schema before anything runs. Unknown fields are errors that
 *        name the full field path.
 */
#pragma once

#include "oplab/core.hpp"
#include "oplab/estimator.hpp"
#include "oplab/measure.hpp"
#include "oplab/noise.hpp"
#include "oplab/operators.hpp"
#include "oplab/rates.hpp"
#include "oplab/spectrum.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace oplab {

using json = nlohmann::json;

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Reads one JSON object, remembering which keys were consumed.
class FieldReader {
public:
    FieldReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail("", "expected an object");
    }

    [[nodiscard]] bool has(const std::string& key) const { return node_.contains(key); }

    [[nodiscard]] const json& raw(const std::string& key) {
        seen_.insert(key);
        if (!node_.contains(key)) fail(key, "missing required field");
        return node_.at(key);
    }

    template <class T>
    [[nodiscard]] T get(const std::string& key) {
        const json& v = raw(key);
        return convert<T>(v, key);
    }

    template <class T>
    [[nodiscard]] T get(const std::string& key, T fallback) {
        seen_.insert(key);
        if (!node_.contains(key) || node_.at(key).is_null()) return fallback;
        return convert<T>(node_.at(key), key);
    }

    template <class T>
    [[nodiscard]] std::optional<T> optional(const std::string& key) {
        seen_.insert(key);
        if (!node_.contains(key) || node_.at(key).is_null()) return std::nullopt;
        return convert<T>(node_.at(key), key);
    }

    [[nodiscard]] FieldReader child(const std::string& key) {
        return FieldReader(raw(key), join(key));
    }

    [[nodiscard]] std::string join(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    /// Throws on the first key that was never read.
    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!seen_.count(key)) fail(key, "unknown field");
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        const std::string where = key.empty() ? (path_.empty() ? "<root>" : path_) : join(key);
        throw ConfigError("config: " + where + ": " + what);
    }

private:
    template <class T>
    T convert(const json& v, const std::string& key) const {
        try {
            if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
                if (v.is_number_unsigned()) return v.get<T>();
                if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<T>(v.get<long long>());
                if (v.is_number_float()) {
                    const double d = v.get<double>();
                    if (d >= 0 && d == std::floor(d) && d < 1.8e19) return static_cast<T>(d);
                }
                fail(key, "expected a nonnegative integer");
            } else if constexpr (std::is_same_v<T, double>) {
                if (!v.is_number()) fail(key, "expected a number");
                return v.get<double>();
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v.is_boolean()) fail(key, "expected true or false");
                return v.get<bool>();
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v.is_string()) fail(key, "expected a string");
                return v.get<std::string>();
            } else {
                return v.get<T>();
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            fail(key, e.what());
        }
    }

    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

[[nodiscard]] inline SpectrumProfile parse_spectrum(FieldReader r) {
    const auto kind = r.get<std::string>("kind");
    SpectrumProfile out = SpectrumProfile::algebraic(2.0);
    try {
        if (kind == "algebraic") {
            out = SpectrumProfile::algebraic(r.get<double>("alpha"));
        } else if (kind == "exponential") {
            out = SpectrumProfile::exponential(r.get<double>("alpha"), r.get<double>("beta", 1.0));
        } else if (kind == "double_exponential") {
            out = SpectrumProfile::double_exponential(r.get<double>("alpha"));
        } else if (kind == "explicit") {
            out = SpectrumProfile::explicit_list(r.get<std::vector<double>>("values"));
        } else {
            r.fail("kind", "expected algebraic, exponential, double_exponential or explicit");
        }
    } catch (const std::invalid_argument& e) {
        r.fail("", e.what());
    }
    r.finish();
    return out;
}

[[nodiscard]] inline json spectrum_to_json(const SpectrumProfile& s) {
    switch (s.kind()) {
        case SpectrumKind::algebraic: return {{"kind", "algebraic"}, {"alpha", s.alpha()}};
        case SpectrumKind::exponential:
            return {{"kind", "exponential"}, {"alpha", s.alpha()}, {"beta", s.beta()}};
        case SpectrumKind::double_exponential:
            return {{"kind", "double_exponential"}, {"alpha", s.alpha()}};
        case SpectrumKind::explicit_list: return {{"kind", "explicit"}, {"values", s.values()}};
    }
    return {};
}

[[nodiscard]] inline CoordinateLaw parse_law(FieldReader& r, const std::string& key) {
    const auto law = r.get<std::string>(key, "uniform");
    if (law == "uniform") return CoordinateLaw(LawKind::uniform);
    if (law == "gaussian") return CoordinateLaw(LawKind::gaussian);
    r.fail(key, "expected uniform or gaussian");
}

[[nodiscard]] inline Eigen::MatrixXd parse_matrix(FieldReader& r, const std::string& key) {
    const auto rows = r.get<std::vector<std::vector<double>>>(key);
    if (rows.empty() || rows[0].empty()) r.fail(key, "expected a nonempty matrix");
    Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) r.fail(key, "ragged matrix rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return A;
}

/**
 * Operator families:
 *   {family: zero, output_dim}
 *   {family: clipped_linear, weights: [[...]], B, L}
 *   {family: tent_product, d, amplitude, direction, output_dim}
 *   {family: bump_sum, d, h, a, theta: [0/1...], L, direction, output_dim}
 * Tent and bump functionals read their eigenvalues from the experiment spectrum.
 */
[[nodiscard]] inline TestOperator parse_operator(FieldReader r, const SpectrumProfile& spectrum) {
    const auto family = r.get<std::string>("family");
    try {
        if (family == "zero") {
            const auto dim = r.get<std::size_t>("output_dim", 1);
            r.finish();
            return TestOperator::zero(dim);
        }
        if (family == "clipped_linear") {
            auto A = parse_matrix(r, "weights");
            const double B = r.get<double>("B");
            const double L = r.get<double>("L");
            r.finish();
            return TestOperator(ClippedLinear(std::move(A), B, L));
        }
        if (family == "tent_product" || family == "bump_sum") {
            const auto d = r.get<std::size_t>("d");
            const auto direction = r.get<std::size_t>("direction", 1);
            const auto output_dim = r.get<std::size_t>("output_dim", direction);
            Functional f = TentFunctional(1, spectrum);
            if (family == "tent_product") {
                f = TentFunctional(d, spectrum, r.get<double>("amplitude", 1.0));
            } else {
                const CenterGrid grid(r.get<double>("a"), r.get<double>("h"), d);
                const auto bits = r.get<std::vector<int>>("theta");
                std::vector<std::uint8_t> theta;
                for (int b : bits) {
                    if (b != 0 && b != 1) r.fail("theta", "entries must be 0 or 1");
                    theta.push_back(static_cast<std::uint8_t>(b));
                }
                f = BumpFunctional(BumpFamilyParams{grid, theta, r.get<double>("L"),
                                                    HistogramPartition::leading_eigenvalues(spectrum, d)});
            }
            r.finish();
            return lift_to_operator(std::move(f), direction, output_dim);
        }
    } catch (const std::invalid_argument& e) {
        r.fail("", e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        r.fail("", e.what());
    }
    r.fail("family", "expected zero, clipped_linear, tent_product or bump_sum");
}

[[nodiscard]] inline NoiseModel parse_noise(FieldReader r, std::size_t default_dim) {
    const auto kind = r.get<std::string>("kind");
    const double sigma = r.get<double>("sigma");
    const auto coeff_dim = r.get<std::size_t>("coeff_dim", default_dim);
    try {
        if (kind == "hilbert") {
            SpectrumProfile upsilon = NoiseModel::default_upsilon();
            if (r.has("upsilon")) upsilon = parse_spectrum(r.child("upsilon"));
            r.finish();
            return NoiseModel::hilbert(sigma, coeff_dim, upsilon);
        }
        if (kind == "white") {
            r.finish();
            return NoiseModel::white(sigma, coeff_dim);
        }
    } catch (const std::invalid_argument& e) {
        r.fail("", e.what());
    }
    r.fail("kind", "expected hilbert or white");
}

[[nodiscard]] inline SelectionHints parse_selection(FieldReader r) {
    SelectionHints h;
    h.d = r.optional<std::size_t>("d");
    h.r = r.optional<std::size_t>("r");
    h.d_max = r.optional<std::size_t>("d_max");
    h.c_prime = r.get<double>("c_prime", 1.0);
    h.c_double_prime = r.get<double>("c_double_prime", 1.0);
    h.c_scale = r.get<double>("c_scale", 1.0);
    h.R = r.optional<double>("R");
    if (r.has("finite_dim")) {
        auto fd = r.child("finite_dim");
        h.finite_dim_R = fd.get<double>("R");
        h.finite_dim_scale = fd.get<double>("scale", 1.0);
        fd.finish();
    }
    if (!(h.c_prime > 0.0) || !(h.c_double_prime > 0.0) || !(h.c_scale > 0.0)) {
        r.fail("", "selection constants must be positive");
    }
    r.finish();
    return h;
}

[[nodiscard]] inline json selection_to_json(const SelectionHints& h) {
    json j = {{"c_prime", h.c_prime}, {"c_double_prime", h.c_double_prime}, {"c_scale", h.c_scale}};
    if (h.d) j["d"] = *h.d;
    if (h.r) j["r"] = *h.r;
    if (h.d_max) j["d_max"] = *h.d_max;
    if (h.R) j["R"] = *h.R;
    if (h.finite_dim_R) j["finite_dim"] = {{"R", *h.finite_dim_R}, {"scale", h.finite_dim_scale}};
    return j;
}

/// Either an explicit list or {from, to, points} (log-spaced, rounded).
[[nodiscard]] inline std::vector<std::size_t> parse_m_grid(FieldReader& r, const std::string& key) {
    const json& v = r.raw(key);
    std::vector<std::size_t> grid;
    if (v.is_array()) {
        for (const auto& e : v) {
            if (!e.is_number() || e.get<double>() < 1.0 || e.get<double>() != std::floor(e.get<double>())) {
                r.fail(key, "entries must be positive integers");
            }
            grid.push_back(static_cast<std::size_t>(e.get<double>()));
        }
    } else {
        FieldReader g(v, r.join(key));
        const double from = g.get<double>("from");
        const double to = g.get<double>("to");
        const auto points = g.get<std::size_t>("points");
        g.finish();
        if (!(from >= 1.0) || !(to >= from) || points < 2) g.fail("", "needs 1 <= from <= to and points >= 2");
        for (std::size_t i = 0; i < points; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(points - 1);
            grid.push_back(static_cast<std::size_t>(std::llround(from * std::pow(to / from, t))));
        }
    }
    if (grid.empty()) r.fail(key, "must not be empty");
    return grid;
}

struct LowerBoundOptions {
    std::vector<std::size_t> m_grid;
    std::optional<std::size_t> d;       ///< scan d when absent
    std::optional<double> h;            ///< use h_star when absent
    std::optional<double> c0;
    std::optional<double> c_h;
    std::size_t materialize_limit = 64;
    std::size_t d_max = 64;
};

struct RatesOptions {
    double log_k_from = 1.0;
    double log_k_to = 10.0;
    std::size_t points = 10;
    std::vector<RateExpression> regimes;
    bool generic = true;                ///< also emit the evaluated upper and lower bounds
    std::size_t d_max = 64;
};

struct VerifyConfig {
    std::size_t n_mc = 200000;
    std::size_t kl_instances = 100;
};

struct ExperimentConfig {
    std::string experiment;
    std::string name;
    std::uint64_t seed = 0;
    std::size_t workers = 0;            ///< 0: all hardware threads
    std::optional<std::string> output;

    SpectrumProfile spectrum = SpectrumProfile::algebraic(2.0);
    CoordinateLaw law{LawKind::uniform};
    std::optional<std::size_t> sim_dim;
    TestOperator op = TestOperator::zero();
    NoiseModel noise = NoiseModel::hilbert(0.1, 8);
    DesignKind design = DesignKind::fixed_stratified;
    std::vector<std::size_t> m_grid;
    std::vector<std::size_t> r_grid;
    std::size_t trials = 10;
    double p = 2.0;
    std::size_t n_mc = 2000;
    double t = 1.0;
    SelectionHints hints;
    bool sandwich = true;               ///< evaluate the Fano bound next to each risk row

    LowerBoundOptions lower_bound;
    RatesOptions rates;
    VerifyConfig verify;

    json canonical;                     ///< the validated document after overrides
};

[[nodiscard]] inline RateExpression parse_regime(FieldReader r) {
    RateExpression e;
    const auto name = r.get<std::string>("regime");
    if (name == "exp_log_minimax") e.regime = RateRegime::exp_log_minimax;
    else if (name == "alg_upper") e.regime = RateRegime::alg_upper;
    else if (name == "alg_lower") e.regime = RateRegime::alg_lower;
    else if (name == "double_exp") e.regime = RateRegime::double_exp;
    else if (name == "finite_dim") e.regime = RateRegime::finite_dim;
    else r.fail("regime", "unknown regime '" + name + "'");
    e.alpha = r.get<double>("alpha", 1.0);
    e.beta = r.get<double>("beta", 1.0);
    e.d = r.get<std::size_t>("d", 1);
    e.constant = r.get<double>("constant", 1.0);
    r.finish();
    return e;
}

/// Validates `doc` and builds the typed configuration.
[[nodiscard]] inline ExperimentConfig parse_config(const json& doc) {
    FieldReader r(doc, "");
    ExperimentConfig cfg;
    cfg.canonical = doc;
    cfg.experiment = r.get<std::string>("experiment");
    if (cfg.experiment != "risk-curve" && cfg.experiment != "lower-bound" && cfg.experiment != "rates" &&
        cfg.experiment != "verify") {
        r.fail("experiment", "expected risk-curve, lower-bound, rates or verify");
    }
    cfg.name = r.get<std::string>("name", cfg.experiment);
    cfg.seed = r.get<std::uint64_t>("seed", 0);
    cfg.workers = r.get<std::size_t>("workers", 0);
    cfg.output = r.optional<std::string>("output");
    cfg.p = r.get<double>("p", 2.0);
    if (!(cfg.p >= 1.0) || !std::isfinite(cfg.p)) r.fail("p", "must satisfy 1 <= p < inf");
    cfg.t = r.get<double>("t", 1.0);

    if (r.has("spectrum")) cfg.spectrum = parse_spectrum(r.child("spectrum"));
    if (r.has("measure")) {
        auto m = r.child("measure");
        cfg.law = parse_law(m, "law");
        cfg.sim_dim = m.optional<std::size_t>("sim_dim");
        m.finish();
    }
    if (r.has("operator")) cfg.op = parse_operator(r.child("operator"), cfg.spectrum);
    if (r.has("selection")) cfg.hints = parse_selection(r.child("selection"));
    if (r.has("r_grid")) {
        cfg.r_grid = r.get<std::vector<std::size_t>>("r_grid");
        for (auto v : cfg.r_grid) {
            if (v == 0) r.fail("r_grid", "entries must be >= 1");
        }
    }
    std::size_t default_dim = std::max<std::size_t>(8, cfg.op.output_dim());
    for (auto v : cfg.r_grid) default_dim = std::max(default_dim, v);
    if (cfg.hints.r) default_dim = std::max(default_dim, *cfg.hints.r);
    if (r.has("noise")) cfg.noise = parse_noise(r.child("noise"), default_dim);
    if (r.has("design")) {
        const auto design = r.get<std::string>("design");
        if (design == "fixed") cfg.design = DesignKind::fixed_stratified;
        else if (design == "random") cfg.design = DesignKind::random_box;
        else r.fail("design", "expected fixed or random");
    }
    if (r.has("m_grid")) cfg.m_grid = parse_m_grid(r, "m_grid");
    cfg.trials = r.get<std::size_t>("trials", 10);
    cfg.n_mc = r.get<std::size_t>("n_mc", 2000);
    cfg.sandwich = r.get<bool>("sandwich", true);

    if (r.has("lower_bound")) {
        auto lb = r.child("lower_bound");
        if (lb.has("m_grid")) cfg.lower_bound.m_grid = parse_m_grid(lb, "m_grid");
        cfg.lower_bound.d = lb.optional<std::size_t>("d");
        cfg.lower_bound.h = lb.optional<double>("h");
        cfg.lower_bound.c0 = lb.optional<double>("c0");
        cfg.lower_bound.c_h = lb.optional<double>("c_h");
        cfg.lower_bound.materialize_limit = lb.get<std::size_t>("materialize_limit", 64);
        cfg.lower_bound.d_max = lb.get<std::size_t>("d_max", 64);
        lb.finish();
    }
    if (r.has("rates")) {
        auto rt = r.child("rates");
        auto grid = rt.child("log_k");
        cfg.rates.log_k_from = grid.get<double>("from");
        cfg.rates.log_k_to = grid.get<double>("to");
        cfg.rates.points = grid.get<std::size_t>("points");
        grid.finish();
        if (cfg.rates.points < 2 || !(cfg.rates.log_k_to > cfg.rates.log_k_from)) {
            rt.fail("log_k", "needs from < to and points >= 2");
        }
        if (rt.has("regimes")) {
            const json& list = rt.raw("regimes");
            if (!list.is_array()) rt.fail("regimes", "expected an array");
            for (std::size_t i = 0; i < list.size(); ++i) {
                cfg.rates.regimes.push_back(
                    parse_regime(FieldReader(list[i], rt.join("regimes[" + std::to_string(i) + "]"))));
            }
        }
        cfg.rates.generic = rt.get<bool>("generic", true);
        cfg.rates.d_max = rt.get<std::size_t>("d_max", 64);
        rt.finish();
    }
    if (r.has("verify")) {
        auto v = r.child("verify");
        cfg.verify.n_mc = v.get<std::size_t>("n_mc", 200000);
        cfg.verify.kl_instances = v.get<std::size_t>("kl_instances", 100);
        v.finish();
    }
    r.finish();

    if (cfg.experiment == "risk-curve") {
        if (cfg.m_grid.empty()) throw ConfigError("config: m_grid: required for risk-curve");
        if (cfg.trials == 0) throw ConfigError("config: trials: must be >= 1");
        if (cfg.n_mc < 2) throw ConfigError("config: n_mc: must be >= 2");
        if (cfg.noise.kind() == NoiseKind::white && cfg.r_grid.empty() && !cfg.hints.r &&
            (cfg.spectrum.kind() == SpectrumKind::explicit_list ||
             cfg.spectrum.kind() == SpectrumKind::double_exponential)) {
            throw ConfigError("config: selection.r: white noise with this spectrum needs r or r_grid");
        }
    }
    if (cfg.experiment == "lower-bound" && cfg.lower_bound.m_grid.empty()) {
        if (cfg.m_grid.empty()) throw ConfigError("config: lower_bound.m_grid: required for lower-bound");
        cfg.lower_bound.m_grid = cfg.m_grid;
    }
    return cfg;
}

/// Parses JSON with // and /* */ comments allowed.
[[nodiscard]] inline json parse_config_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + origin + ": " + e.what());
    }
}

[[nodiscard]] inline json load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

/**
 * Applies `key.path=value`. The value is parsed as JSON when it is valid JSON
 * and taken as a string otherwise. Intermediate objects are created, so an
 * override may add a field; validation then decides whether it is allowed.
 */
inline void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "': expected key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override '" + assignment + "': empty path segment");
        if (!node->is_object()) throw ConfigError("override '" + assignment + "': " + part + " is not inside an object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            break;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

}  // namespace oplab
