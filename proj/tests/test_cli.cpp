// SPDX-License-Identifier: MIT
#include "oplab/runner.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace oplab;

namespace {

const std::string kConfigs = OPLAB_CONFIG_DIR;

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string error_of(const json& doc) {
    try {
        (void)parse_config(doc);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::filesystem::path scratch(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("oplab-test-" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("every shipped config validates", "[cli]") {
    for (const auto& entry : std::filesystem::directory_iterator(kConfigs)) {
        if (entry.path().extension() != ".json") continue;
        INFO(entry.path().string());
        CHECK_NOTHROW(parse_config(load_config_file(entry.path().string())));
    }
}

TEST_CASE("unknown fields are rejected with their path", "[cli]") {
    auto doc = load_config_file(kConfigs + "/white_truncation.json");
    doc["selection"]["c_scael"] = 1.0;
    CHECK(error_of(doc) == "config: selection.c_scael: unknown field");
    doc = load_config_file(kConfigs + "/white_truncation.json");
    doc["extra"] = true;
    CHECK(error_of(doc) == "config: extra: unknown field");
    doc = load_config_file(kConfigs + "/rates_exponential.json");
    doc["rates"]["regimes"][1]["gamma"] = 2;
    CHECK(error_of(doc) == "config: rates.regimes[1].gamma: unknown field");
}

TEST_CASE("type and value errors name the field", "[cli]") {
    auto doc = load_config_file(kConfigs + "/finite_dim_d1.json");
    doc["trials"] = "many";
    CHECK(error_of(doc) == "config: trials: expected a nonnegative integer");
    doc = load_config_file(kConfigs + "/finite_dim_d1.json");
    doc["noise"]["kind"] = "pink";
    CHECK(error_of(doc) == "config: noise.kind: expected hilbert or white");
    doc = load_config_file(kConfigs + "/finite_dim_d1.json");
    doc.erase("m_grid");
    CHECK(error_of(doc) == "config: m_grid: required for risk-curve");
    doc = load_config_file(kConfigs + "/finite_dim_d1.json");
    doc["spectrum"]["values"] = json::array({0.5, 1.0});
    CHECK(error_of(doc).rfind("config: spectrum:", 0) == 0);
}

TEST_CASE("overrides", "[cli]") {
    auto doc = load_config_file(kConfigs + "/finite_dim_d1.json");
    apply_override(doc, "noise.sigma=0.5");
    apply_override(doc, "name=renamed");
    apply_override(doc, "m_grid=[10, 20]");
    const auto cfg = parse_config(doc);
    CHECK(cfg.noise.sigma() == 0.5);
    CHECK(cfg.name == "renamed");
    CHECK(cfg.m_grid == std::vector<std::size_t>{10, 20});
    CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
    CHECK_THROWS_AS(apply_override(doc, "trials.x=1"), ConfigError);
}

TEST_CASE("log spaced m grids", "[cli]") {
    auto doc = load_config_file(kConfigs + "/exponential_hilbert.json");
    const auto cfg = parse_config(doc);
    CHECK(cfg.m_grid == std::vector<std::size_t>{100, 316, 1000, 3162, 10000, 31623, 100000, 316228, 1000000});
}

TEST_CASE("config hash covers seed and content", "[cli]") {
    auto doc = load_config_file(kConfigs + "/rates_exponential.json");
    const auto h0 = config_hash(doc);
    CHECK(h0.size() == 16);
    auto other = doc;
    other["seed"] = 5;
    CHECK(config_hash(other) != h0);
    CHECK(config_hash(load_config_file(kConfigs + "/rates_exponential.json")) == h0);
}

TEST_CASE("risk-curve run writes deterministic artifacts", "[cli]") {
    auto doc = load_config_file(kConfigs + "/finite_dim_d1.json");
    apply_override(doc, "m_grid=[128, 512]");
    apply_override(doc, "trials=3");
    apply_override(doc, "n_mc=200");
    auto cfg = parse_config(doc);
    cfg.workers = 1;
    const auto a = scratch("a");
    const auto b = scratch("b");
    const auto ra = run_experiment(cfg, a.string());
    cfg.workers = 2;
    const auto rb = run_experiment(cfg, b.string());
    const auto csv_a = slurp(a / "finite_dim_d1" / "results.csv");
    CHECK(csv_a == slurp(b / "finite_dim_d1" / "results.csv"));
    CHECK(csv_a.rfind("m,trial_count,mean_risk,std_err,d,R,c,r,feasible,seed\n", 0) == 0);
    CHECK(ra.table.rows().size() == 2);
    const auto manifest = json::parse(slurp(a / "finite_dim_d1" / "manifest.json"));
    CHECK(manifest["config_hash"] == config_hash(cfg.canonical));
    CHECK(manifest["seed"] == cfg.seed);
    CHECK(manifest.contains("wall_time_seconds"));
    const auto mirror = json::parse(slurp(a / "finite_dim_d1" / "results.json"));
    CHECK(mirror["rows"].size() == 2);
    CHECK(mirror["rows"][0].contains("lower_bound"));
}

TEST_CASE("rates and lower-bound runs", "[cli]") {
    const auto out = scratch("rates");
    const auto rates = run_experiment(parse_config(load_config_file(kConfigs + "/rates_exponential.json")),
                                      out.string());
    CHECK(rates.table.header() ==
          std::vector<std::string>{"k", "log_k", "regime", "value", "lower", "upper", "tight", "constant", "note"});
    CHECK(rates.table.rows().size() == 19 * 8);
    const auto lb = run_experiment(parse_config(load_config_file(kConfigs + "/lower_bound.json")), out.string());
    CHECK(lb.table.rows().size() == 10);
    for (const auto& row : lb.table.rows()) {
        const double pipeline = std::stod(row[8]);
        const double closed = std::stod(row[9]);
        CHECK(std::abs(pipeline - closed) <= 1e-12 * closed);
        CHECK(row[7] == "true");
    }
}
