// SPDX-License-Identifier: MIT
//
// oplab command line: run <kind> [--config PATH] [--seed U64] [--workers N]
//                     [--out DIR] [--override key=value]...
#include "oplab/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

struct RunArgs {
    std::string kind;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string out;
    std::vector<std::string> overrides;
    bool validate_only = false;
};

// Flags become overrides so the manifest hash covers them.
oplab::ExperimentConfig load(const RunArgs& args) {
    oplab::json doc = args.config.empty() ? oplab::json::object() : oplab::load_config_file(args.config);
    if (!doc.is_object()) throw oplab::ConfigError("config: <root>: expected an object");
    if (!doc.contains("experiment")) doc["experiment"] = args.kind;
    if (doc["experiment"] != args.kind) {
        throw oplab::ConfigError("config: experiment: file declares '" + doc["experiment"].dump() +
                                 "' but the command asked for '" + args.kind + "'");
    }
    for (const auto& o : args.overrides) oplab::apply_override(doc, o);
    if (args.seed) doc["seed"] = *args.seed;
    auto cfg = oplab::parse_config(doc);
    // Worker count never changes results, so it stays out of the hash.
    if (args.workers) cfg.workers = *args.workers;
    return cfg;
}

int run(const RunArgs& args) {
    const auto cfg = load(args);
    if (args.validate_only) {
        std::cout << "ok: " << cfg.name << " (" << cfg.experiment << "), hash "
                  << oplab::config_hash(cfg.canonical) << '\n';
        return 0;
    }
    const std::string root = !args.out.empty() ? args.out : cfg.output ? *cfg.output : oplab::default_out_root();
    const auto result = oplab::run_experiment(cfg, root);
    std::cout << result.table.str();
    std::cerr << "wrote " << result.directory << "/results.csv (hash "
              << result.manifest["config_hash"].get<std::string>() << ", "
              << result.manifest["wall_time_seconds"].get<double>() << " s)\n";
    return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"oplab: sample-complexity experiments for operator learning"};
    app.set_version_flag("--version", std::string(oplab::kVersion));
    app.require_subcommand(1);

    RunArgs args;
    auto* cmd = app.add_subcommand("run", "run one experiment and write its artifacts");
    cmd->add_option("kind", args.kind, "risk-curve, lower-bound, rates or verify")
        ->required()
        ->check(CLI::IsMember({"risk-curve", "lower-bound", "rates", "verify"}));
    cmd->add_option("--config", args.config, "JSON config file (comments allowed)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "master seed, overrides the config");
    cmd->add_option("--workers", args.workers, "worker threads (default: all cores)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", args.out, "output root (default: $OPLAB_OUT_DIR or ./oplab-out)");
    cmd->add_option("--override", args.overrides, "key.path=value, value parsed as JSON");
    cmd->add_flag("--validate", args.validate_only, "validate the config and exit");

    CLI11_PARSE(app, argc, argv);
    try {
        if (args.kind != "verify" && args.config.empty()) {
            std::cerr << "error: run " << args.kind << " needs --config\n";
            return 2;
        }
        return run(args);
    } catch (const oplab::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
