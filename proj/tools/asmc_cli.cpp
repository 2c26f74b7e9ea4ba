// Command line front end for the batch experiments.
//
//   asmc_cli <experiment> [--config PATH] [--seed U64] [--out PATH]
//                         [--replicates R] [--threads K] [--quiet]
//
// Exit status: 0 success, 2 configuration error, 3 numerical abort (the
// partial CSV is still written), 1 anything else.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "asmc/config.hpp"
#include "asmc/errors.hpp"
#include "asmc/experiments.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_numeric = 3;

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicates;
    std::string out;
    unsigned threads = 1;
    bool quiet = false;
};

void write_output(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw asmc::ConfigError("cannot open output file '" + path + "'");
    f << text;
    if (!f) throw asmc::Error("failed writing '" + path + "'");
}

int run(const std::string& name, const Options& o) {
    asmc::Json user = asmc::Json::object();
    if (!o.config_path.empty()) user = asmc::read_config_file(o.config_path);
    auto cfg = asmc::ExperimentConfig::resolve(name, user);
    if (o.seed) cfg.set("seed", *o.seed);
    if (o.replicates) {
        if (!cfg.has("replicates")) throw asmc::ConfigError(name + " takes no replicate count");
        cfg.set("replicates", *o.replicates);
    }
    if (o.threads == 0) throw asmc::ConfigError("--threads must be >= 1");
    asmc::RunContext ctx;
    ctx.threads = o.threads;
    ctx.log = o.quiet ? nullptr : &std::cerr;
    try {
        const auto result = asmc::run_experiment(cfg, ctx);
        for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
        write_output(result.csv, o.out);
    } catch (const asmc::NumericAbort& e) {
        write_output(e.csv(), o.out);
        std::cerr << "numerical abort: " << e.what() << '\n';
        return exit_numeric;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Annealed sequential Monte Carlo experiments"};
    app.require_subcommand(1);
    Options o;
    std::string chosen;
    for (const auto& name : asmc::experiment_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", o.config_path, "JSON config, or a CSV written by this tool")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "64-bit master seed (overrides the config)");
        sub->add_option("--out", o.out, "output CSV path (default: stdout)");
        sub->add_option("--replicates", o.replicates, "independent replicates (overrides the config)");
        sub->add_option("--threads", o.threads, "worker threads; results do not depend on it");
        sub->add_flag("--quiet", o.quiet, "no progress lines on stderr");
        sub->callback([&chosen, name] { chosen = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        return run(chosen, o);
    } catch (const asmc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const asmc::ArgumentError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const asmc::UnsupportedError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const asmc::Error& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
