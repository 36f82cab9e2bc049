// gbo-lab: run one experiment from a key=value config file and write its results.
//
//   gbo-lab run <config-file> [--out DIR] [--format csv|jsonl]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure, 1 anything else.

#include "gbo/cli/registry.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw gbo::ConfigError("cannot read config file '" + path + "'");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Experiment runner for the dispersion-generalized Benjamin-Ono lab"};
    app.require_subcommand(1);
    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    std::string config_path, out_dir, format = "csv";
    run->add_option("config", config_path, "key=value config file")->required();
    run->add_option("--out", out_dir, "Output directory (default: config 'out' key, else .)");
    run->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "jsonl"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_config;
    }

    try {
        const auto cfg = gbo::cli::parse_config(slurp(config_path));
        const std::string dir = !out_dir.empty() ? out_dir : (!cfg.out.empty() ? cfg.out : ".");
        const auto rec = gbo::cli::run_experiment(cfg);
        const auto fmt = format == "jsonl" ? gbo::cli::Format::Jsonl : gbo::cli::Format::Csv;
        for (const auto& p : gbo::cli::emit_results(rec, cfg.experiment, dir, fmt)) std::cout << p.string() << "\n";
        std::fprintf(stderr, "%s: %.3f s\n", cfg.experiment.c_str(), rec.wall_seconds);
        return 0;
    } catch (const gbo::InvalidArgument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    } catch (const gbo::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return exit_numerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
