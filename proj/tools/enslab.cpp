#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "enslab/cli/config.hpp"
#include "enslab/cli/report.hpp"
#include "enslab/cli/runner.hpp"
#include "enslab/cli/sweep.hpp"
#include "enslab/numkit/errors.hpp"

namespace {

constexpr int kConfigErrorExit = 2;
constexpr int kRuntimeErrorExit = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble prior/bootstrap experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", enslab::cli::code_version());

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    auto* run = app.add_subcommand("run", "Run one experiment suite");
    run->add_option("--config", config_path, "Config file")->required();
    run->add_option("--seed", seed, "Seed, overrides the config");
    run->add_option("--out", out_dir, "Output directory, overrides the config");

    std::string pattern;
    std::string mode = "per-setting";
    std::string report_dir = "report";
    auto* report = app.add_subcommand("report", "Aggregate results.csv files across seeds");
    report->add_option("--in", pattern, "Glob of results.csv files")->required();
    report->add_option("--mode", mode, "Tuning mode")->check(CLI::IsMember({"per-setting", "global"}));
    report->add_option("--out", report_dir, "Output directory");

    std::string grid_path;
    std::size_t jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "Run a Cartesian grid of configs");
    sweep->add_option("--grid", grid_path, "Grid file")->required();
    sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigErrorExit;
    }

    try {
        if (*run) {
            auto config = enslab::cli::load_config(config_path);
            if (seed) config.seed = *seed;
            if (!out_dir.empty()) config.output_dir = out_dir;
            enslab::cli::run(config);
            std::cout << "wrote " << config.output_dir << "/results.csv\n";
        } else if (*report) {
            enslab::cli::report(pattern, enslab::cli::parse_tuning_mode(mode), report_dir);
            std::cout << "wrote " << report_dir << "/summary.csv\n";
        } else if (*sweep) {
            const auto grid = enslab::cli::load_grid(grid_path);
            const auto n = enslab::cli::run_sweep(grid, jobs);
            std::cout << "ran " << n << " cells into " << grid.out_dir.string() << "\n";
        }
    } catch (const enslab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigErrorExit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeErrorExit;
    }
    return 0;
}
