#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "enslab/cli/config.hpp"
#include "enslab/cli/results.hpp"

namespace enslab::cli {

/// Two-column plot data: one (x, y) pair per line.
struct Curve {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

struct RunOutput {
    std::vector<ResultRow> rows;
    std::vector<Curve> curves;
};

/// Runs the configured suite in memory. Deterministic in (config, seed).
RunOutput execute(const ExperimentConfig& config);

/// execute() then writes results.csv, manifest.txt and <curve>.tsv into
/// config.output_dir. Throws IoError when the directory is not writable.
void run(const ExperimentConfig& config);

void write_curve(const std::filesystem::path& path, const Curve& curve);

/// Version string recorded in manifests.
std::string code_version();

}  // namespace enslab::cli
