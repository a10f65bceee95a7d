#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "enslab/cli/config.hpp"
#include "enslab/cli/report.hpp"

namespace enslab::cli {

/// A config file whose values may list alternatives separated by '|', plus a
/// [sweep] section with out, seeds and mode.
struct SweepGrid {
    KeyValues fixed;
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path out_dir = "sweep";
    TuningMode mode = TuningMode::per_setting;
};

SweepGrid parse_grid(std::istream& in, const std::string& source);
SweepGrid load_grid(const std::filesystem::path& path);

struct SweepCell {
    std::size_t index = 0;
    ExperimentConfig config;
};

/// Cartesian product of the axes and the seeds; cell i writes to
/// out_dir/cell_<i>. Every cell is validated up front.
std::vector<SweepCell> expand(const SweepGrid& grid);

/// Runs all cells on `jobs` worker threads, then reports over them into
/// out_dir/report. Returns the number of cells.
std::size_t run_sweep(const SweepGrid& grid, std::size_t jobs);

}  // namespace enslab::cli
