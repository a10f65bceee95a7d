#include "enslab/cli/sweep.hpp"

#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "enslab/cli/runner.hpp"
#include "enslab/numkit/errors.hpp"

namespace enslab::cli {

namespace {

std::vector<std::string> split_alternatives(const std::string& text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find('|', start);
        std::string item = text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        const auto a = item.find_first_not_of(" \t");
        const auto b = item.find_last_not_of(" \t");
        item = a == std::string::npos ? "" : item.substr(a, b - a + 1);
        if (item.empty()) throw ConfigError("empty alternative in '" + text + "'");
        out.push_back(item);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace

SweepGrid parse_grid(std::istream& in, const std::string& source) {
    SweepGrid grid;
    for (const auto& [key, value] : parse_key_values(in, source)) {
        if (key == "sweep.out") {
            grid.out_dir = value;
        } else if (key == "sweep.mode") {
            grid.mode = parse_tuning_mode(value);
        } else if (key == "sweep.seeds") {
            grid.seeds.clear();
            std::size_t start = 0;
            while (start <= value.size()) {
                auto pos = value.find(',', start);
                if (pos == std::string::npos) pos = value.size();
                std::uint64_t s = 0;
                const char* first = value.data() + start;
                while (first < value.data() + pos && *first == ' ') ++first;
                const auto [ptr, ec] = std::from_chars(first, value.data() + pos, s);
                if (ec != std::errc{} || ptr != value.data() + pos) throw ConfigError("bad seed list '" + value + "'");
                grid.seeds.push_back(s);
                start = pos + 1;
            }
        } else if (key.rfind("sweep.", 0) == 0) {
            throw ConfigError("unknown sweep key '" + key + "'");
        } else if (key == "run.seed" || key == "run.output_dir") {
            throw ConfigError("'" + key + "' is set per cell by the sweep");
        } else if (value.find('|') != std::string::npos) {
            grid.axes.emplace_back(key, split_alternatives(value));
        } else {
            grid.fixed.emplace_back(key, value);
        }
    }
    if (grid.seeds.empty()) throw ConfigError("sweep needs at least one seed");
    return grid;
}

SweepGrid load_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open grid '" + path.string() + "'");
    return parse_grid(in, path.string());
}

std::vector<SweepCell> expand(const SweepGrid& grid) {
    std::vector<SweepCell> cells;
    std::vector<std::size_t> pick(grid.axes.size(), 0);
    while (true) {
        KeyValues entries = grid.fixed;
        for (std::size_t a = 0; a < grid.axes.size(); ++a) entries.emplace_back(grid.axes[a].first, grid.axes[a].second[pick[a]]);
        for (std::uint64_t seed : grid.seeds) {
            SweepCell cell;
            cell.index = cells.size();
            cell.config = config_from_key_values(entries);
            cell.config.seed = seed;
            char name[32];
            std::snprintf(name, sizeof name, "cell_%04zu", cell.index);
            cell.config.output_dir = (grid.out_dir / name).string();
            cells.push_back(std::move(cell));
        }
        std::size_t a = 0;
        while (a < pick.size() && ++pick[a] == grid.axes[a].second.size()) pick[a++] = 0;
        if (a == pick.size()) break;
    }
    return cells;
}

std::size_t run_sweep(const SweepGrid& grid, std::size_t jobs) {
    const auto cells = expand(grid);
    if (jobs == 0) jobs = 1;
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    {
        std::vector<std::jthread> workers;
        for (std::size_t w = 0; w < std::min(jobs, cells.size()); ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < cells.size(); i = next++) {
                    try {
                        run(cells[i].config);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                        next = cells.size();
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
    report((grid.out_dir / "cell_*" / "results.csv").string(), grid.mode, grid.out_dir / "report");
    return cells.size();
}

}  // namespace enslab::cli
