#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "enslab/cli/results.hpp"

namespace enslab::cli {

/// per_setting picks the best hyperparameters of each agent separately in
/// every setting; global picks one hyperparameter set per agent for all settings.
enum class TuningMode { per_setting, global };

TuningMode parse_tuning_mode(std::string_view text);
std::string to_string(TuningMode mode);

/// Metric minimized when choosing hyperparameters for a suite.
std::string selection_metric(std::string_view suite);

struct SummaryRow {
    std::string suite, agent, hparams, d, t, rho, flip, metric;
    double mean = 0.0;
    double std_error = 0.0;  ///< across seeds, 0 for a single seed
    std::size_t seeds = 0;

    std::string setting() const { return "d=" + d + ";T=" + t + ";rho=" + rho + ";flip=" + flip; }
};

/// Mean and standard error across seeds, restricted to the selected
/// hyperparameters of each agent.
std::vector<SummaryRow> aggregate(std::span<const ResultRow> rows, TuningMode mode);

struct SignTestRow {
    std::string suite, setting, metric, agent_a, agent_b;
    std::size_t wins = 0;  ///< seeds where a is lower than b
    std::size_t losses = 0;
    std::size_t ties = 0;
    double p_one_sided = 1.0;
    double p_two_sided = 1.0;
};

/// Paired sign tests between every pair of agents on seeds present for both,
/// using the hyperparameters selected in `summary`.
std::vector<SignTestRow> sign_tests(std::span<const ResultRow> rows, std::span<const SummaryRow> summary);

std::vector<std::filesystem::path> expand_glob(const std::string& pattern);

/// Reads every results.csv matched by `pattern`, writes summary.csv,
/// sign_tests.csv, one KL/regret bar file per (setting, metric), and the
/// averaged regret traces found next to the inputs.
void report(const std::string& pattern, TuningMode mode, const std::filesystem::path& out_dir);

}  // namespace enslab::cli
