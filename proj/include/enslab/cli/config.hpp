#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace enslab::cli {

enum class Suite { linreg, testbed, bandit };

std::string to_string(Suite suite);

/// Linear-regression suite: expected KL of each agent's ensemble law to the
/// exact posterior, plus the lower bound for the prior-only agent.
struct LinregBlock {
    long dim = 2;
    long train_size = 10;
    double prior_variance = 1.0;
    std::string noise = "two_regime";  ///< constant | two_regime | quadratic
    double noise_variance = 1.0;       ///< constant
    double low_variance = 0.01;        ///< two_regime
    double high_variance = 1.0;        ///< two_regime, quadratic floor
    long low_axes = 1;                 ///< two_regime: axes 0..low_axes-1 are low noise
    std::string inputs = "axis_aligned";  ///< standard_normal | axis_aligned
    std::vector<std::string> agents{"posterior", "N", "P"};
    double lambda = 1.0;                 ///< N
    double c = 1.0;                      ///< P: nu = c/sigma^2, lambda = c/sigma_0^2
    double prior_sample_variance = 1.0;  ///< P
    long datasets = 100;
    long snr_samples = 100000;
};

struct TestbedBlock {
    long dim = 10;
    long train_size = 100;
    double temperature = 0.1;
    double flip_fraction = 0.0;
    long classes = 2;
    long members = 30;
    std::vector<std::string> families{"N", "P", "BP"};
    double weight_decay = 1.0;
    double prior_scale = 1.0;
    double learning_rate = 0.05;
    long epochs = 200;
    long batch_size = 32;
    std::string bootstrap = "double_bernoulli";  ///< double_bernoulli | bernoulli
    double bootstrap_p = 0.5;
    long marginal_queries = 1000;
    long joint_tau = 10;
    long anchor_pairs = 1000;
    bool tune = false;
    long tuning_problems = 2;
};

struct BanditBlock {
    long dim = 2;
    long n_actions = 4;
    long horizon = 200;
    long n_problems = 100;
    double prior_variance = 1.0;
    double noise_scale = 1.0;
    std::vector<std::string> policies{"N", "P", "BP"};
    bool tune = true;
    std::vector<double> lambdas{0.01, 0.1, 1.0, 10.0};
    std::vector<double> prior_sample_variances{0.01, 0.1, 1.0, 10.0, 100.0};
    double lambda = 1.0;
    double prior_sample_variance = 1.0;
};

struct ExperimentConfig {
    Suite suite = Suite::linreg;
    std::uint64_t seed = 0;
    std::string output_dir;
    LinregBlock linreg;
    TestbedBlock testbed;
    BanditBlock bandit;
};

/// Entries as ("section.key", value) in file order. Keys before any section
/// header belong to section "run".
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_key_values(std::istream& in, const std::string& source);
KeyValues read_key_values(const std::filesystem::path& path);

/// Applies entries over the defaults, rejecting unknown keys and out-of-range values.
ExperimentConfig config_from_key_values(const KeyValues& entries);
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError when any parameter is out of range for its suite.
void validate(const ExperimentConfig& config);

/// Every effective parameter of the selected suite in config-file syntax,
/// excluding seed and output_dir.
std::string canonical_text(const ExperimentConfig& config);

/// FNV-1a 64 of canonical_text.
std::uint64_t config_hash(const ExperimentConfig& config);

/// The config file that reproduces `config`, seed and output_dir included.
std::string to_config_file(const ExperimentConfig& config);

}  // namespace enslab::cli
