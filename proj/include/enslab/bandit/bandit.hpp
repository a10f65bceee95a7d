#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <span>
#include <string>
#include <vector>

#include "enslab/linreg/ensemble.hpp"

namespace enslab::bandit {

using linreg::Matrix;
using linreg::Vector;

/// Heteroscedastic linear bandit: reward of action x is theta*^T x + W with
/// W ~ N(0, noise_scale * x^T Sigma_obs x).
struct BanditProblem {
    std::vector<Vector> actions;
    Vector theta_star;
    Vector obs_variances;  ///< diagonal of Sigma_obs
    double prior_variance = 1.0;
    double noise_scale = 1.0;

    Eigen::Index dim() const { return theta_star.size(); }
    std::size_t size() const { return actions.size(); }
    Matrix obs_cov() const { return obs_variances.asDiagonal(); }

    double noise_variance(const Vector& x) const;
    double mean_reward(std::size_t action) const { return theta_star.dot(actions[action]); }
    double best_mean_reward() const;
    /// sigma^2(x) = x^T Sigma_obs x as known to the agent.
    linreg::NoiseModel noise_model() const;
};

/// Actions ~ N(0, I_d), theta* ~ N(0, prior_variance I), Sigma_obs diagonal
/// with entries Uniform(0, 1).
BanditProblem sample_problem(Eigen::Index dim, std::size_t n_actions, RngStream& rng,
                             double prior_variance = 1.0);

enum class PolicyFamily {
    N,
    P,
    BP,
    P_weighted,  ///< ensemble-P with nu(x) = 1/sigma^2(x)
    oracle,      ///< acts on theta* (reference)
    uniform,     ///< uniformly random action (reference)
};

std::string to_string(PolicyFamily family);
PolicyFamily parse_policy_family(std::string_view text);

/// Thompson-sampling agent with an infinitely large ensemble: every step draws
/// one fresh member from the ensemble law of the current history.
struct AgentPolicy {
    PolicyFamily family = PolicyFamily::BP;
    double lambda = 1.0;                 ///< N, P, P_weighted
    double prior_sample_variance = 1.0;  ///< P, P_weighted

    /// Ensemble knobs for `problem`; constant nu = 1 for N and P.
    linreg::EnsembleSpec make_spec(const BanditProblem& problem) const;
    std::string label() const;
};

/// Greedy action for a sampled parameter; ties go to the lowest index.
std::size_t select_action(std::span<const Vector> actions, const Vector& theta);

struct StepOutcome {
    std::size_t action = 0;
    double reward = 0.0;
    double regret = 0.0;  ///< best mean reward minus chosen mean reward
};

/// One Thompson-sampling step. rng.split(0) drives the member draw and
/// rng.split(1) the reward noise.
StepOutcome ts_step(const BanditProblem& problem, const linreg::Dataset& history, const AgentPolicy& policy,
                    const RngStream& rng);

struct RegretTrace {
    std::vector<double> per_step_regret;
    std::vector<double> cumulative;

    void push(double regret);
    double final_regret() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

RegretTrace run_policy(const BanditProblem& problem, const AgentPolicy& policy, std::size_t horizon,
                       const RngStream& rng);

struct BanditConfig {
    Eigen::Index dim = 2;
    std::size_t n_actions = 4;
    std::size_t horizon = 200;
    std::size_t n_problems = 100;
    double prior_variance = 1.0;
    double noise_scale = 1.0;
};

struct PolicyResult {
    AgentPolicy policy;
    std::vector<double> mean_cumulative;  ///< length horizon
    std::vector<double> std_error;        ///< of the cumulative regret, per step
    std::vector<double> final_regrets;    ///< one per problem, paired across policies
};

/// Problem j is drawn from rng.split(kProblemStream).split(j) for every policy;
/// policy i on problem j runs on rng.split(kRunStream).split(j).split(i).
std::vector<PolicyResult> evaluate(const BanditConfig& config, std::span<const AgentPolicy> policies,
                                   const RngStream& rng);

inline constexpr std::uint64_t kProblemStream = 0;
inline constexpr std::uint64_t kRunStream = 1;
inline constexpr std::uint64_t kEvaluationStream = 2;
inline constexpr std::uint64_t kTuningStream = 3;

struct PolicyGrid {
    std::vector<double> lambdas{0.01, 0.1, 1.0, 10.0};
    std::vector<double> prior_sample_variances{0.01, 0.1, 1.0, 10.0, 100.0};
};

/// Candidates allowed for a family: N varies lambda only, P and P_weighted
/// vary lambda and the prior sample variance, BP is the single posterior-matching policy.
std::vector<AgentPolicy> candidate_policies(PolicyFamily family, const PolicyGrid& grid);

/// Candidate with the lowest mean final regret on problems from
/// rng.split(kTuningStream); evaluation runs should use rng.split(kEvaluationStream).
AgentPolicy tune_policy(PolicyFamily family, const BanditConfig& config, const PolicyGrid& grid,
                        const RngStream& rng);

}  // namespace enslab::bandit
