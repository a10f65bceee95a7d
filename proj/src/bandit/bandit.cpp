#include "enslab/bandit/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "enslab/numkit/errors.hpp"
#include "enslab/numkit/stats.hpp"

namespace enslab::bandit {

double BanditProblem::noise_variance(const Vector& x) const {
    return noise_scale * x.cwiseAbs2().dot(obs_variances);
}

double BanditProblem::best_mean_reward() const {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < actions.size(); ++i) best = std::max(best, mean_reward(i));
    return best;
}

linreg::NoiseModel BanditProblem::noise_model() const {
    return {"bandit_obs", [v = obs_variances](const Vector& x) { return x.cwiseAbs2().dot(v); }};
}

BanditProblem sample_problem(Eigen::Index dim, std::size_t n_actions, RngStream& rng, double prior_variance) {
    if (dim < 1) throw ConfigError("sample_problem: dimension must be >= 1");
    if (n_actions < 2) throw ConfigError("sample_problem: need at least two actions");
    BanditProblem p;
    p.prior_variance = prior_variance;
    p.actions.reserve(n_actions);
    for (std::size_t i = 0; i < n_actions; ++i) {
        Vector x(dim);
        for (Eigen::Index k = 0; k < dim; ++k) x(k) = rng.normal();
        p.actions.push_back(std::move(x));
    }
    p.theta_star.resize(dim);
    for (Eigen::Index k = 0; k < dim; ++k) p.theta_star(k) = std::sqrt(prior_variance) * rng.normal();
    p.obs_variances.resize(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        double u = 0.0;
        while (u == 0.0) u = rng.uniform();  // open interval (0, 1)
        p.obs_variances(k) = u;
    }
    return p;
}

std::string to_string(PolicyFamily family) {
    switch (family) {
        case PolicyFamily::N: return "N";
        case PolicyFamily::P: return "P";
        case PolicyFamily::BP: return "BP";
        case PolicyFamily::P_weighted: return "P-weighted";
        case PolicyFamily::oracle: return "oracle";
        case PolicyFamily::uniform: return "uniform";
    }
    return "?";
}

PolicyFamily parse_policy_family(std::string_view text) {
    for (auto f : {PolicyFamily::N, PolicyFamily::P, PolicyFamily::BP, PolicyFamily::P_weighted,
                   PolicyFamily::oracle, PolicyFamily::uniform}) {
        if (text == to_string(f)) return f;
    }
    throw ConfigError("unknown bandit policy '" + std::string(text) + "'");
}

linreg::EnsembleSpec AgentPolicy::make_spec(const BanditProblem& problem) const {
    using linreg::EnsembleSpec;
    using linreg::Family;
    const auto unit = [](const Vector&) { return 1.0; };
    switch (family) {
        case PolicyFamily::N: return EnsembleSpec(Family::N, lambda, unit, 0.0);
        case PolicyFamily::P: return EnsembleSpec(Family::P, lambda, unit, prior_sample_variance);
        case PolicyFamily::P_weighted: {
            auto variance = problem.noise_model().variance;
            return EnsembleSpec(
                Family::P, lambda, [variance](const Vector& x) { return 1.0 / variance(x); },
                prior_sample_variance);
        }
        case PolicyFamily::BP:
            return EnsembleSpec::matching_posterior(problem.noise_model(), problem.prior_variance);
        case PolicyFamily::oracle:
        case PolicyFamily::uniform: break;
    }
    throw ConfigError("policy '" + to_string(family) + "' has no ensemble");
}

std::string AgentPolicy::label() const {
    std::ostringstream out;
    out << to_string(family);
    if (family == PolicyFamily::N) out << "(lambda=" << lambda << ")";
    if (family == PolicyFamily::P || family == PolicyFamily::P_weighted) {
        out << "(lambda=" << lambda << ";prior=" << prior_sample_variance << ")";
    }
    return out.str();
}

std::size_t select_action(std::span<const Vector> actions, const Vector& theta) {
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const double v = theta.dot(actions[i]);
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    return best;
}

StepOutcome ts_step(const BanditProblem& problem, const linreg::Dataset& history, const AgentPolicy& policy,
                    const RngStream& rng) {
    if (history.dim() != problem.dim()) throw DimensionMismatch("ts_step: history dimension");
    RngStream sample_rng = rng.split(0);
    RngStream noise_rng = rng.split(1);

    std::size_t action = 0;
    switch (policy.family) {
        case PolicyFamily::oracle: action = select_action(problem.actions, problem.theta_star); break;
        case PolicyFamily::uniform: action = static_cast<std::size_t>(sample_rng.below(problem.size())); break;
        default: {
            const auto law = linreg::ensemble_law(policy.make_spec(problem), history);
            const Vector theta = draw_gaussian(sample_rng, law, 1).front();
            action = select_action(problem.actions, theta);
        }
    }
    StepOutcome out;
    out.action = action;
    const Vector& x = problem.actions[action];
    out.reward = problem.mean_reward(action) + std::sqrt(problem.noise_variance(x)) * noise_rng.normal();
    out.regret = std::max(0.0, problem.best_mean_reward() - problem.mean_reward(action));
    return out;
}

void RegretTrace::push(double regret) {
    per_step_regret.push_back(regret);
    cumulative.push_back(final_regret() + regret);
}

RegretTrace run_policy(const BanditProblem& problem, const AgentPolicy& policy, std::size_t horizon,
                       const RngStream& rng) {
    linreg::Dataset history(problem.dim());
    RegretTrace trace;
    trace.per_step_regret.reserve(horizon);
    trace.cumulative.reserve(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        const StepOutcome step = ts_step(problem, history, policy, rng.split(t));
        history.append(problem.actions[step.action], step.reward);
        trace.push(step.regret);
    }
    return trace;
}

std::vector<PolicyResult> evaluate(const BanditConfig& config, std::span<const AgentPolicy> policies,
                                   const RngStream& rng) {
    const RngStream problems = rng.split(kProblemStream);
    const RngStream runs = rng.split(kRunStream);
    if (config.horizon == 0) throw ConfigError("bandit horizon must be >= 1");
    std::vector<PolicyResult> results(policies.size());
    // per policy, per step: cumulative regret of every problem
    std::vector<std::vector<std::vector<double>>> curves(
        policies.size(), std::vector<std::vector<double>>(config.horizon));

    for (std::size_t j = 0; j < config.n_problems; ++j) {
        RngStream problem_rng = problems.split(j);
        BanditProblem problem = sample_problem(config.dim, config.n_actions, problem_rng, config.prior_variance);
        problem.noise_scale = config.noise_scale;
        const RngStream problem_runs = runs.split(j);
        for (std::size_t i = 0; i < policies.size(); ++i) {
            const RegretTrace trace = run_policy(problem, policies[i], config.horizon, problem_runs.split(i));
            for (std::size_t t = 0; t < config.horizon; ++t) curves[i][t].push_back(trace.cumulative[t]);
            results[i].final_regrets.push_back(trace.final_regret());
        }
    }
    for (std::size_t i = 0; i < policies.size(); ++i) {
        results[i].policy = policies[i];
        for (std::size_t t = 0; t < config.horizon; ++t) {
            const MeanAndError s = mean_and_error(curves[i][t]);
            results[i].mean_cumulative.push_back(s.mean);
            results[i].std_error.push_back(s.std_error);
        }
    }
    return results;
}

std::vector<AgentPolicy> candidate_policies(PolicyFamily family, const PolicyGrid& grid) {
    std::vector<AgentPolicy> out;
    switch (family) {
        case PolicyFamily::N:
            for (double l : grid.lambdas) out.push_back({family, l, 0.0});
            break;
        case PolicyFamily::P:
        case PolicyFamily::P_weighted:
            for (double l : grid.lambdas) {
                for (double s : grid.prior_sample_variances) out.push_back({family, l, s});
            }
            break;
        default: out.push_back({family, 1.0, 1.0});
    }
    if (out.empty()) throw ConfigError("tuning grid is empty");
    return out;
}

AgentPolicy tune_policy(PolicyFamily family, const BanditConfig& config, const PolicyGrid& grid,
                        const RngStream& rng) {
    const auto candidates = candidate_policies(family, grid);
    if (candidates.size() == 1) return candidates.front();
    const auto results = evaluate(config, candidates, rng.split(kTuningStream));
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
        if (results[i].mean_cumulative.back() < results[best].mean_cumulative.back()) best = i;
    }
    return candidates[best];
}

}  // namespace enslab::bandit
