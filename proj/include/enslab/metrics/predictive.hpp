#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "enslab/numkit/rng.hpp"

namespace enslab::metrics {

using Vector = Eigen::VectorXd;

/// Class-probability vector at an input. One ensemble member, or the true
/// environment in synthetic settings.
using PredictiveModel = std::function<Vector(const Vector&)>;
using InputSampler = std::function<Vector(RngStream&)>;

/// tau inputs with one label each.
struct JointQuery {
    std::vector<Vector> inputs;
    std::vector<int> labels;

    std::size_t tau() const { return inputs.size(); }
};

struct KlEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t tau = 1;
    bool dyadic = false;
};

inline constexpr double kProbabilityFloor = 1e-300;
inline constexpr std::size_t kDefaultDyadicTau = 10;
inline constexpr std::size_t kDefaultAnchorPairs = 1000;

/// log of (1/M) sum_m prod_t p_m(y_t | x_t), accumulated with log-sum-exp.
double joint_log_likelihood(std::span<const PredictiveModel> agent, const JointQuery& query);
double joint_likelihood(std::span<const PredictiveModel> agent, const JointQuery& query);

/// Same as joint_log_likelihood for a single (true) model.
double model_log_likelihood(const PredictiveModel& model, const JointQuery& query);

/// Draws one label from a probability vector.
int sample_label(const Vector& probabilities, RngStream& rng);

/// n_queries queries of tau i.i.d. inputs with labels drawn from `truth`.
/// Query i uses rng.split(i).
std::vector<JointQuery> sample_queries(const PredictiveModel& truth, const InputSampler& sampler,
                                       std::size_t tau, std::size_t n_queries, const RngStream& rng);

/// Dyadic queries: per anchor pair (a, b), tau/2 copies of a then tau/2 copies
/// of b, with labels drawn from `truth`. Throws InvalidTau for odd or < 2 tau.
std::vector<JointQuery> sample_dyadic_queries(const PredictiveModel& truth, const InputSampler& sampler,
                                              std::size_t tau, std::size_t n_anchor_pairs,
                                              const RngStream& rng);

/// Mean of log P*(Y) - log P_hat(Y) over a fixed query set.
KlEstimate kl_on_queries(const PredictiveModel& truth, std::span<const PredictiveModel> agent,
                         std::span<const JointQuery> queries, bool dyadic = false);

KlEstimate dkl_tau(const PredictiveModel& truth, std::span<const PredictiveModel> agent,
                   const InputSampler& sampler, std::size_t tau, std::size_t n_queries,
                   const RngStream& rng);

KlEstimate dkl_tau_dyadic(const PredictiveModel& truth, std::span<const PredictiveModel> agent,
                          const InputSampler& sampler, std::size_t tau, std::size_t n_anchor_pairs,
                          const RngStream& rng);

/// Mean negative log mixture likelihood.
double nll_tau(std::span<const PredictiveModel> agent, std::span<const JointQuery> queries);

/// Mean negative log-likelihood of the true model, -mean log P*(Y). The KL
/// estimate on a query set equals nll_tau(agent) - truth_nll(truth).
double truth_nll(const PredictiveModel& truth, std::span<const JointQuery> queries);

}  // namespace enslab::metrics
