#include "enslab/metrics/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "enslab/numkit/errors.hpp"
#include "enslab/numkit/stats.hpp"

namespace enslab::metrics {

namespace {

double log_prob(const Vector& probabilities, int label) {
    if (label < 0 || label >= probabilities.size()) throw DimensionMismatch("label outside model classes");
    return std::log(std::max(probabilities(label), kProbabilityFloor));
}

void check_query(const JointQuery& query) {
    if (query.inputs.empty() || query.inputs.size() != query.labels.size()) {
        throw DimensionMismatch("JointQuery: inputs and labels must have the same nonzero length");
    }
}

// Index of the first input equal to inputs[t]; repeated inputs (dyadic
// queries) are evaluated once per model.
std::vector<std::size_t> distinct_index(const JointQuery& query, std::vector<std::size_t>& firsts) {
    firsts.clear();
    std::vector<std::size_t> slot(query.tau());
    for (std::size_t t = 0; t < query.tau(); ++t) {
        std::size_t k = 0;
        while (k < firsts.size() && query.inputs[firsts[k]] != query.inputs[t]) ++k;
        if (k == firsts.size()) firsts.push_back(t);
        slot[t] = k;
    }
    return slot;
}

double mixture_log_likelihood(std::span<const PredictiveModel> agent, const JointQuery& query) {
    if (agent.empty()) throw DimensionMismatch("agent must contain at least one model");
    check_query(query);
    std::vector<std::size_t> firsts;
    const std::vector<std::size_t> slot = distinct_index(query, firsts);
    std::vector<double> member_logs(agent.size());
    std::vector<Vector> cache(firsts.size());
    for (std::size_t m = 0; m < agent.size(); ++m) {
        for (std::size_t k = 0; k < firsts.size(); ++k) cache[k] = agent[m](query.inputs[firsts[k]]);
        double acc = 0.0;
        for (std::size_t t = 0; t < query.tau(); ++t) acc += log_prob(cache[slot[t]], query.labels[t]);
        member_logs[m] = acc;
    }
    const double top = *std::max_element(member_logs.begin(), member_logs.end());
    double sum = 0.0;
    for (double v : member_logs) sum += std::exp(v - top);
    return top + std::log(sum) - std::log(static_cast<double>(agent.size()));
}

JointQuery labelled(const PredictiveModel& truth, std::vector<Vector> inputs, RngStream& rng) {
    JointQuery q;
    q.labels.reserve(inputs.size());
    std::vector<std::size_t> firsts;
    q.inputs = std::move(inputs);
    const std::vector<std::size_t> slot = distinct_index(q, firsts);
    std::vector<Vector> probs(firsts.size());
    for (std::size_t k = 0; k < firsts.size(); ++k) probs[k] = truth(q.inputs[firsts[k]]);
    for (std::size_t t = 0; t < q.tau(); ++t) q.labels.push_back(sample_label(probs[slot[t]], rng));
    return q;
}

}  // namespace

double joint_log_likelihood(std::span<const PredictiveModel> agent, const JointQuery& query) {
    return mixture_log_likelihood(agent, query);
}

double joint_likelihood(std::span<const PredictiveModel> agent, const JointQuery& query) {
    return std::exp(mixture_log_likelihood(agent, query));
}

double model_log_likelihood(const PredictiveModel& model, const JointQuery& query) {
    return mixture_log_likelihood(std::span<const PredictiveModel>(&model, 1), query);
}

int sample_label(const Vector& probabilities, RngStream& rng) {
    const double u = rng.uniform() * probabilities.sum();
    double acc = 0.0;
    for (Eigen::Index k = 0; k < probabilities.size(); ++k) {
        acc += probabilities(k);
        if (u < acc) return static_cast<int>(k);
    }
    // u landed in the rounding gap above the last cumulative sum
    for (Eigen::Index k = probabilities.size() - 1; k >= 0; --k) {
        if (probabilities(k) > 0.0) return static_cast<int>(k);
    }
    return 0;
}

std::vector<JointQuery> sample_queries(const PredictiveModel& truth, const InputSampler& sampler,
                                       std::size_t tau, std::size_t n_queries, const RngStream& rng) {
    if (tau == 0) throw InvalidTau("tau must be at least 1");
    std::vector<JointQuery> out;
    out.reserve(n_queries);
    for (std::size_t i = 0; i < n_queries; ++i) {
        RngStream stream = rng.split(i);
        std::vector<Vector> inputs;
        inputs.reserve(tau);
        for (std::size_t t = 0; t < tau; ++t) inputs.push_back(sampler(stream));
        out.push_back(labelled(truth, std::move(inputs), stream));
    }
    return out;
}

std::vector<JointQuery> sample_dyadic_queries(const PredictiveModel& truth, const InputSampler& sampler,
                                              std::size_t tau, std::size_t n_anchor_pairs,
                                              const RngStream& rng) {
    if (tau < 2 || tau % 2 != 0) throw InvalidTau("dyadic sampling needs an even tau >= 2");
    std::vector<JointQuery> out;
    out.reserve(n_anchor_pairs);
    for (std::size_t i = 0; i < n_anchor_pairs; ++i) {
        RngStream stream = rng.split(i);
        const Vector a = sampler(stream);
        const Vector b = sampler(stream);
        std::vector<Vector> inputs(tau / 2, a);
        inputs.insert(inputs.end(), tau / 2, b);
        out.push_back(labelled(truth, std::move(inputs), stream));
    }
    return out;
}

KlEstimate kl_on_queries(const PredictiveModel& truth, std::span<const PredictiveModel> agent,
                         std::span<const JointQuery> queries, bool dyadic) {
    if (queries.empty()) throw DimensionMismatch("kl_on_queries: empty query set");
    std::vector<double> terms;
    terms.reserve(queries.size());
    for (const JointQuery& q : queries) {
        terms.push_back(model_log_likelihood(truth, q) - mixture_log_likelihood(agent, q));
    }
    const MeanAndError s = mean_and_error(terms);
    return {s.mean, s.std_error, queries.front().tau(), dyadic};
}

KlEstimate dkl_tau(const PredictiveModel& truth, std::span<const PredictiveModel> agent,
                   const InputSampler& sampler, std::size_t tau, std::size_t n_queries,
                   const RngStream& rng) {
    const auto queries = sample_queries(truth, sampler, tau, n_queries, rng);
    return kl_on_queries(truth, agent, queries, false);
}

KlEstimate dkl_tau_dyadic(const PredictiveModel& truth, std::span<const PredictiveModel> agent,
                          const InputSampler& sampler, std::size_t tau, std::size_t n_anchor_pairs,
                          const RngStream& rng) {
    const auto queries = sample_dyadic_queries(truth, sampler, tau, n_anchor_pairs, rng);
    return kl_on_queries(truth, agent, queries, true);
}

double nll_tau(std::span<const PredictiveModel> agent, std::span<const JointQuery> queries) {
    if (queries.empty()) throw DimensionMismatch("nll_tau: empty query set");
    double acc = 0.0;
    for (const JointQuery& q : queries) acc -= mixture_log_likelihood(agent, q);
    return acc / static_cast<double>(queries.size());
}

double truth_nll(const PredictiveModel& truth, std::span<const JointQuery> queries) {
    return nll_tau(std::span<const PredictiveModel>(&truth, 1), queries);
}

}  // namespace enslab::metrics
