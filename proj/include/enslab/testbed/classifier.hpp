#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "enslab/linreg/ensemble.hpp"
#include "enslab/metrics/predictive.hpp"
#include "enslab/testbed/problem.hpp"

namespace enslab::testbed {

using linreg::Family;

/// One ensemble member: logits g_theta(x) + prior_scale * p(x), where p is a
/// fixed random network and only g is trained.
class ClassifierMember {
public:
    ClassifierMember(MlpParams trainable, MlpParams prior, double prior_scale, Vector data_weights);

    MlpParams& trainable() { return trainable_; }
    const MlpParams& trainable() const { return trainable_; }
    const MlpParams& prior() const { return prior_; }
    double prior_scale() const { return prior_scale_; }
    const Vector& data_weights() const { return data_weights_; }

    Vector logits(const Vector& x) const;
    Matrix logits(const Batch& inputs) const;
    Vector probabilities(const Vector& x) const;

    metrics::PredictiveModel as_model() const;

private:
    MlpParams trainable_;
    MlpParams prior_;
    double prior_scale_;
    Vector data_weights_;
};

enum class BootstrapKind {
    none,
    bernoulli,         ///< Bernoulli(p) / p
    double_bernoulli,  ///< 2 x Bernoulli(0.5)
};

struct BootstrapMode {
    BootstrapKind kind = BootstrapKind::double_bernoulli;
    double p = 0.5;

    double draw(RngStream& rng) const;
};

/// Step decay: the rate is multiplied by 0.1, 0.01 and 0.001 after 1/2, 3/4
/// and 7/8 of the epochs.
struct LearningRateSchedule {
    double initial = 0.05;

    double at(std::size_t epoch, std::size_t total_epochs) const;
};

struct TrainConfig {
    double weight_decay = 1.0;  ///< lambda on ||theta||^2 in the full-data loss
    double prior_scale = 1.0;   ///< ignored for family N
    LearningRateSchedule learning_rate;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    BootstrapMode bootstrap;  ///< used by family BP only
};

struct LossAndGradient {
    double loss = 0.0;
    MlpParams gradient;  ///< trainable parameters only
};

/// -sum_{t in rows} W_t log softmax(f(X_t))_{Y_t} + weight_decay ||theta||^2.
LossAndGradient loss_and_gradient(const ClassifierMember& member, const LabeledDataset& data,
                                  std::span<const std::size_t> rows, double weight_decay);

/// Candidate training configs for a problem of input dimension d and temperature rho:
/// weight decay in {0.1, 0.3, 1, 3, 10} * d / sqrt(rho), and for P and BP prior scale in
/// {0.3/sqrt(rho), 0.3/rho, 1/sqrt(rho), 1/rho, 3/sqrt(rho), 3/rho}. Other fields come from `base`.
std::vector<TrainConfig> hyperparameter_grid(Family family, Eigen::Index input_dim, double temperature,
                                             const TrainConfig& base);

/// Initializes a member for `family` from `rng` without training it.
ClassifierMember init_member(const TestbedProblem& problem, Family family, const TrainConfig& config,
                             const RngStream& rng);

/// Mini-batch SGD on the mean-form loss (loss / T).
void train_member(ClassifierMember& member, const LabeledDataset& data, const TrainConfig& config,
                  const RngStream& rng);

/// M independently initialized and trained members; member m uses rng.split(m).
std::vector<ClassifierMember> train_ensemble(const TestbedProblem& problem, std::size_t members,
                                             Family family, const TrainConfig& config,
                                             const RngStream& rng);

std::vector<metrics::PredictiveModel> as_agent(std::span<const ClassifierMember> members);

struct EvaluationConfig {
    std::size_t marginal_queries = 1000;
    std::size_t joint_tau = metrics::kDefaultDyadicTau;
    std::size_t anchor_pairs = metrics::kDefaultAnchorPairs;
};

struct AgentEvaluation {
    metrics::KlEstimate marginal;
    metrics::KlEstimate joint;
};

/// Marginal KL (tau = 1) and dyadic joint KL against the un-flipped generative
/// model. The same rng gives the same queries to every agent.
AgentEvaluation evaluate_agent(const TestbedProblem& problem, std::span<const metrics::PredictiveModel> agent,
                               const EvaluationConfig& config, const RngStream& rng);

}  // namespace enslab::testbed
