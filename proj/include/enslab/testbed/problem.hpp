#pragma once

#include <cstddef>
#include <vector>

#include "enslab/metrics/predictive.hpp"
#include "enslab/testbed/mlp.hpp"

namespace enslab::testbed {

/// Inputs (one row per example) with categorical labels.
struct LabeledDataset {
    Batch inputs;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
};

/// Synthetic classification instance: labels ~ softmax(generative(x) / temperature)
/// on x ~ N(0, I), after which a fraction of the label-1 training rows are
/// flipped to 0.
struct TestbedProblem {
    MlpParams generative;
    double temperature = 1.0;
    Eigen::Index input_dim = 0;
    std::size_t train_size = 0;
    double flip_fraction = 0.0;
    LabeledDataset data;            ///< training data as seen by agents
    std::vector<int> clean_labels;  ///< labels before flipping
    std::size_t flipped = 0;

    Eigen::Index num_classes() const { return generative.output_dim(); }

    /// Un-flipped generative distribution.
    metrics::PredictiveModel truth() const;
    metrics::InputSampler input_sampler() const;
    /// softmax(generative(x) / temperature)
    Vector class_probabilities(const Vector& x) const;
};

TestbedProblem generate_problem(Eigen::Index input_dim, std::size_t train_size, double temperature,
                                double flip_fraction, const RngStream& rng, Eigen::Index num_classes = 2);

}  // namespace enslab::testbed
