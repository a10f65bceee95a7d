#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "enslab/numkit/rng.hpp"

namespace enslab::testbed {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Row-major batch of inputs, one example per row.
using Batch = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr Eigen::Index kHiddenWidth = 50;

struct DenseLayer {
    Matrix weight;  ///< out x in
    Vector bias;    ///< out
};

/// Fully connected network with ReLU between layers and linear output.
struct MlpParams {
    std::vector<DenseLayer> layers;

    Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
    Eigen::Index output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }
    std::size_t parameter_count() const;
    double squared_norm() const;
    bool all_finite() const;

    /// Zero-valued parameters with the same shapes.
    MlpParams zeros_like() const;

    Vector logits(const Vector& x) const;
    /// Logits for every row of `inputs`; result is rows x output_dim.
    Matrix logits(const Batch& inputs) const;

    /// Flat view helpers used by gradient checks and optimizers.
    double& coordinate(std::size_t index);
    double coordinate(std::size_t index) const;

    MlpParams& operator+=(const MlpParams& other);
    MlpParams& operator*=(double scale);
    bool operator==(const MlpParams& other) const;
};

/// d -> 50 -> 50 -> classes.
std::vector<Eigen::Index> two_hidden_layer_widths(Eigen::Index input_dim, Eigen::Index classes);

/// Weights N(0, 1/fan_in) truncated at two standard deviations, zero biases.
/// Used for generative models and prior functions.
MlpParams truncated_normal_mlp(const std::vector<Eigen::Index>& widths, RngStream& rng);

/// Weights and biases uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)]. Used for
/// trainable networks.
MlpParams fan_in_uniform_mlp(const std::vector<Eigen::Index>& widths, RngStream& rng);

/// Numerically stable softmax of a logit vector.
Vector softmax(const Vector& logits);

}  // namespace enslab::testbed
