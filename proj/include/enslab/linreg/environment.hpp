#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "enslab/numkit/rng.hpp"

namespace enslab::linreg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Positive function of the input, used for noise variances and loss weights.
using InputFunction = std::function<double(const Vector&)>;
using InputSampler = std::function<Vector(RngStream&)>;

/// A named noise variance function sigma^2(x).
struct NoiseModel {
    std::string name;
    InputFunction variance;
};

namespace noise {

NoiseModel constant(double variance);

/// sigma^2(x) = x^T diag(axis_weights) x + floor, floor > 0.
NoiseModel quadratic(Vector axis_weights, double floor);

/// Two SNR regimes keyed on the dominant input axis: sigma^2(x) = low when the
/// largest-magnitude coordinate of x belongs to an axis with low_axes[i] true,
/// and high otherwise.
NoiseModel dominant_axis(std::vector<bool> low_axes, double low, double high);

}  // namespace noise

namespace inputs {

InputSampler standard_normal(Eigen::Index dim);

/// N(0, diag(scales^2)).
InputSampler diagonal_normal(Vector scales);

/// x = s * e_i with i uniform over the axes and s ~ N(0, 1).
InputSampler axis_aligned(Eigen::Index dim);

InputSampler point_mass(Vector x);

}  // namespace inputs

/// Bayesian linear regression instance Y = theta*^T X + W, W ~ N(0, sigma^2(X)).
struct LinRegEnvironment {
    Vector theta_star;
    double prior_variance = 1.0;
    NoiseModel noise;
    InputSampler input_sampler;

    Eigen::Index dim() const { return theta_star.size(); }
    double noise_variance(const Vector& x) const { return noise.variance(x); }
};

/// Environment with theta* drawn from N(0, prior_variance I).
LinRegEnvironment sample_environment(Eigen::Index dim, double prior_variance, NoiseModel noise,
                                     InputSampler input_sampler, RngStream& rng);

/// Same noise and inputs as `base`, fresh theta* from the prior.
LinRegEnvironment resample_theta(const LinRegEnvironment& base, RngStream& rng);

/// Ordered data pairs (X_t, Y_{t+1}); row t of `inputs` is X_t.
class Dataset {
public:
    explicit Dataset(Eigen::Index dim) : inputs_(0, dim), outputs_(0) {}
    Dataset(Matrix inputs, Vector outputs);

    Eigen::Index size() const { return inputs_.rows(); }
    Eigen::Index dim() const { return inputs_.cols(); }
    bool empty() const { return size() == 0; }

    const Matrix& inputs() const { return inputs_; }
    const Vector& outputs() const { return outputs_; }
    Vector input(Eigen::Index t) const { return inputs_.row(t).transpose(); }
    double output(Eigen::Index t) const { return outputs_(t); }

    void append(const Vector& x, double y);

private:
    Matrix inputs_;
    Vector outputs_;
};

Dataset sample_dataset(const LinRegEnvironment& env, Eigen::Index size, RngStream& rng);

}  // namespace enslab::linreg
