#include "enslab/linreg/environment.hpp"

#include <cmath>
#include <utility>

#include "enslab/numkit/errors.hpp"

namespace enslab::linreg {

namespace noise {

NoiseModel constant(double variance) {
    if (!(variance > 0.0)) throw ConfigError("noise::constant: variance must be positive");
    return {"constant", [variance](const Vector&) { return variance; }};
}

NoiseModel quadratic(Vector axis_weights, double floor) {
    if (!(floor > 0.0)) throw ConfigError("noise::quadratic: floor must be positive");
    if ((axis_weights.array() < 0.0).any()) {
        throw ConfigError("noise::quadratic: axis weights must be nonnegative");
    }
    return {"quadratic", [w = std::move(axis_weights), floor](const Vector& x) {
                if (x.size() != w.size()) throw DimensionMismatch("noise::quadratic: input dimension");
                return x.cwiseAbs2().dot(w) + floor;
            }};
}

NoiseModel dominant_axis(std::vector<bool> low_axes, double low, double high) {
    if (!(low > 0.0) || !(high > 0.0)) {
        throw ConfigError("noise::dominant_axis: variances must be positive");
    }
    return {"dominant_axis", [axes = std::move(low_axes), low, high](const Vector& x) {
                if (static_cast<std::size_t>(x.size()) != axes.size()) {
                    throw DimensionMismatch("noise::dominant_axis: input dimension");
                }
                Eigen::Index arg = 0;
                x.cwiseAbs().maxCoeff(&arg);
                return axes[static_cast<std::size_t>(arg)] ? low : high;
            }};
}

}  // namespace noise

namespace inputs {

InputSampler standard_normal(Eigen::Index dim) {
    return [dim](RngStream& rng) {
        Vector x(dim);
        for (Eigen::Index i = 0; i < dim; ++i) x(i) = rng.normal();
        return x;
    };
}

InputSampler diagonal_normal(Vector scales) {
    return [s = std::move(scales)](RngStream& rng) {
        Vector x(s.size());
        for (Eigen::Index i = 0; i < s.size(); ++i) x(i) = s(i) * rng.normal();
        return x;
    };
}

InputSampler axis_aligned(Eigen::Index dim) {
    return [dim](RngStream& rng) {
        Vector x = Vector::Zero(dim);
        const auto axis = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(dim)));
        x(axis) = rng.normal();
        return x;
    };
}

InputSampler point_mass(Vector x) {
    return [p = std::move(x)](RngStream&) { return p; };
}

}  // namespace inputs

LinRegEnvironment sample_environment(Eigen::Index dim, double prior_variance, NoiseModel noise,
                                     InputSampler input_sampler, RngStream& rng) {
    if (!(prior_variance > 0.0)) throw ConfigError("prior variance must be positive");
    LinRegEnvironment env{Vector::Zero(dim), prior_variance, std::move(noise),
                          std::move(input_sampler)};
    return resample_theta(env, rng);
}

LinRegEnvironment resample_theta(const LinRegEnvironment& base, RngStream& rng) {
    LinRegEnvironment env = base;
    const double scale = std::sqrt(base.prior_variance);
    for (Eigen::Index i = 0; i < env.theta_star.size(); ++i) env.theta_star(i) = scale * rng.normal();
    return env;
}

Dataset::Dataset(Matrix inputs, Vector outputs) : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
    if (inputs_.rows() != outputs_.size()) throw DimensionMismatch("Dataset: row count mismatch");
    if (!inputs_.allFinite() || !outputs_.allFinite()) throw DimensionMismatch("Dataset: non-finite value");
}

void Dataset::append(const Vector& x, double y) {
    if (x.size() != dim()) throw DimensionMismatch("Dataset::append: input dimension");
    const Eigen::Index t = size();
    inputs_.conservativeResize(t + 1, Eigen::NoChange);
    outputs_.conservativeResize(t + 1);
    inputs_.row(t) = x.transpose();
    outputs_(t) = y;
}

Dataset sample_dataset(const LinRegEnvironment& env, Eigen::Index size, RngStream& rng) {
    Matrix xs(size, env.dim());
    Vector ys(size);
    for (Eigen::Index t = 0; t < size; ++t) {
        const Vector x = env.input_sampler(rng);
        if (x.size() != env.dim()) throw DimensionMismatch("input sampler dimension");
        xs.row(t) = x.transpose();
        ys(t) = env.theta_star.dot(x) + std::sqrt(env.noise_variance(x)) * rng.normal();
    }
    return Dataset(std::move(xs), std::move(ys));
}

}  // namespace enslab::linreg
