#include "enslab/linreg/ensemble.hpp"

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Cholesky>

#include "enslab/numkit/errors.hpp"

namespace enslab::linreg {

std::string_view to_string(Family family) {
    switch (family) {
        case Family::N: return "N";
        case Family::P: return "P";
        case Family::BP: return "BP";
    }
    return "?";
}

Family parse_family(std::string_view text) {
    if (text == "N") return Family::N;
    if (text == "P") return Family::P;
    if (text == "BP") return Family::BP;
    throw ConfigError("unknown ensemble family '" + std::string(text) + "'");
}

EnsembleSpec::EnsembleSpec(Family family, double lambda, InputFunction weight,
                           double prior_sample_variance, std::optional<InputFunction> bootstrap_variance)
    : family_(family), lambda_(lambda), weight_(std::move(weight)),
      prior_sample_variance_(prior_sample_variance), bootstrap_variance_(std::move(bootstrap_variance)) {
    if (!(lambda_ >= 0.0)) throw ConfigError("EnsembleSpec: lambda must be nonnegative");
    if (!(prior_sample_variance_ >= 0.0)) {
        throw ConfigError("EnsembleSpec: prior sample variance must be nonnegative");
    }
    if (!weight_) throw ConfigError("EnsembleSpec: weight function is required");
    if (bootstrap_variance_ && !*bootstrap_variance_) bootstrap_variance_.reset();
    if (family_ == Family::N && (prior_sample_variance_ != 0.0 || bootstrap_variance_)) {
        throw ConfigError("EnsembleSpec: family N fixes prior sample variance and bootstrap variance at 0");
    }
    if (family_ == Family::P && bootstrap_variance_) {
        throw ConfigError("EnsembleSpec: family P fixes bootstrap variance at 0");
    }
}

EnsembleSpec EnsembleSpec::matching_posterior(const NoiseModel& noise, double prior_variance) {
    auto variance = noise.variance;
    return EnsembleSpec(
        Family::BP, 1.0 / prior_variance, [variance](const Vector& x) { return 1.0 / variance(x); },
        prior_variance, variance);
}

EnsembleSpec EnsembleSpec::unbiased_prior_only(const NoiseModel& noise, double prior_variance, double c,
                                               double prior_sample_variance) {
    auto variance = noise.variance;
    return EnsembleSpec(
        Family::P, c / prior_variance, [variance, c](const Vector& x) { return c / variance(x); },
        prior_sample_variance);
}

namespace {

struct Normal {
    Matrix gram;  // sum nu X X^T + lambda I
    Vector weights;
};

Normal weighted_gram(const EnsembleSpec& spec, const Dataset& data) {
    const Eigen::Index n = data.size();
    Vector nu(n);
    for (Eigen::Index t = 0; t < n; ++t) nu(t) = spec.weight(data.input(t));
    Matrix gram = data.inputs().transpose() * nu.asDiagonal() * data.inputs();
    gram.diagonal().array() += spec.lambda();
    return {std::move(gram), std::move(nu)};
}

Eigen::LLT<Matrix> factor_regularized(const Matrix& gram) {
    Eigen::LLT<Matrix> llt(gram);
    const Eigen::Index d = gram.rows();
    if (d == 0) return llt;
    const double top = gram.diagonal().maxCoeff();
    const auto pivots = llt.matrixLLT().diagonal();
    if (llt.info() != Eigen::Success || !(top > 0.0) || !pivots.allFinite() ||
        pivots.cwiseAbs2().minCoeff() <= 1e-14 * top) {
        throw SingularSystem("regularized Gram matrix is singular; use lambda > 0 or more data");
    }
    return llt;
}

void check_dims(const Dataset& data, const EnsembleMemberDraw& draw) {
    if (draw.perturbations.size() != data.size() || draw.prior_anchor.size() != data.dim()) {
        throw DimensionMismatch("ensemble member draw does not match the dataset");
    }
}

}  // namespace

EnsembleMemberDraw draw_member(const EnsembleSpec& spec, const Dataset& data, RngStream& rng) {
    EnsembleMemberDraw draw{Vector::Zero(data.size()), Vector::Zero(data.dim())};
    if (spec.has_bootstrap()) {
        for (Eigen::Index t = 0; t < data.size(); ++t) {
            draw.perturbations(t) = std::sqrt(spec.bootstrap_variance(data.input(t))) * rng.normal();
        }
    }
    if (spec.prior_sample_variance() > 0.0) {
        const double scale = std::sqrt(spec.prior_sample_variance());
        for (Eigen::Index i = 0; i < data.dim(); ++i) draw.prior_anchor(i) = scale * rng.normal();
    }
    return draw;
}

Vector ensemble_member(const EnsembleSpec& spec, const Dataset& data, const EnsembleMemberDraw& draw) {
    check_dims(data, draw);
    const Normal normal = weighted_gram(spec, data);
    const auto llt = factor_regularized(normal.gram);
    const Vector rhs = data.inputs().transpose() *
                           (normal.weights.array() * (data.outputs() + draw.perturbations).array()).matrix() +
                       spec.lambda() * draw.prior_anchor;
    Vector theta = llt.solve(rhs);
    theta += llt.solve(rhs - normal.gram * theta);  // one refinement step
    return theta;
}

Vector perturbed_loss_gradient(const EnsembleSpec& spec, const Dataset& data,
                               const EnsembleMemberDraw& draw, const Vector& theta) {
    check_dims(data, draw);
    Vector grad = spec.lambda() * (theta - draw.prior_anchor);
    for (Eigen::Index t = 0; t < data.size(); ++t) {
        const Vector x = data.input(t);
        const double residual = theta.dot(x) - (data.output(t) + draw.perturbations(t));
        grad += spec.weight(x) * residual * x;
    }
    return grad;
}

Belief ensemble_law(const EnsembleSpec& spec, const Dataset& data) {
    const Eigen::Index d = data.dim();
    const Normal normal = weighted_gram(spec, data);
    const auto llt = factor_regularized(normal.gram);
    const Matrix gram_inv = llt.solve(Matrix::Identity(d, d));

    const Vector mean = llt.solve(data.inputs().transpose() *
                                  (normal.weights.array() * data.outputs().array()).matrix());

    Vector spread(data.size());
    for (Eigen::Index t = 0; t < data.size(); ++t) {
        spread(t) = normal.weights(t) * normal.weights(t) * spec.bootstrap_variance(data.input(t));
    }
    Matrix middle = data.inputs().transpose() * spread.asDiagonal() * data.inputs();
    middle.diagonal().array() += spec.lambda() * spec.lambda() * spec.prior_sample_variance();
    return Belief(mean, symmetrized(gram_inv * middle * gram_inv));
}

Belief exact_posterior(const LinRegEnvironment& env, const Dataset& data) {
    if (data.dim() != env.dim()) throw DimensionMismatch("exact_posterior: data dimension");
    const Eigen::Index d = env.dim();
    Vector precision_weights(data.size());
    for (Eigen::Index t = 0; t < data.size(); ++t) {
        precision_weights(t) = 1.0 / env.noise_variance(data.input(t));
    }
    Matrix precision = data.inputs().transpose() * precision_weights.asDiagonal() * data.inputs();
    precision.diagonal().array() += 1.0 / env.prior_variance;
    const Eigen::LLT<Matrix> llt(precision);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("exact_posterior: precision not PD");
    const Vector mean = llt.solve(data.inputs().transpose() *
                                  (precision_weights.array() * data.outputs().array()).matrix());
    return Belief(mean, symmetrized(llt.solve(Matrix::Identity(d, d))));
}

bool is_unbiased(const EnsembleSpec& spec, const LinRegEnvironment& env, RngStream rng) {
    const double c = spec.lambda() * env.prior_variance;
    if (!(c > 0.0)) return false;
    for (int i = 0; i < 100; ++i) {
        const Vector x = env.input_sampler(rng);
        const double ratio = spec.weight(x) * env.noise_variance(x);
        if (std::abs(ratio - c) > 1e-9 * c) return false;
    }
    return true;
}

}  // namespace enslab::linreg
