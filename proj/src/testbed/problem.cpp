#include "enslab/testbed/problem.hpp"

#include <algorithm>
#include <cmath>

#include "enslab/numkit/errors.hpp"

namespace enslab::testbed {

Vector TestbedProblem::class_probabilities(const Vector& x) const {
    return softmax(generative.logits(x) / temperature);
}

metrics::PredictiveModel TestbedProblem::truth() const {
    return [net = generative, rho = temperature](const Vector& x) { return softmax(net.logits(x) / rho); };
}

metrics::InputSampler TestbedProblem::input_sampler() const {
    return [d = input_dim](RngStream& rng) {
        Vector x(d);
        for (Eigen::Index i = 0; i < d; ++i) x(i) = rng.normal();
        return x;
    };
}

TestbedProblem generate_problem(Eigen::Index input_dim, std::size_t train_size, double temperature,
                                double flip_fraction, const RngStream& rng, Eigen::Index num_classes) {
    if (input_dim < 1) throw ConfigError("generate_problem: input dimension must be >= 1");
    if (!(temperature > 0.0)) throw ConfigError("generate_problem: temperature must be positive");
    if (!(flip_fraction >= 0.0 && flip_fraction < 1.0)) {
        throw ConfigError("generate_problem: flip fraction must lie in [0, 1)");
    }
    if (num_classes < 2) throw ConfigError("generate_problem: need at least two classes");

    TestbedProblem problem;
    problem.temperature = temperature;
    problem.input_dim = input_dim;
    problem.train_size = train_size;
    problem.flip_fraction = flip_fraction;

    RngStream model_rng = rng.split(0);
    problem.generative = truncated_normal_mlp(two_hidden_layer_widths(input_dim, num_classes), model_rng);

    RngStream data_rng = rng.split(1);
    problem.data.inputs.resize(static_cast<Eigen::Index>(train_size), input_dim);
    problem.data.labels.resize(train_size);
    for (std::size_t t = 0; t < train_size; ++t) {
        Vector x(input_dim);
        for (Eigen::Index i = 0; i < input_dim; ++i) x(i) = data_rng.normal();
        problem.data.inputs.row(static_cast<Eigen::Index>(t)) = x.transpose();
        problem.data.labels[t] = metrics::sample_label(problem.class_probabilities(x), data_rng);
    }
    problem.clean_labels = problem.data.labels;

    std::vector<std::size_t> ones;
    for (std::size_t t = 0; t < train_size; ++t) {
        if (problem.data.labels[t] == 1) ones.push_back(t);
    }
    const auto n_flip = static_cast<std::size_t>(std::llround(flip_fraction * static_cast<double>(ones.size())));
    RngStream flip_rng = rng.split(2);
    // partial Fisher-Yates: the first n_flip entries become a uniform subset
    for (std::size_t i = 0; i < n_flip; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(flip_rng.below(ones.size() - i));
        std::swap(ones[i], ones[j]);
        problem.data.labels[ones[i]] = 0;
    }
    problem.flipped = n_flip;
    return problem;
}

}  // namespace enslab::testbed
