#include "enslab/testbed/classifier.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include "enslab/numkit/errors.hpp"

namespace enslab::testbed {

ClassifierMember::ClassifierMember(MlpParams trainable, MlpParams prior, double prior_scale,
                                   Vector data_weights)
    : trainable_(std::move(trainable)), prior_(std::move(prior)), prior_scale_(prior_scale),
      data_weights_(std::move(data_weights)) {
    if (!(prior_scale_ >= 0.0)) throw ConfigError("ClassifierMember: prior scale must be nonnegative");
    if ((data_weights_.array() < 0.0).any()) throw ConfigError("ClassifierMember: negative data weight");
    if (trainable_.input_dim() != prior_.input_dim() || trainable_.output_dim() != prior_.output_dim()) {
        throw DimensionMismatch("ClassifierMember: trainable and prior networks disagree in shape");
    }
}

Vector ClassifierMember::logits(const Vector& x) const {
    Vector out = trainable_.logits(x);
    if (prior_scale_ != 0.0) out += prior_scale_ * prior_.logits(x);
    return out;
}

Matrix ClassifierMember::logits(const Batch& inputs) const {
    Matrix out = trainable_.logits(inputs);
    if (prior_scale_ != 0.0) out += prior_scale_ * prior_.logits(inputs);
    return out;
}

Vector ClassifierMember::probabilities(const Vector& x) const { return softmax(logits(x)); }

metrics::PredictiveModel ClassifierMember::as_model() const {
    return [self = *this](const Vector& x) { return self.probabilities(x); };
}

double BootstrapMode::draw(RngStream& rng) const {
    switch (kind) {
        case BootstrapKind::none: return 1.0;
        case BootstrapKind::bernoulli: return rng.bernoulli(p) ? 1.0 / p : 0.0;
        case BootstrapKind::double_bernoulli: return rng.bernoulli(0.5) ? 2.0 : 0.0;
    }
    return 1.0;
}

double LearningRateSchedule::at(std::size_t epoch, std::size_t total_epochs) const {
    const double frac = total_epochs ? static_cast<double>(epoch) / static_cast<double>(total_epochs) : 0.0;
    if (frac >= 0.875) return initial * 1e-3;
    if (frac >= 0.75) return initial * 1e-2;
    if (frac >= 0.5) return initial * 1e-1;
    return initial;
}

namespace {

// Weighted cross-entropy on logits g(X) + offset plus decay ||theta||^2,
// gradient written into `out.gradient` (which must already have the right shapes).
void batch_objective(const MlpParams& net, const Batch& inputs, const Matrix& offset,
                     std::span<const int> labels, const Vector& weights, double weight_decay,
                     LossAndGradient& out) {
    const std::size_t n_layers = net.layers.size();
    std::vector<Matrix> pre(n_layers);   // pre-activations
    std::vector<Matrix> post(n_layers);  // layer inputs, post[0] = inputs
    Matrix h = inputs;
    for (std::size_t i = 0; i < n_layers; ++i) {
        post[i] = h;
        pre[i] = (h * net.layers[i].weight.transpose()).rowwise() + net.layers[i].bias.transpose();
        h = (i + 1 < n_layers) ? Matrix(pre[i].cwiseMax(0.0)) : pre[i];
    }
    const Matrix logits = h + offset;

    // delta = dLoss/dlogits = W (softmax - onehot)
    Matrix delta(logits.rows(), logits.cols());
    double data_loss = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double top = logits.row(r).maxCoeff();
        const auto shifted = (logits.row(r).array() - top).exp();
        const double z = shifted.sum();
        const int y = labels[static_cast<std::size_t>(r)];
        if (y < 0 || y >= logits.cols()) throw DimensionMismatch("label outside network classes");
        const double w = weights(r);
        data_loss -= w * (logits(r, y) - top - std::log(z));
        delta.row(r) = w * (shifted / z).matrix();
        delta(r, y) -= w;
    }
    out.loss = data_loss + weight_decay * net.squared_norm();

    for (std::size_t i = n_layers; i-- > 0;) {
        auto& g = out.gradient.layers[i];
        g.weight.noalias() = delta.transpose() * post[i];
        g.bias = delta.colwise().sum().transpose();
        g.weight += 2.0 * weight_decay * net.layers[i].weight;
        g.bias += 2.0 * weight_decay * net.layers[i].bias;
        if (i > 0) {
            Matrix back = delta * net.layers[i].weight;
            delta = back.cwiseProduct((pre[i - 1].array() > 0.0).cast<double>().matrix());
        }
    }
}

Batch gather_rows(const Batch& source, std::span<const std::size_t> rows) {
    Batch out(static_cast<Eigen::Index>(rows.size()), source.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = source.row(static_cast<Eigen::Index>(rows[i]));
    }
    return out;
}

}  // namespace

LossAndGradient loss_and_gradient(const ClassifierMember& member, const LabeledDataset& data,
                                  std::span<const std::size_t> rows, double weight_decay) {
    if (static_cast<std::size_t>(member.data_weights().size()) != data.size()) {
        throw DimensionMismatch("loss_and_gradient: one data weight per training example required");
    }
    const Batch inputs = gather_rows(data.inputs, rows);
    std::vector<int> labels(rows.size());
    Vector weights(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        labels[i] = data.labels[rows[i]];
        weights(static_cast<Eigen::Index>(i)) = member.data_weights()(static_cast<Eigen::Index>(rows[i]));
    }
    Matrix offset = Matrix::Zero(inputs.rows(), member.trainable().output_dim());
    if (member.prior_scale() != 0.0) offset = member.prior_scale() * member.prior().logits(inputs);

    LossAndGradient out{0.0, member.trainable().zeros_like()};
    batch_objective(member.trainable(), inputs, offset, labels, weights, weight_decay, out);
    return out;
}

std::vector<TrainConfig> hyperparameter_grid(Family family, Eigen::Index input_dim, double temperature,
                                             const TrainConfig& base) {
    if (!(temperature > 0.0)) throw ConfigError("hyperparameter_grid: temperature must be positive");
    const double root = std::sqrt(temperature);
    const double scale = static_cast<double>(input_dim) / root;
    std::vector<double> prior_scales{base.prior_scale};
    if (family != Family::N) {
        prior_scales = {0.3 / root, 0.3 / temperature, 1.0 / root, 1.0 / temperature, 3.0 / root, 3.0 / temperature};
    }
    std::vector<TrainConfig> out;
    for (double m : {0.1, 0.3, 1.0, 3.0, 10.0}) {
        for (double ps : prior_scales) {
            TrainConfig c = base;
            c.weight_decay = m * scale;
            c.prior_scale = ps;
            out.push_back(c);
        }
    }
    return out;
}

ClassifierMember init_member(const TestbedProblem& problem, Family family, const TrainConfig& config,
                             const RngStream& rng) {
    const auto widths = two_hidden_layer_widths(problem.input_dim, problem.num_classes());
    RngStream init_rng = rng.split(0);
    RngStream prior_rng = rng.split(1);
    RngStream weight_rng = rng.split(2);
    MlpParams trainable = fan_in_uniform_mlp(widths, init_rng);
    MlpParams prior = truncated_normal_mlp(widths, prior_rng);
    const double scale = family == Family::N ? 0.0 : config.prior_scale;

    Vector weights = Vector::Ones(static_cast<Eigen::Index>(problem.data.size()));
    if (family == Family::BP) {
        BootstrapMode mode = config.bootstrap;
        if (mode.kind == BootstrapKind::none) mode.kind = BootstrapKind::double_bernoulli;
        for (Eigen::Index t = 0; t < weights.size(); ++t) weights(t) = mode.draw(weight_rng);
    }
    return ClassifierMember(std::move(trainable), std::move(prior), scale, std::move(weights));
}

void train_member(ClassifierMember& member, const LabeledDataset& data, const TrainConfig& config,
                  const RngStream& rng) {
    const std::size_t n = data.size();
    if (n == 0 || config.epochs == 0) return;
    if (config.batch_size == 0) throw ConfigError("train_member: batch size must be positive");
    if (static_cast<std::size_t>(member.data_weights().size()) != n) {
        throw DimensionMismatch("train_member: one data weight per training example required");
    }

    Matrix prior_logits = Matrix::Zero(static_cast<Eigen::Index>(n), member.trainable().output_dim());
    if (member.prior_scale() != 0.0) prior_logits = member.prior_scale() * member.prior().logits(data.inputs);

    RngStream order_rng = rng.split(3);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    LossAndGradient work{0.0, member.trainable().zeros_like()};
    const double per_example_decay = config.weight_decay / static_cast<double>(n);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) {
            std::swap(order[i - 1], order[static_cast<std::size_t>(order_rng.below(i))]);
        }
        const double lr = config.learning_rate.at(epoch, config.epochs);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, stop - start);
            const auto b = static_cast<double>(rows.size());
            const Batch inputs = gather_rows(data.inputs, rows);
            Matrix offset(inputs.rows(), prior_logits.cols());
            std::vector<int> labels(rows.size());
            Vector weights(inputs.rows());
            for (std::size_t k = 0; k < rows.size(); ++k) {
                const auto r = static_cast<Eigen::Index>(rows[k]);
                offset.row(static_cast<Eigen::Index>(k)) = prior_logits.row(r);
                labels[k] = data.labels[rows[k]];
                weights(static_cast<Eigen::Index>(k)) = member.data_weights()(r);
            }
            // (1/b) [batch data loss + b * (lambda/T) ||theta||^2] estimates loss / T
            batch_objective(member.trainable(), inputs, offset, labels, weights, per_example_decay * b, work);
            work.gradient *= -lr / b;
            member.trainable() += work.gradient;
        }
    }
}

std::vector<ClassifierMember> train_ensemble(const TestbedProblem& problem, std::size_t members,
                                             Family family, const TrainConfig& config,
                                             const RngStream& rng) {
    if (members < 1) throw ConfigError("train_ensemble: need at least one member");
    std::vector<ClassifierMember> out;
    out.reserve(members);
    for (std::size_t m = 0; m < members; ++m) {
        const RngStream member_rng = rng.split(m);
        ClassifierMember member = init_member(problem, family, config, member_rng);
        train_member(member, problem.data, config, member_rng);
        out.push_back(std::move(member));
    }
    return out;
}

std::vector<metrics::PredictiveModel> as_agent(std::span<const ClassifierMember> members) {
    std::vector<metrics::PredictiveModel> out;
    out.reserve(members.size());
    for (const auto& m : members) out.push_back(m.as_model());
    return out;
}

AgentEvaluation evaluate_agent(const TestbedProblem& problem, std::span<const metrics::PredictiveModel> agent,
                               const EvaluationConfig& config, const RngStream& rng) {
    if (agent.empty()) throw ConfigError("evaluate_agent: agent has no members");
    const auto truth = problem.truth();
    const auto sampler = problem.input_sampler();
    AgentEvaluation out;
    out.marginal = metrics::dkl_tau(truth, agent, sampler, 1, config.marginal_queries, rng.split(0));
    out.joint = metrics::dkl_tau_dyadic(truth, agent, sampler, config.joint_tau, config.anchor_pairs,
                                        rng.split(1));
    return out;
}

}  // namespace enslab::testbed
