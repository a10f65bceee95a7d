#include "enslab/testbed/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "enslab/numkit/errors.hpp"

namespace enslab::testbed {

std::size_t MlpParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

double MlpParams::squared_norm() const {
    double acc = 0.0;
    for (const auto& l : layers) acc += l.weight.squaredNorm() + l.bias.squaredNorm();
    return acc;
}

bool MlpParams::all_finite() const {
    for (const auto& l : layers) {
        if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
}

MlpParams MlpParams::zeros_like() const {
    MlpParams out;
    out.layers.reserve(layers.size());
    for (const auto& l : layers) {
        out.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    }
    return out;
}

Vector MlpParams::logits(const Vector& x) const {
    if (x.size() != input_dim()) throw DimensionMismatch("MlpParams::logits: input dimension");
    Vector h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = layers[i].weight * h + layers[i].bias;
        if (i + 1 < layers.size()) h = h.cwiseMax(0.0);
    }
    return h;
}

Matrix MlpParams::logits(const Batch& inputs) const {
    if (inputs.cols() != input_dim()) throw DimensionMismatch("MlpParams::logits: input dimension");
    Matrix h = inputs;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = (h * layers[i].weight.transpose()).rowwise() + layers[i].bias.transpose();
        if (i + 1 < layers.size()) h = h.cwiseMax(0.0);
    }
    return h;
}

double& MlpParams::coordinate(std::size_t index) {
    for (auto& l : layers) {
        const auto w = static_cast<std::size_t>(l.weight.size());
        if (index < w) return l.weight.data()[index];
        index -= w;
        const auto b = static_cast<std::size_t>(l.bias.size());
        if (index < b) return l.bias.data()[index];
        index -= b;
    }
    throw std::out_of_range("MlpParams::coordinate");
}

double MlpParams::coordinate(std::size_t index) const {
    return const_cast<MlpParams&>(*this).coordinate(index);
}

MlpParams& MlpParams::operator+=(const MlpParams& other) {
    if (other.layers.size() != layers.size()) throw DimensionMismatch("MlpParams: layer count");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].weight += other.layers[i].weight;
        layers[i].bias += other.layers[i].bias;
    }
    return *this;
}

MlpParams& MlpParams::operator*=(double scale) {
    for (auto& l : layers) {
        l.weight *= scale;
        l.bias *= scale;
    }
    return *this;
}

bool MlpParams::operator==(const MlpParams& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& a = layers[i];
        const auto& b = other.layers[i];
        if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
            a.bias.size() != b.bias.size() || a.weight != b.weight || a.bias != b.bias) {
            return false;
        }
    }
    return true;
}

std::vector<Eigen::Index> two_hidden_layer_widths(Eigen::Index input_dim, Eigen::Index classes) {
    return {input_dim, kHiddenWidth, kHiddenWidth, classes};
}

namespace {

template <typename Draw>
MlpParams build(const std::vector<Eigen::Index>& widths, Draw&& draw) {
    if (widths.size() < 2) throw DimensionMismatch("MLP needs at least input and output widths");
    MlpParams net;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const Eigen::Index in = widths[i];
        const Eigen::Index out = widths[i + 1];
        DenseLayer layer{Matrix(out, in), Vector(out)};
        for (Eigen::Index r = 0; r < out; ++r) {
            for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = draw(in, false);
        }
        for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = draw(in, true);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

}  // namespace

MlpParams truncated_normal_mlp(const std::vector<Eigen::Index>& widths, RngStream& rng) {
    return build(widths, [&rng](Eigen::Index fan_in, bool is_bias) {
        if (is_bias) return 0.0;
        double z = 0.0;
        do {
            z = rng.normal();
        } while (std::abs(z) > 2.0);
        return z / std::sqrt(static_cast<double>(fan_in));
    });
}

MlpParams fan_in_uniform_mlp(const std::vector<Eigen::Index>& widths, RngStream& rng) {
    return build(widths, [&rng](Eigen::Index fan_in, bool) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        return (2.0 * rng.uniform() - 1.0) * bound;
    });
}

Vector softmax(const Vector& logits) {
    const Vector shifted = (logits.array() - logits.maxCoeff()).exp();
    return shifted / shifted.sum();
}

}  // namespace enslab::testbed
