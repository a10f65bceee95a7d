#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include "enslab/numkit/errors.hpp"
#include "enslab/testbed/checkpoint.hpp"
#include "enslab/testbed/classifier.hpp"

using namespace enslab;
using namespace enslab::testbed;

namespace {

DenseLayer layer(std::initializer_list<std::initializer_list<double>> w, std::initializer_list<double> b) {
    DenseLayer l;
    l.weight.resize(static_cast<Eigen::Index>(w.size()), static_cast<Eigen::Index>(w.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : w) {
        Eigen::Index j = 0;
        for (double v : row) l.weight(i, j++) = v;
        ++i;
    }
    l.bias.resize(static_cast<Eigen::Index>(b.size()));
    i = 0;
    for (double v : b) l.bias(i++) = v;
    return l;
}

// 1 -> 2 -> 2 networks small enough to evaluate by hand
MlpParams hand_net() {
    MlpParams n;
    n.layers.push_back(layer({{1.0}, {-1.0}}, {0.0, 0.5}));
    n.layers.push_back(layer({{1.0, 2.0}, {0.0, -1.0}}, {0.1, 0.0}));
    return n;
}

MlpParams hand_prior() {
    MlpParams n;
    n.layers.push_back(layer({{0.5}, {1.0}}, {0.0, 0.0}));
    n.layers.push_back(layer({{1.0, 0.0}, {0.0, 1.0}}, {0.0, 0.0}));
    return n;
}

TrainConfig quick_config() {
    TrainConfig c;
    c.epochs = 5;
    c.batch_size = 16;
    c.weight_decay = 0.5;
    c.prior_scale = 2.0;
    return c;
}

std::string bytes_of(const MlpParams& net) {
    std::ostringstream out(std::ios::binary);
    save_mlp(out, net);
    return out.str();
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

}  // namespace

TEST_CASE("near zero temperature labels follow the argmax") {
    const auto p = generate_problem(3, 10000, 1e-6, 0.0, RngStream(1, 0));
    std::size_t agree = 0;
    for (std::size_t t = 0; t < p.train_size; ++t) {
        const Vector logits = p.generative.logits(Vector(p.data.inputs.row(static_cast<Eigen::Index>(t)).transpose()));
        Eigen::Index best = 0;
        logits.maxCoeff(&best);
        agree += p.data.labels[t] == best;
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(p.train_size) > 0.999);
}

TEST_CASE("label marginals match softmax sampling") {
    const auto p = generate_problem(5, 5000, 0.5, 0.0, RngStream(2, 0));
    double expected = 0.0, variance = 0.0;
    std::size_t ones = 0;
    for (std::size_t t = 0; t < p.train_size; ++t) {
        const double q = p.class_probabilities(Vector(p.data.inputs.row(static_cast<Eigen::Index>(t)).transpose()))(1);
        expected += q;
        variance += q * (1.0 - q);
        ones += p.data.labels[t] == 1;
    }
    CHECK(std::abs(static_cast<double>(ones) - expected) < 3.0 * std::sqrt(variance));
    CHECK(p.flipped == 0);
    CHECK(p.data.labels == p.clean_labels);
}

TEST_CASE("label flipping moves round(fraction * ones) rows from 1 to 0") {
    const auto p = generate_problem(4, 400, 1.0, 0.25, RngStream(3, 0));
    std::size_t ones = 0, moved = 0;
    for (std::size_t t = 0; t < p.train_size; ++t) {
        ones += p.clean_labels[t] == 1;
        if (p.clean_labels[t] != p.data.labels[t]) {
            CHECK(p.clean_labels[t] == 1);
            CHECK(p.data.labels[t] == 0);
            ++moved;
        }
    }
    CHECK(moved == static_cast<std::size_t>(std::lround(0.25 * static_cast<double>(ones))));
    CHECK(p.flipped == moved);
    CHECK_THROWS_AS(generate_problem(4, 10, 1.0, 1.0, RngStream(0, 0)), ConfigError);
    CHECK_THROWS_AS(generate_problem(4, 10, 0.0, 0.0, RngStream(0, 0)), ConfigError);
    CHECK_THROWS_AS(generate_problem(0, 10, 1.0, 0.0, RngStream(0, 0)), ConfigError);
}

TEST_CASE("forward pass examples") {
    const MlpParams zero = hand_net().zeros_like();
    const ClassifierMember uniform(zero, hand_prior(), 0.0, Vector::Ones(1));
    const Vector u = uniform.probabilities(Vector::Constant(1, 3.0));
    CHECK(u(0) == doctest::Approx(0.5));
    CHECK(u(1) == doctest::Approx(0.5));

    // h = relu(2, -1.5) = (2, 0), logits (2.1, 0)
    const ClassifierMember plain(hand_net(), hand_prior(), 0.0, Vector::Ones(1));
    const Vector x = Vector::Constant(1, 2.0);
    CHECK(plain.logits(x)(0) == doctest::Approx(2.1));
    CHECK(plain.logits(x)(1) == doctest::Approx(0.0));
    CHECK(plain.logits(x) == hand_net().logits(x));
    CHECK(plain.probabilities(x)(0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.1))).epsilon(1e-14));

    // prior logits (1, 2), scaled by 0.5, added: (2.6, 1)
    const ClassifierMember with_prior(hand_net(), hand_prior(), 0.5, Vector::Ones(1));
    CHECK(with_prior.probabilities(x)(0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.6))).epsilon(1e-14));
}

TEST_CASE("softmax stays normalized") {
    RngStream rng(4, 0);
    for (int rep = 0; rep < 200; ++rep) {
        Vector z(5);
        for (Eigen::Index i = 0; i < 5; ++i) z(i) = rng.normal() * std::pow(10.0, rep % 5);
        const Vector p = softmax(z);
        CHECK(std::abs(p.sum() - 1.0) < 1e-9);
        CHECK((p.array() >= 0.0).all());
    }
    const auto problem = generate_problem(3, 50, 1.0, 0.0, RngStream(5, 0));
    const auto member = init_member(problem, Family::P, quick_config(), RngStream(5, 1));
    for (std::size_t t = 0; t < problem.train_size; ++t) {
        CHECK(std::abs(member.probabilities(Vector(problem.data.inputs.row(static_cast<Eigen::Index>(t)).transpose())).sum() -
                       1.0) < 1e-9);
    }
}

TEST_CASE("loss examples") {
    const auto problem = generate_problem(3, 40, 1.0, 0.0, RngStream(6, 0));
    auto member = init_member(problem, Family::P, quick_config(), RngStream(6, 1));
    const auto rows = all_rows(problem.train_size);

    const ClassifierMember silent(member.trainable(), member.prior(), member.prior_scale(),
                                  Vector::Zero(static_cast<Eigen::Index>(problem.train_size)));
    const auto zero = loss_and_gradient(silent, problem.data, rows, 0.0);
    CHECK(zero.loss == 0.0);
    CHECK(zero.gradient.squared_norm() == 0.0);

    RngStream wrng(6, 2);
    Vector w(static_cast<Eigen::Index>(problem.train_size));
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = 2.0 * wrng.uniform();
    const ClassifierMember once(member.trainable(), member.prior(), member.prior_scale(), w);
    const ClassifierMember twice(member.trainable(), member.prior(), member.prior_scale(), 2.0 * w);
    CHECK(loss_and_gradient(twice, problem.data, rows, 0.0).loss ==
          doctest::Approx(2.0 * loss_and_gradient(once, problem.data, rows, 0.0).loss).epsilon(1e-14));

    const double decay = 0.3;
    const double with_decay = loss_and_gradient(once, problem.data, rows, decay).loss;
    CHECK(with_decay - loss_and_gradient(once, problem.data, rows, 0.0).loss ==
          doctest::Approx(decay * member.trainable().squared_norm()).epsilon(1e-10));
}

TEST_CASE("gradient matches central differences across families and layers") {
    const auto problem = generate_problem(4, 30, 0.5, 0.0, RngStream(7, 0));
    const auto rows = all_rows(problem.train_size);
    for (Family f : {Family::N, Family::P, Family::BP}) {
        auto config = quick_config();
        const auto member = init_member(problem, f, config, RngStream(7, 1 + static_cast<std::uint64_t>(f)));
        const auto analytic = loss_and_gradient(member, problem.data, rows, 0.2);
        const std::size_t count = member.trainable().parameter_count();
        RngStream pick(7, 10 + static_cast<std::uint64_t>(f));
        double worst = 0.0;
        // touch every layer's first coordinate plus random ones
        std::vector<std::size_t> coords;
        std::size_t offset = 0;
        for (const auto& l : member.trainable().layers) {
            coords.push_back(offset);
            offset += static_cast<std::size_t>(l.weight.size());
            coords.push_back(offset);  // first bias
            offset += static_cast<std::size_t>(l.bias.size());
        }
        while (coords.size() < 50) coords.push_back(static_cast<std::size_t>(pick.below(count)));
        for (std::size_t c : coords) {
            const double h = 1e-5;
            ClassifierMember plus = member, minus = member;
            plus.trainable().coordinate(c) += h;
            minus.trainable().coordinate(c) -= h;
            const double fd = (loss_and_gradient(plus, problem.data, rows, 0.2).loss -
                               loss_and_gradient(minus, problem.data, rows, 0.2).loss) /
                              (2.0 * h);
            const double g = analytic.gradient.coordinate(c);
            if (std::abs(g) + std::abs(fd) < 1e-9) continue;  // dead ReLU units
            worst = std::max(worst, std::abs(g - fd) / std::max(std::abs(g), std::abs(fd)));
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("bootstrap weights are unbiased") {
    for (BootstrapMode mode : {BootstrapMode{BootstrapKind::bernoulli, 0.5}, BootstrapMode{BootstrapKind::bernoulli, 0.2},
                               BootstrapMode{BootstrapKind::double_bernoulli, 0.5}}) {
        RngStream rng(8, static_cast<std::uint64_t>(mode.p * 100));
        const int n = 10000;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) sum += mode.draw(rng);
        const double sd = mode.kind == BootstrapKind::bernoulli ? std::sqrt((1.0 - mode.p) / mode.p) : 1.0;
        CHECK(std::abs(sum / n - 1.0) < 3.0 * sd / std::sqrt(double(n)));
    }
    RngStream any(0, 0);
    CHECK(BootstrapMode{BootstrapKind::none, 0.5}.draw(any) == 1.0);
}

TEST_CASE("family defaults for weights and prior scale") {
    const auto problem = generate_problem(3, 60, 1.0, 0.0, RngStream(9, 0));
    const auto config = quick_config();
    const auto n = init_member(problem, Family::N, config, RngStream(9, 1));
    const auto p = init_member(problem, Family::P, config, RngStream(9, 1));
    const auto bp = init_member(problem, Family::BP, config, RngStream(9, 1));
    CHECK(n.prior_scale() == 0.0);
    CHECK(p.prior_scale() == 2.0);
    CHECK(n.data_weights() == Vector::Ones(60));
    CHECK(p.data_weights() == Vector::Ones(60));
    for (Eigen::Index i = 0; i < 60; ++i) CHECK((bp.data_weights()(i) == 0.0 || bp.data_weights()(i) == 2.0));
    CHECK(bp.data_weights() != Vector::Ones(60));
    CHECK_THROWS_AS(ClassifierMember(hand_net(), hand_prior(), -1.0, Vector::Ones(1)), ConfigError);
    CHECK_THROWS_AS(ClassifierMember(hand_net(), hand_prior(), 1.0, Vector::Constant(1, -1.0)), ConfigError);
}

TEST_CASE("training leaves the prior untouched and P with zero scale tracks N") {
    const auto problem = generate_problem(3, 64, 1.0, 0.0, RngStream(10, 0));
    auto config = quick_config();
    auto member = init_member(problem, Family::P, config, RngStream(10, 1));
    const std::string before = bytes_of(member.prior());
    const MlpParams start = member.trainable();
    train_member(member, problem.data, config, RngStream(10, 2));
    CHECK(bytes_of(member.prior()) == before);
    CHECK_FALSE(member.trainable() == start);

    config.prior_scale = 0.0;
    auto pz = init_member(problem, Family::P, config, RngStream(10, 3));
    auto n = init_member(problem, Family::N, config, RngStream(10, 3));
    train_member(pz, problem.data, config, RngStream(10, 4));
    train_member(n, problem.data, config, RngStream(10, 4));
    CHECK(pz.trainable() == n.trainable());
}

TEST_CASE("ensembles are deterministic per stream") {
    const auto problem = generate_problem(3, 40, 1.0, 0.0, RngStream(11, 0));
    const auto config = quick_config();
    const auto a = train_ensemble(problem, 3, Family::N, config, RngStream(11, 1));
    const auto b = train_ensemble(problem, 3, Family::N, config, RngStream(11, 1));
    REQUIRE(a.size() == 3);
    for (std::size_t m = 0; m < 3; ++m) CHECK(a[m].trainable() == b[m].trainable());
    CHECK_FALSE(a[0].trainable() == a[1].trainable());

    const auto single = train_ensemble(problem, 1, Family::N, config, RngStream(11, 1));
    REQUIRE(single.size() == 1);
    CHECK(single[0].trainable() == a[0].trainable());
    CHECK_THROWS_AS(train_ensemble(problem, 0, Family::N, config, RngStream(11, 1)), ConfigError);
}

TEST_CASE("evaluation of reference agents") {
    const auto problem = generate_problem(3, 20, 0.5, 0.0, RngStream(12, 0));
    EvaluationConfig eval{5000, 10, 500};
    const std::vector<metrics::PredictiveModel> self{problem.truth()};
    const auto e = evaluate_agent(problem, self, eval, RngStream(12, 1));
    CHECK(std::abs(e.marginal.value) <= 3.0 * e.marginal.std_error + 1e-15);
    CHECK(std::abs(e.joint.value) <= 3.0 * e.joint.std_error + 1e-15);
    CHECK(e.joint.dyadic);
    CHECK(e.joint.tau == 10);

    // uniform agent: E_x [sum_y p(y|x) log(2 p(y|x))] by direct averaging
    const std::vector<metrics::PredictiveModel> coin{[](const Vector&) { return Vector::Constant(2, 0.5); }};
    const auto u = evaluate_agent(problem, coin, eval, RngStream(12, 2));
    RngStream xs(12, 3);
    const auto sampler = problem.input_sampler();
    const int n = 20000;
    double acc = 0.0, acc2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vector p = problem.class_probabilities(sampler(xs));
        double kl = 0.0;
        for (Eigen::Index y = 0; y < 2; ++y)
            if (p(y) > 0.0) kl += p(y) * std::log(2.0 * p(y));
        acc += kl;
        acc2 += kl * kl;
    }
    const double mean = acc / n;
    const double se = std::sqrt((acc2 / n - mean * mean) / n);
    CHECK(std::abs(u.marginal.value - mean) < 4.0 * std::hypot(u.marginal.std_error, se));

    const std::vector<metrics::PredictiveModel> none;
    CHECK_THROWS_AS(evaluate_agent(problem, none, eval, RngStream(12, 4)), ConfigError);
}

TEST_CASE("hyperparameter grid") {
    const TrainConfig base = quick_config();
    const auto n = hyperparameter_grid(Family::N, 10, 0.1, base);
    const auto p = hyperparameter_grid(Family::P, 10, 0.1, base);
    CHECK(n.size() == 5);
    CHECK(p.size() == 30);
    for (const auto& c : n) CHECK(c.prior_scale == base.prior_scale);
    const double root = std::sqrt(0.1);
    CHECK(n.front().weight_decay == doctest::Approx(0.1 * 10.0 / root));
    CHECK(n.back().weight_decay == doctest::Approx(10.0 * 10.0 / root));
    std::set<double> scales;
    for (const auto& c : p) scales.insert(c.prior_scale);
    CHECK(scales.size() == 6);
    CHECK(scales.count(*scales.begin()) == 1);
    CHECK(*scales.rbegin() == doctest::Approx(3.0 / 0.1));
    CHECK_THROWS_AS(hyperparameter_grid(Family::P, 10, 0.0, base), ConfigError);
}

TEST_CASE("learning rate step decay") {
    LearningRateSchedule s{0.05};
    CHECK(s.at(0, 200) == 0.05);
    CHECK(s.at(100, 200) == doctest::Approx(0.005));
    CHECK(s.at(150, 200) == doctest::Approx(0.0005));
    CHECK(s.at(199, 200) == doctest::Approx(0.00005));
}

TEST_CASE("checkpoint round trip") {
    RngStream rng(13, 0);
    const auto net = truncated_normal_mlp(two_hidden_layer_widths(7, 3), rng);
    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    save_mlp(buf, net);
    const std::string bytes = buf.str();
    // magic + count + 4 widths + parameters, all 8 bytes each
    CHECK(bytes.size() == 8 + 8 + 4 * 8 + 8 * net.parameter_count());
    CHECK(bytes.substr(0, 8) == "ENSMLP01");
    const auto back = load_mlp(buf);
    CHECK(back == net);
    CHECK(bytes_of(back) == bytes);

    const auto path = std::filesystem::temp_directory_path() / "enslab_ckpt_test.bin";
    save_mlp(path, net);
    CHECK(load_mlp(path) == net);
    std::filesystem::remove(path);

    std::istringstream bad(std::string("NOTMAGIC") + std::string(64, '\0'));
    CHECK_THROWS_AS(load_mlp(bad), IoError);
    std::istringstream cut(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(load_mlp(cut), IoError);
}
