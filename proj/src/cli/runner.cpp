#include "enslab/cli/runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "enslab/bandit/bandit.hpp"
#include "enslab/linreg/snr.hpp"
#include "enslab/numkit/errors.hpp"
#include "enslab/testbed/classifier.hpp"

#ifndef ENSLAB_VERSION
#define ENSLAB_VERSION "unknown"
#endif

namespace enslab::cli {

std::string code_version() { return ENSLAB_VERSION; }

namespace {

using linreg::EnsembleSpec;
using linreg::Family;
using linreg::Vector;

linreg::NoiseModel make_noise(const LinregBlock& b) {
    if (b.noise == "constant") return linreg::noise::constant(b.noise_variance);
    if (b.noise == "quadratic") return linreg::noise::quadratic(Vector::Ones(b.dim), b.high_variance);
    std::vector<bool> low(static_cast<std::size_t>(b.dim), false);
    for (long i = 0; i < b.low_axes; ++i) low[static_cast<std::size_t>(i)] = true;
    return linreg::noise::dominant_axis(std::move(low), b.low_variance, b.high_variance);
}

RunOutput run_linreg(const ExperimentConfig& config) {
    const auto& b = config.linreg;
    const RngStream root(config.seed, 0);
    const auto noise = make_noise(b);
    const auto sampler = b.inputs == "axis_aligned" ? linreg::inputs::axis_aligned(b.dim)
                                                    : linreg::inputs::standard_normal(b.dim);
    RngStream env_rng = root.split(0);
    const auto env = linreg::sample_environment(b.dim, b.prior_variance, noise, sampler, env_rng);
    const auto t = static_cast<std::size_t>(b.train_size);

    RunOutput out;
    auto row = [&](const std::string& agent, const std::string& hparams, const std::string& metric, double value,
                   double std_error) {
        ResultRow r;
        r.suite = "linreg";
        r.agent = agent;
        r.hparams = hparams;
        r.d = std::to_string(b.dim);
        r.t = std::to_string(b.train_size);
        r.metric = metric;
        r.value = value;
        r.std_error = std_error;
        r.seed = config.seed;
        out.rows.push_back(std::move(r));
    };

    for (const auto& agent : b.agents) {
        std::string hparams = "-";
        auto spec = [&]() {
            if (agent == "posterior") return EnsembleSpec::matching_posterior(noise, b.prior_variance);
            if (agent == "N") {
                hparams = "lambda=" + format_double(b.lambda);
                return EnsembleSpec(Family::N, b.lambda, [](const Vector&) { return 1.0; }, 0.0);
            }
            hparams = "c=" + format_double(b.c) + ";prior=" + format_double(b.prior_sample_variance);
            return EnsembleSpec::unbiased_prior_only(noise, b.prior_variance, b.c, b.prior_sample_variance);
        }();
        const auto kl = linreg::expected_kl_mc(env, spec, t, static_cast<std::size_t>(b.datasets), root.split(1));
        row(agent, hparams, "expected_kl", kl.estimate, kl.std_error);
        if (agent == "P") {
            const auto spectrum = linreg::snr_spectrum(env, static_cast<std::size_t>(b.snr_samples), root.split(2));
            row(agent, hparams, "theorem1_bound", linreg::theorem1_bound(spectrum, t), 0.0);
        }
    }
    return out;
}

std::size_t family_stream(Family f) { return static_cast<std::size_t>(f); }

std::string testbed_hparams(Family f, const testbed::TrainConfig& c) {
    std::string s = "wd=" + format_double(c.weight_decay);
    if (f != Family::N) s += ";ps=" + format_double(c.prior_scale);
    return s;
}

testbed::AgentEvaluation train_and_evaluate(const testbed::TestbedProblem& problem, const TestbedBlock& b, Family f,
                                            const testbed::TrainConfig& train, const RngStream& train_rng,
                                            const RngStream& eval_rng) {
    const auto members = testbed::train_ensemble(problem, static_cast<std::size_t>(b.members), f, train, train_rng);
    const auto agent = testbed::as_agent(members);
    testbed::EvaluationConfig eval;
    eval.marginal_queries = static_cast<std::size_t>(b.marginal_queries);
    eval.joint_tau = static_cast<std::size_t>(b.joint_tau);
    eval.anchor_pairs = static_cast<std::size_t>(b.anchor_pairs);
    return testbed::evaluate_agent(problem, agent, eval, eval_rng);
}

RunOutput run_testbed(const ExperimentConfig& config) {
    const auto& b = config.testbed;
    const RngStream root(config.seed, 0);
    const auto problem = testbed::generate_problem(b.dim, static_cast<std::size_t>(b.train_size), b.temperature,
                                                   b.flip_fraction, root.split(0), b.classes);
    testbed::TrainConfig base;
    base.weight_decay = b.weight_decay;
    base.prior_scale = b.prior_scale;
    base.learning_rate.initial = b.learning_rate;
    base.epochs = static_cast<std::size_t>(b.epochs);
    base.batch_size = static_cast<std::size_t>(b.batch_size);
    base.bootstrap.kind = b.bootstrap == "bernoulli" ? testbed::BootstrapKind::bernoulli
                                                     : testbed::BootstrapKind::double_bernoulli;
    base.bootstrap.p = b.bootstrap_p;

    std::vector<testbed::TestbedProblem> tuning;
    if (b.tune) {
        for (long k = 0; k < b.tuning_problems; ++k) {
            tuning.push_back(testbed::generate_problem(b.dim, static_cast<std::size_t>(b.train_size), b.temperature,
                                                       b.flip_fraction, root.split(3).split(k), b.classes));
        }
    }

    RunOutput out;
    for (const auto& name : b.families) {
        const Family f = linreg::parse_family(name);
        testbed::TrainConfig train = base;
        if (b.tune) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& candidate : testbed::hyperparameter_grid(f, b.dim, b.temperature, base)) {
                double score = 0.0;
                for (std::size_t k = 0; k < tuning.size(); ++k) {
                    const auto eval = train_and_evaluate(tuning[k], b, f, candidate,
                                                         root.split(4).split(k).split(family_stream(f)),
                                                         root.split(5).split(k));
                    score += eval.joint.value;
                }
                if (score < best) {
                    best = score;
                    train = candidate;
                }
            }
        }
        const auto eval = train_and_evaluate(problem, b, f, train, root.split(1).split(family_stream(f)), root.split(2));
        for (const auto& [metric, est] : {std::pair{"marginal_kl", eval.marginal}, std::pair{"joint_kl", eval.joint}}) {
            ResultRow r;
            r.suite = "testbed";
            r.agent = name;
            r.hparams = testbed_hparams(f, train);
            r.d = std::to_string(b.dim);
            r.t = std::to_string(b.train_size);
            r.rho = format_double(b.temperature);
            r.flip = format_double(b.flip_fraction);
            r.metric = metric;
            r.value = est.value;
            r.std_error = est.std_error;
            r.seed = config.seed;
            out.rows.push_back(std::move(r));
        }
    }
    return out;
}

std::string bandit_hparams(const bandit::AgentPolicy& p) {
    using bandit::PolicyFamily;
    switch (p.family) {
        case PolicyFamily::N: return "lambda=" + format_double(p.lambda);
        case PolicyFamily::P:
        case PolicyFamily::P_weighted:
            return "lambda=" + format_double(p.lambda) + ";prior=" + format_double(p.prior_sample_variance);
        default: return "-";
    }
}

RunOutput run_bandit(const ExperimentConfig& config) {
    const auto& b = config.bandit;
    const RngStream root(config.seed, 0);
    bandit::BanditConfig bc;
    bc.dim = b.dim;
    bc.n_actions = static_cast<std::size_t>(b.n_actions);
    bc.horizon = static_cast<std::size_t>(b.horizon);
    bc.n_problems = static_cast<std::size_t>(b.n_problems);
    bc.prior_variance = b.prior_variance;
    bc.noise_scale = b.noise_scale;
    bandit::PolicyGrid grid{b.lambdas, b.prior_sample_variances};

    std::vector<bandit::AgentPolicy> policies;
    for (const auto& name : b.policies) {
        const auto family = bandit::parse_policy_family(name);
        if (b.tune) {
            policies.push_back(bandit::tune_policy(family, bc, grid, root));
        } else {
            policies.push_back({family, b.lambda, b.prior_sample_variance});
        }
    }
    const auto results = bandit::evaluate(bc, policies, root.split(bandit::kEvaluationStream));

    RunOutput out;
    for (const auto& res : results) {
        const std::string name = bandit::to_string(res.policy.family);
        ResultRow r;
        r.suite = "bandit";
        r.agent = name;
        r.hparams = bandit_hparams(res.policy);
        r.d = std::to_string(b.dim);
        r.t = std::to_string(b.horizon);
        r.metric = "final_regret";
        r.value = res.mean_cumulative.back();
        r.std_error = res.std_error.back();
        r.seed = config.seed;
        out.rows.push_back(std::move(r));

        Curve curve{"regret_" + name, {}};
        for (std::size_t t = 0; t < res.mean_cumulative.size(); ++t) {
            curve.points.emplace_back(static_cast<double>(t + 1), res.mean_cumulative[t]);
        }
        out.curves.push_back(std::move(curve));
    }
    return out;
}

}  // namespace

RunOutput execute(const ExperimentConfig& config) {
    validate(config);
    switch (config.suite) {
        case Suite::linreg: return run_linreg(config);
        case Suite::testbed: return run_testbed(config);
        case Suite::bandit: break;
    }
    return run_bandit(config);
}

void write_curve(const std::filesystem::path& path, const Curve& curve) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (const auto& [x, y] : curve.points) out << format_double(x) << '\t' << format_double(y) << '\n';
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void run(const ExperimentConfig& config) {
    if (config.output_dir.empty()) throw ConfigError("no output directory given");
    const std::filesystem::path dir(config.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

    const RunOutput output = execute(config);

    std::ofstream results(dir / "results.csv");
    if (!results) throw IoError("cannot write '" + (dir / "results.csv").string() + "'");
    write_results(results, output.rows);
    results.close();
    if (!results) throw IoError("write failed for results.csv");

    for (const auto& curve : output.curves) write_curve(dir / (curve.name + ".tsv"), curve);

    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) throw IoError("cannot write manifest.txt");
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(config)));
    manifest << "suite=" << to_string(config.suite) << "\nseed=" << config.seed << "\nconfig_hash=" << hash
             << "\ncode_version=" << code_version() << "\nrows=" << output.rows.size() << "\n";
    for (const auto& curve : output.curves) manifest << "curve=" << curve.name << ".tsv\n";

    std::ofstream copy(dir / "config.cfg");
    if (!copy) throw IoError("cannot write config.cfg");
    copy << to_config_file(config);
}

}  // namespace enslab::cli
