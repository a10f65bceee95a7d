// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers as
// arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "enslab/bandit/bandit.hpp"
#include "enslab/cli/runner.hpp"
#include "enslab/linreg/snr.hpp"
#include "enslab/metrics/predictive.hpp"
#include "enslab/numkit/stats.hpp"
#include "enslab/testbed/classifier.hpp"

using namespace enslab;
using linreg::Dataset;
using linreg::EnsembleSpec;
using linreg::Family;
using linreg::LinRegEnvironment;
using linreg::Vector;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double log_uniform(RngStream& rng, double lo, double hi) {
    return std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
}

// Random heteroscedastic instance: sigma^2(x) = x^T D x + floor with random D and floor.
struct Instance {
    LinRegEnvironment env;
    Dataset data;
};

std::vector<Instance> random_instances(std::size_t count, const RngStream& root) {
    const Eigen::Index dims[] = {1, 2, 5, 20};
    const Eigen::Index sizes[] = {0, 1, 10, 100};
    std::vector<Instance> out;
    for (std::size_t i = 0; i < count; ++i) {
        RngStream rng = root.split(i);
        const Eigen::Index d = dims[i % 4];
        const Eigen::Index t = sizes[(i / 4) % 4];
        Vector w(d);
        for (Eigen::Index k = 0; k < d; ++k) w(k) = log_uniform(rng, 0.05, 5.0);
        const double floor = log_uniform(rng, 0.01, 1.0);
        const double prior_var = log_uniform(rng, 0.1, 10.0);
        auto env = linreg::sample_environment(d, prior_var, linreg::noise::quadratic(w, floor),
                                              linreg::inputs::standard_normal(d), rng);
        auto data = linreg::sample_dataset(env, t, rng);
        out.push_back({std::move(env), std::move(data)});
    }
    return out;
}

Outcome criterion1() {
    const auto instances = random_instances(200, RngStream(11, 0));
    double worst = 0.0;
    for (const auto& inst : instances) {
        const auto spec = EnsembleSpec::matching_posterior(inst.env.noise, inst.env.prior_variance);
        const double kl = gaussian_kl(linreg::exact_posterior(inst.env, inst.data),
                                      linreg::ensemble_law(spec, inst.data));
        worst = std::max(worst, kl);
    }
    return {worst < 1e-9, "max KL " + fmt("%.3g", worst) + " over 200 instances"};
}

Outcome criterion2() {
    const auto instances = random_instances(200, RngStream(11, 0));
    double worst = 0.0;
    std::size_t infinite = 0;
    RngStream lambdas(12, 0);
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& inst = instances[i];
        const EnsembleSpec spec(Family::N, log_uniform(lambdas, 0.01, 100.0), [](const Vector&) { return 1.0; }, 0.0);
        worst = std::max(worst, linreg::ensemble_law(spec, inst.data).covariance().cwiseAbs().maxCoeff());
        const auto kl = linreg::expected_kl_mc(inst.env, spec, static_cast<std::size_t>(inst.data.size()), 30,
                                               RngStream(13, i));
        if (std::isinf(kl.estimate) && kl.estimate > 0) ++infinite;
    }
    return {worst < 1e-12 && infinite == instances.size(),
            "max |Sigma_hat| " + fmt("%.3g", worst) + ", +inf sentinel on " + std::to_string(infinite) + "/200"};
}

Outcome criterion3() {
    std::ostringstream detail;
    bool pass = true;
    std::size_t env_index = 0;
    for (Eigen::Index d : {2, 4}) {
        std::vector<bool> low(static_cast<std::size_t>(d), false);
        for (Eigen::Index k = 0; k < d / 2; ++k) low[static_cast<std::size_t>(k)] = true;
        const auto noise = linreg::noise::dominant_axis(low, 0.01, 1.0);
        RngStream env_rng(31, env_index);
        const auto env = linreg::sample_environment(d, 1.0, noise, linreg::inputs::axis_aligned(d), env_rng);
        const auto spectrum = linreg::snr_spectrum(env, linreg::kDefaultSnrSamples, RngStream(32, env_index));
        const double ratio = spectrum.eigenvalues.maxCoeff() / spectrum.eigenvalues.minCoeff();
        if (ratio < 10.0) pass = false;

        RngStream spec_rng(33, env_index);
        std::size_t held = 0;
        double max_bound = 0.0;
        for (std::size_t s = 0; s < 20; ++s) {
            const double c = log_uniform(spec_rng, 0.1, 10.0);
            const double prior_sample = log_uniform(spec_rng, 0.01, 100.0);
            const std::size_t t = std::size_t{1} << spec_rng.below(8);  // 1 .. 128
            const auto spec = EnsembleSpec::unbiased_prior_only(noise, env.prior_variance, c, prior_sample);
            const auto kl = linreg::expected_kl_mc(env, spec, t, 200, RngStream(34, env_index * 100 + s));
            const double bound = linreg::theorem1_bound(spectrum, t);
            max_bound = std::max(max_bound, bound);
            if (kl.estimate + 2.0 * kl.std_error >= bound) ++held;
        }
        if (held != 20 || max_bound <= 0.1) pass = false;
        detail << "d=" << d << ": ratio " << fmt("%.3g", ratio) << ", bound held " << held << "/20, max bound "
               << fmt("%.3g", max_bound) << "; ";
        ++env_index;
    }
    return {pass, detail.str()};
}

Outcome criterion4() {
    const Eigen::Index d = 5;
    const std::size_t t = 10000;
    const double prior_var = 1.0;
    const double noise_var = 1.0;
    const auto noise = linreg::noise::constant(noise_var);
    RngStream env_rng(41, 0);
    const auto env = linreg::sample_environment(d, prior_var, noise, linreg::inputs::standard_normal(d), env_rng);
    const double prior_sample = (1.0 + static_cast<double>(t) * prior_var / noise_var) * prior_var;
    const auto spec = EnsembleSpec::unbiased_prior_only(noise, prior_var, 1.0, prior_sample);
    const auto kl = linreg::expected_kl_mc(env, spec, t, 30, RngStream(42, 0));
    return {kl.estimate < 0.05, "mean KL " + fmt("%.4g", kl.estimate) + " +- " + fmt("%.2g", kl.std_error)};
}

Outcome criterion5() {
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::size_t net = 0; net < 10; ++net) {
        const RngStream root(51, net);
        const auto problem = testbed::generate_problem(3 + static_cast<Eigen::Index>(net % 3), 24, 0.5, 0.2,
                                                       root.split(0), 2 + static_cast<Eigen::Index>(net % 2));
        testbed::TrainConfig config;
        config.prior_scale = 1.5;
        auto member = testbed::init_member(problem, Family::BP, config, root.split(1));
        std::vector<std::size_t> rows(problem.data.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        const double decay = 0.7;
        const auto analytic = testbed::loss_and_gradient(member, problem.data, rows, decay);
        RngStream pick = root.split(2);
        for (std::size_t k = 0; k < 5; ++k) {
            const std::size_t index = pick.below(member.trainable().parameter_count());
            double& theta = member.trainable().coordinate(index);
            const double saved = theta;
            const double h = 1e-5;
            theta = saved + h;
            const double up = testbed::loss_and_gradient(member, problem.data, rows, decay).loss;
            theta = saved - h;
            const double down = testbed::loss_and_gradient(member, problem.data, rows, decay).loss;
            theta = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double exact = analytic.gradient.coordinate(index);
            const double scale = std::max({std::abs(numeric), std::abs(exact), 1e-6});
            worst = std::max(worst, std::abs(numeric - exact) / scale);
            ++checked;
        }
    }
    return {worst < 1e-4, "max relative error " + fmt("%.3g", worst) + " on " + std::to_string(checked) + " coordinates"};
}

Outcome criterion6() {
    const RngStream root(61, 0);
    const auto problem = testbed::generate_problem(4, 50, 0.1, 0.0, root.split(0));
    testbed::TrainConfig config;
    config.epochs = 5;
    const auto members = testbed::train_ensemble(problem, 5, Family::P, config, root.split(1));
    const auto agent = testbed::as_agent(members);
    const auto truth = problem.truth();
    const auto sampler = problem.input_sampler();
    double worst = 0.0;
    for (std::size_t tau : {1, 2, 10}) {
        const RngStream rng = root.split(2).split(tau);
        const auto est = metrics::dkl_tau(truth, agent, sampler, tau, 500, rng);
        const auto queries = metrics::sample_queries(truth, sampler, tau, 500, rng);
        const double identity = metrics::nll_tau(agent, queries) - metrics::truth_nll(truth, queries);
        worst = std::max(worst, std::abs(est.value - identity));

        const auto dy = metrics::dkl_tau_dyadic(truth, agent, sampler, std::max<std::size_t>(2, tau), 200, rng);
        const auto dq = metrics::sample_dyadic_queries(truth, sampler, std::max<std::size_t>(2, tau), 200, rng);
        worst = std::max(worst, std::abs(dy.value - (metrics::nll_tau(agent, dq) - metrics::truth_nll(truth, dq))));
    }
    return {worst < 1e-12, "max |KL - (nll - truth nll)| " + fmt("%.3g", worst)};
}

// Neural testbed at d=10, rho=0.1, T=100 with M=30 members.
struct TestbedSetting {
    double flip = 0.0;
    std::vector<Family> families;
};

constexpr Eigen::Index kTestbedDim = 10;
constexpr std::size_t kTestbedSize = 100;
constexpr double kTestbedTemperature = 0.1;
constexpr std::size_t kTestbedMembers = 30;
constexpr std::size_t kTuningSeeds = 3;
constexpr std::size_t kEvaluationSeeds = 30;

testbed::AgentEvaluation testbed_score(double flip, Family family, const testbed::TrainConfig& train,
                                       std::uint64_t seed) {
    const RngStream root(seed, 0);
    const auto problem = testbed::generate_problem(kTestbedDim, kTestbedSize, kTestbedTemperature, flip, root.split(0));
    const auto members = testbed::train_ensemble(problem, kTestbedMembers, family, train,
                                                 root.split(1).split(static_cast<std::uint64_t>(family)));
    const auto agent = testbed::as_agent(members);
    return testbed::evaluate_agent(problem, agent, {}, root.split(2));
}

struct FamilyScores {
    Family family;
    testbed::TrainConfig chosen;
    std::vector<double> marginal, joint;
};

// Tunes each family on seeds 1000.. by mean joint KL, then scores seeds 1..kEvaluationSeeds.
std::vector<FamilyScores> run_testbed(const TestbedSetting& setting, std::string& log) {
    std::vector<FamilyScores> out;
    for (Family f : setting.families) {
        FamilyScores scores{f, {}, {}, {}};
        double best = std::numeric_limits<double>::infinity();
        for (const auto& candidate : testbed::hyperparameter_grid(f, kTestbedDim, kTestbedTemperature, {})) {
            double total = 0.0;
            for (std::size_t s = 0; s < kTuningSeeds; ++s) {
                total += testbed_score(setting.flip, f, candidate, 1000 + s).joint.value;
            }
            if (total < best) {
                best = total;
                scores.chosen = candidate;
            }
        }
        for (std::size_t s = 1; s <= kEvaluationSeeds; ++s) {
            const auto eval = testbed_score(setting.flip, f, scores.chosen, s);
            scores.marginal.push_back(eval.marginal.value);
            scores.joint.push_back(eval.joint.value);
        }
        const auto m = mean_and_error(scores.marginal);
        const auto j = mean_and_error(scores.joint);
        log += std::string(linreg::to_string(f)) + "(wd " + fmt("%.3g", scores.chosen.weight_decay) + ", ps " +
               fmt("%.3g", scores.chosen.prior_scale) + ") marginal " + fmt("%.4f", m.mean) + "+-" +
               fmt("%.4f", m.std_error) + " joint " + fmt("%.4f", j.mean) + "+-" + fmt("%.4f", j.std_error) + "; ";
        out.push_back(std::move(scores));
    }
    return out;
}

Outcome criterion7() {
    std::string log = "flip 0: ";
    const auto plain = run_testbed({0.0, {Family::N, Family::P, Family::BP}}, log);
    bool marginal_ok = true;
    for (std::size_t a = 0; a < plain.size(); ++a) {
        for (std::size_t b = a + 1; b < plain.size(); ++b) {
            const auto ma = mean_and_error(plain[a].marginal);
            const auto mb = mean_and_error(plain[b].marginal);
            if (std::abs(ma.mean - mb.mean) > 2.0 * std::min(ma.std_error, mb.std_error)) marginal_ok = false;
        }
    }
    const auto p_vs_n = paired_sign_test(plain[1].joint, plain[0].joint);
    log += "P<N joint " + std::to_string(p_vs_n.wins) + "/" + std::to_string(plain[1].joint.size()) + " p=" +
           fmt("%.3g", p_vs_n.p_one_sided) + "; flip 0.25: ";

    const auto flipped = run_testbed({0.25, {Family::P, Family::BP}}, log);
    const auto bp_vs_p = paired_sign_test(flipped[1].joint, flipped[0].joint);
    log += "BP<P joint " + std::to_string(bp_vs_p.wins) + "/" + std::to_string(flipped[1].joint.size()) + " p=" +
           fmt("%.3g", bp_vs_p.p_one_sided);

    const bool pass = marginal_ok && p_vs_n.p_one_sided < 0.05 && bp_vs_p.p_one_sided < 0.05;
    return {pass, std::string("(a) ") + (marginal_ok ? "ok" : "FAIL") + " (b) " +
                      (p_vs_n.p_one_sided < 0.05 ? "ok" : "FAIL") + " (c) " +
                      (bp_vs_p.p_one_sided < 0.05 ? "ok" : "FAIL") + " | " + log};
}

Outcome criterion8() {
    using bandit::PolicyFamily;
    const bandit::BanditConfig config;  // d=2, 4 actions, T=200, J=100
    const bandit::PolicyGrid grid;
    const RngStream root(81, 0);
    std::vector<bandit::AgentPolicy> policies;
    for (auto f : {PolicyFamily::N, PolicyFamily::P, PolicyFamily::BP, PolicyFamily::P_weighted}) {
        policies.push_back(bandit::tune_policy(f, config, grid, root));
    }
    const auto results = bandit::evaluate(config, policies, root.split(bandit::kEvaluationStream));
    const double n = results[0].mean_cumulative.back();
    const double p = results[1].mean_cumulative.back();
    const double bp = results[2].mean_cumulative.back();
    const double pw = results[3].mean_cumulative.back();
    const auto bp_vs_p = paired_sign_test(results[2].final_regrets, results[1].final_regrets);
    const auto p_vs_n = paired_sign_test(results[1].final_regrets, results[0].final_regrets);
    const bool order = bp < p && p < n;
    const bool between = bp < pw && pw < p;
    const bool pass = order && between && bp_vs_p.p_one_sided < 0.05 && p_vs_n.p_one_sided < 0.05;
    std::ostringstream detail;
    detail << "regret N " << fmt("%.3f", n) << " P " << fmt("%.3f", p) << " BP " << fmt("%.3f", bp)
           << " P-weighted " << fmt("%.3f", pw) << "; BP<P p=" << fmt("%.3g", bp_vs_p.p_one_sided) << " ("
           << bp_vs_p.wins << "/" << bp_vs_p.wins + bp_vs_p.losses << "), P<N p=" << fmt("%.3g", p_vs_n.p_one_sided)
           << " (" << p_vs_n.wins << "/" << p_vs_n.wins + p_vs_n.losses << "); tuned " << policies[0].label() << " "
           << policies[1].label() << " " << policies[3].label();
    return {pass, detail.str()};
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome criterion9() {
    const auto base = std::filesystem::temp_directory_path() / "enslab_acceptance_determinism";
    std::filesystem::remove_all(base);
    std::vector<cli::ExperimentConfig> configs(3);
    configs[0].suite = cli::Suite::linreg;
    configs[1].suite = cli::Suite::testbed;
    configs[1].testbed.members = 4;
    configs[1].testbed.epochs = 10;
    configs[1].testbed.marginal_queries = 100;
    configs[1].testbed.anchor_pairs = 100;
    configs[2].suite = cli::Suite::bandit;
    configs[2].bandit.n_problems = 10;
    configs[2].bandit.horizon = 30;
    std::size_t identical = 0;
    for (auto& config : configs) {
        config.seed = 2024;
        std::string first;
        for (int rep = 0; rep < 2; ++rep) {
            config.output_dir = (base / (cli::to_string(config.suite) + std::to_string(rep))).string();
            cli::run(config);
            const auto bytes = slurp(std::filesystem::path(config.output_dir) / "results.csv");
            if (rep == 0) first = bytes;
            else if (!bytes.empty() && bytes == first) ++identical;
        }
    }
    std::filesystem::remove_all(base);
    return {identical == configs.size(), std::to_string(identical) + "/3 suites byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"posterior matching exactness", criterion1},
        {"family N degeneracy", criterion2},
        {"SNR lower bound", criterion3},
        {"homoscedastic special case", criterion4},
        {"gradient correctness", criterion5},
        {"metric identity", criterion6},
        {"testbed ordering", criterion7},
        {"bandit ordering", criterion8},
        {"determinism", criterion9},
    };
    std::set<std::size_t> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoul(argv[i]));

    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected.empty() && !selected.count(i + 1)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criteria[i].second();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %zu %-28s %s  [%.1fs] %s\n", i + 1, criteria[i].first.c_str(),
                    outcome.pass ? "PASS" : "FAIL", secs, outcome.detail.c_str());
        std::fflush(stdout);
        all = all && outcome.pass;
    }
    return all ? 0 : 1;
}
