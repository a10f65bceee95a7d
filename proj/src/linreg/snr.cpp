#include "enslab/linreg/snr.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "enslab/numkit/errors.hpp"
#include "enslab/numkit/stats.hpp"

namespace enslab::linreg {

SnrSpectrum snr_spectrum(const LinRegEnvironment& env, std::size_t mc_samples, RngStream rng) {
    if (mc_samples < 1000) throw ConfigError("snr_spectrum: at least 1000 Monte-Carlo samples required");
    const Eigen::Index d = env.dim();
    Matrix acc = Matrix::Zero(d, d);
    for (std::size_t i = 0; i < mc_samples; ++i) {
        const Vector x = env.input_sampler(rng);
        acc.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / env.noise_variance(x));
    }
    acc.triangularView<Eigen::StrictlyUpper>() = acc.transpose();
    SnrSpectrum out;
    out.gamma_matrix = symmetrized(acc * (env.prior_variance / static_cast<double>(mc_samples)));
    out.eigenvalues = sym_eigenvalues(out.gamma_matrix);
    out.mean_eigenvalue = d > 0 ? out.eigenvalues.mean() : 0.0;
    return out;
}

double theorem1_bound(const SnrSpectrum& spectrum, std::size_t t) {
    const Vector gamma = spectrum.eigenvalues.cwiseMax(0.0);
    if (gamma.size() == 0 || t == 0) return 0.0;
    const double tt = static_cast<double>(t);
    const double top = std::log1p(tt * gamma.mean());
    double bound = 0.0;
    for (Eigen::Index i = 0; i < gamma.size(); ++i) bound += top - std::log1p(tt * gamma(i));
    return std::max(0.0, 0.5 * bound);
}

KlSummary expected_kl_mc(const LinRegEnvironment& env, const EnsembleSpec& spec, std::size_t t,
                         std::size_t n_datasets, const RngStream& rng) {
    if (n_datasets < 30) throw ConfigError("expected_kl_mc: at least 30 datasets required");
    std::vector<double> kls;
    kls.reserve(n_datasets);
    for (std::size_t i = 0; i < n_datasets; ++i) {
        RngStream stream = rng.split(i);
        const LinRegEnvironment instance = resample_theta(env, stream);
        const Dataset data = sample_dataset(instance, static_cast<Eigen::Index>(t), stream);
        const double kl = gaussian_kl(exact_posterior(instance, data), ensemble_law(spec, data),
                                      KlMode::lenient);
        if (std::isinf(kl)) {
            return {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        }
        kls.push_back(kl);
    }
    const MeanAndError summary = mean_and_error(kls);
    return {summary.mean, summary.std_error};
}

}  // namespace enslab::linreg
