#pragma once

#include <cstddef>

#include "enslab/linreg/ensemble.hpp"

namespace enslab::linreg {

/// Expected signal-to-noise matrix Gamma = E[sigma_0^2 X X^T / sigma^2(X)] and its spectrum.
struct SnrSpectrum {
    Matrix gamma_matrix;
    Vector eigenvalues;  ///< ascending
    double mean_eigenvalue = 0.0;
};

inline constexpr std::size_t kDefaultSnrSamples = 100000;

/// Monte-Carlo estimate of Gamma over the environment's input sampler.
SnrSpectrum snr_spectrum(const LinRegEnvironment& env, std::size_t mc_samples, RngStream rng);

/// 1/2 sum_i ln((1 + t gamma_bar) / (1 + t gamma_i)), negative eigenvalues clamped to 0.
double theorem1_bound(const SnrSpectrum& spectrum, std::size_t t);

struct KlSummary {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// E over (theta*, D_T) of KL(exact posterior || ensemble law). theta* is
/// redrawn from the prior of `env` for each dataset, dataset i uses
/// rng.split(i). Returns +infinity when any ensemble law is singular.
KlSummary expected_kl_mc(const LinRegEnvironment& env, const EnsembleSpec& spec, std::size_t t,
                         std::size_t n_datasets, const RngStream& rng);

}  // namespace enslab::linreg
