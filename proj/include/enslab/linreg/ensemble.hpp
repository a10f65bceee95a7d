#pragma once

#include <optional>
#include <string_view>

#include "enslab/linreg/environment.hpp"
#include "enslab/numkit/gaussian.hpp"

namespace enslab::linreg {

using Belief = GaussianBelief<double>;

/// N: neither prior functions nor bootstrapping. P: prior functions only.
/// BP: both.
enum class Family { N, P, BP };

std::string_view to_string(Family family);
Family parse_family(std::string_view text);

/// Knobs of the perturbed least-squares loss
///
///   sum_t nu(X_t)/2 (theta^T X_t - (Y_t + Z_t))^2 + lambda/2 ||theta - theta_anchor||^2
///
/// with Z_t ~ N(0, bootstrap_variance(X_t)) and theta_anchor ~ N(0, prior_sample_variance I).
/// An absent bootstrap variance function means sigma_hat^2 == 0. Family
/// constraints are checked on construction: N forces both perturbation sources
/// off, P forces the bootstrap off.
class EnsembleSpec {
public:
    EnsembleSpec(Family family, double lambda, InputFunction weight, double prior_sample_variance,
                 std::optional<InputFunction> bootstrap_variance = std::nullopt);

    /// nu = 1/sigma^2, sigma_hat^2 = sigma^2, sigma_hat_0^2 = sigma_0^2, lambda = 1/sigma_0^2.
    static EnsembleSpec matching_posterior(const NoiseModel& noise, double prior_variance);

    /// nu = c/sigma^2, lambda = c/sigma_0^2, no bootstrap.
    static EnsembleSpec unbiased_prior_only(const NoiseModel& noise, double prior_variance, double c,
                                            double prior_sample_variance);

    Family family() const { return family_; }
    double lambda() const { return lambda_; }
    double prior_sample_variance() const { return prior_sample_variance_; }
    bool has_bootstrap() const { return bootstrap_variance_.has_value(); }

    double weight(const Vector& x) const { return weight_(x); }
    double bootstrap_variance(const Vector& x) const {
        return bootstrap_variance_ ? (*bootstrap_variance_)(x) : 0.0;
    }

private:
    Family family_;
    double lambda_;
    InputFunction weight_;
    double prior_sample_variance_;
    std::optional<InputFunction> bootstrap_variance_;
};

/// Per-member randomness: one output perturbation per data pair plus the
/// regularizer anchor.
struct EnsembleMemberDraw {
    Vector perturbations;
    Vector prior_anchor;
};

EnsembleMemberDraw draw_member(const EnsembleSpec& spec, const Dataset& data, RngStream& rng);

/// Exact minimizer of the perturbed loss for one member.
Vector ensemble_member(const EnsembleSpec& spec, const Dataset& data, const EnsembleMemberDraw& draw);

/// Gradient of the perturbed loss at theta.
Vector perturbed_loss_gradient(const EnsembleSpec& spec, const Dataset& data,
                               const EnsembleMemberDraw& draw, const Vector& theta);

/// Law of a single member given the data: N(mu_hat, Sigma_hat) with
///   mu_hat    = A^-1 sum nu X Y
///   Sigma_hat = A^-1 (sum nu^2 sigma_hat^2 X X^T + lambda^2 sigma_hat_0^2 I) A^-1
/// and A = sum nu X X^T + lambda I.
Belief ensemble_law(const EnsembleSpec& spec, const Dataset& data);

/// Conjugate posterior over theta*.
Belief exact_posterior(const LinRegEnvironment& env, const Dataset& data);

/// Whether nu = c/sigma^2 and lambda = c/sigma_0^2 with c = lambda sigma_0^2,
/// checked at 100 probe inputs from the environment's sampler.
bool is_unbiased(const EnsembleSpec& spec, const LinRegEnvironment& env,
                 RngStream rng = RngStream(0, 0));

}  // namespace enslab::linreg
