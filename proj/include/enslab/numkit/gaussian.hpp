#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "enslab/numkit/errors.hpp"
#include "enslab/numkit/linalg.hpp"
#include "enslab/numkit/rng.hpp"

namespace enslab {

/// Multivariate normal N(mean, covariance) with a symmetric PSD covariance.
template <typename Scalar = double>
class GaussianBelief {
public:
    using Vector = VectorX<Scalar>;
    using Matrix = MatrixX<Scalar>;

    GaussianBelief(Vector mean, Matrix covariance)
        : mean_(std::move(mean)), covariance_(std::move(covariance)) {
        if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size()) {
            throw DimensionMismatch("GaussianBelief: covariance shape does not match mean");
        }
        if (!mean_.allFinite() || !covariance_.allFinite()) {
            throw NotPositiveDefinite("GaussianBelief: non-finite parameters");
        }
        const Scalar asym =
            mean_.size() ? (covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() : Scalar(0);
        if (asym > Scalar(kSymmetryTolerance)) {
            throw NotPositiveDefinite("GaussianBelief: covariance is not symmetric");
        }
        if (mean_.size()) {
            Eigen::LDLT<Matrix> ldlt(covariance_);
            const Scalar floor = -Scalar(kSymmetryTolerance) *
                                 std::max<Scalar>(Scalar(1), covariance_.diagonal().cwiseAbs().maxCoeff());
            if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() < floor).any()) {
                throw NotPositiveDefinite("GaussianBelief: covariance is not positive semi-definite");
            }
        }
    }

    static GaussianBelief isotropic(Eigen::Index dim, Scalar variance) {
        return GaussianBelief(Vector::Zero(dim), variance * Matrix::Identity(dim, dim));
    }

    const Vector& mean() const { return mean_; }
    const Matrix& covariance() const { return covariance_; }
    Eigen::Index dim() const { return mean_.size(); }

private:
    Vector mean_;
    Matrix covariance_;
};

enum class KlMode {
    strict,   ///< singular q raises NotPositiveDefinite
    lenient,  ///< singular q reports +infinity
};

/// KL(p || q) between two Gaussians, all log-determinants taken from Cholesky factors.
template <typename Scalar>
Scalar gaussian_kl(const GaussianBelief<Scalar>& p, const GaussianBelief<Scalar>& q,
                   KlMode mode = KlMode::strict) {
    constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
    if (p.dim() != q.dim()) throw DimensionMismatch("gaussian_kl: dimensions differ");
    const Eigen::Index d = p.dim();
    if (d == 0) return Scalar(0);

    MatrixX<Scalar> lq;
    try {
        lq = cholesky(q.covariance());
    } catch (const NotPositiveDefinite&) {
        if (mode == KlMode::lenient) return inf;
        throw;
    }
    const Scalar log_det_q = log_det_from_cholesky(lq);
    if (!std::isfinite(log_det_q)) {
        if (mode == KlMode::lenient) return inf;
        throw NotPositiveDefinite("gaussian_kl: q covariance is singular");
    }

    const MatrixX<Scalar> lp = cholesky(p.covariance());
    const Scalar log_det_p = log_det_from_cholesky(lp);
    if (!std::isfinite(log_det_p)) return inf;

    const auto lq_view = lq.template triangularView<Eigen::Lower>();
    // tr(Sq^-1 Sp) = ||Lq^-1 Lp||_F^2 and the Mahalanobis term is ||Lq^-1 (mu_q - mu_p)||^2
    const MatrixX<Scalar> whitened = lq_view.solve(lp);
    const VectorX<Scalar> shift = lq_view.solve(q.mean() - p.mean());
    const Scalar kl = Scalar(0.5) * (log_det_q - log_det_p - Scalar(d) + whitened.squaredNorm() +
                                     shift.squaredNorm());
    return std::max(kl, Scalar(0));
}

/// n samples mean + L z with L a (jittered) Cholesky factor of the covariance.
template <typename Scalar>
std::vector<VectorX<Scalar>> draw_gaussian(RngStream& rng, const GaussianBelief<Scalar>& belief,
                                           std::size_t n) {
    const MatrixX<Scalar> lower = cholesky(belief.covariance());
    std::vector<VectorX<Scalar>> out;
    out.reserve(n);
    VectorX<Scalar> z(belief.dim());
    for (std::size_t i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = Scalar(rng.normal());
        out.emplace_back(belief.mean() + lower.template triangularView<Eigen::Lower>() * z);
    }
    return out;
}

}  // namespace enslab
