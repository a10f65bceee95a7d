#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "enslab/numkit/errors.hpp"

namespace enslab {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr Eigen::Index kMaxSymmetricSide = 512;
inline constexpr int kJacobiSweepLimit = 100;
inline constexpr double kJacobiOffDiagonalTolerance = 1e-12;
inline constexpr double kSymmetryTolerance = 1e-10;

/// Relative jitter ladder. Each rung adds `rung * mean(|diag(a)|) * I`.
inline constexpr std::array<double, 3> kJitterLadder{1e-12, 1e-10, 1e-8};

namespace detail {

template <typename Derived>
void require_symmetric(const Eigen::MatrixBase<Derived>& a, const char* who) {
    if (a.rows() != a.cols()) {
        throw DimensionMismatch(std::string(who) + ": matrix is " + std::to_string(a.rows()) +
                                "x" + std::to_string(a.cols()) + ", expected square");
    }
    if (a.rows() > kMaxSymmetricSide) {
        throw DimensionMismatch(std::string(who) + ": side exceeds 512");
    }
    if (!a.allFinite()) throw NotPositiveDefinite(std::string(who) + ": non-finite entry");
    using Scalar = typename Derived::Scalar;
    const Scalar asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    const Scalar scale = std::max<Scalar>(Scalar(1), a.cwiseAbs().maxCoeff());
    if (a.size() > 0 && asym > Scalar(kSymmetryTolerance) * scale) {
        throw DimensionMismatch(std::string(who) + ": matrix is not symmetric");
    }
}

template <typename Scalar>
bool usable_factor(const Eigen::LLT<MatrixX<Scalar>>& llt) {
    if (llt.info() != Eigen::Success) return false;
    const auto diag = llt.matrixLLT().diagonal();
    return diag.allFinite() && (diag.array() > Scalar(0)).all();
}

}  // namespace detail

/// Lower Cholesky factor of a symmetric positive semi-definite matrix.
///
/// A plain factorization is tried first. If it fails the relative jitter
/// ladder is climbed. The zero matrix factors exactly as L = 0.
template <typename Derived>
MatrixX<typename Derived::Scalar> cholesky(const Eigen::MatrixBase<Derived>& a) {
    using Scalar = typename Derived::Scalar;
    detail::require_symmetric(a, "cholesky");
    const Eigen::Index n = a.rows();
    MatrixX<Scalar> sym = (a + a.transpose()) / Scalar(2);

    Eigen::LLT<MatrixX<Scalar>> llt(sym);
    if (detail::usable_factor(llt)) return llt.matrixL();

    const Scalar scale = n > 0 ? sym.diagonal().cwiseAbs().mean() : Scalar(0);
    if (scale == Scalar(0)) {
        if (sym.isZero(0)) return MatrixX<Scalar>::Zero(n, n);
        throw NotPositiveDefinite("cholesky: zero diagonal with nonzero off-diagonal");
    }
    for (double rung : kJitterLadder) {
        MatrixX<Scalar> jittered = sym;
        jittered.diagonal().array() += Scalar(rung) * scale;
        llt.compute(jittered);
        if (detail::usable_factor(llt)) return llt.matrixL();
    }
    throw NotPositiveDefinite("cholesky: factorization failed after maximum jitter");
}

/// log det(a) from a lower Cholesky factor of a. Returns -inf for a singular factor.
template <typename Derived>
typename Derived::Scalar log_det_from_cholesky(const Eigen::MatrixBase<Derived>& lower) {
    using Scalar = typename Derived::Scalar;
    Scalar acc = 0;
    for (Eigen::Index i = 0; i < lower.rows(); ++i) {
        const Scalar v = lower(i, i);
        if (!(v > Scalar(0))) return -std::numeric_limits<Scalar>::infinity();
        acc += std::log(v);
    }
    return Scalar(2) * acc;
}

/// Ascending eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
template <typename Derived>
VectorX<typename Derived::Scalar> sym_eigenvalues(const Eigen::MatrixBase<Derived>& a,
                                                   int sweep_limit = kJacobiSweepLimit) {
    using Scalar = typename Derived::Scalar;
    detail::require_symmetric(a, "sym_eigenvalues");
    const Eigen::Index n = a.rows();
    MatrixX<Scalar> m = (a + a.transpose()) / Scalar(2);

    const Scalar norm = m.norm();
    auto off_norm = [&] {
        Scalar acc = 0;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i)
                if (i != j) acc += m(i, j) * m(i, j);
        return std::sqrt(acc);
    };

    int sweep = 0;
    while (off_norm() > Scalar(kJacobiOffDiagonalTolerance) * norm) {
        if (sweep++ >= sweep_limit) {
            throw NoConvergence("sym_eigenvalues: sweep limit exceeded");
        }
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const Scalar apq = m(p, q);
                if (apq == Scalar(0)) continue;
                const Scalar theta = (m(q, q) - m(p, p)) / (Scalar(2) * apq);
                const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                                 (std::abs(theta) + std::sqrt(Scalar(1) + theta * theta));
                const Scalar c = Scalar(1) / std::sqrt(Scalar(1) + t * t);
                const Scalar s = t * c;
                // m <- J^T m J with J the (p, q) plane rotation
                for (Eigen::Index k = 0; k < n; ++k) {
                    const Scalar mkp = m(k, p);
                    const Scalar mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const Scalar mpk = m(p, k);
                    const Scalar mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
                m(p, q) = m(q, p) = Scalar(0);
            }
        }
    }
    VectorX<Scalar> values = m.diagonal();
    std::sort(values.data(), values.data() + values.size());
    return values;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& a) {
    return (a + a.transpose()) / typename Derived::Scalar(2);
}

}  // namespace enslab
