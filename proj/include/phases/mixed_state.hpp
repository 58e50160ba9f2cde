#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phases/errors.hpp"
#include "phases/hermitian.hpp"
#include "phases/types.hpp"

namespace phases {

/// Full-rank, unit-trace density matrix with its spectral decomposition cached.
/// beta records the inverse temperature when the state was Gibbs-constructed.
template <class Real = double>
class DensityMatrixT {
public:
    explicit DensityMatrixT(HermitianMatrixT<Real> rho, std::optional<Real> beta = std::nullopt)
        : rho_(std::move(rho)), spectrum_(eig_hermitian(rho_)), beta_(beta) {
        validate();
    }

    /// Construct from known spectral data (weights plus eigenvectors). A dense
    /// re-diagonalization resolves eigenvalues only down to machine epsilon, so
    /// states with far smaller populations — deep quenches — must be built on
    /// this path, which keeps the exact weights.
    explicit DensityMatrixT(SpectrumT<Real> spectrum, std::optional<Real> beta = std::nullopt)
        : rho_(from_spectrum(spectrum)), spectrum_(sorted(std::move(spectrum))), beta_(beta) {
        validate();
    }

    Eigen::Index dim() const { return rho_.dim(); }
    const HermitianMatrixT<Real>& rho() const { return rho_; }
    const MatrixX<Real>& entries() const { return rho_.entries(); }
    const SpectrumT<Real>& spectrum() const { return spectrum_; }
    std::optional<Real> beta() const { return beta_; }

    /// Positive square root, from the cached spectrum (eigenvalues clamped at
    /// zero so sub-epsilon negative roundoff cannot poison the sqrt).
    HermitianMatrixT<Real> sqrt() const {
        VectorXr<Real> roots(spectrum_.eigenvalues.size());
        for (Eigen::Index k = 0; k < roots.size(); ++k) {
            roots[k] = std::sqrt(std::max(spectrum_.eigenvalues[k], Real(0)));
        }
        const MatrixX<Real>& v = spectrum_.eigenvectors.entries();
        MatrixX<Real> s = v * roots.template cast<Complex<Real>>().asDiagonal() * v.adjoint();
        s = ((s + s.adjoint()) / Real(2)).eval();
        return HermitianMatrixT<Real>(std::move(s));
    }

private:
    void validate() const {
        const Real trace_dev = std::abs(spectrum_.eigenvalues.sum() - Real(1));
        if (trace_dev > tol<Real>(1e-12)) {
            throw DomainError("density matrix trace deviates from 1 by " +
                              std::to_string(static_cast<double>(trace_dev)));
        }
        const Real min_eig = spectrum_.eigenvalues.minCoeff();
        if (!(min_eig > Real(1e-300))) {
            throw RankDeficient("density matrix is not strictly positive: min eigenvalue = " +
                                std::to_string(static_cast<double>(min_eig)));
        }
    }

    static HermitianMatrixT<Real> from_spectrum(const SpectrumT<Real>& s) {
        const MatrixX<Real>& v = s.eigenvectors.entries();
        if (s.eigenvalues.size() != v.rows()) {
            throw DimensionMismatch("spectrum eigenvalue count does not match eigenvector dim");
        }
        MatrixX<Real> rho =
            v * s.eigenvalues.template cast<Complex<Real>>().asDiagonal() * v.adjoint();
        rho = ((rho + rho.adjoint()) / Real(2)).eval();
        return HermitianMatrixT<Real>(std::move(rho));
    }

    /// Reorder to ascending eigenvalues so both constructors expose the same
    /// spectrum convention.
    static SpectrumT<Real> sorted(SpectrumT<Real> s) {
        const Eigen::Index n = s.eigenvalues.size();
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index(0));
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            return s.eigenvalues[a] < s.eigenvalues[b];
        });
        VectorXr<Real> values(n);
        MatrixX<Real> vectors(n, n);
        for (Eigen::Index k = 0; k < n; ++k) {
            values[k] = s.eigenvalues[order[static_cast<std::size_t>(k)]];
            vectors.col(k) = s.eigenvectors.entries().col(order[static_cast<std::size_t>(k)]);
        }
        return SpectrumT<Real>{std::move(values), UnitaryMatrixT<Real>(std::move(vectors))};
    }

    HermitianMatrixT<Real> rho_;
    SpectrumT<Real> spectrum_;
    std::optional<Real> beta_;
};

/// Purification amplitude W = sqrt(rho) V with its unitary phase factor V
/// stored explicitly (the geometric phases are statements about V's motion).
template <class Real = double>
class AmplitudeT {
public:
    AmplitudeT(MatrixX<Real> w, UnitaryMatrixT<Real> v) : w_(std::move(w)), v_(std::move(v)) {
        if (w_.rows() != w_.cols() || w_.rows() != v_.dim()) {
            throw DimensionMismatch("amplitude W and phase factor V must be square and same dim");
        }
        const Real trace_dev = std::abs((w_ * w_.adjoint()).trace() - Complex<Real>(1, 0));
        if (trace_dev > tol<Real>(1e-10)) {
            throw DomainError("amplitude is not normalized: |Tr(W W^dag) - 1| = " +
                              std::to_string(static_cast<double>(trace_dev)));
        }
        // Polar consistency: W = sqrt(W W^dag) V.
        MatrixX<Real> ww = w_ * w_.adjoint();
        ww = ((ww + ww.adjoint()) / Real(2)).eval();
        const HermitianMatrixT<Real> s =
            func_hermitian(HermitianMatrixT<Real>(std::move(ww)),
                           [](Real x) { return std::sqrt(std::max(x, Real(0))); });
        const Real polar_dev = max_abs((w_ - s.entries() * v_.entries()).eval());
        if (polar_dev > tol<Real>(1e-10)) {
            throw DomainError("amplitude is polar-inconsistent with its stored phase factor: "
                              "max |W - sqrt(W W^dag) V| entry = " +
                              std::to_string(static_cast<double>(polar_dev)));
        }
    }

    Eigen::Index dim() const { return w_.rows(); }
    const MatrixX<Real>& w() const { return w_; }
    const UnitaryMatrixT<Real>& v() const { return v_; }

private:
    MatrixX<Real> w_;
    UnitaryMatrixT<Real> v_;
};

using DensityMatrix = DensityMatrixT<double>;
using Amplitude = AmplitudeT<double>;

/// Canonical-ensemble state rho = exp(-beta H) / Tr exp(-beta H), computed in
/// the eigenbasis with the smallest exponent subtracted (log-sum-exp) so deep
/// quenches stay representable. Throws Overflow once a Boltzmann weight cannot
/// be represented as a strictly positive double.
template <class Real>
DensityMatrixT<Real> gibbs_state(const HermitianMatrixT<Real>& h, Real beta) {
    if (!(beta >= Real(0)) || !std::isfinite(static_cast<double>(beta))) {
        throw DomainError("gibbs_state requires finite beta >= 0 (T = 0 is not representable: "
                          "the construction needs full rank)");
    }
    const SpectrumT<Real> s = eig_hermitian(h);
    const Real spread = s.eigenvalues.maxCoeff() - s.eigenvalues.minCoeff();
    if (beta * spread > Real(1400)) {
        throw Overflow("beta * spectral spread = " +
                       std::to_string(static_cast<double>(beta * spread)) +
                       " exceeds 1400; Boltzmann ratios are not representable");
    }
    // exp(-beta(lambda - lambda_min)) keeps every weight in (0, 1].
    const Real shift = s.eigenvalues.minCoeff();
    VectorXr<Real> weights(s.eigenvalues.size());
    for (Eigen::Index k = 0; k < weights.size(); ++k) {
        weights[k] = std::exp(-beta * (s.eigenvalues[k] - shift));
    }
    const Real z = weights.sum();
    weights /= z;
    if (!(weights.minCoeff() > Real(1e-300))) {
        throw Overflow("smallest normalized Boltzmann weight " +
                       std::to_string(static_cast<double>(weights.minCoeff())) +
                       " underflows the full-rank guard (1e-300)");
    }
    return DensityMatrixT<Real>(SpectrumT<Real>{std::move(weights), s.eigenvectors}, beta);
}

/// Purification W = sqrt(rho) V.
template <class Real>
AmplitudeT<Real> purify(const DensityMatrixT<Real>& rho, const UnitaryMatrixT<Real>& v) {
    if (rho.dim() != v.dim()) {
        throw DimensionMismatch("purify: rho is " + std::to_string(rho.dim()) + "-dimensional but V is " +
                                std::to_string(v.dim()) + "-dimensional");
    }
    return AmplitudeT<Real>(rho.sqrt().entries() * v.entries(), v);
}

/// Partial trace over the ancilla: rho = W W^dag, renormalized by its trace
/// (which the Amplitude invariant already pins to 1 within 1e-10).
template <class Real>
DensityMatrixT<Real> reconstruct(const AmplitudeT<Real>& w) {
    MatrixX<Real> rho = w.w() * w.w().adjoint();
    rho = ((rho + rho.adjoint()) / Real(2)).eval();
    const Real trace = rho.trace().real();
    Eigen::SelfAdjointEigenSolver<MatrixX<Real>> solver(rho);
    if (!(solver.eigenvalues().minCoeff() > Real(0))) {
        throw RankDeficient("W W^dag is not strictly positive: min eigenvalue = " +
                            std::to_string(static_cast<double>(solver.eigenvalues().minCoeff())));
    }
    rho /= trace;
    return DensityMatrixT<Real>(HermitianMatrixT<Real>(std::move(rho)));
}

/// Hilbert-Schmidt overlap of two purified states, <W1|W2> = Tr(W1^dag W2).
template <class Real>
Complex<Real> purified_overlap(const AmplitudeT<Real>& w1, const AmplitudeT<Real>& w2) {
    if (w1.dim() != w2.dim()) {
        throw DimensionMismatch("purified_overlap: dimensions " + std::to_string(w1.dim()) +
                                " vs " + std::to_string(w2.dim()));
    }
    return hs_inner(w1.w(), w2.w());
}

}  // namespace phases
