#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "phases/errors.hpp"
#include "phases/types.hpp"

namespace phases {

/// Dense complex square matrix with the Hermiticity invariant
/// entries[i][j] = conj(entries[j][i]) to 1e-12 absolute per entry.
template <class Real = double>
class HermitianMatrixT {
public:
    explicit HermitianMatrixT(MatrixX<Real> entries) : m_(std::move(entries)) {
        if (m_.rows() != m_.cols() || m_.rows() < 1) {
            throw DimensionMismatch("Hermitian matrix must be square with dim >= 1, got " +
                                    std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()));
        }
        if (!m_.allFinite()) {
            throw NonHermitianInput("matrix has non-finite entries");
        }
        const Real dev = max_abs(m_ - m_.adjoint());
        if (dev > tol<Real>(1e-12)) {
            throw NonHermitianInput("matrix is not Hermitian: max |A - A^dag| entry = " +
                                    std::to_string(static_cast<double>(dev)));
        }
    }

    Eigen::Index dim() const { return m_.rows(); }
    const MatrixX<Real>& entries() const { return m_; }

    static HermitianMatrixT identity(Eigen::Index n) {
        return HermitianMatrixT(MatrixX<Real>::Identity(n, n));
    }

private:
    MatrixX<Real> m_;
};

/// Dense complex square matrix with the unitarity invariant
/// max |U^dag U - I| entry <= tolerance (default 1e-10).
template <class Real = double>
class UnitaryMatrixT {
public:
    explicit UnitaryMatrixT(MatrixX<Real> entries, Real tolerance = tol<Real>(1e-10))
        : m_(std::move(entries)) {
        if (m_.rows() != m_.cols() || m_.rows() < 1) {
            throw DimensionMismatch("unitary matrix must be square with dim >= 1, got " +
                                    std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()));
        }
        if (!m_.allFinite()) {
            throw NonUnitaryInput("matrix has non-finite entries");
        }
        const Real dev = max_abs((m_.adjoint() * m_ - MatrixX<Real>::Identity(m_.rows(), m_.cols())).eval());
        if (dev > tolerance) {
            throw NonUnitaryInput("matrix is not unitary: max |U^dag U - I| entry = " +
                                  std::to_string(static_cast<double>(dev)));
        }
    }

    Eigen::Index dim() const { return m_.rows(); }
    const MatrixX<Real>& entries() const { return m_; }

    static UnitaryMatrixT identity(Eigen::Index n) {
        return UnitaryMatrixT(MatrixX<Real>::Identity(n, n));
    }

private:
    MatrixX<Real> m_;
};

/// Result of a Hermitian eigendecomposition: eigenvalues ascending, eigenvector
/// columns orthonormal and aligned with the eigenvalue order.
template <class Real = double>
struct SpectrumT {
    VectorXr<Real> eigenvalues;
    UnitaryMatrixT<Real> eigenvectors;
};

using HermitianMatrix = HermitianMatrixT<double>;
using UnitaryMatrix = UnitaryMatrixT<double>;
using Spectrum = SpectrumT<double>;

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascending; the
/// reconstruction sum_k lambda_k v_k v_k^dag reproduces the input to 1e-10.
template <class Real>
SpectrumT<Real> eig_hermitian(const HermitianMatrixT<Real>& h) {
    Eigen::SelfAdjointEigenSolver<MatrixX<Real>> solver(h.entries());
    if (solver.info() != Eigen::Success) {
        throw DomainError("Hermitian eigendecomposition did not converge");
    }
    return SpectrumT<Real>{solver.eigenvalues(),
                           UnitaryMatrixT<Real>(solver.eigenvectors())};
}

/// Spectral application of a real scalar function: f(H) = sum_k f(lambda_k) v_k v_k^dag.
/// The reconstruction is symmetrized (exact in IEEE arithmetic) so the result
/// meets the HermitianMatrix invariant even when f(lambda) is large.
template <class Real, class F>
HermitianMatrixT<Real> func_hermitian(const HermitianMatrixT<Real>& h, F&& f) {
    const SpectrumT<Real> s = eig_hermitian(h);
    VectorXr<Real> mapped(s.eigenvalues.size());
    for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) {
        const Real value = static_cast<Real>(f(s.eigenvalues[k]));
        if (!std::isfinite(static_cast<double>(value))) {
            throw DomainError("scalar function undefined at eigenvalue " +
                              std::to_string(static_cast<double>(s.eigenvalues[k])));
        }
        mapped[k] = value;
    }
    const MatrixX<Real>& v = s.eigenvectors.entries();
    MatrixX<Real> result = v * mapped.template cast<Complex<Real>>().asDiagonal() * v.adjoint();
    result = ((result + result.adjoint()) / Real(2)).eval();
    return HermitianMatrixT<Real>(std::move(result));
}

/// Hilbert-Schmidt inner product Tr(A^dag B); conjugate-symmetric in (A, B).
template <class DerivedA, class DerivedB>
auto hs_inner(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatch("Hilbert-Schmidt inner product needs equal shapes, got " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
    return (a.conjugate().cwiseProduct(b)).sum();
}

/// Principal argument on the branch (-pi, pi], with arg(-|z|) = +pi.
/// Amplitudes below 1e-14 have no well-defined phase (a visibility zero) and
/// raise ZeroAmplitude carrying the amplitude.
template <class Real>
Real principal_arg(Complex<Real> z) {
    if (std::abs(z) < tol<Real>(1e-14)) {
        throw ZeroAmplitude(std::complex<double>(static_cast<double>(z.real()),
                                                 static_cast<double>(z.imag())));
    }
    Real a = std::arg(z);
    if (a == -std::numbers::pi_v<Real>) {
        a = std::numbers::pi_v<Real>;
    }
    return a;
}

/// Exponential of an anti-Hermitian matrix B (so exp(B) is unitary), computed
/// spectrally: iB is Hermitian, iB = V D V^dag, exp(B) = V exp(-iD) V^dag.
template <class Real>
MatrixX<Real> expm_antihermitian(const MatrixX<Real>& b, Real tolerance = tol<Real>(1e-10)) {
    const Real dev = max_abs((b + b.adjoint()).eval());
    if (dev > tolerance) {
        throw NonHermitianInput("expm_antihermitian: input is not anti-Hermitian, max |B + B^dag| = " +
                                std::to_string(static_cast<double>(dev)));
    }
    MatrixX<Real> hm = Complex<Real>(0, 1) * b;
    hm = ((hm + hm.adjoint()) / Real(2)).eval();
    Eigen::SelfAdjointEigenSolver<MatrixX<Real>> solver(hm);
    if (solver.info() != Eigen::Success) {
        throw DomainError("eigendecomposition in expm_antihermitian did not converge");
    }
    VectorXc<Real> phase_factors(solver.eigenvalues().size());
    for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
        phase_factors[k] = std::exp(Complex<Real>(0, -solver.eigenvalues()[k]));
    }
    return solver.eigenvectors() * phase_factors.asDiagonal() * solver.eigenvectors().adjoint();
}

}  // namespace phases
