#pragma once

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Dense>

#include "phases/types.hpp"

namespace testutil {

/// Matrix exponential by scaling-and-squaring with a Taylor series — an
/// algorithm independent of the spectral route used by the library, kept here
/// purely as a cross-check oracle.
inline Eigen::MatrixXcd expm_ref(const Eigen::MatrixXcd& a) {
    double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    while (norm > 0.5) {
        norm /= 2.0;
        ++squarings;
    }
    const Eigen::MatrixXcd x = a / std::pow(2.0, squarings);
    Eigen::MatrixXcd term = Eigen::MatrixXcd::Identity(a.rows(), a.cols());
    Eigen::MatrixXcd sum = term;
    for (int k = 1; k <= 40; ++k) {
        term = (term * x / static_cast<double>(k)).eval();
        sum += term;
        if (term.cwiseAbs().maxCoeff() < 1e-20) break;
    }
    for (int i = 0; i < squarings; ++i) {
        sum = (sum * sum).eval();
    }
    return sum;
}

/// Distance between two angles on the circle, wrapped into (-pi, pi].
/// Phases at the branch edge land at +pi or -pi+eps interchangeably, so tests
/// must compare circularly.
inline double phase_distance(double a, double b) {
    double d = std::fmod(a - b, 2.0 * phases::pi);
    if (d <= -phases::pi) d += 2.0 * phases::pi;
    if (d > phases::pi) d -= 2.0 * phases::pi;
    return std::abs(d);
}

/// Deterministic pseudo-random complex matrix with entries in [-1, 1]^2.
inline Eigen::MatrixXcd fixed_complex_matrix(Eigen::Index n, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::MatrixXcd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            m(i, j) = std::complex<double>(dist(gen), dist(gen));
        }
    }
    return m;
}

/// Deterministic pseudo-random Hermitian matrix.
inline Eigen::MatrixXcd fixed_hermitian(Eigen::Index n, unsigned seed) {
    const Eigen::MatrixXcd m = fixed_complex_matrix(n, seed);
    return ((m + m.adjoint()) / 2.0).eval();
}

/// Deterministic pseudo-random unitary matrix (QR of a fixed random matrix).
inline Eigen::MatrixXcd fixed_unitary(Eigen::Index n, unsigned seed) {
    const Eigen::MatrixXcd m = fixed_complex_matrix(n, seed);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(m);
    Eigen::MatrixXcd q = qr.householderQ();
    return q;
}

/// Deterministic full-rank density matrix: normalized exp of a fixed Hermitian.
inline Eigen::MatrixXcd fixed_density(Eigen::Index n, unsigned seed) {
    const Eigen::MatrixXcd h = fixed_hermitian(n, seed);
    const Eigen::MatrixXcd e = expm_ref(h);
    return (e / e.trace().real()).eval();
}

}  // namespace testutil
