#pragma once

#include <Eigen/Dense>
#include <complex>
#include <limits>

namespace phases {

template <class Real>
using Complex = std::complex<Real>;

template <class Real>
using MatrixX = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <class Real>
using VectorXr = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

template <class Real>
using VectorXc = Eigen::Matrix<Complex<Real>, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

/// Tolerances are specified for double precision; scale them by the epsilon
/// ratio so other scalar instantiations keep proportionate headroom.
template <class Real>
constexpr Real tol(double value_for_double) {
    constexpr double eps_double = 2.220446049250313e-16;
    return static_cast<Real>(value_for_double *
                             (static_cast<double>(std::numeric_limits<Real>::epsilon()) /
                              eps_double));
}

/// Largest absolute entry of a matrix expression (max norm).
template <class Derived>
auto max_abs(const Eigen::MatrixBase<Derived>& m) {
    using Real = typename Eigen::NumTraits<typename Derived::Scalar>::Real;
    if (m.size() == 0) return Real(0);
    return m.cwiseAbs().maxCoeff();
}

}  // namespace phases
