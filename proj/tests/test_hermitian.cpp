#include <doctest.h>

#include <cmath>
#include <complex>

#include "phases/hermitian.hpp"
#include "support/util.hpp"

using namespace phases;
using testutil::expm_ref;
using testutil::fixed_hermitian;
using std::complex;

namespace {

const complex<double> I(0.0, 1.0);

Matrix sigma_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Matrix sigma_y() {
    Matrix m(2, 2);
    m << 0, -I, I, 0;
    return m;
}

Matrix sigma_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

/// Three-level block Hamiltonian R * [[cos t, sin t e^{-i p}, 0], [sin t e^{i p}, -cos t, 0], [0, 0, 1]].
Matrix three_level_h(double r, double theta, double phi) {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = r * std::cos(theta);
    m(0, 1) = r * std::sin(theta) * std::exp(-I * phi);
    m(1, 0) = r * std::sin(theta) * std::exp(I * phi);
    m(1, 1) = -r * std::cos(theta);
    m(2, 2) = r;
    return m;
}

}  // namespace

TEST_CASE("HermitianMatrix validates its invariant at construction") {
    CHECK_NOTHROW(HermitianMatrix{sigma_x()});
    CHECK_NOTHROW(HermitianMatrix{sigma_y()});

    Matrix slightly_off = sigma_x();
    slightly_off(0, 1) += 5e-13;  // within the 1e-12 per-entry budget
    CHECK_NOTHROW(HermitianMatrix{slightly_off});

    Matrix broken = sigma_x();
    broken(0, 1) += 1e-11;
    CHECK_THROWS_AS(HermitianMatrix{broken}, NonHermitianInput);

    Matrix rect(2, 3);
    rect.setZero();
    CHECK_THROWS_AS(HermitianMatrix{rect}, DimensionMismatch);

    Matrix nan_entry = sigma_z();
    nan_entry(0, 0) = std::nan("");
    CHECK_THROWS_AS(HermitianMatrix{nan_entry}, NonHermitianInput);
}

TEST_CASE("UnitaryMatrix validates its invariant at construction") {
    CHECK_NOTHROW(UnitaryMatrix{Matrix::Identity(3, 3)});
    CHECK_NOTHROW(UnitaryMatrix{testutil::fixed_unitary(4, 7)});

    Matrix not_unitary = Matrix::Identity(2, 2) * 1.5;
    CHECK_THROWS_AS(UnitaryMatrix{not_unitary}, NonUnitaryInput);

    // A looser explicit tolerance admits a slightly drifted product.
    Matrix drifted = Matrix::Identity(2, 2) * (1.0 + 1e-9);
    CHECK_THROWS_AS(UnitaryMatrix{drifted}, NonUnitaryInput);
    CHECK_NOTHROW(UnitaryMatrix{drifted, 1e-6});
}

TEST_CASE("eig_hermitian: identity and sigma_z") {
    const Spectrum s_id = eig_hermitian(HermitianMatrix::identity(2));
    CHECK(s_id.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s_id.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-14));

    const Spectrum s_z = eig_hermitian(HermitianMatrix(sigma_z()));
    CHECK(s_z.eigenvalues[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(s_z.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-14));
    // Ascending order pairs the -1 eigenvalue with (0,1)^T and +1 with (1,0)^T,
    // each up to a phase.
    const Matrix& v = s_z.eigenvectors.entries();
    CHECK(std::abs(v(1, 0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(v(0, 1)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eig_hermitian: three-level block Hamiltonian at theta=pi/3, phi=pi/2") {
    const double r = 1.7;
    const double theta = pi / 3.0;
    const double phi = pi / 2.0;
    const HermitianMatrix h(three_level_h(r, theta, phi));
    const Spectrum s = eig_hermitian(h);

    CHECK(s.eigenvalues[0] == doctest::Approx(-r).epsilon(1e-13));
    CHECK(s.eigenvalues[1] == doctest::Approx(r).epsilon(1e-13));
    CHECK(s.eigenvalues[2] == doctest::Approx(r).epsilon(1e-13));

    // Ground state matches (sin t/2, -cos t/2 e^{i p}, 0)^T up to a phase.
    Eigen::Vector3cd ground;
    ground << std::sin(theta / 2), -std::cos(theta / 2) * std::exp(I * phi), 0.0;
    const Eigen::Vector3cd v0 = s.eigenvectors.entries().col(0);
    CHECK(std::abs(ground.dot(v0)) == doctest::Approx(1.0).epsilon(1e-12));

    // The doubly degenerate +R subspace is basis-ambiguous; compare projectors.
    Eigen::Vector3cd up1, up2;
    up1 << std::cos(theta / 2), std::sin(theta / 2) * std::exp(I * phi), 0.0;
    up2 << 0.0, 0.0, 1.0;
    const Matrix p_expected = up1 * up1.adjoint() + up2 * up2.adjoint();
    const Matrix p_actual = s.eigenvectors.entries().col(1) * s.eigenvectors.entries().col(1).adjoint() +
                            s.eigenvectors.entries().col(2) * s.eigenvectors.entries().col(2).adjoint();
    CHECK(max_abs((p_expected - p_actual).eval()) <= 1e-12);
}

TEST_CASE("eig_hermitian: reconstruction, eigenvector residuals, idempotence") {
    for (unsigned seed : {11u, 12u, 13u}) {
        const HermitianMatrix h(fixed_hermitian(5, seed));
        const Spectrum s = eig_hermitian(h);

        // Columns orthonormal (enforced by the UnitaryMatrix invariant already,
        // but assert the reconstruction and residual posts explicitly).
        Matrix recon = Matrix::Zero(5, 5);
        for (int k = 0; k < 5; ++k) {
            recon += s.eigenvalues[k] *
                     (s.eigenvectors.entries().col(k) * s.eigenvectors.entries().col(k).adjoint());
        }
        CHECK(max_abs((recon - h.entries()).eval()) <= 1e-10);

        for (int k = 0; k < 5; ++k) {
            const Eigen::VectorXcd residual =
                h.entries() * s.eigenvectors.entries().col(k) -
                s.eigenvalues[k] * s.eigenvectors.entries().col(k);
            CHECK(max_abs(residual) <= 1e-10);
        }

        const Spectrum again = eig_hermitian(HermitianMatrix(((recon + recon.adjoint()) / 2.0).eval()));
        for (int k = 0; k < 5; ++k) {
            CHECK(std::abs(again.eigenvalues[k] - s.eigenvalues[k]) <= 1e-10);
        }
    }
}

TEST_CASE("func_hermitian: sqrt and exp fixtures") {
    Matrix d(2, 2);
    d << 4, 0, 0, 1;
    const HermitianMatrix sq = func_hermitian(HermitianMatrix(d), [](double x) { return std::sqrt(x); });
    CHECK(sq.entries()(0, 0).real() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(sq.entries()(1, 1).real() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(sq.entries()(0, 1)) <= 1e-14);

    const HermitianMatrix e0 = func_hermitian(HermitianMatrix(Matrix::Zero(3, 3)),
                                              [](double x) { return std::exp(x); });
    CHECK(max_abs((e0.entries() - Matrix::Identity(3, 3)).eval()) <= 1e-14);
}

TEST_CASE("func_hermitian: sqrt of a positive matrix squares back") {
    const Matrix rho = testutil::fixed_density(3, 21);
    const HermitianMatrix h(rho);
    const HermitianMatrix s = func_hermitian(h, [](double x) { return std::sqrt(x); });
    CHECK(max_abs((s.entries() * s.entries() - rho).eval()) <= 1e-10);
}

TEST_CASE("func_hermitian: domain error when f undefined on the spectrum") {
    CHECK_THROWS_AS(func_hermitian(HermitianMatrix(sigma_z()), [](double x) { return std::sqrt(x); }),
                    DomainError);
    CHECK_THROWS_AS(func_hermitian(HermitianMatrix(sigma_z()), [](double x) { return std::log(x); }),
                    DomainError);
}

TEST_CASE("func_hermitian: identity function reproduces the input to 1e-12") {
    for (unsigned seed : {31u, 32u}) {
        const HermitianMatrix h(fixed_hermitian(4, seed));
        const HermitianMatrix same = func_hermitian(h, [](double x) { return x; });
        CHECK(max_abs((same.entries() - h.entries()).eval()) <= 1e-12);
    }
}

TEST_CASE("func_hermitian: exp agrees with scaling-and-squaring on dims 2..6") {
    for (Eigen::Index n = 2; n <= 6; ++n) {
        const HermitianMatrix h(fixed_hermitian(n, 100u + static_cast<unsigned>(n)));
        const HermitianMatrix e = func_hermitian(h, [](double x) { return std::exp(x); });
        const Matrix ref = expm_ref(h.entries());
        CHECK(max_abs((e.entries() - ref).eval()) <= 1e-10);
    }
}

TEST_CASE("func_hermitian: result commutes with the input") {
    const HermitianMatrix h(fixed_hermitian(4, 55));
    const HermitianMatrix e = func_hermitian(h, [](double x) { return std::exp(x); });
    CHECK(max_abs((e.entries() * h.entries() - h.entries() * e.entries()).eval()) <= 1e-10);
}

TEST_CASE("func_hermitian: symmetrization holds for large outputs") {
    // Spread ~30 makes exp(H) entries ~1e13, where raw spectral reconstruction
    // can breach the absolute 1e-12 Hermiticity budget without symmetrization.
    Matrix big = fixed_hermitian(3, 77) * 15.0;
    const HermitianMatrix h(((big + big.adjoint()) / 2.0).eval());
    CHECK_NOTHROW(func_hermitian(h, [](double x) { return std::exp(x); }));
}

TEST_CASE("hs_inner: fixtures and conjugate symmetry") {
    CHECK(hs_inner(Matrix::Identity(2, 2), Matrix::Identity(2, 2)) == complex<double>(2.0, 0.0));
    CHECK(std::abs(hs_inner(sigma_x(), sigma_y())) <= 1e-15);

    const Matrix a = testutil::fixed_complex_matrix(3, 41);
    const Matrix b = testutil::fixed_complex_matrix(3, 42);
    const complex<double> ab = hs_inner(a, b);
    const complex<double> ba = hs_inner(b, a);
    CHECK(std::abs(ab - std::conj(ba)) <= 1e-13);

    CHECK_THROWS_AS(hs_inner(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), DimensionMismatch);
}

TEST_CASE("principal_arg: branch (-pi, pi] with arg(-1) = +pi") {
    CHECK(principal_arg(complex<double>(1.0, 0.0)) == 0.0);
    CHECK(principal_arg(complex<double>(-1.0, 0.0)) == pi);
    CHECK(principal_arg(complex<double>(-1.0, -0.0)) == pi);  // -pi edge folds to +pi
    CHECK(principal_arg(complex<double>(0.0, 1.0)) == doctest::Approx(pi / 2).epsilon(1e-15));

    CHECK_THROWS_AS(principal_arg(complex<double>(-1e-16, 0.0)), ZeroAmplitude);
    try {
        principal_arg(complex<double>(-1e-16, 0.0));
    } catch (const ZeroAmplitude& z) {
        CHECK(z.amplitude().real() == doctest::Approx(-1e-16));
        CHECK(std::string(z.code()) == "zero_amplitude");
    }
}

TEST_CASE("expm_antihermitian: rotation generator and unitarity") {
    Matrix k(2, 2);
    k << 0, 1, -1, 0;  // anti-Hermitian, real antisymmetric
    const double t = 0.37;
    const Matrix u = expm_antihermitian((k * t).eval());
    CHECK(u(0, 0).real() == doctest::Approx(std::cos(t)).epsilon(1e-14));
    CHECK(u(0, 1).real() == doctest::Approx(std::sin(t)).epsilon(1e-14));
    CHECK(u(1, 0).real() == doctest::Approx(-std::sin(t)).epsilon(1e-14));
    CHECK(max_abs((u.adjoint() * u - Matrix::Identity(2, 2)).eval()) <= 1e-14);
    CHECK(max_abs((u - expm_ref(k * t)).eval()) <= 1e-13);

    CHECK_THROWS_AS(expm_antihermitian(sigma_x()), NonHermitianInput);
}

TEST_CASE("float instantiation smoke test") {
    using MatF = phases::MatrixX<float>;
    MatF z(2, 2);
    z << 1.0f, 0.0f, 0.0f, -1.0f;
    const SpectrumT<float> s = eig_hermitian(HermitianMatrixT<float>(z));
    CHECK(s.eigenvalues[0] == doctest::Approx(-1.0f));
    CHECK(s.eigenvalues[1] == doctest::Approx(1.0f));

    MatF d(2, 2);
    d << 4.0f, 0.0f, 0.0f, 1.0f;
    const HermitianMatrixT<float> sq =
        func_hermitian(HermitianMatrixT<float>(d), [](float x) { return std::sqrt(x); });
    CHECK(sq.entries()(0, 0).real() == doctest::Approx(2.0f).epsilon(1e-5));
}
