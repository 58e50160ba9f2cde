#pragma once

#include <cmath>
#include <complex>
#include <string>

#include "phases/errors.hpp"
#include "phases/family.hpp"
#include "phases/hermitian.hpp"
#include "phases/loops.hpp"
#include "phases/mixed_state.hpp"
#include "phases/phase_result.hpp"
#include "phases/types.hpp"

namespace phases {

enum class ModelKind { two_level, three_level };
enum class LoopKind { equator, meridian };

/// Model selection: a two-level system R*(sigma . n) or a three-level system
/// with that block plus a spectator level at +R, driven around an equator or
/// meridian loop of winding omega. Meridian loops use the extended coordinate
/// convention (theta through both poles, phi = phi0 fixed); equator loops the
/// standard one.
struct ModelConfig {
    ModelKind kind = ModelKind::three_level;
    double r = 1.0;
    int omega = 1;
    LoopKind loop_kind = LoopKind::meridian;
    double phi0 = 0.0;
};

namespace detail {

inline void check_model_args(double beta, double r, int omega) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
        throw DomainError("inverse temperature must be finite and >= 0");
    }
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw DomainError("level splitting scale R must be finite and > 0");
    }
    if (omega < 1) {
        throw DomainError("winding count must be >= 1, got " + std::to_string(omega));
    }
}

/// (-1)^omega without trigonometric roundoff.
inline double parity_sign(int omega) { return omega % 2 == 0 ? 1.0 : -1.0; }

/// sech(x) for x >= 0 without overflow: 2e^{-x} / (1 + e^{-2x}).
inline double sech_safe(double x) {
    const double e = std::exp(-x);
    return 2.0 * e / (1.0 + e * e);
}

}  // namespace detail

/// Hamiltonian at a sphere point: two_level -> R * sigma . n(theta, phi);
/// three_level -> that block plus a decoupled level at +R. Both are invariant
/// under (theta, phi) -> (2pi - theta, phi + pi), the extended-coordinate
/// identification.
inline HermitianMatrix hamiltonian(const ModelConfig& config, const SpherePoint& p) {
    detail::check_model_args(0.0, config.r, config.omega);
    const double c = std::cos(p.theta);
    const double s = std::sin(p.theta);
    const Complex<double> e_minus = std::polar(1.0, -p.phi);
    const Complex<double> e_plus = std::polar(1.0, p.phi);
    if (config.kind == ModelKind::two_level) {
        Matrix h(2, 2);
        h << config.r * c, config.r * s * e_minus,  //
            config.r * s * e_plus, -config.r * c;
        return HermitianMatrix(std::move(h));
    }
    Matrix h = Matrix::Zero(3, 3);
    h(0, 0) = config.r * c;
    h(0, 1) = config.r * s * e_minus;
    h(1, 0) = config.r * s * e_plus;
    h(1, 1) = -config.r * c;
    h(2, 2) = config.r;
    return HermitianMatrix(std::move(h));
}

/// The three instantaneous eigenvectors of the three-level Hamiltonian,
/// labeled by their role: plus1 and minus span the rotating block (energies
/// +R and -R), plus2 is the parameter-independent spectator (+R). The family
/// is smooth in (theta, phi) over the extended chart, which is what makes
/// transport through the doubly degenerate +R level well-defined.
struct ThreeLevelFrame {
    VectorXc<double> plus1;
    VectorXc<double> minus;
    VectorXc<double> plus2;
};

inline ThreeLevelFrame analytic_eigvecs_three_level(const SpherePoint& p) {
    const double ch = std::cos(p.theta / 2.0);
    const double sh = std::sin(p.theta / 2.0);
    const Complex<double> e_plus = std::polar(1.0, p.phi);
    ThreeLevelFrame f;
    f.plus1 = VectorXc<double>(3);
    f.plus1 << ch, sh * e_plus, 0.0;
    f.minus = VectorXc<double>(3);
    f.minus << sh, -ch * e_plus, 0.0;
    f.plus2 = VectorXc<double>(3);
    f.plus2 << 0.0, 0.0, 1.0;
    return f;
}

/// Hamiltonian family for a model: the three-level family carries the
/// analytic eigenframe (ascending level order: minus, plus1, plus2); the
/// two-level spectrum is non-degenerate everywhere, so numerical
/// diagonalization per point suffices there.
inline HamiltonianFamily family(const ModelConfig& config) {
    HamiltonianFamily f;
    f.dim = config.kind == ModelKind::two_level ? 2 : 3;
    f.hamiltonian = [config](const SpherePoint& p) { return hamiltonian(config, p); };
    if (config.kind == ModelKind::three_level) {
        const double r = config.r;
        f.frame = [r](const SpherePoint& p) {
            const ThreeLevelFrame frame = analytic_eigvecs_three_level(p);
            VectorXr<double> values(3);
            values << -r, r, r;
            Matrix vectors(3, 3);
            vectors.col(0) = frame.minus;
            vectors.col(1) = frame.plus1;
            vectors.col(2) = frame.plus2;
            return Spectrum{std::move(values), UnitaryMatrix(std::move(vectors))};
        };
    }
    return f;
}

/// The model's loop: equator or meridian at phi0, with the model's winding.
inline ParameterLoop make_loop(const ModelConfig& config, int n_steps) {
    if (config.loop_kind == LoopKind::meridian) {
        return meridian_loop(config.phi0, config.omega, n_steps);
    }
    return equator_loop(config.omega, n_steps);
}

/// Interferometric phase of the two-level Gibbs state around a loop, from the
/// amplitude G = lambda_- e^{i beta_-} + lambda_+ e^{-i beta_-} with
/// lambda_-/+ the ground/excited Gibbs weights and beta_- the ground-state
/// geometric phase of the loop: half the swept solid angle for standard-chart
/// loops, pi*omega for meridians (great circles traversed through the poles,
/// where the chart's dphi = 0 hides the swept hemispheres).
inline PhaseResult theta_I_two_level(double beta, double r, const ParameterLoop& loop) {
    detail::check_model_args(beta, r, loop.omega());
    const double t = std::tanh(beta * r);
    const double lambda_minus = (1.0 + t) / 2.0;
    const double lambda_plus = (1.0 - t) / 2.0;
    const SolidAngleResult sa = solid_angle_phase(loop);
    const double beta_minus = sa.extended_convention ? pi * loop.omega() : sa.value;
    const Complex<double> g = lambda_minus * std::polar(1.0, beta_minus) +
                              lambda_plus * std::polar(1.0, -beta_minus);
    return from_amplitude(g);
}

/// Interferometric phase of the three-level model around a meridian of
/// winding omega, from the closed-form amplitude
/// G = [cos(pi omega) e^{-beta R} + e^{-beta R} - cos(pi omega) e^{beta R}] / Z(0),
/// Z(0) = 2 e^{-beta R} + e^{beta R}, computed overflow-free by normalizing
/// with e^{-beta R}.
inline PhaseResult theta_I_three_level(double beta, double r, int omega) {
    detail::check_model_args(beta, r, omega);
    const double c = detail::parity_sign(omega);
    const double e2 = std::exp(-2.0 * beta * r);
    const double g = ((c + 1.0) * e2 - c) / (2.0 * e2 + 1.0);
    return from_amplitude(Complex<double>(g, 0.0));
}

/// Critical temperature of the even-winding three-level interferometric
/// transition: 2R / ln 2, winding-independent.
inline double tc_interferometric_three_level(double r) {
    detail::check_model_args(0.0, r, 1);
    return 2.0 * r / std::log(2.0);
}

/// Uhlmann phase amplitude of the spin-half Gibbs state around a meridian:
/// G = cos(pi omega) cos(pi omega sech(beta R / 2)). This formula's R is the
/// full level splitting (H = (R/2) sigma . n), unlike the two-level
/// interferometric model where H = R sigma . n splits by 2R.
inline PhaseResult theta_U_spin_half(double beta, double r, int omega) {
    detail::check_model_args(beta, r, omega);
    const double c = detail::parity_sign(omega);
    const double g = c * std::cos(pi * omega * detail::sech_safe(beta * r / 2.0));
    return from_amplitude(Complex<double>(g, 0.0));
}

/// The one independent entry of the three-level Uhlmann connection weight:
/// chi = (e^{-beta R} + e^{beta R} - 2)/(e^{-beta R} + e^{beta R}) =
/// 1 - sech(beta R), computed overflow-free as (1 - e^{-beta R})^2 / (1 + e^{-2 beta R}).
inline double chi_three_level(double beta, double r) {
    detail::check_model_args(beta, r, 1);
    const double e = std::exp(-beta * r);
    return (1.0 - e) * (1.0 - e) / (1.0 + e * e);
}

/// Closed-form Uhlmann holonomy of the three-level meridian loop: a rotation
/// by pi*omega*chi in the (ground, excited-block) plane, phased by the
/// longitude, with the spectator level untouched. The sense of the rotation
/// is fixed by the parallel-transport condition (the phase amplitude only
/// sees its cosine); the holonomy module's horizontal lift is the reference.
inline UnitaryMatrix uhlmann_holonomy_three_level(double beta, double r, int omega,
                                                  double phi0) {
    detail::check_model_args(beta, r, omega);
    if (!(phi0 >= 0.0 && phi0 <= pi)) {
        throw InvalidLongitude("meridian longitude must lie in [0, pi], got " +
                               std::to_string(phi0));
    }
    const double angle = omega * pi * chi_three_level(beta, r);
    Matrix u = Matrix::Zero(3, 3);
    u(0, 0) = std::cos(angle);
    u(0, 1) = -std::sin(angle) * std::polar(1.0, -phi0);
    u(1, 0) = std::sin(angle) * std::polar(1.0, phi0);
    u(1, 1) = std::cos(angle);
    u(2, 2) = 1.0;
    return UnitaryMatrix(std::move(u));
}

/// Closed-form Uhlmann phase amplitude of the three-level meridian loop:
/// G_U = [(-1)^omega 2 cosh(beta R) cos(omega pi sech(beta R)) + e^{-beta R}] / Z(0),
/// computed overflow-free by normalizing with e^{-beta R}.
inline PhaseResult g_uhlmann_three_level(double beta, double r, int omega) {
    detail::check_model_args(beta, r, omega);
    const double c = detail::parity_sign(omega);
    const double e2 = std::exp(-2.0 * beta * r);
    const double g = (c * (1.0 + e2) * std::cos(omega * pi * detail::sech_safe(beta * r)) + e2) /
                     (2.0 * e2 + 1.0);
    return from_amplitude(Complex<double>(g, 0.0));
}

/// Largest |Tr(rho(t) dU/dt U(t)^dag)| along the loop for the three-level
/// model's rigidly rotated eigenframe U(t) (centered differences, tau = 1
/// time grid). This is the trace parallel-transport defect of the frame
/// process itself: it vanishes along meridians and is order-one along the
/// equator, which is why the closed forms are meridian-only.
inline double frame_transport_defect(double beta, double r, const ParameterLoop& loop) {
    detail::check_model_args(beta, r, 1);
    const std::size_t n = loop.n_steps();
    const double dt = 1.0 / static_cast<double>(n);
    // Gibbs weights in frame order (minus, plus1, plus2), overflow-free.
    const double e2 = std::exp(-2.0 * beta * r);
    VectorXr<double> w(3);
    w << 1.0 / (2.0 * e2 + 1.0), e2 / (2.0 * e2 + 1.0), e2 / (2.0 * e2 + 1.0);
    const auto frame_matrix = [](const SpherePoint& p) {
        const ThreeLevelFrame f = analytic_eigvecs_three_level(p);
        Matrix u(3, 3);
        u.col(0) = f.minus;
        u.col(1) = f.plus1;
        u.col(2) = f.plus2;
        return u;
    };
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 <= n; ++k) {
        const Matrix u = frame_matrix(loop.points()[k]);
        const Matrix du = (frame_matrix(loop.points()[k + 1]) -
                           frame_matrix(loop.points()[k - 1])) /
                          (2.0 * dt);
        // Tr(rho(t) dU U^dag) = Tr(rho_w U^dag dU) with rho_w the diagonal
        // weight matrix in frame order.
        const Complex<double> trace =
            (w.cast<Complex<double>>().asDiagonal() * (u.adjoint() * du)).trace();
        worst = std::max(worst, std::abs(trace));
    }
    return worst;
}

}  // namespace phases
