#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "phases/errors.hpp"
#include "phases/family.hpp"
#include "phases/hermitian.hpp"
#include "phases/interferometric.hpp"
#include "phases/loops.hpp"
#include "phases/mixed_state.hpp"
#include "phases/phase_result.hpp"
#include "phases/types.hpp"

namespace phases {

/// One discretized connection step: the anti-Hermitian generator A (ambient
/// basis, dimensionless) together with the state eigendata it was evaluated
/// in, kept so both defining invariants stay checkable: A + A^dag = 0, and
/// entries coupling equal eigenvalues vanish (the thermal coupling factor is
/// zero on degenerate pairs, which is what leaves degenerate subspaces inert).
class UhlmannStep {
public:
    UhlmannStep(Matrix a, Spectrum spectrum)
        : a_(std::move(a)), spectrum_(std::move(spectrum)) {
        if (a_.rows() != a_.cols() || a_.rows() != spectrum_.eigenvalues.size()) {
            throw DimensionMismatch("connection step and spectrum dimensions differ");
        }
        const double hermitian_part = max_abs((a_ + a_.adjoint()).eval());
        if (hermitian_part > 1e-10) {
            throw NonHermitianInput("connection step is not anti-Hermitian: max |A + A^dag| = " +
                                    std::to_string(hermitian_part));
        }
        const Matrix in_basis = spectrum_.eigenvectors.entries().adjoint() * a_ *
                                spectrum_.eigenvectors.entries();
        const VectorXr<double>& lambda = spectrum_.eigenvalues;
        for (Eigen::Index n = 0; n < lambda.size(); ++n) {
            for (Eigen::Index m = 0; m < lambda.size(); ++m) {
                if (std::abs(lambda[n] - lambda[m]) <= 1e-12 &&
                    std::abs(in_basis(n, m)) > 1e-10) {
                    throw DomainError("connection step couples the degenerate eigenvalues " +
                                      std::to_string(n) + " and " + std::to_string(m));
                }
            }
        }
    }

    const Matrix& a() const { return a_; }
    const Spectrum& spectrum() const { return spectrum_; }

private:
    Matrix a_;
    Spectrum spectrum_;
};

namespace detail {

/// Connection generator from eigendata: given Delta sqrt(rho) rotated into an
/// eigenbasis (matrix m), the square roots s_n, and weights lambda_n = s_n^2,
/// A_nm = -m_nm (s_m - s_n) / (lambda_n + lambda_m), with entries on
/// degenerate pairs (|lambda_n - lambda_m| <= 1e-12) set to exactly zero.
inline Matrix connection_in_basis(const Matrix& m, const VectorXr<double>& s,
                                  const VectorXr<double>& lambda) {
    Matrix a = Matrix::Zero(m.rows(), m.cols());
    for (Eigen::Index n = 0; n < m.rows(); ++n) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            if (std::abs(lambda[n] - lambda[k]) <= 1e-12) {
                continue;
            }
            a(n, k) = -m(n, k) * (s[k] - s[n]) / (lambda[n] + lambda[k]);
        }
    }
    return a;
}

/// Connection step across one segment, evaluated at the segment midpoint:
/// sqrt(rho) is averaged over the endpoints, diagonalized, and the generator
/// is built there. Second-order accurate in the step, against first order for
/// the endpoint evaluation.
inline Matrix midpoint_connection(const HermitianMatrix& sqrt_k,
                                  const HermitianMatrix& sqrt_k1) {
    const HermitianMatrix mid{((sqrt_k.entries() + sqrt_k1.entries()) / 2.0).eval()};
    const Spectrum s = eig_hermitian(mid);
    VectorXr<double> lambda(s.eigenvalues.size());
    for (Eigen::Index n = 0; n < lambda.size(); ++n) {
        lambda[n] = s.eigenvalues[n] * s.eigenvalues[n];
    }
    const Matrix delta = s.eigenvectors.entries().adjoint() *
                         (sqrt_k1.entries() - sqrt_k.entries()) *
                         s.eigenvectors.entries();
    const Matrix a = connection_in_basis(delta, s.eigenvalues, lambda);
    return s.eigenvectors.entries() * a * s.eigenvectors.entries().adjoint();
}

}  // namespace detail

/// Discretized connection across one segment, evaluated in the eigenbasis of
/// the left endpoint: A = -sum_nm |n> <n|[Delta sqrt(rho), sqrt(rho_k)]|m> <m|
/// / (lambda_n + lambda_m) with Delta sqrt(rho) = sqrt(rho_k1) - sqrt(rho_k).
/// Full rank is guaranteed by the DensityMatrix type. The holonomy uses the
/// midpoint-evaluated variant of the same generator internally; this endpoint
/// form is the one-segment diagnostic.
inline UhlmannStep uhlmann_connection_step(const DensityMatrix& rho_k,
                                           const DensityMatrix& rho_k1) {
    if (rho_k.dim() != rho_k1.dim()) {
        throw DimensionMismatch("connection step endpoints have different dimensions");
    }
    const Spectrum& spec = rho_k.spectrum();
    const Matrix delta_sqrt = rho_k1.sqrt().entries() - rho_k.sqrt().entries();
    const Matrix delta = spec.eigenvectors.entries().adjoint() * delta_sqrt *
                         spec.eigenvectors.entries();
    VectorXr<double> s(spec.eigenvalues.size());
    for (Eigen::Index n = 0; n < s.size(); ++n) {
        s[n] = std::sqrt(std::max(spec.eigenvalues[n], 0.0));
    }
    const Matrix a = detail::connection_in_basis(delta, s, spec.eigenvalues);
    return UhlmannStep(
        spec.eigenvectors.entries() * a * spec.eigenvectors.entries().adjoint(), spec);
}

/// Partial path-ordered transports V(t_k) along a closed state path:
/// V(t_0) = I and V(t_k) = exp(-A_{k-1}) ... exp(-A_0), later steps
/// multiplying from the left. The final entry is the holonomy of the loop.
inline std::vector<UnitaryMatrix> holonomy_partials(const std::vector<DensityMatrix>& rhos) {
    if (rhos.size() < 2) {
        throw DimensionMismatch("a closed state path needs at least two points");
    }
    const Eigen::Index dim = rhos.front().dim();
    for (const DensityMatrix& rho : rhos) {
        if (rho.dim() != dim) {
            throw DimensionMismatch("state path mixes dimensions");
        }
    }
    if (max_abs(rhos.front().entries() - rhos.back().entries()) > 1e-10) {
        throw NonClosedLoop("state path does not close: max |rho(0) - rho(tau)| = " +
                            std::to_string(max_abs(
                                rhos.front().entries() - rhos.back().entries())));
    }

    const std::size_t n = rhos.size() - 1;
    const double tolerance = 1e-8 * static_cast<double>(n);
    std::vector<HermitianMatrix> sqrts;
    sqrts.reserve(rhos.size());
    for (const DensityMatrix& rho : rhos) {
        sqrts.push_back(rho.sqrt());
    }

    std::vector<UnitaryMatrix> partials;
    partials.reserve(rhos.size());
    partials.emplace_back(Matrix::Identity(dim, dim));
    Matrix accumulated = Matrix::Identity(dim, dim);
    for (std::size_t k = 0; k < n; ++k) {
        const Matrix a = detail::midpoint_connection(sqrts[k], sqrts[k + 1]);
        accumulated = expm_antihermitian<double>((-a).eval()) * accumulated;
        partials.emplace_back(accumulated, tolerance);
    }
    return partials;
}

/// Path-ordered holonomy of a closed state path.
inline UnitaryMatrix holonomy(const std::vector<DensityMatrix>& rhos) {
    return holonomy_partials(rhos).back();
}

/// Phase amplitude of a state against a holonomy: G = Tr(rho(0) U_gamma).
inline PhaseResult uhlmann_phase(const DensityMatrix& rho0, const UnitaryMatrix& u_gamma) {
    if (rho0.dim() != u_gamma.dim()) {
        throw DimensionMismatch("state and holonomy dimensions differ");
    }
    return from_amplitude((rho0.entries() * u_gamma.entries()).trace());
}

/// Largest violation of the amplitude parallel-transport condition along a
/// path: max_k || W_k^dag W_{k+1} - W_{k+1}^dag W_k ||_max / dt. The
/// antisymmetrized product discretizes W^dag dW/dt - (dW/dt)^dag W, which
/// vanishes identically on a horizontal lift, so the reported value converges
/// to zero with the grid there and stays order one on any path that twists
/// inside the purification fiber.
inline double uhlmann_residual(const std::vector<Amplitude>& ws, double dt) {
    if (ws.size() < 2) {
        throw DimensionMismatch("amplitude path needs at least two points");
    }
    if (!(dt > 0.0)) {
        throw DomainError("dt must be positive");
    }
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < ws.size(); ++k) {
        const Matrix cross = ws[k].w().adjoint() * ws[k + 1].w();
        worst = std::max(worst, max_abs((cross - cross.adjoint()).eval()));
    }
    return worst / dt;
}

/// Cyclic process carrying a thermal state around a loop on both factors of a
/// purification: system transformations U_s(t_k), ancilla transformations
/// U_a(t_k), and the phase factors V(t_k) = U_s(t_k) V(0) U_a(t_k) with
/// V(0) = I. rho_a0 is the initial ancilla state, the transpose of rho0 under
/// the pairing Tr_a |W><W| = W W^dag.
struct DualProcess {
    std::vector<UnitaryMatrix> system;
    std::vector<UnitaryMatrix> ancilla;
    std::vector<UnitaryMatrix> phase_factors;
    DensityMatrix rho0;
    DensityMatrix rho_a0;
};

/// Purified amplitudes W(t_k) = U_s(t_k) sqrt(rho(0)) U_a(t_k) of the process.
inline std::vector<Amplitude> dual_process_amplitudes(const DualProcess& p) {
    const Matrix sqrt0 = p.rho0.sqrt().entries();
    std::vector<Amplitude> ws;
    ws.reserve(p.system.size());
    for (std::size_t k = 0; k < p.system.size(); ++k) {
        Matrix w = p.system[k].entries() * sqrt0 * p.ancilla[k].entries();
        ws.emplace_back(std::move(w), p.phase_factors[k]);
    }
    return ws;
}

/// Largest violation of the phase-factor parallel-transport condition,
/// centered: max_k || W_k^dag (W_{k+1} - W_{k-1}) - h.c. ||_max / (2 dt) over
/// interior points. Centered differences are required here: the one-sided
/// quotient carries an O(dt) error that swamps the condition itself.
inline double phase_factor_residual(const DualProcess& p, double dt) {
    if (p.system.size() < 3) {
        throw DimensionMismatch("phase-factor residual needs at least three points");
    }
    if (!(dt > 0.0)) {
        throw DomainError("dt must be positive");
    }
    const std::vector<Amplitude> ws = dual_process_amplitudes(p);
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < ws.size(); ++k) {
        const Matrix cross = ws[k].w().adjoint() * (ws[k + 1].w() - ws[k - 1].w());
        worst = std::max(worst, max_abs((cross - cross.adjoint()).eval()));
    }
    return worst / (2.0 * dt);
}

/// Largest violation of the trace-level balance between system and ancilla
/// transport, centered: max_k |Tr(rho(0) dU_s U_s^dag) + Tr(rho_a(0)^T dU_a
/// U_a^dag)| / dt with dU the centered difference over 2 dt. A process whose
/// ancilla leg injects a net phase rate omega reports omega here.
inline double ancilla_balance_residual(const DualProcess& p, double dt) {
    if (p.system.size() != p.ancilla.size() || p.system.size() < 3) {
        throw DimensionMismatch("system and ancilla step sequences must align (>= 3 points)");
    }
    if (!(dt > 0.0)) {
        throw DomainError("dt must be positive");
    }
    const Matrix rho_a_t = p.rho_a0.entries().transpose();
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < p.system.size(); ++k) {
        const Complex<double> system_term =
            (p.rho0.entries() * (p.system[k + 1].entries() - p.system[k - 1].entries()) *
             p.system[k].entries().adjoint())
                .trace();
        const Complex<double> ancilla_term =
            (rho_a_t * (p.ancilla[k + 1].entries() - p.ancilla[k - 1].entries()) *
             p.ancilla[k].entries().adjoint())
                .trace();
        worst = std::max(worst, std::abs(system_term + ancilla_term) / (2.0 * dt));
    }
    return worst;
}

/// Build the cyclic process that carries a thermal state of the family around
/// the loop while keeping the purified amplitude horizontal: the system leg
/// is the parallel-transport unitary, the phase factors are the partial
/// holonomy of the transported state path, and the ancilla leg is whatever
/// the purification needs to realize those phase factors,
/// U_a(t_k) = U_s(t_k)^dag V(t_k). Both parallel-transport residuals and the
/// phase-factor balance are verified against `residual_tolerance` (calibrated
/// for n_steps = 4000; coarser grids need a looser bound).
inline DualProcess build_dual_process(const HamiltonianFamily& family,
                                      const ParameterLoop& loop, const DensityMatrix& rho0,
                                      double residual_tolerance = 1e-4) {
    // The process is unitary on the state only if the family is isospectral
    // along the loop.
    const VectorXr<double> levels0 = family_frame(family, loop.points().front()).eigenvalues;
    for (const SpherePoint& p : loop.points()) {
        const VectorXr<double> levels = family_frame(family, p).eigenvalues;
        if (max_abs(levels - levels0) > 1e-10) {
            throw NonUnitaryProcess(
                "family eigenvalues drift along the loop (max |dE| = " +
                std::to_string(max_abs(levels - levels0)) +
                "); the thermal path is not unitarily connected");
        }
    }

    const TransportUnitary tu = transport_unitary(family, loop, rho0, residual_tolerance);
    const std::size_t n = loop.n_steps();
    const double dt = 1.0 / static_cast<double>(n);

    // State path rho(t_k) = U_s(t_k) rho(0) U_s(t_k)^dag, built spectrally so
    // the eigenvalues are carried exactly.
    const Spectrum& spec0 = rho0.spectrum();
    std::vector<DensityMatrix> rhos;
    rhos.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        UnitaryMatrix rotated(
            (tu.steps[k].entries() * spec0.eigenvectors.entries()).eval());
        rhos.emplace_back(Spectrum{spec0.eigenvalues, std::move(rotated)}, rho0.beta());
    }
    if (max_abs(rho0.entries() * tu.steps.back().entries() -
                tu.steps.back().entries() * rho0.entries()) > 1e-8) {
        throw ToleranceExceeded("the transported state does not commute with the initial "
                                "one at the end of the loop; the process is not cyclic");
    }

    std::vector<UnitaryMatrix> phase_factors = holonomy_partials(rhos);
    std::vector<UnitaryMatrix> ancilla;
    ancilla.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        ancilla.emplace_back(
            (tu.steps[k].entries().adjoint() * phase_factors[k].entries()).eval());
    }

    DualProcess process{tu.steps, std::move(ancilla), std::move(phase_factors), rho0,
                        DensityMatrix(HermitianMatrix(rho0.entries().transpose().eval()))};

    const double amplitude_residual = uhlmann_residual(dual_process_amplitudes(process), dt);
    if (amplitude_residual > residual_tolerance) {
        throw ToleranceExceeded("amplitude parallel-transport residual " +
                                std::to_string(amplitude_residual) + " exceeds tolerance " +
                                std::to_string(residual_tolerance));
    }
    const double factor_residual = phase_factor_residual(process, dt);
    if (factor_residual > residual_tolerance) {
        throw ToleranceExceeded("phase-factor parallel-transport residual " +
                                std::to_string(factor_residual) + " exceeds tolerance " +
                                std::to_string(residual_tolerance));
    }
    return process;
}

}  // namespace phases
