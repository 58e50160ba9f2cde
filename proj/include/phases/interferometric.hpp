#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "phases/errors.hpp"
#include "phases/family.hpp"
#include "phases/hermitian.hpp"
#include "phases/loops.hpp"
#include "phases/mixed_state.hpp"
#include "phases/phase_result.hpp"
#include "phases/types.hpp"

namespace phases {

/// Discrete parallel-transport process: the unitary U(t_k) at every grid point
/// (U(t_0) = I exactly) plus the per-level geometric phases accumulated over
/// the full closed loop. Time runs over tau = 1 with t_k = k / n_steps.
struct TransportUnitary {
    std::vector<UnitaryMatrix> steps;
    VectorXr<double> level_phases;
};

/// Instantaneous frames at every stored loop point.
inline std::vector<Spectrum> loop_frames(const HamiltonianFamily& family,
                                         const ParameterLoop& loop) {
    std::vector<Spectrum> frames;
    frames.reserve(loop.points().size());
    for (const SpherePoint& p : loop.points()) {
        frames.push_back(family_frame(family, p));
    }
    return frames;
}

namespace detail {

/// Overlap of one level's eigenvector between two frames, guarded against
/// grids so coarse that the level cannot be tracked.
inline Complex<double> level_overlap(const Spectrum& a, const Spectrum& b, Eigen::Index level) {
    const Complex<double> o = a.eigenvectors.entries().col(level).dot(
        b.eigenvectors.entries().col(level));
    if (std::abs(o) < 1e-12) {
        throw DomainError("consecutive eigenvectors of level " + std::to_string(level) +
                          " are orthogonal: the grid is too coarse to track the level");
    }
    return o;
}

}  // namespace detail

/// Discrete geometric phase of one level around the closed loop:
/// -Im log of the cyclic overlap-product chain, summed per segment without
/// modular reduction. The chain runs through every stored point and wraps
/// from the final point back to the first, so per-point eigenvector phases
/// cancel and the result is gauge-invariant.
inline double berry_phase_level(const HamiltonianFamily& family, const ParameterLoop& loop,
                                Eigen::Index level) {
    if (level < 0 || level >= family.dim) {
        throw DimensionMismatch("level index " + std::to_string(level) +
                                " out of range for dimension " + std::to_string(family.dim));
    }
    const std::vector<Spectrum> frames = loop_frames(family, loop);
    double beta = 0.0;
    for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
        beta -= std::arg(detail::level_overlap(frames[k], frames[k + 1], level));
    }
    beta -= std::arg(detail::level_overlap(frames.back(), frames.front(), level));
    return beta;
}

/// Largest per-level phase drift of a step sequence:
/// max over k, n of |arg <n(t_k)| U(t_{k+1}) U(t_k)^dag |n(t_k)>| / dt.
/// This is the discrete violation of the per-level parallel-transport
/// condition: any process accumulating phase on an instantaneous eigenstate
/// shows up here at its phase rate, while a faithful transport sits at
/// roundoff. A vanishing diagonal element counts as a maximal violation.
inline double parallel_residual_interferometric(const std::vector<UnitaryMatrix>& steps,
                                                const std::vector<Spectrum>& frames,
                                                double dt) {
    if (steps.size() != frames.size() || steps.size() < 2) {
        throw DimensionMismatch("step and frame sequences must align (>= 2 points)");
    }
    if (!(dt > 0.0)) {
        throw DomainError("dt must be positive");
    }
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
        const Matrix m = steps[k + 1].entries() * steps[k].entries().adjoint();
        for (Eigen::Index level = 0; level < m.rows(); ++level) {
            const auto v = frames[k].eigenvectors.entries().col(level);
            const Complex<double> d = v.dot(m * v);
            const double drift = std::abs(d) < 1e-12 ? pi : std::abs(std::arg(d));
            worst = std::max(worst, drift / dt);
        }
    }
    return worst;
}

inline double parallel_residual_interferometric(const TransportUnitary& u,
                                                const std::vector<Spectrum>& frames,
                                                double dt) {
    return parallel_residual_interferometric(u.steps, frames, dt);
}

/// Full deviation of the step diagonal from unity:
/// max over k, n of |<n(t_k)| U(t_{k+1}) U(t_k)^dag |n(t_k)> - 1| / dt.
/// Unlike the phase drift this also sees the norm contraction of the discrete
/// step (first order in dt), so it measures the discretization error of the
/// transport itself and halves under step doubling.
inline double transport_step_defect(const std::vector<UnitaryMatrix>& steps,
                                    const std::vector<Spectrum>& frames, double dt) {
    if (steps.size() != frames.size() || steps.size() < 2) {
        throw DimensionMismatch("step and frame sequences must align (>= 2 points)");
    }
    if (!(dt > 0.0)) {
        throw DomainError("dt must be positive");
    }
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
        const Matrix m = steps[k + 1].entries() * steps[k].entries().adjoint();
        for (Eigen::Index level = 0; level < m.rows(); ++level) {
            const auto v = frames[k].eigenvectors.entries().col(level);
            const Complex<double> d = v.dot(m * v);
            worst = std::max(worst, std::abs(d - Complex<double>(1, 0)) / dt);
        }
    }
    return worst;
}

/// Parallel-transport unitary of the family around the loop:
/// U(t_k) = sum_n e^{i beta_n(0 -> t_k)} |n(t_k)><n(t_0)| with beta_n the
/// partial discrete geometric phase. U(t_0) is the identity exactly; the
/// final step carries each initial eigenvector to its transported image.
/// level_phases holds the closed-loop phases (with the wrap-around segment),
/// i.e. berry_phase_level for every level.
inline TransportUnitary transport_unitary(const HamiltonianFamily& family,
                                          const ParameterLoop& loop,
                                          const DensityMatrix& rho0,
                                          double residual_tolerance = 1e-4) {
    if (rho0.dim() != family.dim) {
        throw DimensionMismatch("initial state dimension does not match the family");
    }
    const HermitianMatrix h0 = family.hamiltonian(loop.points().front());
    const Matrix commutator =
        rho0.entries() * h0.entries() - h0.entries() * rho0.entries();
    if (max_abs(commutator) > 1e-10) {
        throw DomainError("initial state does not commute with the Hamiltonian at the "
                          "loop start (not a thermal state of it)");
    }

    const std::vector<Spectrum> frames = loop_frames(family, loop);
    const std::size_t n = loop.n_steps();
    const double dt = 1.0 / static_cast<double>(n);
    const Eigen::Index dim = family.dim;

    TransportUnitary result;
    result.steps.reserve(n + 1);
    result.steps.emplace_back(Matrix::Identity(dim, dim));
    VectorXr<double> beta = VectorXr<double>::Zero(dim);
    const double step_tolerance = 1e-10 * static_cast<double>(n);
    for (std::size_t k = 1; k <= n; ++k) {
        for (Eigen::Index level = 0; level < dim; ++level) {
            beta[level] -= std::arg(detail::level_overlap(frames[k - 1], frames[k], level));
        }
        Matrix u = Matrix::Zero(dim, dim);
        for (Eigen::Index level = 0; level < dim; ++level) {
            u += std::polar(1.0, beta[level]) * frames[k].eigenvectors.entries().col(level) *
                 frames[0].eigenvectors.entries().col(level).adjoint();
        }
        result.steps.emplace_back(std::move(u), step_tolerance);
    }
    // Close the per-level phases with the wrap-around overlap.
    for (Eigen::Index level = 0; level < dim; ++level) {
        beta[level] -= std::arg(detail::level_overlap(frames[n], frames[0], level));
    }
    result.level_phases = std::move(beta);

    const double residual = parallel_residual_interferometric(result.steps, frames, dt);
    if (residual > residual_tolerance) {
        throw ToleranceExceeded("transport phase drift " + std::to_string(residual) +
                                " exceeds tolerance " + std::to_string(residual_tolerance));
    }
    return result;
}

/// Phase amplitude of an ensemble of individually transported levels:
/// G = sum_n lambda_n e^{i beta_n}.
inline PhaseResult interferometric_phase(const VectorXr<double>& weights,
                                         const VectorXr<double>& phases) {
    if (weights.size() != phases.size()) {
        throw DimensionMismatch("weights and phases must have equal length");
    }
    if (weights.size() == 0) {
        throw DimensionMismatch("empty ensemble");
    }
    double sum = 0.0;
    for (Eigen::Index k = 0; k < weights.size(); ++k) {
        if (!(weights[k] > 0.0)) {
            throw DomainError("ensemble weights must be strictly positive");
        }
        sum += weights[k];
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw DomainError("ensemble weights must sum to 1, got " + std::to_string(sum));
    }
    Complex<double> g(0, 0);
    for (Eigen::Index k = 0; k < weights.size(); ++k) {
        g += weights[k] * std::polar(1.0, phases[k]);
    }
    return from_amplitude(g);
}

/// Phase amplitude of a state under one unitary: G = Tr(rho(0) U).
inline PhaseResult total_phase(const DensityMatrix& rho0, const UnitaryMatrix& u) {
    if (rho0.dim() != u.dim()) {
        throw DimensionMismatch("state and unitary dimensions differ");
    }
    return from_amplitude((rho0.entries() * u.entries()).trace());
}

/// Accumulated dynamical phase -integral of Tr(rho(t) H(t)) dt, trapezoidal
/// on the common grid.
inline double dynamical_phase(const std::vector<DensityMatrix>& rhos,
                              const std::vector<HermitianMatrix>& hams, double dt) {
    if (rhos.size() != hams.size() || rhos.size() < 2) {
        throw DimensionMismatch("state and Hamiltonian sequences must align (>= 2 points)");
    }
    if (!(dt > 0.0)) {
        throw DomainError("dt must be positive");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < rhos.size(); ++k) {
        if (rhos[k].dim() != hams[k].dim()) {
            throw DimensionMismatch("state/Hamiltonian dimension mismatch at index " +
                                    std::to_string(k));
        }
        const double f = (rhos[k].entries() * hams[k].entries()).trace().real();
        const bool endpoint = k == 0 || k + 1 == rhos.size();
        sum += endpoint ? f / 2.0 : f;
    }
    return -sum * dt;
}

}  // namespace phases
