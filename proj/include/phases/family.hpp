#pragma once

#include <functional>
#include <string>

#include "phases/errors.hpp"
#include "phases/hermitian.hpp"
#include "phases/loops.hpp"

namespace phases {

/// Parameter-to-Hamiltonian map over the sphere, optionally carrying an
/// analytic eigenframe. When `frame` is set it must return eigenvectors
/// column-ordered by ascending eigenvalue and varying continuously with the
/// parameters (this is what makes transport through degenerate levels
/// well-defined). When it is null, consumers diagonalize numerically; the
/// per-point eigenvector phases are then arbitrary, which downstream
/// overlap-product algorithms tolerate, but the level ORDER must be
/// unambiguous, so near-degenerate spectra are rejected.
struct HamiltonianFamily {
    Eigen::Index dim;
    std::function<HermitianMatrix(const SpherePoint&)> hamiltonian;
    std::function<Spectrum(const SpherePoint&)> frame;
};

/// Instantaneous spectrum at p: the analytic frame when available, otherwise
/// a guarded numerical diagonalization.
inline Spectrum family_frame(const HamiltonianFamily& family, const SpherePoint& p) {
    if (family.frame) {
        return family.frame(p);
    }
    Spectrum s = eig_hermitian(family.hamiltonian(p));
    const VectorXr<double>& ev = s.eigenvalues;
    const double spread = ev[ev.size() - 1] - ev[0];
    for (Eigen::Index k = 0; k + 1 < ev.size(); ++k) {
        if (ev[k + 1] - ev[k] < 1e-8 * spread) {
            throw DegenerateLevel(
                "levels " + std::to_string(k) + " and " + std::to_string(k + 1) +
                " are degenerate at (theta=" + std::to_string(p.theta) + ", phi=" +
                std::to_string(p.phi) + ") and no analytic eigenframe was supplied");
        }
    }
    return s;
}

}  // namespace phases
