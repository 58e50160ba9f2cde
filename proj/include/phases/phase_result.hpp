#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "phases/errors.hpp"
#include "phases/hermitian.hpp"
#include "phases/types.hpp"

namespace phases {

/// Outcome of a phase computation: the complex transition amplitude G, its
/// principal argument, the visibility |G|, and the generating function
/// g = -(1/L) ln|G|^2. `phase` is NaN exactly when the visibility is below
/// 1e-14 (the amplitude carries no usable argument there), in which case
/// `generating_function` is +infinity.
struct PhaseResult {
    Complex<double> amplitude;
    double phase;
    double visibility;
    double generating_function;
    std::map<std::string, double> residuals;
};

/// g = -(1/L) ln|G|^2, +infinity below the zero-visibility threshold.
/// Negative results within roundoff of zero (|G| = 1 + eps) clamp to 0.
inline double generating_function(Complex<double> amplitude, int l = 1) {
    if (l < 1) {
        throw DomainError("generating function needs l >= 1, got " + std::to_string(l));
    }
    const double modulus = std::abs(amplitude);
    if (modulus < 1e-14) {
        return std::numeric_limits<double>::infinity();
    }
    const double g = -2.0 * std::log(modulus) / static_cast<double>(l);
    return (g < 0.0 && g > -1e-12) ? 0.0 : g;
}

/// Build a PhaseResult from an amplitude; throws ZeroAmplitude (carrying the
/// amplitude) when the visibility is below 1e-14 and the phase is undefined.
inline PhaseResult from_amplitude(Complex<double> amplitude, int l = 1) {
    PhaseResult r;
    r.amplitude = amplitude;
    r.phase = principal_arg(amplitude);  // throws ZeroAmplitude below 1e-14
    r.visibility = std::abs(amplitude);
    r.generating_function = generating_function(amplitude, l);
    return r;
}

/// Like from_amplitude, but a vanishing amplitude yields the flagged result
/// (phase NaN, generating function +infinity) instead of an error. Sweeps use
/// this so a row landing exactly on a transition stays a row.
inline PhaseResult from_amplitude_or_flag(Complex<double> amplitude, int l = 1) {
    PhaseResult r;
    r.amplitude = amplitude;
    r.visibility = std::abs(amplitude);
    r.generating_function = generating_function(amplitude, l);
    r.phase = r.visibility < 1e-14 ? std::numeric_limits<double>::quiet_NaN()
                                   : principal_arg(amplitude);
    return r;
}

}  // namespace phases
