#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace phases {

/// Base class for all library errors. Every error carries a stable snake_case
/// code (used by the CLI's structured JSON error output) plus a human message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Input matrix violates the Hermiticity invariant.
class NonHermitianInput : public Error {
public:
    explicit NonHermitianInput(const std::string& message)
        : Error("non_hermitian_input", message) {}
};

/// Input matrix violates the unitarity invariant.
class NonUnitaryInput : public Error {
public:
    explicit NonUnitaryInput(const std::string& message)
        : Error("non_unitary_input", message) {}
};

/// Operands have incompatible dimensions.
class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& message)
        : Error("dimension_mismatch", message) {}
};

/// A scalar function is undefined on (part of) the spectrum, or an argument
/// lies outside an operation's domain.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& message)
        : Error("domain_error", message) {}
};

/// The complex amplitude is numerically zero, so its argument (the phase) is
/// undefined. This is the signature of a visibility zero at a transition
/// point; callers must handle it explicitly. The offending amplitude is
/// carried along so callers can still report re/im parts.
class ZeroAmplitude : public Error {
public:
    explicit ZeroAmplitude(std::complex<double> amplitude,
                           const std::string& message =
                               "amplitude below 1e-14: phase undefined (visibility zero)")
        : Error("zero_amplitude", message), amplitude_(amplitude) {}

    std::complex<double> amplitude() const noexcept { return amplitude_; }

private:
    std::complex<double> amplitude_;
};

/// Boltzmann weights are not representable in double precision even after
/// log-sum-exp normalization.
class Overflow : public Error {
public:
    explicit Overflow(const std::string& message) : Error("overflow", message) {}
};

/// A density matrix (or W W†) is not strictly positive definite.
class RankDeficient : public Error {
public:
    explicit RankDeficient(const std::string& message)
        : Error("rank_deficient", message) {}
};

/// An eigenvalue gap closed along the loop and no analytic eigenvector family
/// was supplied, so per-level transport is ill-defined.
class DegenerateLevel : public Error {
public:
    explicit DegenerateLevel(const std::string& message)
        : Error("degenerate_level", message) {}
};

/// The sampled curve does not close (modulo the declared coordinate
/// identifications).
class NonClosedLoop : public Error {
public:
    explicit NonClosedLoop(const std::string& message)
        : Error("non_closed_loop", message) {}
};

/// A residual check exceeded its tolerance.
class ToleranceExceeded : public Error {
public:
    explicit ToleranceExceeded(const std::string& message)
        : Error("tolerance_exceeded", message) {}
};

/// The density-matrix path is not isospectral (not a unitary process).
class NonUnitaryProcess : public Error {
public:
    explicit NonUnitaryProcess(const std::string& message)
        : Error("non_unitary_process", message) {}
};

/// Meridian longitude outside [0, pi].
class InvalidLongitude : public Error {
public:
    explicit InvalidLongitude(const std::string& message)
        : Error("invalid_longitude", message) {}
};

/// Root bracketing failed: Re G has the same sign at both bracket ends.
class NoBracket : public Error {
public:
    explicit NoBracket(const std::string& message) : Error("no_bracket", message) {}
};

/// The real-amplitude assumption behind bisection failed (|Im G| too large).
class ComplexAmplitude : public Error {
public:
    explicit ComplexAmplitude(const std::string& message)
        : Error("complex_amplitude", message) {}
};

}  // namespace phases
