#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "phases/errors.hpp"
#include "phases/types.hpp"

namespace phases {

/// Point on the parameter sphere in polar coordinates (radians).
struct SpherePoint {
    double theta;
    double phi;
};

/// Coordinate chart a loop is expressed in. `standard` is the usual chart
/// (theta in [0, pi], phi free); `extended` doubles the polar range
/// (theta in [0, 2pi), phi in [0, pi]) so a meridian can pass straight through
/// both poles without a coordinate singularity: (theta, phi) and
/// (2pi - theta, phi + pi) label the same physical point.
enum class LoopConvention { standard, extended };

namespace detail {

/// Unit vector of the physical sphere point named by (theta, phi); the map is
/// chart-agnostic, so it identifies points that coincide modulo either
/// convention's identifications.
inline Eigen::Vector3d unit_vector(const SpherePoint& p) {
    return {std::sin(p.theta) * std::cos(p.phi), std::sin(p.theta) * std::sin(p.phi),
            std::cos(p.theta)};
}

}  // namespace detail

/// Discretized closed curve on the parameter sphere. Points are stored with
/// continuously accumulated angles (a loop of winding omega ends at an angle
/// 2*pi*omega past its start), so chart ranges are conventions for the base
/// point, not bounds on the stored values.
class ParameterLoop {
public:
    ParameterLoop(LoopConvention convention, std::vector<SpherePoint> points, int omega)
        : convention_(convention), points_(std::move(points)), omega_(omega) {
        if (omega_ < 1) {
            throw DomainError("loop winding count must be >= 1, got " + std::to_string(omega_));
        }
        if (points_.size() < 2) {
            throw DomainError("a loop needs at least 2 points");
        }
        for (const SpherePoint& p : points_) {
            if (!std::isfinite(p.theta) || !std::isfinite(p.phi)) {
                throw DomainError("loop contains a non-finite coordinate");
            }
        }
        const Eigen::Vector3d gap =
            detail::unit_vector(points_.front()) - detail::unit_vector(points_.back());
        if (gap.cwiseAbs().maxCoeff() > 1e-12) {
            throw NonClosedLoop("loop endpoints name different sphere points (gap " +
                                std::to_string(gap.cwiseAbs().maxCoeff()) + ")");
        }
        if (convention_ == LoopConvention::extended) {
            double total_dtheta = 0.0;
            double max_dtheta = 0.0;
            double max_dphi = 0.0;
            for (std::size_t k = 0; k + 1 < points_.size(); ++k) {
                const double dtheta = std::abs(points_[k + 1].theta - points_[k].theta);
                const double dphi = std::abs(points_[k + 1].phi - points_[k].phi);
                total_dtheta += dtheta;
                max_dtheta = std::max(max_dtheta, dtheta);
                max_dphi = std::max(max_dphi, dphi);
            }
            if (std::abs(total_dtheta - 2.0 * pi * omega_) > 1e-12) {
                throw DomainError("extended-convention loop has total polar variation " +
                                  std::to_string(total_dtheta) + " but winding count " +
                                  std::to_string(omega_) + " requires 2*pi*omega");
            }
            if (max_dphi > max_dtheta * max_dtheta) {
                throw DomainError("extended-convention loop moves in longitude faster than the "
                                  "quadratic per-step bound allows (max |dphi| = " +
                                  std::to_string(max_dphi) + ", bound " +
                                  std::to_string(max_dtheta * max_dtheta) + ")");
            }
        }
    }

    LoopConvention convention() const { return convention_; }
    const std::vector<SpherePoint>& points() const { return points_; }
    int omega() const { return omega_; }
    std::size_t n_steps() const { return points_.size() - 1; }

private:
    LoopConvention convention_;
    std::vector<SpherePoint> points_;
    int omega_;
};

/// Meridian loop through both poles at fixed longitude phi0: theta runs
/// uniformly from 0 to 2*pi*omega in the extended convention.
inline ParameterLoop meridian_loop(double phi0, int omega, int n_steps) {
    if (!(phi0 >= 0.0 && phi0 <= pi)) {
        throw InvalidLongitude("meridian longitude must lie in [0, pi], got " +
                               std::to_string(phi0));
    }
    if (n_steps < 8) {
        throw DomainError("n_steps must be >= 8, got " + std::to_string(n_steps));
    }
    if (omega < 1) {
        throw DomainError("winding count must be >= 1, got " + std::to_string(omega));
    }
    std::vector<SpherePoint> points(static_cast<std::size_t>(n_steps) + 1);
    for (int k = 0; k <= n_steps; ++k) {
        points[static_cast<std::size_t>(k)] = {2.0 * pi * omega * k / n_steps, phi0};
    }
    return ParameterLoop(LoopConvention::extended, std::move(points), omega);
}

/// Equator loop: phi runs uniformly from 0 to 2*pi*omega at theta = pi/2.
inline ParameterLoop equator_loop(int omega, int n_steps) {
    if (n_steps < 8) {
        throw DomainError("n_steps must be >= 8, got " + std::to_string(n_steps));
    }
    if (omega < 1) {
        throw DomainError("winding count must be >= 1, got " + std::to_string(omega));
    }
    std::vector<SpherePoint> points(static_cast<std::size_t>(n_steps) + 1);
    for (int k = 0; k <= n_steps; ++k) {
        points[static_cast<std::size_t>(k)] = {pi / 2.0, 2.0 * pi * omega * k / n_steps};
    }
    return ParameterLoop(LoopConvention::standard, std::move(points), omega);
}

/// Result of the solid-angle line integral. Extended-convention loops hold
/// longitude fixed by construction, so the integrand vanishes identically
/// there; that case is reported through the flag rather than as an error.
struct SolidAngleResult {
    double value;
    bool extended_convention;
};

/// Trapezoidal evaluation of (1/2) * closed integral of (1 - cos theta) dphi
/// over the discretized loop.
inline SolidAngleResult solid_angle_phase(const ParameterLoop& loop) {
    if (loop.convention() == LoopConvention::extended) {
        return {0.0, true};
    }
    const std::vector<SpherePoint>& p = loop.points();
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        const double f0 = 1.0 - std::cos(p[k].theta);
        const double f1 = 1.0 - std::cos(p[k + 1].theta);
        sum += 0.5 * (f0 + f1) / 2.0 * (p[k + 1].phi - p[k].phi);
    }
    return {sum, false};
}

}  // namespace phases
