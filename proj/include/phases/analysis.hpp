#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "phases/errors.hpp"
#include "phases/family.hpp"
#include "phases/interferometric.hpp"
#include "phases/loops.hpp"
#include "phases/mixed_state.hpp"
#include "phases/models.hpp"
#include "phases/phase_result.hpp"
#include "phases/types.hpp"
#include "phases/uhlmann.hpp"

namespace phases {

enum class PhaseKind { interferometric, uhlmann };
enum class Method { closed, numeric };
enum class GridSpacing { linear, logarithmic };

/// One temperature sample of a sweep. A row that could not be evaluated keeps
/// its temperature, NaNs every value field, and records the error code; a row
/// landing exactly on a transition stays a valid row with phase = NaN and
/// g = +infinity (the amplitude itself is well defined there).
struct SweepRow {
    double temperature = std::numeric_limits<double>::quiet_NaN();
    double re_g = std::numeric_limits<double>::quiet_NaN();
    double im_g = std::numeric_limits<double>::quiet_NaN();
    double visibility = std::numeric_limits<double>::quiet_NaN();
    double g = std::numeric_limits<double>::quiet_NaN();
    double phase = std::numeric_limits<double>::quiet_NaN();
    std::string error_code;
};

struct FindTcResult {
    double tc;
    int iterations;
    double visibility_at_tc;
};

namespace detail {

/// Prepared evaluator of the phase amplitude G(T) for one model, phase kind,
/// and method; temperature-independent work (the loop, the family, and for
/// the interferometric numeric path the transported frame itself) is hoisted
/// so sweeps and bisections pay it once. Safe to call concurrently once
/// constructed.
class PhaseEvaluator {
public:
    PhaseEvaluator(const ModelConfig& config, PhaseKind kind, Method method, int n_steps,
                   bool with_residuals)
        : config_(config),
          kind_(kind),
          method_(method),
          with_residuals_(with_residuals),
          loop_(build_loop(config, kind, method, n_steps)) {
        if (method_ == Method::numeric) {
            ModelConfig numeric = config_;
            if (kind_ == PhaseKind::uhlmann && config_.kind == ModelKind::two_level) {
                // The spin-half amplitude formulas measure R as the full level
                // splitting, while the family coefficient splits levels by
                // twice itself; the matching family carries R/2.
                numeric.r = config_.r / 2.0;
            }
            family_ = family(numeric);
            if (kind_ == PhaseKind::interferometric) {
                // The transported frame does not depend on the temperature:
                // build it once and trace each thermal state against it.
                const DensityMatrix reference =
                    gibbs_state(family_.hamiltonian(loop_.points().front()), 1.0);
                transport_ = transport_unitary(family_, loop_, reference);
                if (with_residuals_) {
                    frames_ = loop_frames(family_, loop_);
                }
            }
        }
    }

    PhaseResult operator()(double temperature) const {
        if (!(temperature > 0.0) || !std::isfinite(temperature)) {
            throw DomainError("temperature must be positive and finite, got " +
                              std::to_string(temperature));
        }
        const double beta = 1.0 / temperature;
        if (method_ == Method::closed) {
            return closed_amplitude(beta);
        }
        return kind_ == PhaseKind::interferometric ? numeric_interferometric(beta)
                                                   : numeric_uhlmann(beta);
    }

private:
    static ParameterLoop build_loop(const ModelConfig& config, PhaseKind kind, Method method,
                                    int n_steps) {
        if (n_steps < 8) {
            throw DomainError("n_steps must be >= 8 per winding, got " +
                              std::to_string(n_steps));
        }
        if (method == Method::closed) {
            const bool covered =
                config.loop_kind == LoopKind::meridian ||
                (config.kind == ModelKind::two_level && kind == PhaseKind::interferometric);
            if (!covered) {
                throw DomainError(
                    "no closed form for this model/loop/phase combination: closed forms "
                    "cover meridian loops plus the two-level interferometric equator");
            }
        }
        return make_loop(config, n_steps * config.omega);
    }

    PhaseResult closed_amplitude(double beta) const {
        if (kind_ == PhaseKind::interferometric) {
            return config_.kind == ModelKind::two_level
                       ? theta_I_two_level(beta, config_.r, loop_)
                       : theta_I_three_level(beta, config_.r, config_.omega);
        }
        return config_.kind == ModelKind::two_level
                   ? theta_U_spin_half(beta, config_.r, config_.omega)
                   : g_uhlmann_three_level(beta, config_.r, config_.omega);
    }

    PhaseResult numeric_interferometric(double beta) const {
        const DensityMatrix rho0 =
            gibbs_state(family_.hamiltonian(loop_.points().front()), beta);
        PhaseResult r = total_phase(rho0, transport_.steps.back());
        if (with_residuals_) {
            r.residuals["phase_drift"] =
                parallel_residual_interferometric(transport_, frames_, dt());
        }
        return r;
    }

    PhaseResult numeric_uhlmann(double beta) const {
        std::vector<DensityMatrix> rhos;
        rhos.reserve(loop_.points().size());
        for (const SpherePoint& p : loop_.points()) {
            rhos.push_back(gibbs_state(family_.hamiltonian(p), beta));
        }
        const std::vector<UnitaryMatrix> partials = holonomy_partials(rhos);
        PhaseResult r = uhlmann_phase(rhos.front(), partials.back());
        if (with_residuals_) {
            std::vector<Amplitude> ws;
            ws.reserve(rhos.size());
            for (std::size_t k = 0; k < rhos.size(); ++k) {
                ws.emplace_back(rhos[k].sqrt().entries() * partials[k].entries(),
                                partials[k]);
            }
            r.residuals["amplitude_parallelity"] = uhlmann_residual(ws, dt());
        }
        return r;
    }

    double dt() const { return 1.0 / static_cast<double>(loop_.n_steps()); }

    ModelConfig config_;
    PhaseKind kind_;
    Method method_;
    bool with_residuals_;
    ParameterLoop loop_;
    HamiltonianFamily family_;
    TransportUnitary transport_;
    std::vector<Spectrum> frames_;
};

inline SweepRow evaluate_row(const PhaseEvaluator& evaluate, double temperature) {
    SweepRow row;
    row.temperature = temperature;
    PhaseResult result;
    try {
        result = evaluate(temperature);
    } catch (const ZeroAmplitude& e) {
        result = from_amplitude_or_flag(e.amplitude());
    } catch (const Error& e) {
        row.error_code = e.code();
        return row;
    }
    row.re_g = result.amplitude.real();
    row.im_g = result.amplitude.imag();
    row.visibility = result.visibility;
    row.g = result.generating_function;
    row.phase = result.phase;
    return row;
}

}  // namespace detail

/// Phase amplitude for one model, phase kind, method, and temperature.
/// `n_steps` counts grid steps per winding (the loop resolves each traversal
/// equally well whatever omega is). With `with_residuals`, numeric methods
/// attach their parallel-transport diagnostic ("phase_drift" for the
/// interferometric transport, "amplitude_parallelity" for the holonomy lift);
/// closed forms have nothing to diagnose and leave the map empty.
inline PhaseResult evaluate_phase(const ModelConfig& config, PhaseKind kind, Method method,
                                  double temperature, int n_steps = 2000,
                                  bool with_residuals = false) {
    return detail::PhaseEvaluator(config, kind, method, n_steps, with_residuals)(temperature);
}

/// Strictly ascending temperature grid, endpoints included exactly.
inline std::vector<double> temperature_grid(double t_min, double t_max, int n_points,
                                            GridSpacing spacing = GridSpacing::linear) {
    if (!(t_min > 0.0) || !std::isfinite(t_max) || !(t_max > t_min)) {
        throw DomainError("temperature grid needs 0 < t_min < t_max");
    }
    if (n_points < 2) {
        throw DomainError("temperature grid needs at least 2 points, got " +
                          std::to_string(n_points));
    }
    std::vector<double> grid(static_cast<std::size_t>(n_points));
    const double lo = spacing == GridSpacing::linear ? t_min : std::log(t_min);
    const double hi = spacing == GridSpacing::linear ? t_max : std::log(t_max);
    for (int k = 0; k < n_points; ++k) {
        const double x = lo + (hi - lo) * k / (n_points - 1);
        grid[static_cast<std::size_t>(k)] =
            spacing == GridSpacing::linear ? x : std::exp(x);
    }
    grid.front() = t_min;
    grid.back() = t_max;
    return grid;
}

/// Evaluate the phase over a temperature grid, one row per temperature. Rows
/// are independent; `threads` workers pull row indices from a shared counter
/// and write into preallocated slots, so the output is identical whatever the
/// thread count. Evaluation errors mark their row instead of aborting the
/// sweep; a vanishing amplitude is a valid row (phase NaN, g +infinity).
inline std::vector<SweepRow> sweep(const ModelConfig& config, PhaseKind kind, Method method,
                                   const std::vector<double>& t_grid, int n_steps = 2000,
                                   int threads = 1) {
    if (t_grid.empty()) {
        throw DomainError("sweep needs at least one temperature");
    }
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        if (!(t_grid[k] > 0.0) || !std::isfinite(t_grid[k])) {
            throw DomainError("sweep temperatures must be positive and finite");
        }
        if (k > 0 && !(t_grid[k] > t_grid[k - 1])) {
            throw DomainError("sweep temperatures must be strictly ascending");
        }
    }
    if (threads < 1) {
        throw DomainError("thread count must be >= 1, got " + std::to_string(threads));
    }

    const detail::PhaseEvaluator evaluate(config, kind, method, n_steps, false);
    std::vector<SweepRow> rows(t_grid.size());
    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(threads), rows.size());
    if (n_workers <= 1) {
        for (std::size_t k = 0; k < rows.size(); ++k) {
            rows[k] = detail::evaluate_row(evaluate, t_grid[k]);
        }
        return rows;
    }

    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (std::size_t k = next.fetch_add(1); k < rows.size(); k = next.fetch_add(1)) {
            rows[k] = detail::evaluate_row(evaluate, t_grid[k]);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
        pool.emplace_back(worker);
    }
    for (std::thread& t : pool) {
        t.join();
    }
    return rows;
}

/// Number of phase discontinuities in a sweep: adjacent pairs of defined rows
/// whose phases differ by more than a quarter turn (the implemented models
/// jump by exactly pi). Undefined rows (errors, exact transitions) do not
/// break the chain; the comparison always reaches back to the last defined
/// phase.
inline int count_phase_jumps(const std::vector<SweepRow>& rows) {
    int jumps = 0;
    const double* previous = nullptr;
    for (const SweepRow& row : rows) {
        if (!row.error_code.empty() || std::isnan(row.phase)) {
            continue;
        }
        if (previous != nullptr) {
            double d = std::fmod(row.phase - *previous, 2.0 * pi);
            if (d <= -pi) d += 2.0 * pi;
            if (d > pi) d -= 2.0 * pi;
            if (std::abs(d) > pi / 2.0) {
                ++jumps;
            }
        }
        previous = &row.phase;
    }
    return jumps;
}

/// Locate a transition temperature by bisection on Re G. Requires a genuine
/// sign change over the bracket and a real amplitude (|Im G| < 1e-10) — the
/// implemented models' G is real, and a complex amplitude would need
/// visibility minimization instead. Bisection continues until the bracket is
/// within `tol` AND the returned point's visibility is at most 1e-6, so the
/// result is usable as "a zero of the visibility" either way.
inline FindTcResult find_tc(const ModelConfig& config, PhaseKind kind, Method method,
                            double t_lo, double t_hi, double tol, int n_steps = 2000) {
    if (!(t_lo > 0.0) || !std::isfinite(t_hi) || !(t_hi > t_lo)) {
        throw DomainError("bisection bracket needs 0 < t_lo < t_hi");
    }
    if (!(tol > 0.0)) {
        throw DomainError("bisection tolerance must be positive");
    }

    const detail::PhaseEvaluator evaluate(config, kind, method, n_steps, false);
    const auto real_amplitude = [&](double t, double& visibility) {
        try {
            const PhaseResult r = evaluate(t);
            if (std::abs(r.amplitude.imag()) >= 1e-10) {
                throw ComplexAmplitude(
                    "amplitude is not real at T = " + std::to_string(t) +
                    " (Im G = " + std::to_string(r.amplitude.imag()) +
                    "); sign bisection does not apply");
            }
            visibility = r.visibility;
            return r.amplitude.real();
        } catch (const ZeroAmplitude&) {
            visibility = 0.0;
            return 0.0;
        }
    };

    double ignored = 0.0;
    double g_lo = real_amplitude(t_lo, ignored);
    const double g_hi = real_amplitude(t_hi, ignored);
    if (g_lo * g_hi >= 0.0) {
        throw NoBracket("Re G has the same sign at both bracket ends (" +
                        std::to_string(g_lo) + " and " + std::to_string(g_hi) +
                        "); no transition is enclosed");
    }

    int iterations = 0;
    double tc = 0.5 * (t_lo + t_hi);
    double visibility = std::numeric_limits<double>::infinity();
    while ((t_hi - t_lo) > tol || visibility > 1e-6) {
        if (++iterations > 200) {
            throw DomainError("bisection failed to converge within 200 iterations");
        }
        tc = 0.5 * (t_lo + t_hi);
        const double g_mid = real_amplitude(tc, visibility);
        if (g_mid == 0.0) {
            break;
        }
        if ((g_mid > 0.0) == (g_lo > 0.0)) {
            t_lo = tc;
            g_lo = g_mid;
        } else {
            t_hi = tc;
        }
    }
    return FindTcResult{tc, iterations, visibility};
}

}  // namespace phases
