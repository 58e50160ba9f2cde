#include "phases/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "phases/analysis.hpp"

namespace phases::cli {
namespace {

using nlohmann::ordered_json;

constexpr double unset = std::numeric_limits<double>::quiet_NaN();

/// Configuration or flag problem: reported on stderr, exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string model = "three-level";
    std::string phase = "interferometric";
    std::string loop = "meridian";
    double phi0 = 0.0;
    int omega = 1;
    double r = 1.0;
    std::string method = "closed";
    int n_steps = 0;  // 0 = per-command default (2000; verify uses 4000)
    int threads = 0;  // 0 = available parallelism
    std::string config_path;
    std::string output;
    std::string format = "csv";
    bool strict = false;

    double temperature = unset;          // phase
    double t_min = unset;                // sweep
    double t_max = unset;
    int n_points = 0;
    std::string spacing = "linear";
    double bracket_lo = unset;           // find-tc
    double bracket_hi = unset;
    double tol = 1e-10;
    std::string check;                   // verify
};

void require(bool condition, const std::string& message) {
    if (!condition) {
        throw UsageError(message);
    }
}

// ---------------------------------------------------------------------------
// Config file: JSON object whose keys mirror the long flag names; values act
// as defaults, and explicit command-line flags override them.
// ---------------------------------------------------------------------------

std::string config_path_from(const std::vector<std::string>& args) {
    for (std::size_t k = 0; k < args.size(); ++k) {
        if (args[k] == "--config") {
            require(k + 1 < args.size(), "--config requires a path");
            return args[k + 1];
        }
        if (args[k].rfind("--config=", 0) == 0) {
            return args[k].substr(9);
        }
    }
    return "";
}

void apply_config(Options& o, const std::string& path) {
    nlohmann::json doc;
    try {
        std::ifstream in(path);
        require(in.good(), "config: cannot open \"" + path + "\"");
        doc = nlohmann::json::parse(in);
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        // Covers JSON syntax errors and stream failures (e.g. the path names a
        // directory, where libstdc++ throws from the filebuf on first read).
        throw UsageError("config: cannot read \"" + path + "\": " + e.what());
    }
    require(doc.is_object(), "config: top-level value must be an object");
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "model") {
                o.model = value.get<std::string>();
            } else if (key == "phase") {
                o.phase = value.get<std::string>();
            } else if (key == "loop") {
                o.loop = value.get<std::string>();
            } else if (key == "phi0") {
                o.phi0 = value.get<double>();
            } else if (key == "omega") {
                o.omega = value.get<int>();
            } else if (key == "R") {
                o.r = value.get<double>();
            } else if (key == "method") {
                o.method = value.get<std::string>();
            } else if (key == "n_steps") {
                o.n_steps = value.get<int>();
            } else if (key == "threads") {
                o.threads = value.get<int>();
            } else if (key == "output") {
                o.output = value.get<std::string>();
            } else if (key == "format") {
                o.format = value.get<std::string>();
            } else if (key == "strict") {
                o.strict = value.get<bool>();
            } else if (key == "T") {
                o.temperature = value.get<double>();
            } else if (key == "t_min") {
                o.t_min = value.get<double>();
            } else if (key == "t_max") {
                o.t_max = value.get<double>();
            } else if (key == "n_points") {
                o.n_points = value.get<int>();
            } else if (key == "spacing") {
                o.spacing = value.get<std::string>();
            } else if (key == "bracket_lo") {
                o.bracket_lo = value.get<double>();
            } else if (key == "bracket_hi") {
                o.bracket_hi = value.get<double>();
            } else if (key == "tol") {
                o.tol = value.get<double>();
            } else if (key == "check") {
                o.check = value.get<std::string>();
            } else {
                throw UsageError("config: unknown key \"" + key + "\"");
            }
        } catch (const nlohmann::json::exception& e) {
            throw UsageError("config: bad value for \"" + key + "\": " + e.what());
        }
    }
}

// ---------------------------------------------------------------------------
// Option decoding
// ---------------------------------------------------------------------------

ModelConfig to_model(const Options& o) {
    ModelConfig c;
    require(o.model == "two-level" || o.model == "three-level",
            "--model must be two-level or three-level, got \"" + o.model + "\"");
    c.kind = o.model == "two-level" ? ModelKind::two_level : ModelKind::three_level;
    require(o.loop == "equator" || o.loop == "meridian",
            "--loop must be equator or meridian, got \"" + o.loop + "\"");
    c.loop_kind = o.loop == "equator" ? LoopKind::equator : LoopKind::meridian;
    require(o.omega >= 1, "--omega must be >= 1");
    c.omega = o.omega;
    require(std::isfinite(o.r) && o.r > 0.0, "--R must be finite and > 0");
    c.r = o.r;
    c.phi0 = o.phi0;
    return c;
}

std::vector<PhaseKind> requested_kinds(const Options& o) {
    if (o.phase == "interferometric") {
        return {PhaseKind::interferometric};
    }
    if (o.phase == "uhlmann") {
        return {PhaseKind::uhlmann};
    }
    require(o.phase == "both",
            "--phase must be interferometric, uhlmann, or both, got \"" + o.phase + "\"");
    return {PhaseKind::interferometric, PhaseKind::uhlmann};
}

std::vector<Method> requested_methods(const Options& o) {
    if (o.method == "closed") {
        return {Method::closed};
    }
    if (o.method == "numeric") {
        return {Method::numeric};
    }
    require(o.method == "both",
            "--method must be closed, numeric, or both, got \"" + o.method + "\"");
    return {Method::closed, Method::numeric};
}

/// Mirrors the analysis module's closed-form coverage so an unsupported
/// combination is a usage error (exit 1), not a numerical failure.
void require_closed_coverage(const ModelConfig& c, const std::vector<PhaseKind>& kinds,
                             const std::vector<Method>& methods) {
    const bool wants_closed =
        std::find(methods.begin(), methods.end(), Method::closed) != methods.end();
    if (!wants_closed || c.loop_kind == LoopKind::meridian) {
        return;
    }
    for (PhaseKind kind : kinds) {
        require(c.kind == ModelKind::two_level && kind == PhaseKind::interferometric,
                "no closed form for this model/loop/phase combination (closed forms cover "
                "meridian loops plus the two-level interferometric equator); "
                "use --method numeric");
    }
}

int resolve_n_steps(const Options& o, int fallback) {
    const int n = o.n_steps == 0 ? fallback : o.n_steps;
    require(n >= 8, "--n-steps must be >= 8");
    return n;
}

int resolve_threads(const Options& o) {
    if (o.threads > 0) {
        return o.threads;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// ---------------------------------------------------------------------------
// Output formatting
// ---------------------------------------------------------------------------

std::string f17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string f3e(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

void put_result(ordered_json& j, const std::string& prefix, const PhaseResult& r) {
    j[prefix + "re_g"] = r.amplitude.real();
    j[prefix + "im_g"] = r.amplitude.imag();
    j[prefix + "phase"] = r.phase;
    j[prefix + "visibility"] = r.visibility;
    j[prefix + "g"] = r.generating_function;
}

ordered_json residuals_json(const PhaseResult& r) {
    ordered_json j = ordered_json::object();
    for (const auto& [name, value] : r.residuals) {
        j[name] = value;
    }
    return j;
}

ordered_json rows_json(const std::vector<SweepRow>& rows) {
    ordered_json list = ordered_json::array();
    for (const SweepRow& row : rows) {
        ordered_json j;
        j["T"] = row.temperature;
        j["re_g"] = row.re_g;
        j["im_g"] = row.im_g;
        j["visibility"] = row.visibility;
        j["g"] = row.g;
        j["phase"] = row.phase;
        if (!row.error_code.empty()) {
            j["error"] = row.error_code;
        }
        list.push_back(std::move(j));
    }
    return list;
}

/// Writes the payload to --output when given, else to stdout.
void deliver(const Options& o, std::ostream& out, const std::string& payload) {
    if (o.output.empty()) {
        out << payload;
        return;
    }
    std::ofstream file(o.output, std::ios::binary);
    require(file.good(), "cannot open output file \"" + o.output + "\"");
    file << payload;
    require(file.good(), "failed writing output file \"" + o.output + "\"");
}

int emit_error(std::ostream& out, const Error& e) {
    ordered_json j;
    j["error"]["code"] = e.code();
    j["error"]["message"] = e.what();
    out << j.dump(2) << "\n";
    return 2;
}

// ---------------------------------------------------------------------------
// phase
// ---------------------------------------------------------------------------

int cmd_phase(const Options& o, std::ostream& out) {
    const ModelConfig config = to_model(o);
    const std::vector<PhaseKind> kinds = requested_kinds(o);
    const std::vector<Method> methods = requested_methods(o);
    require(kinds.size() == 1 || methods.size() == 1,
            "choose at most one of --phase both and --method both");
    require_closed_coverage(config, kinds, methods);
    require(std::isfinite(o.temperature) && o.temperature > 0.0,
            "phase requires --T > 0");
    const int n_steps = resolve_n_steps(o, 2000);

    const auto evaluate = [&](PhaseKind kind, Method method) {
        return evaluate_phase(config, kind, method, o.temperature, n_steps,
                              method == Method::numeric);
    };

    ordered_json j;
    if (methods.size() == 2) {
        const PhaseResult closed = evaluate(kinds.front(), Method::closed);
        const PhaseResult numeric = evaluate(kinds.front(), Method::numeric);
        put_result(j, "closed_", closed);
        put_result(j, "numeric_", numeric);
        j["abs_diff"] = std::abs(closed.amplitude - numeric.amplitude);
        j["residuals"] = residuals_json(numeric);
    } else if (kinds.size() == 2) {
        const PhaseResult inter = evaluate(PhaseKind::interferometric, methods.front());
        const PhaseResult uhl = evaluate(PhaseKind::uhlmann, methods.front());
        put_result(j, "interferometric_", inter);
        j["interferometric_residuals"] = residuals_json(inter);
        put_result(j, "uhlmann_", uhl);
        j["uhlmann_residuals"] = residuals_json(uhl);
    } else {
        const PhaseResult r = evaluate(kinds.front(), methods.front());
        put_result(j, "", r);
        j["residuals"] = residuals_json(r);
    }
    deliver(o, out, j.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

int cmd_sweep(const Options& o, std::ostream& out) {
    const ModelConfig config = to_model(o);
    const std::vector<PhaseKind> kinds = requested_kinds(o);
    const std::vector<Method> methods = requested_methods(o);
    require(kinds.size() == 1, "sweep requires a single --phase (not both)");
    require(methods.size() == 1, "sweep requires a single --method (not both)");
    require_closed_coverage(config, kinds, methods);
    require(std::isfinite(o.t_min) && o.t_min > 0.0, "sweep requires --t-min > 0");
    require(std::isfinite(o.t_max) && o.t_max > o.t_min, "sweep requires --t-max > --t-min");
    require(o.n_points >= 2, "sweep requires --n-points >= 2");
    require(o.spacing == "linear" || o.spacing == "log",
            "--spacing must be linear or log, got \"" + o.spacing + "\"");
    require(o.format == "csv" || o.format == "json",
            "--format must be csv or json, got \"" + o.format + "\"");
    const int n_steps = resolve_n_steps(o, 2000);
    const int threads = resolve_threads(o);

    const GridSpacing spacing =
        o.spacing == "linear" ? GridSpacing::linear : GridSpacing::logarithmic;
    const std::vector<double> grid = temperature_grid(o.t_min, o.t_max, o.n_points, spacing);
    const std::vector<SweepRow> rows =
        sweep(config, kinds.front(), methods.front(), grid, n_steps, threads);

    if (o.strict) {
        for (const SweepRow& row : rows) {
            if (!row.error_code.empty()) {
                throw Error(row.error_code,
                            "row at T = " + f17(row.temperature) +
                                " failed (" + row.error_code + ") and --strict is set");
            }
        }
    }
    if (o.format == "csv") {
        std::string payload = "T,re_g,im_g,visibility,g,phase\n";
        char buf[512];
        for (const SweepRow& row : rows) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                          row.temperature, row.re_g, row.im_g, row.visibility, row.g,
                          row.phase);
            payload += buf;
        }
        deliver(o, out, payload);
    } else {
        deliver(o, out, rows_json(rows).dump(2) + "\n");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// find-tc
// ---------------------------------------------------------------------------

int cmd_find_tc(const Options& o, std::ostream& out) {
    const ModelConfig config = to_model(o);
    const std::vector<PhaseKind> kinds = requested_kinds(o);
    const std::vector<Method> methods = requested_methods(o);
    require(kinds.size() == 1, "find-tc requires a single --phase (not both)");
    require(methods.size() == 1, "find-tc requires a single --method (not both)");
    require_closed_coverage(config, kinds, methods);
    require(std::isfinite(o.bracket_lo) && o.bracket_lo > 0.0,
            "find-tc requires --bracket-lo > 0");
    require(std::isfinite(o.bracket_hi) && o.bracket_hi > o.bracket_lo,
            "find-tc requires --bracket-hi > --bracket-lo");
    require(std::isfinite(o.tol) && o.tol > 0.0, "find-tc requires --tol > 0");
    const int n_steps = resolve_n_steps(o, 2000);

    const FindTcResult r = find_tc(config, kinds.front(), methods.front(), o.bracket_lo,
                                   o.bracket_hi, o.tol, n_steps);
    ordered_json j;
    j["tc"] = r.tc;
    j["iterations"] = r.iterations;
    j["visibility_at_tc"] = r.visibility_at_tc;
    deliver(o, out, j.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct CheckOutcome {
    bool pass;
    std::string detail;
};

using CheckFn = std::function<CheckOutcome(int)>;  // argument: n_steps per winding

CheckOutcome at_most(double measured, double limit, const std::string& label) {
    return {measured <= limit, label + " " + f3e(measured) + " (limit " + f3e(limit) + ")"};
}

CheckOutcome at_least(double measured, double limit, const std::string& label) {
    return {measured >= limit, label + " " + f3e(measured) + " (needs >= " + f3e(limit) + ")"};
}

ModelConfig verify_model(ModelKind kind, LoopKind loop, int omega) {
    ModelConfig c;
    c.kind = kind;
    c.loop_kind = loop;
    c.omega = omega;
    c.r = 1.0;
    c.phi0 = 0.0;
    return c;
}

std::vector<DensityMatrix> gibbs_path(const HamiltonianFamily& fam, const ParameterLoop& loop,
                                      double beta) {
    std::vector<DensityMatrix> rhos;
    rhos.reserve(loop.points().size());
    for (const SpherePoint& p : loop.points()) {
        rhos.push_back(gibbs_state(fam.hamiltonian(p), beta));
    }
    return rhos;
}

DualProcess meridian_dual_process(double beta, int n_total) {
    const ModelConfig c = verify_model(ModelKind::three_level, LoopKind::meridian, 1);
    const HamiltonianFamily fam = family(c);
    const ParameterLoop loop = make_loop(c, n_total);
    const DensityMatrix rho0 = gibbs_state(fam.hamiltonian(loop.points().front()), beta);
    return build_dual_process(fam, loop, rho0, 1e300);
}

double holonomy_closed_error(double beta, int omega, int n_total) {
    const ModelConfig c = verify_model(ModelKind::three_level, LoopKind::meridian, omega);
    const HamiltonianFamily fam = family(c);
    const ParameterLoop loop = make_loop(c, n_total);
    const UnitaryMatrix u = holonomy(gibbs_path(fam, loop, beta));
    const UnitaryMatrix closed = uhlmann_holonomy_three_level(beta, 1.0, omega, 0.0);
    return max_abs((u.entries() - closed.entries()).eval());
}

std::vector<std::pair<std::string, CheckFn>> build_checks() {
    std::vector<std::pair<std::string, CheckFn>> checks;

    checks.emplace_back("interferometric-parallelity", [](int n) {
        const ModelConfig c = verify_model(ModelKind::three_level, LoopKind::meridian, 1);
        const HamiltonianFamily fam = family(c);
        const ParameterLoop loop = make_loop(c, n);
        const DensityMatrix rho0 = gibbs_state(fam.hamiltonian(loop.points().front()), 2.0);
        const TransportUnitary tu = transport_unitary(fam, loop, rho0, 1e300);
        const double r = parallel_residual_interferometric(tu, loop_frames(fam, loop),
                                                           1.0 / loop.n_steps());
        return at_most(r, 1e-4, "trace-condition residual");
    });

    checks.emplace_back("amplitude-parallelity", [](int n) {
        const DualProcess dp = meridian_dual_process(2.0, n);
        const double r =
            uhlmann_residual(dual_process_amplitudes(dp), 1.0 / static_cast<double>(n));
        return at_most(r, 1e-4, "amplitude-parallelity residual");
    });

    checks.emplace_back("phase-factor-parallelity", [](int n) {
        const DualProcess dp = meridian_dual_process(2.0, n);
        const double r = phase_factor_residual(dp, 1.0 / static_cast<double>(n));
        return at_most(r, 1e-4, "phase-factor residual");
    });

    checks.emplace_back("ancilla-balance", [](int n) {
        const DualProcess dp = meridian_dual_process(2.0, n);
        const double r = ancilla_balance_residual(dp, 1.0 / static_cast<double>(n));
        return at_most(r, 1e-4, "generator-balance residual");
    });

    checks.emplace_back("holonomy-closed-match", [](int n) {
        double worst = 0.0;
        for (double beta : {0.5, 1.0, 2.0, 4.0}) {
            for (int omega : {1, 2}) {
                worst = std::max(worst, holonomy_closed_error(beta, omega, n * omega));
            }
        }
        return at_most(worst, 1e-6, "max holonomy error over grid");
    });

    checks.emplace_back("holonomy-convergence", [](int) {
        const double ratio = holonomy_closed_error(2.0, 1, 250) /
                             holonomy_closed_error(2.0, 1, 500);
        return at_least(ratio, 3.7, "error ratio under step doubling");
    });

    checks.emplace_back("amplitude-parallelity-convergence", [](int) {
        const auto residual = [](int n) {
            const DualProcess dp = meridian_dual_process(2.0, n);
            return uhlmann_residual(dual_process_amplitudes(dp), 1.0 / n);
        };
        return at_least(residual(500) / residual(1000), 1.9,
                        "residual ratio under step doubling");
    });

    checks.emplace_back("phase-factor-convergence", [](int) {
        const auto residual = [](int n) {
            return phase_factor_residual(meridian_dual_process(2.0, n), 1.0 / n);
        };
        return at_least(residual(500) / residual(1000), 1.9,
                        "residual ratio under step doubling");
    });

    checks.emplace_back("transport-step-convergence", [](int) {
        const ModelConfig c = verify_model(ModelKind::three_level, LoopKind::meridian, 1);
        const HamiltonianFamily fam = family(c);
        const auto defect = [&](int n) {
            const ParameterLoop loop = make_loop(c, n);
            const DensityMatrix rho0 =
                gibbs_state(fam.hamiltonian(loop.points().front()), 2.0);
            const TransportUnitary tu = transport_unitary(fam, loop, rho0, 1e300);
            return transport_step_defect(tu.steps, loop_frames(fam, loop), 1.0 / n);
        };
        return at_least(defect(500) / defect(1000), 1.9,
                        "step-defect ratio under step doubling");
    });

    checks.emplace_back("equator-closed-match", [](int n) {
        const ModelConfig c = verify_model(ModelKind::two_level, LoopKind::equator, 1);
        const HamiltonianFamily fam = family(c);
        const ParameterLoop loop = make_loop(c, n);
        const DensityMatrix rho0 = gibbs_state(fam.hamiltonian(loop.points().front()), 1.0);
        const TransportUnitary tu = transport_unitary(fam, loop, rho0, 1e300);
        const PhaseResult numeric = total_phase(rho0, tu.steps.back());
        const PhaseResult closed = theta_I_two_level(1.0, 1.0, loop);
        return at_most(std::abs(numeric.amplitude - closed.amplitude), 1e-9,
                       "amplitude difference");
    });

    checks.emplace_back("spin-half-closed-match", [](int n) {
        ModelConfig c = verify_model(ModelKind::two_level, LoopKind::meridian, 1);
        c.r = 0.5;  // closed form counts the full splitting R = 1
        const HamiltonianFamily fam = family(c);
        const ParameterLoop loop = make_loop(c, n);
        const std::vector<DensityMatrix> rhos = gibbs_path(fam, loop, 3.0);
        const PhaseResult numeric = uhlmann_phase(rhos.front(), holonomy(rhos));
        const PhaseResult closed = theta_U_spin_half(3.0, 1.0, 1);
        return at_most(std::abs(numeric.amplitude - closed.amplitude), 1e-6,
                       "amplitude difference");
    });

    checks.emplace_back("meridian-endpoint", [](int n) {
        double worst = 0.0;
        for (int omega : {1, 2, 3}) {
            const ModelConfig c = verify_model(ModelKind::three_level, LoopKind::meridian,
                                               omega);
            const HamiltonianFamily fam = family(c);
            const ParameterLoop loop = make_loop(c, n * omega);
            const DensityMatrix rho0 =
                gibbs_state(fam.hamiltonian(loop.points().front()), 2.0);
            const TransportUnitary tu = transport_unitary(fam, loop, rho0, 1e300);
            const double sign = omega % 2 == 0 ? 1.0 : -1.0;
            Matrix target = Matrix::Zero(3, 3);
            target(0, 0) = sign;
            target(1, 1) = sign;
            target(2, 2) = 1.0;
            worst = std::max(worst,
                             max_abs((tu.steps.back().entries() - target).eval()));
        }
        return at_most(worst, 1e-6, "max endpoint deviation over windings 1..3");
    });

    checks.emplace_back("gauge-invariance", [](int) {
        const ModelConfig c = verify_model(ModelKind::three_level, LoopKind::meridian, 1);
        const HamiltonianFamily fam = family(c);
        HamiltonianFamily regauged = fam;
        const auto base = fam.frame;
        regauged.frame = [base](const SpherePoint& p) {
            Spectrum s = base(p);
            Matrix v = s.eigenvectors.entries();
            for (Eigen::Index col = 0; col < v.cols(); ++col) {
                v.col(col) *= std::polar(1.0, (0.3 + 0.7 * static_cast<double>(col)) *
                                                  p.theta);
            }
            return Spectrum{s.eigenvalues, UnitaryMatrix(std::move(v))};
        };
        const ParameterLoop loop = make_loop(c, 200);
        const DensityMatrix rho0 = gibbs_state(fam.hamiltonian(loop.points().front()), 1.5);
        const PhaseResult a =
            total_phase(rho0, transport_unitary(fam, loop, rho0, 1e300).steps.back());
        const PhaseResult b =
            total_phase(rho0, transport_unitary(regauged, loop, rho0, 1e300).steps.back());
        return at_most(std::abs(a.amplitude - b.amplitude), 1e-12,
                       "amplitude shift under eigenvector rephasing");
    });

    checks.emplace_back("gibbs-covariance", [](int) {
        using C = Complex<double>;
        Matrix h(3, 3);
        h << C(1.0, 0.0), C(0.2, 0.1), C(-0.3, 0.4),  //
            C(0.2, -0.1), C(-0.5, 0.0), C(0.1, -0.2),  //
            C(-0.3, -0.4), C(0.1, 0.2), C(0.7, 0.0);
        Matrix g(3, 3);
        g << C(0.4, 0.0), C(-0.1, 0.3), C(0.2, -0.2),  //
            C(-0.1, -0.3), C(0.9, 0.0), C(0.0, 0.5),   //
            C(0.2, 0.2), C(0.0, -0.5), C(-0.6, 0.0);
        const Matrix u = expm_antihermitian((C(0, 1) * g).eval());
        const DensityMatrix rotated =
            gibbs_state(HermitianMatrix((u * h * u.adjoint()).eval()), 1.7);
        const DensityMatrix plain = gibbs_state(HermitianMatrix(h), 1.7);
        const Matrix expected = u * plain.entries() * u.adjoint();
        return at_most(max_abs((rotated.entries() - expected).eval()), 1e-12,
                       "covariance defect");
    });

    checks.emplace_back("chi-range", [](int) {
        double previous = chi_three_level(0.0, 1.0);
        if (previous != 0.0) {
            return CheckOutcome{false, "chi(0) = " + f3e(previous) + " (expected 0)"};
        }
        bool monotone = true;
        for (int k = 1; k <= 64; ++k) {
            const double value = chi_three_level(0.25 * k, 1.0);
            monotone = monotone && value >= previous && value < 1.0;
            previous = value;
        }
        if (!monotone) {
            return CheckOutcome{false, "chi is not monotone in [0, 1) on beta R in [0, 16]"};
        }
        return at_least(previous, 1.0 - 1e-6, "chi(beta R = 16)");
    });

    checks.emplace_back("degenerate-decoupling", [](int) {
        const ModelConfig c = verify_model(ModelKind::three_level, LoopKind::meridian, 1);
        const DensityMatrix a = gibbs_state(hamiltonian(c, SpherePoint{0.3, 0.0}), 2.0);
        const DensityMatrix b = gibbs_state(hamiltonian(c, SpherePoint{0.301, 0.0}), 2.0);
        const UhlmannStep step = uhlmann_connection_step(a, b);
        const Matrix in_basis = step.spectrum().eigenvectors.entries().adjoint() *
                                step.a() * step.spectrum().eigenvectors.entries();
        // Ascending eigenvalue order puts the two equal Gibbs weights first.
        return at_most(std::abs(in_basis(0, 1)), 1e-12, "degenerate-pair coupling");
    });

    checks.emplace_back("holonomy-unitarity", [](int) {
        const ModelConfig c = verify_model(ModelKind::three_level, LoopKind::meridian, 1);
        const HamiltonianFamily fam = family(c);
        const ParameterLoop loop = make_loop(c, 1000);
        const UnitaryMatrix u = holonomy(gibbs_path(fam, loop, 2.0));
        const Matrix defect =
            u.entries().adjoint() * u.entries() - Matrix::Identity(3, 3);
        return at_most(max_abs(defect.eval()), 1e-10, "unitarity defect");
    });

    checks.emplace_back("non-transitivity", [](int) {
        const ModelConfig c = verify_model(ModelKind::three_level, LoopKind::meridian, 1);
        const HamiltonianFamily fam = family(c);
        const ParameterLoop loop = make_loop(c, 2000);
        const std::vector<DensityMatrix> rhos = gibbs_path(fam, loop, 2.0);
        const std::vector<UnitaryMatrix> partials = holonomy_partials(rhos);
        const Matrix w0 = rhos.front().sqrt().entries();
        const Matrix wt = rhos.back().sqrt().entries() * partials.back().entries();
        const double witness =
            max_abs((w0 * wt.adjoint() - wt * w0.adjoint()).eval());
        return at_least(witness, 1e-3, "loop-closure asymmetry at beta R = 2");
    });

    checks.emplace_back("two-level-no-jump", [](int) {
        const std::vector<double> grid = temperature_grid(0.2, 5.0, 100);
        const int equator_jumps = count_phase_jumps(
            sweep(verify_model(ModelKind::two_level, LoopKind::equator, 1),
                  PhaseKind::interferometric, Method::closed, grid));
        const int meridian_jumps = count_phase_jumps(
            sweep(verify_model(ModelKind::two_level, LoopKind::meridian, 1),
                  PhaseKind::interferometric, Method::closed, grid));
        const bool pass = equator_jumps == 0 && meridian_jumps == 0;
        return CheckOutcome{pass, "phase jumps: equator " + std::to_string(equator_jumps) +
                                      ", meridian " + std::to_string(meridian_jumps) +
                                      " (expected 0)"};
    });

    checks.emplace_back("overlap-phase-match", [](int) {
        const DualProcess dp = meridian_dual_process(2.0, 1000);
        const std::vector<Amplitude> ws = dual_process_amplitudes(dp);
        const Complex<double> overlap = purified_overlap(ws.front(), ws.back());
        const PhaseResult via_holonomy = uhlmann_phase(dp.rho0, dp.phase_factors.back());
        const double phase_gap =
            std::abs(std::remainder(std::arg(overlap) - via_holonomy.phase, 2.0 * pi));
        const double visibility_gap = std::abs(std::abs(overlap) - via_holonomy.visibility);
        return at_most(std::max(phase_gap, visibility_gap), 1e-8,
                       "overlap-vs-holonomy gap");
    });

    return checks;
}

int cmd_verify(const Options& o, std::ostream& out) {
    const int n_steps = resolve_n_steps(o, 4000);
    std::vector<std::pair<std::string, CheckFn>> checks = build_checks();
    if (!o.check.empty()) {
        std::vector<std::pair<std::string, CheckFn>> selected;
        for (auto& entry : checks) {
            if (entry.first == o.check) {
                selected.push_back(std::move(entry));
            }
        }
        if (selected.empty()) {
            std::string names;
            for (const auto& entry : checks) {
                names += "\n  " + entry.first;
            }
            throw UsageError("unknown check \"" + o.check + "\"; available:" + names);
        }
        checks = std::move(selected);
    }

    int failed = 0;
    std::string failed_names;
    char line[256];
    for (const auto& [name, fn] : checks) {
        const CheckOutcome outcome = fn(n_steps);
        std::snprintf(line, sizeof line, "%s %-36s %s\n", outcome.pass ? "PASS" : "FAIL",
                      name.c_str(), outcome.detail.c_str());
        out << line;
        if (!outcome.pass) {
            ++failed;
            failed_names += (failed_names.empty() ? "" : ", ") + name;
        }
    }
    std::snprintf(line, sizeof line, "%zu checks: %zu passed, %d failed\n", checks.size(),
                  checks.size() - failed, failed);
    out << line;
    if (failed > 0) {
        out << "failed: " << failed_names << "\n";
        return 2;
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Interferometric and Uhlmann geometric phases of thermal states on "
                 "parameter-space loops"};
    app.require_subcommand(1);

    const auto add_common = [&o](CLI::App* cmd) {
        cmd->add_option("--model", o.model, "two-level | three-level");
        cmd->add_option("--phase", o.phase, "interferometric | uhlmann | both");
        cmd->add_option("--loop", o.loop, "equator | meridian");
        cmd->add_option("--phi0", o.phi0, "meridian longitude in [0, pi]");
        cmd->add_option("--omega", o.omega, "loop winding count (>= 1)");
        cmd->add_option("--R", o.r, "level splitting scale (> 0)");
        cmd->add_option("--method", o.method, "closed | numeric | both");
        cmd->add_option("--n-steps", o.n_steps,
                        "grid steps per winding (default 2000; verify: 4000)");
        cmd->add_option("--threads", o.threads, "sweep workers (default: all cores)");
        cmd->add_option("--config", o.config_path, "JSON config file (flags override)");
        cmd->add_option("--output", o.output, "write payload to this file instead of stdout");
        cmd->add_option("--format", o.format, "sweep output format: csv | json");
        cmd->add_flag("--strict", o.strict, "sweep: fail (exit 2) on any error row");
    };

    CLI::App* phase_cmd =
        app.add_subcommand("phase", "evaluate one phase at one temperature (JSON)");
    add_common(phase_cmd);
    phase_cmd->add_option("--T", o.temperature, "temperature (> 0, units of R)");

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "evaluate a phase over a temperature grid (CSV/JSON)");
    add_common(sweep_cmd);
    sweep_cmd->add_option("--t-min", o.t_min, "lowest temperature (> 0)");
    sweep_cmd->add_option("--t-max", o.t_max, "highest temperature");
    sweep_cmd->add_option("--n-points", o.n_points, "grid size (>= 2)");
    sweep_cmd->add_option("--spacing", o.spacing, "linear | log");

    CLI::App* find_tc_cmd = app.add_subcommand(
        "find-tc", "bisect a transition temperature inside a bracket (JSON)");
    add_common(find_tc_cmd);
    find_tc_cmd->add_option("--bracket-lo", o.bracket_lo, "bracket lower edge (> 0)");
    find_tc_cmd->add_option("--bracket-hi", o.bracket_hi, "bracket upper edge");
    find_tc_cmd->add_option("--tol", o.tol, "bracket width tolerance (default 1e-10)");

    CLI::App* verify_cmd =
        app.add_subcommand("verify", "run the numerical verification suite");
    add_common(verify_cmd);
    verify_cmd->add_option("--check", o.check, "run a single named check");

    try {
        const std::string config_path = config_path_from(args);
        if (!config_path.empty()) {
            apply_config(o, config_path);
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);

        require(o.threads >= 0, "--threads must be >= 1 (or 0 for all cores)");
        if (app.got_subcommand(phase_cmd)) {
            return cmd_phase(o, out);
        }
        if (app.got_subcommand(sweep_cmd)) {
            return cmd_sweep(o, out);
        }
        if (app.got_subcommand(find_tc_cmd)) {
            return cmd_find_tc(o, out);
        }
        return cmd_verify(o, out);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        return emit_error(out, e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace phases::cli
