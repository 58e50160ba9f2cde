#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "phases/cli.hpp"
#include "phases/types.hpp"

using nlohmann::json;

namespace {

struct RunOutcome {
    int exit_code;
    std::string out;
    std::string err;
};

RunOutcome run_cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = phases::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

json parse_out(const RunOutcome& r) { return json::parse(r.out); }

std::string temp_path(const std::string& name) {
    return std::string("/tmp/phases_cli_test_") + name;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    f << content;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string::size_type start = 0;
    while (start < text.size()) {
        const auto nl = text.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

}  // namespace

TEST_CASE("phase prints one JSON object with the expected keys and values") {
    const RunOutcome r = run_cli({"phase", "--model", "three-level", "--phase", "uhlmann",
                                  "--omega", "1", "--T", "0.5"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.err.empty());
    const json j = parse_out(r);
    CHECK(j["re_g"].get<double>() == doctest::Approx(-0.64161978527648955).epsilon(1e-12));
    CHECK(j["im_g"].get<double>() == doctest::Approx(0.0).scale(1).epsilon(1e-12));
    CHECK(j["phase"].get<double>() == doctest::Approx(phases::pi).epsilon(1e-12));
    CHECK(j["visibility"].get<double>() ==
          doctest::Approx(0.64161978527648955).epsilon(1e-12));
    CHECK(j["residuals"].is_object());
    // Key order is part of the output contract.
    const std::string& text = r.out;
    CHECK(text.find("re_g") < text.find("im_g"));
    CHECK(text.find("im_g") < text.find("\"phase\""));
    CHECK(text.find("\"phase\"") < text.find("visibility"));
    CHECK(text.find("visibility") < text.find("\"g\""));
    CHECK(text.find("\"g\"") < text.find("residuals"));
}

TEST_CASE("two-level equator phase stays pi even in the classical limit") {
    const RunOutcome r = run_cli({"phase", "--model", "two-level", "--phase",
                                  "interferometric", "--loop", "equator", "--T", "1e9"});
    REQUIRE(r.exit_code == 0);
    const json j = parse_out(r);
    CHECK(j["phase"].get<double>() == doctest::Approx(phases::pi).epsilon(1e-12));
    CHECK(j["re_g"].get<double>() == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("phase --method both reports both evaluations and their gap") {
    const RunOutcome r = run_cli({"phase", "--model", "three-level", "--phase", "uhlmann",
                                  "--method", "both", "--T", "0.7", "--n-steps", "4000"});
    REQUIRE(r.exit_code == 0);
    const json j = parse_out(r);
    CHECK(j.contains("closed_re_g"));
    CHECK(j.contains("numeric_re_g"));
    CHECK(j["abs_diff"].get<double>() < 1e-6);
    CHECK(j["residuals"].contains("amplitude_parallelity"));
    CHECK(j["closed_phase"].get<double>() ==
          doctest::Approx(j["numeric_phase"].get<double>()).epsilon(1e-9));
}

TEST_CASE("phase --phase both reports the two phases side by side") {
    const RunOutcome r =
        run_cli({"phase", "--model", "three-level", "--phase", "both", "--T", "0.5"});
    REQUIRE(r.exit_code == 0);
    const json j = parse_out(r);
    CHECK(j["interferometric_phase"].get<double>() == doctest::Approx(0.0).scale(1));
    CHECK(j["uhlmann_phase"].get<double>() == doctest::Approx(phases::pi).epsilon(1e-12));
    CHECK(j["interferometric_residuals"].is_object());
    CHECK(j["uhlmann_residuals"].is_object());
}

TEST_CASE("phase --method both --phase both is rejected as ambiguous") {
    const RunOutcome r = run_cli(
        {"phase", "--model", "three-level", "--phase", "both", "--method", "both", "--T", "1"});
    CHECK(r.exit_code == 1);
    CHECK(r.out.empty());
    CHECK(!r.err.empty());
}

TEST_CASE("identical invocations produce identical bytes") {
    const std::vector<std::string> args = {"phase",   "--model", "three-level",
                                           "--phase", "uhlmann", "--T",
                                           "0.8",     "--method", "numeric",
                                           "--n-steps", "200"};
    const RunOutcome a = run_cli(args);
    const RunOutcome b = run_cli(args);
    REQUIRE(a.exit_code == 0);
    CHECK(a.out == b.out);
}

TEST_CASE("sweep output is byte-identical across worker counts") {
    const auto args = [](const char* threads) {
        return std::vector<std::string>{
            "sweep",    "--model",  "three-level", "--phase",   "uhlmann", "--omega", "2",
            "--t-min",  "0.3",      "--t-max",     "2.0",       "--n-points", "48",
            "--threads", threads};
    };
    const RunOutcome one = run_cli(args("1"));
    const RunOutcome four = run_cli(args("4"));
    REQUIRE(one.exit_code == 0);
    REQUIRE(four.exit_code == 0);
    CHECK(one.out == four.out);
}

TEST_CASE("sweep CSV carries the documented header and full-precision rows") {
    const RunOutcome r =
        run_cli({"sweep", "--model", "three-level", "--phase", "uhlmann", "--t-min", "0.5",
                 "--t-max", "1.0", "--n-points", "5"});
    REQUIRE(r.exit_code == 0);
    const std::vector<std::string> lines = split_lines(r.out);
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "T,re_g,im_g,visibility,g,phase");
    CHECK(lines[1].substr(0, 4) == "0.5,");
    // 17 significant digits survive the round trip.
    CHECK(lines[1].find("-0.64161978527648944") != std::string::npos);
    CHECK(r.out.find('\r') == std::string::npos);
    CHECK(r.out.back() == '\n');
}

TEST_CASE("sweep rows that cannot be evaluated print literal nan") {
    const std::vector<std::string> args = {"sweep",    "--model",  "three-level",
                                           "--phase",  "uhlmann",  "--method",
                                           "numeric",  "--n-steps", "8",
                                           "--t-min",  "0.001",    "--t-max",
                                           "1.0",      "--n-points", "2"};
    const RunOutcome lax = run_cli(args);
    REQUIRE(lax.exit_code == 0);
    const std::vector<std::string> lines = split_lines(lax.out);
    REQUIRE(lines.size() == 3);
    CHECK(lines[1] == "0.001,nan,nan,nan,nan,nan");

    std::vector<std::string> strict = args;
    strict.push_back("--strict");
    const RunOutcome hard = run_cli(strict);
    CHECK(hard.exit_code == 2);
    const json j = parse_out(hard);
    CHECK(j["error"]["code"].get<std::string>() == "overflow");
}

TEST_CASE("sweep --format json emits an array and --output writes the file") {
    const std::string path = temp_path("rows.json");
    std::remove(path.c_str());
    const RunOutcome r = run_cli({"sweep", "--model", "three-level", "--phase", "uhlmann",
                                  "--t-min", "0.5", "--t-max", "1.0", "--n-points", "3",
                                  "--format", "json", "--output", path});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.empty());
    std::ifstream f(path);
    REQUIRE(f.good());
    const json rows = json::parse(f);
    REQUIRE(rows.is_array());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0]["T"].get<double>() == doctest::Approx(0.5));
    CHECK(rows[0]["phase"].get<double>() == doctest::Approx(phases::pi).epsilon(1e-12));
    std::remove(path.c_str());
}

TEST_CASE("find-tc brackets the even-winding interferometric transition") {
    const RunOutcome r =
        run_cli({"find-tc", "--model", "three-level", "--phase", "interferometric",
                 "--omega", "2", "--bracket-lo", "2", "--bracket-hi", "4"});
    REQUIRE(r.exit_code == 0);
    const json j = parse_out(r);
    CHECK(j["tc"].get<double>() == doctest::Approx(2.8853900817779268).epsilon(1e-9));
    CHECK(j["iterations"].get<int>() > 0);
    CHECK(j["visibility_at_tc"].get<double>() <= 1e-6);
}

TEST_CASE("find-tc locates the odd-winding amplitude transition") {
    const RunOutcome r = run_cli({"find-tc", "--model", "three-level", "--phase", "uhlmann",
                                  "--omega", "1", "--bracket-lo", "0.5", "--bracket-hi",
                                  "1.0"});
    REQUIRE(r.exit_code == 0);
    const json j = parse_out(r);
    const double tc = j["tc"].get<double>();
    CHECK(tc > 0.7333);
    CHECK(tc < 0.7343);
}

TEST_CASE("find-tc without an enclosed sign change reports no_bracket") {
    const RunOutcome r =
        run_cli({"find-tc", "--model", "three-level", "--phase", "interferometric",
                 "--omega", "1", "--bracket-lo", "0.5", "--bracket-hi", "2"});
    CHECK(r.exit_code == 2);
    const json j = parse_out(r);
    CHECK(j["error"]["code"].get<std::string>() == "no_bracket");
}

TEST_CASE("phase exactly on a transition surfaces zero_amplitude as exit 2") {
    const RunOutcome r =
        run_cli({"phase", "--model", "three-level", "--phase", "interferometric", "--omega",
                 "2", "--T", "2.8853900817779268"});
    CHECK(r.exit_code == 2);
    const json j = parse_out(r);
    CHECK(j["error"]["code"].get<std::string>() == "zero_amplitude");
    CHECK(j["error"]["message"].is_string());
}

TEST_CASE("config file supplies defaults and explicit flags override it") {
    const std::string path = temp_path("cfg.json");
    write_file(path, R"({"model":"three-level","phase":"uhlmann","omega":1,"T":0.5})");

    const RunOutcome base = run_cli({"phase", "--config", path});
    REQUIRE(base.exit_code == 0);
    CHECK(parse_out(base)["phase"].get<double>() ==
          doctest::Approx(phases::pi).epsilon(1e-12));

    const RunOutcome overridden = run_cli({"phase", "--config", path, "--T", "1.0"});
    REQUIRE(overridden.exit_code == 0);
    const json j = parse_out(overridden);
    CHECK(j["phase"].get<double>() == doctest::Approx(0.0).scale(1));
    CHECK(j["re_g"].get<double>() == doctest::Approx(0.50727042033157066).epsilon(1e-12));
    std::remove(path.c_str());
}

TEST_CASE("config rejects unknown keys, bad types, and missing files") {
    const std::string path = temp_path("bad_cfg.json");
    write_file(path, R"({"model":"three-level","bogus":1})");
    CHECK(run_cli({"phase", "--config", path, "--T", "1"}).exit_code == 1);
    write_file(path, R"({"omega":"three"})");
    CHECK(run_cli({"phase", "--config", path, "--T", "1"}).exit_code == 1);
    std::remove(path.c_str());
    CHECK(run_cli({"phase", "--config", path, "--T", "1"}).exit_code == 1);
    // A path naming a directory must be a clean usage error, not a stream crash.
    const RunOutcome dir = run_cli({"phase", "--config", "/tmp", "--T", "1"});
    CHECK(dir.exit_code == 1);
    CHECK(!dir.err.empty());
}

TEST_CASE("usage problems exit 1 with a message on stderr and nothing on stdout") {
    const std::vector<std::vector<std::string>> bad = {
        {"sweep", "--phase", "both", "--t-min", "1", "--t-max", "2", "--n-points", "3"},
        {"sweep", "--method", "both", "--t-min", "1", "--t-max", "2", "--n-points", "3"},
        {"sweep", "--t-min", "1", "--t-max", "2", "--n-points", "1"},
        {"sweep", "--t-min", "2", "--t-max", "1", "--n-points", "4"},
        {"phase", "--model", "three-level", "--loop", "equator", "--T", "1"},
        {"phase", "--model", "two-level", "--phase", "uhlmann", "--loop", "equator", "--T",
         "1"},
        {"phase", "--T", "1", "--frobnicate"},
        {"phase"},
        {"phase", "--T", "-2"},
        {"phase", "--T", "1", "--omega", "0"},
        {"phase", "--T", "1", "--R", "-1"},
        {"phase", "--T", "1", "--n-steps", "4"},
        {"find-tc", "--bracket-lo", "2", "--bracket-hi", "1"},
        {"find-tc", "--bracket-lo", "0.5", "--bracket-hi", "1", "--tol", "0"},
        {"verify", "--check", "not-a-check"},
        {"nonsense"},
        {},
    };
    for (const auto& args : bad) {
        const RunOutcome r = run_cli(args);
        CAPTURE(args.empty() ? std::string("<none>") : args.front());
        CHECK(r.exit_code == 1);
        CHECK(r.out.empty());
        CHECK(!r.err.empty());
    }
}

TEST_CASE("equator loops work numerically even where no closed form exists") {
    const RunOutcome r =
        run_cli({"phase", "--model", "three-level", "--phase", "uhlmann", "--loop",
                 "equator", "--method", "numeric", "--n-steps", "300", "--T", "1"});
    REQUIRE(r.exit_code == 0);
    const json j = parse_out(r);
    CHECK(std::isfinite(j["re_g"].get<double>()));
    CHECK(j["visibility"].get<double>() > 0.0);
}

TEST_CASE("help requests exit 0") {
    CHECK(run_cli({"--help"}).exit_code == 0);
    CHECK(run_cli({"phase", "--help"}).exit_code == 0);
}

TEST_CASE("verify --check runs exactly one named check") {
    const RunOutcome r = run_cli({"verify", "--check", "non-transitivity"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("PASS non-transitivity") != std::string::npos);
    CHECK(r.out.find("1 checks: 1 passed, 0 failed") != std::string::npos);
}

TEST_CASE("verify passes wholesale on its default grid and reports one line per check") {
    const RunOutcome r = run_cli({"verify"});
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(r.out.find("20 checks: 20 passed, 0 failed") != std::string::npos);
}

TEST_CASE("verify on a deliberately coarse grid fails the residual checks honestly") {
    const RunOutcome r = run_cli({"verify", "--n-steps", "16"});
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("FAIL amplitude-parallelity") != std::string::npos);
    CHECK(r.out.find("FAIL holonomy-closed-match") != std::string::npos);
    // Convergence-order checks run on their own fixed grids and still pass.
    CHECK(r.out.find("PASS holonomy-convergence") != std::string::npos);
    CHECK(r.out.find("PASS transport-step-convergence") != std::string::npos);
    CHECK(r.out.find("failed:") != std::string::npos);
}
