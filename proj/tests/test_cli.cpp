#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "locmono/cli.hpp"

using namespace locmono;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("locmono_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

const std::vector<std::string> kSmall{"--set", "model.n=15", "--set", "model.noise_modes=8", "--steps", "40", "--paths", "6"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_CASE("check: exit codes") {
    const auto dir = scratch("check");
    auto r = run({"check", "--model", "rd", "--conditions", "C3", "--samples", "2000", "--seed", "42",
                  "--out", dir.string()});
    CHECK(r.code == exit_code::success);
    const auto rep = nlohmann::json::parse(slurp(dir / "audit_report.json"));
    CHECK(rep["reports"][0]["constants"]["theta1"] == 1.0);
    CHECK(rep["reports"][0]["passed"] == true);

    r = run({"check", "--model", "rd", "--conditions", "C3", "--samples", "2000", "--set",
             "audit.override.theta1=2.5", "--out", dir.string()});
    CHECK(r.code == exit_code::refuted);
    const auto bad = nlohmann::json::parse(slurp(dir / "audit_report.json"));
    CHECK(bad["reports"][0]["worst_margin"].get<double>() < 0.0);

    r = run({"check", "--conditions", "Z9", "--out", dir.string()});
    CHECK(r.code == exit_code::usage);
    CHECK(r.err.find("valid ids") != std::string::npos);

    r = run({"check", "--model", "semilinear", "--set", "model.J=1.5", "--out", dir.string()});
    CHECK(r.code == exit_code::usage);
    CHECK(r.err.find("model.J") != std::string::npos);

    r = run({"check", "--no-such-flag"});
    CHECK(r.code == exit_code::usage);
    r = run({});
    CHECK(r.code == exit_code::usage);
}

TEST_CASE("check: halved rho is refuted") {
    const auto dir = scratch("rho");
    const std::vector<std::string> base{
        "check", "--model", "nonlocal", "--conditions", "A2", "--samples", "10000",
        "--set", "model.coefficient=table", "--set", "model.p=0.5", "--set", "model.P=1.9",
        "--set", "model.table_knots=0,0.3,1", "--set", "model.table_values=1.9,1.9,0.5",
        "--set", "model.noise_amplitude=0", "--set", "control.alpha=1e-6",
        "--set", "control.eta=1e-6", "--set", "control.lambda=1e-6",
        "--set", "audit.decay_lo=0", "--set", "audit.decay_hi=0.5", "--set", "audit.modes=2",
        "--out", dir.string()};
    CHECK(run(base).code == exit_code::success);
    CHECK(run(with(base, {"--set", "audit.rho_scale=0.5"})).code == exit_code::refuted);
}

TEST_CASE("simulate: zero fixed point, heat oracle and determinism") {
    const auto dir = scratch("sim");
    auto r = run(with({"simulate", "--model", "rd", "--u0", "zero", "--control", "zero", "--out",
                       dir.string()},
                      kSmall));
    REQUIRE(r.code == exit_code::success);
    const std::string csv = slurp(dir / "trajectories.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) {
        CHECK(line.substr(line.size() - 5) == ",0,0\r");
    }

    r = run({"simulate", "--model", "linear", "--u0", "sine", "--control", "zero", "--set",
             "model.noise_amplitude=0", "--set", "model.n=127", "--set", "run.T=0.1", "--steps",
             "2000", "--paths", "2", "--out", dir.string()});
    REQUIRE(r.code == exit_code::success);
    const auto summary = nlohmann::json::parse(slurp(dir / "energy_summary.json"));
    const double exact = std::exp(-std::numbers::pi * std::numbers::pi * 0.1) / std::sqrt(2.0);
    CHECK(std::abs(summary["mean_final_h_norm"].get<double>() - exact) / exact < 0.02);

    const auto d1 = scratch("sim1"), d2 = scratch("sim2");
    CHECK(run(with({"simulate", "--paths", "1", "--seed", "7", "--states", "--out", d1.string()},
                   {"--set", "model.n=15", "--set", "model.noise_modes=8", "--steps", "40"}))
              .code == 0);
    CHECK(run(with({"simulate", "--paths", "1", "--seed", "7", "--states", "--out", d2.string(),
                    "--threads", "3"},
                   {"--set", "model.n=15", "--set", "model.noise_modes=8", "--steps", "40"}))
              .code == 0);
    for (const char* f : {"trajectories.csv", "states.csv", "energy_summary.json"}) {
        CHECK(slurp(d1 / f) == slurp(d2 / f));
    }
    CHECK(fs::exists(d1 / "meta.json"));
}

TEST_CASE("simulate: divergence exits 3") {
    const auto dir = scratch("div");
    const auto r = run({"simulate", "--model", "linear", "--set", "model.noise_amplitude=1e200",
                        "--set", "model.n=7", "--set", "model.noise_modes=4", "--steps", "20", "--paths", "2", "--out", dir.string()});
    CHECK(r.code == exit_code::numerical);
    CHECK(r.err.find("step") != std::string::npos);
}

TEST_CASE("seed precedence") {
    const auto a = scratch("seed_a"), b = scratch("seed_b"), c = scratch("seed_c");
    const std::vector<std::string> base{"simulate", "--paths", "1", "--set", "model.n=7", "--set", "model.noise_modes=4", "--steps",
                                        "10"};
    ::setenv("LOCMONO_SEED", "123", 1);
    CHECK(run(with(base, {"--out", a.string()})).code == 0);
    CHECK(run(with(base, {"--out", b.string(), "--seed", "123"})).code == 0);
    CHECK(run(with(base, {"--out", c.string(), "--seed", "5"})).code == 0);
    ::unsetenv("LOCMONO_SEED");
    CHECK(slurp(a / "trajectories.csv") == slurp(b / "trajectories.csv"));
    CHECK(slurp(a / "trajectories.csv") != slurp(c / "trajectories.csv"));
}

TEST_CASE("optimize and diagnose") {
    const auto dir = scratch("opt");
    const std::vector<std::string> model{"--model", "linear", "--set", "model.n=15", "--set", "model.noise_modes=8", "--steps", "40",
                                         "--paths", "6", "--set", "control.free=0"};
    auto r = run(with({"optimize", "--max-evals", "25", "--out", dir.string()}, model));
    REQUIRE(r.code == exit_code::success);
    CHECK(fs::exists(dir / "optimization_record.json"));
    const std::string iter = slurp(dir / "iterates.csv");
    CHECK(iter.rfind("iterate,cost,std_error,best_so_far,D_V,D_H_T\r\n", 0) == 0);

    r = run(with({"diagnose", "--record", (dir / "optimization_record.json").string(), "--M",
                  "0.000001", "--out", dir.string()},
                 model));
    REQUIRE(r.code == exit_code::success);
    const std::string trunc = slurp(dir / "truncation.csv");
    std::istringstream lines(trunc);
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) CHECK(line.substr(line.find(',')) == ",0\r");
    CHECK(slurp(dir / "diagnostics.csv").rfind("iterate,D_V,D_H_T,aux_D_V,aux_D_H_T", 0) == 0);

    // A record produced under another model is rejected.
    r = run({"diagnose", "--record", (dir / "optimization_record.json").string(), "--model", "rd",
             "--out", dir.string()});
    CHECK(r.code == exit_code::usage);

    const auto gs = scratch("grid");
    r = run(with({"optimize", "--grid-search", "gamma1:11", "--max-evals", "5", "--out", gs.string()},
                 model));
    REQUIRE(r.code == exit_code::success);
    std::istringstream g(slurp(gs / "grid_search.csv"));
    std::size_t rows = 0;
    while (std::getline(g, line)) ++rows;
    CHECK(rows == 12);

    r = run(with({"optimize", "--grid-search", "bogus", "--out", gs.string()}, model));
    CHECK(r.code == exit_code::usage);
}

TEST_CASE("optimize: zero-weight cost") {
    const auto dir = scratch("zero");
    const auto r = run(with({"optimize", "--set", "cost.running_weight=0", "--set",
                             "cost.control_weight=0", "--set", "cost.terminal_weight=0", "--out",
                             dir.string()},
                            kSmall));
    REQUIRE(r.code == exit_code::success);
    const auto rec = nlohmann::json::parse(slurp(dir / "optimization_record.json"));
    CHECK(rec["iterates"].size() == 1);
    CHECK(rec["iterates"][0]["best_so_far"] == 0.0);
}

TEST_CASE("diagnose: single-iterate record gives zero diagnostics") {
    const auto dir = scratch("single");
    REQUIRE(run(with({"optimize", "--set", "cost.running_weight=0", "--set", "cost.control_weight=0",
                      "--set", "cost.terminal_weight=0", "--out", dir.string()},
                     kSmall))
                .code == 0);
    const auto r = run(with({"diagnose", "--record", (dir / "optimization_record.json").string(),
                             "--set", "cost.running_weight=0", "--set", "cost.control_weight=0",
                             "--set", "cost.terminal_weight=0", "--out", dir.string()},
                            kSmall));
    REQUIRE(r.code == exit_code::success);
    std::istringstream lines(slurp(dir / "diagnostics.csv"));
    std::string line;
    std::getline(lines, line);
    REQUIRE(std::getline(lines, line));
    CHECK(line == "0,0,0,0,0\r");
}

TEST_CASE("outputs are identical across thread counts") {
    const auto a = scratch("thr1"), b = scratch("thr4");
    const std::vector<std::string> model{"--model", "rd", "--set", "model.n=15", "--set", "model.noise_modes=8", "--steps", "40",
                                         "--paths", "6"};
    for (const auto& [dir, th] : {std::pair{a, "1"}, std::pair{b, "4"}}) {
        REQUIRE(run(with({"check", "--conditions", "A1,A2,A3,C3", "--samples", "300", "--out", dir.string(), "--threads", th}, model))
                    .code == 0);
        REQUIRE(run(with({"optimize", "--max-evals", "12", "--out", dir.string(), "--threads", th},
                         model))
                    .code == 0);
        REQUIRE(run(with({"diagnose", "--record", (dir / "optimization_record.json").string(), "--M",
                          "1", "--out", dir.string(), "--threads", th},
                         model))
                    .code == 0);
    }
    for (const char* f : {"audit_report.json", "optimization_record.json", "iterates.csv",
                          "diagnostics.csv", "truncation.csv"}) {
        CAPTURE(f);
        CHECK(slurp(a / f) == slurp(b / f));
    }
}
