#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bistab/config.hpp"
#include "bistab/runner.hpp"

using namespace bistab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("bistab_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kOracle = R"(mode = simulate
model.family = custom
model.custom.eigenvalues = 0+1i 0-1i
model.custom.b_matrix = 1 0; 0 1
control.r = 0
numerics.dt = 0.001
numerics.t_final = 20
numerics.stride = 10
obs.T = 1
analysis.bounds = power:1
)";

ExperimentConfig with_dir(const std::string& text, const fs::path& dir) {
    auto c = parse_config(text);
    c.out_dir = dir.string();
    return c;
}

int tool(const std::string& args) {
    const int status = std::system((std::string(BISTAB_TOOL) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("simulate on the scalar oracle writes a matching CSV") {
    const auto dir = scratch("oracle");
    auto cfg = with_dir(kOracle, dir);
    run(cfg);
    for (const char* f : {"trajectory.csv", "checks.json", "fits.json", "energy.svg", "config.txt"})
        CHECK(fs::exists(dir / f));

    std::ifstream csv(dir / "trajectory.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "t,energy,control,norm_h,norm_k");
    Real e0 = -1.0, worst = 0.0;
    int rows = 0;
    while (std::getline(csv, line)) {
        std::istringstream is(line);
        std::string t, e;
        std::getline(is, t, ',');
        std::getline(is, e, ',');
        const Real tv = std::stod(t), ev = std::stod(e);
        if (e0 < 0) e0 = ev;
        worst = std::max(worst, std::abs(ev - e0 / (1.0 + 4.0 * e0 * tv)) / ev);
        ++rows;
    }
    CHECK(rows == 2001);
    CHECK(worst < 1e-6);

    const auto checks = nlohmann::json::parse(slurp(dir / "checks.json"));
    CHECK(checks.at("lemma2").at("satisfied").get<bool>());
    CHECK(checks.at("dissipation").at("residual_max").get<Real>() < 1e-6);
    const auto fits = nlohmann::json::parse(slurp(dir / "fits.json"));
    CHECK(fits.at("validations")[0].at("validated").get<bool>());
    // s = 1/(1+2t): slope tends to -1
    CHECK(fits.at("power_fit").at("exponent_or_constant").get<Real>() < -0.9);
}

TEST_CASE("observability mode with B = I reports delta = T") {
    const auto dir = scratch("obs");
    auto cfg = with_dir(kOracle, dir);
    cfg.mode = Mode::observability;
    cfg.obs_horizon = 2.5;
    run(cfg);
    const auto j = nlohmann::json::parse(slurp(dir / "observability.json"));
    CHECK(std::abs(j.at("delta_estimate").get<Real>() - 2.5) < 1e-9);
    CHECK(j.at("classification") == "exact observability corroborated");
}

TEST_CASE("identical configs give byte-identical artifacts") {
    const auto a = scratch("det_a"), b = scratch("det_b");
    const std::string text = "mode = simulate\nmodel.family = wave1d\nmodel.n_modes = 6\nnumerics.t_final = 30\n"
                             "numerics.dt = 0.01\nobs.hfun = logexp:auto\nanalysis.bounds = log_square hfun_inverse\n"
                             "output.svg_timestamp = false\n";
    run(with_dir(text, a));
    run(with_dir(text, b));
    // config.txt records output.dir, so it legitimately differs
    for (const char* f : {"trajectory.csv", "checks.json", "fits.json", "energy.svg"})
        CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / "energy.svg").find("<!--") == std::string::npos);
}

TEST_CASE("sweep writes one directory per grid point and a sorted summary") {
    const auto dir = scratch("sweep");
    run(with_dir("mode = sweep\nmodel.family = wave1d\nmodel.n_modes = 4\nnumerics.t_final = 5\n"
                 "numerics.dt = 0.01\nsweep.r = 2 0\nsweep.n_modes = 4 3\noutput.emit_plots = false\n",
                 dir));
    std::istringstream summary(slurp(dir / "summary.csv"));
    std::string line;
    std::getline(summary, line);
    CHECK(line.rfind("point,r,beta,x0,x1,n_modes", 0) == 0);
    std::vector<std::string> keys;
    while (std::getline(summary, line)) keys.push_back(line.substr(0, line.find(',')));
    REQUIRE(keys.size() == 4);
    CHECK(std::is_sorted(keys.begin(), keys.end()));
    for (const auto& k : keys) {
        CHECK(fs::exists(dir / k / "trajectory.csv"));
        CHECK_FALSE(fs::exists(dir / k / "energy.svg"));
    }
}

TEST_CASE("failures map to exit codes with an error JSON") {
    const auto dir = scratch("fail");
    auto cfg = with_dir("mode = simulate\nmodel.family = wave1d\nmodel.n_modes = 3\ninitial.kind = mode\n"
                        "initial.mode = 40\nnumerics.t_final = 1\n",
                        dir);
    std::ostringstream err;
    CHECK(run_guarded(cfg, nullptr, err) == exit_config);
    const auto j = nlohmann::json::parse(slurp(dir / "error.json"));
    CHECK(j.at("status") == "error");
    CHECK(j.at("kind") == "config");
    CHECK(nlohmann::json::parse(err.str()).at("message").get<std::string>().find("initial.mode") != std::string::npos);
}

TEST_CASE("oracle preset passes its acceptance checks") {
    const auto dir = scratch("preset");
    ExperimentConfig cfg;
    cfg.mode = Mode::preset;
    cfg.preset = "oracle-2d";
    cfg.out_dir = dir.string();
    const auto res = run(cfg);
    CHECK(res.exit_code == exit_ok);
    CHECK(res.acceptance.size() == 7);
    const auto j = nlohmann::json::parse(slurp(dir / "acceptance.json"));
    CHECK(j.at("passed").get<bool>());
}

TEST_CASE("command line front end") {
    const auto dir = scratch("cli");
    fs::create_directories(dir);
    {
        std::ofstream(dir / "good.cfg") << kOracle << "numerics.t_final = 1\n";
    }
    // duplicate key -> config error
    CHECK(tool("validate " + (dir / "good.cfg").string()) == 1);
    {
        std::ofstream(dir / "good.cfg") << "mode = simulate\nmodel.family = wave1d\nmodel.n_modes = 3\n"
                                           "numerics.t_final = 1\nnumerics.dt = 0.01\n";
        std::ofstream(dir / "bad.cfg") << "mode = simulate\nmodel.family = wave1d\ncontrol.r = 3\n";
    }
    CHECK(tool("validate " + (dir / "good.cfg").string()) == 0);
    CHECK(tool("validate " + (dir / "bad.cfg").string()) == 1);
    CHECK(tool("validate " + (dir / "missing.cfg").string()) == 1);
    CHECK(tool("preset no-such-preset") == 1);
    CHECK(tool("frobnicate") == 1);

    CHECK(tool("run " + (dir / "good.cfg").string() + " --quiet --no-plots --out " + (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "trajectory.csv"));
    CHECK_FALSE(fs::exists(dir / "out" / "energy.svg"));

    const std::string env = "BISTAB_OUT=" + (dir / "env").string() + " ";
    const int status = std::system((env + BISTAB_TOOL + " run " + (dir / "good.cfg").string() + " --quiet").c_str());
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(fs::exists(dir / "env" / "trajectory.csv"));
}
