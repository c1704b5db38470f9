#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "commands.hpp"
#include "run_config.hpp"

using namespace nio;
using namespace nio::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Fresh directory per test run, removed afterwards.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("nio_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "nio");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

Run run_with(const TempDir& dir, const std::string& cmd, const json& config,
             std::vector<std::string> extra = {}) {
    const fs::path cfg = dir.path / (cmd + "_input.json");
    write_file(cfg, config.dump());
    std::vector<std::string> args{"--config", cfg.string(), "--out", dir.path.string()};
    args.insert(args.end(), extra.begin(), extra.end());
    args.push_back(cmd);
    return run(args);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream cl(line);
        std::string cell;
        while (std::getline(cl, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
    for (const auto& p : problems) {
        if (p.find(needle) != std::string::npos) return true;
    }
    return false;
}

// Forcing with period pi (see the poincare tests).
json pi_periodic_model() {
    return {{"kind", "application"}, {"harmonic", 2}, {"c1", 0.5}, {"c2", 1.0}, {"gamma", -3.0}};
}

}  // namespace

TEST_CASE("shortest round-trip float formatting") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.4935824062114773, 5e-324}) {
        const std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
    CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("config validation reports every problem with its path") {
    const json doc = {{"epsilon", 0.3},
                      {"grid", {{"theta", {{"min", 0.2}, {"max", 1.6}, {"count", 3}}}}},
                      {"model", {{"omega", -1.0}, {"colour", "red"}}},
                      {"typo", 1}};
    try {
        parse_config(doc);
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        const auto& p = e.problems();
        CHECK(p.size() >= 4);
        CHECK(mentions(p, "epsilon"));
        CHECK(mentions(p, "grid.theta.max"));
        CHECK(mentions(p, "model.omega"));
        CHECK(mentions(p, "model.colour"));
        CHECK(mentions(p, "typo"));
    }
    CHECK_THROWS_AS(parse_config({{"epsilons", {0.1, 0.3}}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"epsilons", json::array()}}), ConfigError);
    const RunConfig defaults = parse_config(json::object());
    CHECK(defaults.epsilons.size() == 4);
    CHECK(defaults.has_closed_form());
}

TEST_CASE("pbar grid matches the closed form") {
    TempDir dir("pbar");
    const Run r = run_with(dir, "pbar", json::object());
    CHECK(r.code == kExitOk);
    const auto rows = read_csv(dir.path / "pbar.csv");
    REQUIRE(rows.size() == 26);
    CHECK(rows[0] == std::vector<std::string>{"A", "theta", "dA", "dTheta"});
    const BouncingBallParams p;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const PolarState s{std::stod(rows[i][0]), std::stod(rows[i][1])};
        const AveragedValue c = closed_form_pbar(s, p);
        CHECK(std::abs(std::stod(rows[i][2]) - c.dA) < 1e-8);
        CHECK(std::abs(std::stod(rows[i][3]) - c.dTheta) < 1e-8);
    }
    CHECK(fs::exists(dir.path / "pbar.config.json"));
}

TEST_CASE("pbar validation failures") {
    TempDir dir("pbar_bad");
    Run r = run_with(dir, "pbar", {{"grid", {{"A", {{"min", 0.2}, {"max", 1.0}, {"count", 0}}}}}});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("empty grid") != std::string::npos);

    r = run_with(dir, "pbar", {{"grid", {{"theta", {{"min", 0.2}, {"max", 1.6}, {"count", 3}}}}}});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("grid.theta.max") != std::string::npos);

    write_file(dir.path / "broken.json", "{\"epsilon\": 0.05,");
    r = run({"--config", (dir.path / "broken.json").string(), "--out", dir.path.string(), "pbar"});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("parse") != std::string::npos);

    r = run({"--config", (dir.path / "missing.json").string(), "pbar"});
    CHECK(r.code == kExitValidation);

    r = run({"frobnicate"});
    CHECK(r.code == kExitValidation);
    CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("sidecar re-fed as config reproduces the run") {
    TempDir dir("sidecar");
    const json cfg = {{"model", {{"c1", 0.15}, {"gamma", 1.5}}},
                      {"grid", {{"A", {{"min", 0.3}, {"max", 1.2}, {"count", 4}}}}}};
    REQUIRE(run_with(dir, "pbar", cfg).code == kExitOk);
    const std::string first = slurp(dir.path / "pbar.csv");
    const std::string sidecar = slurp(dir.path / "pbar.config.json");

    TempDir again("sidecar_again");
    REQUIRE(run({"--config", (dir.path / "pbar.config.json").string(), "--out",
                 again.path.string(), "pbar"})
                .code == kExitOk);
    CHECK(slurp(again.path / "pbar.csv") == first);
    CHECK(slurp(again.path / "pbar.config.json") == sidecar);

    const RunConfig parsed = parse_config(json::parse(sidecar));
    CHECK(to_json(parsed) == json::parse(sidecar));
    CHECK(parsed.model.c1 == 0.15);
}

TEST_CASE("analyze at defaults and at failing hypotheses") {
    TempDir dir("analyze");
    Run r = run_with(dir, "analyze", json::object(), {"--trace"});
    CHECK(r.code == kExitOk);
    json doc = json::parse(slurp(dir.path / "analyze.json"));
    CHECK(std::abs(doc["theta0"].get<double>() - 1.40454) < 2e-4);
    CHECK(std::abs(doc["A0"].get<double>() - 0.4937) < 2e-4);
    CHECK(doc["equilibrium"]["verdict"] == "Stable");
    CHECK(doc["hypotheses_ok"] == true);
    CHECK(fs::exists(dir.path / "analyze_trace.csv"));

    r = run_with(dir, "analyze", {{"model", {{"c1", 2.0}}}});
    CHECK(r.code == kExitHypothesis);
    doc = json::parse(slurp(dir.path / "analyze.json"));
    CHECK(doc["hypotheses"]["k_star_below_one"] == false);
    CHECK_FALSE(doc["failure"].get<std::string>().empty());

    r = run_with(dir, "analyze", {{"model", {{"gamma", 0.0}}}});
    CHECK(r.code == kExitHypothesis);
    doc = json::parse(slurp(dir.path / "analyze.json"));
    CHECK(doc["hypotheses"]["a0_nondegenerate"] == false);

    r = run_with(dir, "analyze", {{"model", pi_periodic_model()}});
    CHECK(r.code == kExitValidation);
}

TEST_CASE("fixed-point writes the result and its orbit") {
    TempDir dir("fixed");
    const Run r = run_with(dir, "fixed-point", json::object(), {"--trace"});
    REQUIRE(r.code == kExitOk);
    const json doc = json::parse(slurp(dir.path / "fixed_point.json"));
    CHECK(doc["residual"].get<double>() < 1e-10);
    CHECK(std::abs(doc["A"].get<double>() - 0.448046) < 1e-5);
    CHECK(fs::exists(dir.path / "fixed_point_trace.csv"));
    CHECK(fs::exists(dir.path / "fixed_point.config.json"));

    const Run small = run_with(dir, "fixed-point", {{"epsilon", 0.001}});
    CHECK(small.code == kExitValidation);
}

TEST_CASE("simulate is periodic at the fixed point of a pi-periodic model") {
    TempDir dir("simulate");
    const json cfg = {{"model", pi_periodic_model()},
                      {"fixed_point", {{"seed", {{"A", 0.6}, {"theta", 0.6}}}}},
                      {"simulate", {{"start", "fixed_point"}, {"periods", 5}, {"stride", kPi / 100}}}};
    const Run r = run_with(dir, "simulate", cfg);
    REQUIRE(r.code == kExitOk);
    const auto rows = read_csv(dir.path / "simulate.csv");
    REQUIRE(rows.size() > 500);
    CHECK(rows[0] == std::vector<std::string>{"t", "x", "v", "phase"});
    // The row nearest each multiple of pi.
    std::vector<std::pair<double, double>> per_period;
    for (int k = 0; k <= 5; ++k) {
        double best = 1e9;
        std::pair<double, double> state;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double d = std::abs(std::stod(rows[i][0]) - k * kPi);
            if (d < best) {
                best = d;
                state = {std::stod(rows[i][1]), std::stod(rows[i][2])};
            }
        }
        CHECK(best < 1e-12);
        per_period.push_back(state);
    }
    for (int k = 1; k <= 5; ++k) {
        CHECK(std::abs(per_period[k].first - per_period[0].first) < 1e-8);
        CHECK(std::abs(per_period[k].second - per_period[0].second) < 1e-8);
    }
    int impacts = 0;
    for (const auto& row : rows) impacts += row.size() == 4 && row[3] == "impact";
    CHECK(impacts == 5);
}

TEST_CASE("unforced simulate conserves the free-flight energy") {
    TempDir dir("simulate_free");
    const double eps = 0.05;
    const json cfg = {{"model", {{"kind", "free"}}},
                      {"epsilon", eps},
                      {"simulate", {{"start", "cartesian"}, {"x", 1.0}, {"v", 0.0}, {"periods", 1}}}};
    REQUIRE(run_with(dir, "simulate", cfg).code == kExitOk);
    const auto rows = read_csv(dir.path / "simulate.csv");
    const auto& last = rows.back();
    const double W = (1 + eps) / (1 - eps);
    const double x = std::stod(last[1]), v = std::stod(last[2]);
    CHECK(std::stod(last[0]) == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(std::abs(W * W * x * x + v * v - W * W) < 1e-8);
    // The contact defect is O(eps).
    CHECK(std::hypot(x - 1.0, v / W) < 10 * eps);
}

TEST_CASE("converge output is a deterministic table") {
    TempDir a("converge_a"), b("converge_b");
    const Run ra = run_with(a, "converge", json::object(), {"--trace"});
    const Run rb = run_with(b, "converge", json::object(), {"--trace"});
    CHECK(ra.code == kExitOk);
    CHECK(rb.code == kExitOk);
    const std::string csv = slurp(a.path / "converge.csv");
    CHECK(csv == slurp(b.path / "converge.csv"));
    const auto rows = read_csv(a.path / "converge.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"epsilon", "dA", "dtheta", "max_multiplier",
                                              "scaled_disp_err", "pointwise_err"});
    CHECK(rows[1][0] == "0.08");
    CHECK(fs::exists(a.path / "converge_trace_0.csv"));

    TempDir single("converge_single");
    CHECK(run_with(single, "converge", {{"epsilons", {0.05}}}).code == kExitOk);
    CHECK(read_csv(single.path / "converge.csv").size() == 2);

    const Run capped = run_with(single, "converge", {{"epsilons", {0.3, 0.1}}});
    CHECK(capped.code == kExitValidation);
    CHECK(capped.err.find("epsilons") != std::string::npos);
}
