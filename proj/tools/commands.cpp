#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "nio/limit.hpp"

namespace nio::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, result.ptr);
}

namespace {

std::ostream& log_of(const CommandContext& ctx) { return ctx.log ? *ctx.log : std::cout; }

std::ofstream open_output(const CommandContext& ctx, const std::string& name) {
    fs::create_directories(ctx.out_dir);
    std::ofstream out(ctx.out_dir / name, std::ios::binary);
    if (!out) throw ConfigError({"--out: cannot write " + (ctx.out_dir / name).string()});
    return out;
}

void write_json(const CommandContext& ctx, const std::string& name, const json& doc) {
    std::ofstream out = open_output(ctx, name);
    out << doc.dump(2) << '\n';
}

void write_sidecar(const CommandContext& ctx, const std::string& command,
                   const RunConfig& config) {
    write_json(ctx, command + ".config.json", to_json(config));
}

// Writes comma-separated rows with shortest round-trip numbers.
class CsvWriter {
public:
    CsvWriter(std::ofstream out, const std::string& header) : out_(std::move(out)) {
        out_ << header << '\n';
    }

    template <typename... Cells>
    void row(const Cells&... cells) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
        out_ << '\n';
    }

    void flush() { out_.flush(); }

private:
    static std::string cell(double v) { return format_double(v); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }

    std::ofstream out_;
};

Mat2 averaged_jacobian_for(const RunConfig& c, const PolarState& s) {
    if (c.has_closed_form()) return closed_form_jacobian(s, c.model);
    return averaged_jacobian(s, c.pbar());
}

/// Zero of the averaged map: the analytic (A0, theta0) for the application
/// model, otherwise Newton on the averaged map from the configured seed.
PolarState averaged_zero(const RunConfig& c) {
    if (c.seed) {
        const AveragedMapFn map = c.pbar();
        return newton_zero(
                   map, [&](const PolarState& s) { return averaged_jacobian_for(c, s); },
                   *c.seed, c.newton)
            .state;
    }
    if (c.has_closed_form()) {
        const ApplicationReport report = analyze_application(c.model);
        if (report.equilibrium) return report.equilibrium->state;
        throw ConfigError({"fixed_point.seed: no analytic averaged zero (" +
                           report.analysis.failure + "); supply a seed"});
    }
    throw ConfigError({"fixed_point.seed: required for this model"});
}

PolarState fixed_point_seed(const RunConfig& c) { return c.seed ? *c.seed : averaged_zero(c); }

/// Streams a sampled trajectory; crossings are labelled impact/release. The
/// file is flushed before an integrator error propagates.
FlowResult write_trajectory(std::ofstream file, const CartesianState& start, double t_end,
                            const SmoothedParams& params, const IntegratorConfig& cfg,
                            double stride) {
    CsvWriter csv(std::move(file), "t,x,v,phase");
    FlowObserver observer;
    const double span = t_end - start.t;
    const auto count = static_cast<long>(std::floor(span / stride + 1e-9));
    // Times within rounding of the end snap onto it so the final state is reported.
    for (long k = 0; k <= count; ++k) {
        const double t = start.t + k * stride;
        observer.sample_times.push_back(t_end - t < 1e-9 * stride ? t_end : t);
    }
    if (observer.sample_times.back() < t_end) observer.sample_times.push_back(t_end);
    const auto& times = observer.sample_times;
    observer.on_sample = [&](const TraceSample& s) {
        const bool requested = std::binary_search(times.begin(), times.end(), s.t);
        const char* label = requested ? to_string(s.phase)
                            : s.phase == Phase::kContact ? "impact"
                                                         : "release";
        csv.row(s.t, s.x, s.v, label);
    };
    try {
        return flow(start, t_end, params, cfg, &observer);
    } catch (...) {
        csv.flush();
        throw;
    }
}

json complex_json(const std::complex<double>& z) {
    return {{"re", z.real()}, {"im", z.imag()}, {"modulus", std::abs(z)}};
}

json matrix_json(const Mat2& m) {
    return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})});
}

json fixed_point_json(const FixedPointResult& fp) {
    return {{"epsilon", fp.epsilon},
            {"A", fp.state.A},
            {"theta", fp.state.theta},
            {"residual", fp.residual},
            {"iterations", fp.iterations},
            {"jacobian", matrix_json(fp.jacobian)},
            {"multipliers", json::array({complex_json(fp.multipliers[0]),
                                         complex_json(fp.multipliers[1])})},
            {"max_multiplier", fp.max_multiplier()},
            {"stable", fp.max_multiplier() < 1.0}};
}

std::string eps_tag(std::size_t index) { return std::to_string(index); }

}  // namespace

int cmd_pbar(const RunConfig& config, const CommandContext& ctx) {
    const AveragedMapFn map = config.pbar();
    CsvWriter csv(open_output(ctx, "pbar.csv"), "A,theta,dA,dTheta");
    std::size_t rows = 0;
    for (double A : config.grid_A.values()) {
        for (double theta : config.grid_theta.values()) {
            const AveragedValue value = map({A, theta});
            csv.row(A, theta, value.dA, value.dTheta);
            ++rows;
        }
    }
    write_sidecar(ctx, "pbar", config);
    log_of(ctx) << "pbar: " << rows << " rows ("
                << (config.has_closed_form() ? "closed form" : "quadrature") << ")\n";
    return kExitOk;
}

int cmd_analyze(const RunConfig& config, const CommandContext& ctx) {
    if (!config.has_closed_form()) {
        throw ConfigError({"model: analyze needs the application model with harmonic 1 and "
                           "the chart_adapted free flight"});
    }
    const ApplicationReport report = analyze_application(config.model);
    const ApplicationAnalysis& a = report.analysis;
    const HypothesisChecks& h = a.hypotheses;
    json doc = {
        {"theta_star", a.theta_star},
        {"K_at_theta_star", a.K_at_star},
        {"theta0", a.theta0},
        {"A0", a.A0},
        {"M_at_theta0", a.M_at_theta0},
        {"M_prime_at_theta0", a.M_prime_at_theta0},
        {"hypotheses",
         {{"k_star_below_one", h.k_star_below_one},
          {"theta0_found", h.theta0_found},
          {"a0_nondegenerate", h.a0_nondegenerate},
          {"m_vanishes", h.m_vanishes},
          {"trace_condition", h.trace_condition},
          {"det_positive", h.det_positive}}},
        {"hypotheses_ok", h.all()},
        {"failure", a.failure},
        {"equilibrium", nullptr},
    };
    if (report.equilibrium) {
        const EquilibriumReport& eq = *report.equilibrium;
        const StabilityReport& st = eq.stability;
        doc["equilibrium"] = {
            {"A", eq.state.A},
            {"theta", eq.state.theta},
            {"jacobian", matrix_json(eq.jacobian)},
            {"trace", st.trace},
            {"det", st.det},
            {"eigenvalues",
             json::array({complex_json(st.eigenvalues[0]), complex_json(st.eigenvalues[1])})},
            {"verdict", to_string(st.verdict)},
            {"trace_det_stable", st.trace_det_stable},
            {"routes_agree", st.routes_agree()},
        };
    }
    write_json(ctx, "analyze.json", doc);
    write_sidecar(ctx, "analyze", config);

    if (ctx.trace) {
        CsvWriter csv(open_output(ctx, "analyze_trace.csv"), "theta,M,K");
        constexpr int kPoints = 400;
        for (int i = 1; i < kPoints; ++i) {
            const double theta = 0.5 * kPi * i / kPoints;
            csv.row(theta, M_of_theta(theta, config.model), K_of_theta(theta, config.model));
        }
    }
    log_of(ctx) << "analyze: " << (h.all() ? "all hypotheses hold" : "hypothesis failure: " +
                                                                         a.failure)
                << '\n';
    return h.all() ? kExitOk : kExitHypothesis;
}

int cmd_simulate(const RunConfig& config, const CommandContext& ctx) {
    const SimulateConfig& sim = config.simulate;
    const SmoothedParams params = config.smoothed(config.epsilon);
    CartesianState start;
    switch (sim.start) {
        case StartKind::kCartesian: start = {sim.x, sim.v, 0.0}; break;
        case StartKind::kPolar:
            start = chart_to_cartesian(PolarState{sim.A, sim.theta}, Chart::kApproach, params);
            break;
        case StartKind::kFixedPoint: {
            const FixedPointResult fp =
                fixed_point(params, fixed_point_seed(config), config.integrator,
                            config.fixed_point);
            start = chart_to_cartesian(fp.state, Chart::kApproach, params);
            break;
        }
    }
    start.t = 0.0;
    write_sidecar(ctx, "simulate", config);
    const double t_end = sim.periods * kPi;
    const FlowResult result = write_trajectory(open_output(ctx, "simulate.csv"), start, t_end,
                                               params, config.integrator, sim.stride);
    log_of(ctx) << "simulate: t = " << format_double(result.final.t)
                << ", x = " << format_double(result.final.x)
                << ", v = " << format_double(result.final.v) << ", "
                << result.contact_passages << " contact passages, "
                << result.steps.accepted << " accepted steps\n";
    return kExitOk;
}

int cmd_fixed_point(const RunConfig& config, const CommandContext& ctx) {
    const SmoothedParams params = config.smoothed(config.epsilon);
    const FixedPointResult fp =
        fixed_point(params, fixed_point_seed(config), config.integrator, config.fixed_point);
    write_json(ctx, "fixed_point.json", fixed_point_json(fp));
    write_sidecar(ctx, "fixed_point", config);
    if (ctx.trace) {
        CartesianState start = chart_to_cartesian(fp.state, Chart::kApproach, params);
        start.t = 0.0;
        write_trajectory(open_output(ctx, "fixed_point_trace.csv"), start, kPi, params,
                         config.integrator, config.simulate.stride);
    }
    log_of(ctx) << "fixed-point: (A, theta) = (" << format_double(fp.state.A) << ", "
                << format_double(fp.state.theta)
                << "), max |multiplier| = " << format_double(fp.max_multiplier()) << '\n';
    return kExitOk;
}

int cmd_converge(const RunConfig& config, const CommandContext& ctx) {
    ConvergenceSetup setup;
    setup.params_for = [config](double eps) { return config.smoothed(eps); };
    setup.pbar = config.pbar();
    setup.limit_ref = averaged_zero(config);
    setup.exclusion_half_width = config.converge.exclusion_half_width;
    setup.samples = config.converge.samples;
    if (setup.samples.empty()) {
        setup.samples = default_samples(0.5 * kPi - setup.limit_ref.theta,
                                        setup.exclusion_half_width, config.converge.sample_count);
    }
    setup.integrator = config.integrator;
    setup.fixed_point = config.fixed_point;
    setup.workers = config.workers;

    const ConvergenceTable table = convergence_study(setup, config.epsilons);
    {
        CsvWriter csv(open_output(ctx, "converge.csv"),
                      "epsilon,dA,dtheta,max_multiplier,scaled_disp_err,pointwise_err");
        const double nan = std::nan("");
        for (const ConvergenceRow& r : table.rows) {
            if (r.ok) {
                csv.row(r.epsilon, r.dA, r.dtheta, r.max_multiplier, r.scaled_disp_err,
                        r.pointwise_err);
            } else {
                csv.row(r.epsilon, nan, nan, nan, nan, nan);
            }
        }
    }
    write_sidecar(ctx, "converge", config);

    std::ostream& log = log_of(ctx);
    if (ctx.trace) {
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            const ConvergenceRow& r = table.rows[i];
            if (!r.ok) continue;
            const SmoothedParams params = config.smoothed(r.epsilon);
            CartesianState start = chart_to_cartesian(r.fixed_point.state, Chart::kApproach, params);
            start.t = 0.0;
            write_trajectory(open_output(ctx, "converge_trace_" + eps_tag(i) + ".csv"), start, kPi,
                             params, config.integrator, config.simulate.stride);
        }
    }
    for (const ConvergenceRow& r : table.rows) {
        if (!r.ok) log << "converge: eps = " << format_double(r.epsilon) << " failed: " << r.failure << '\n';
    }
    if (!table.all_ok()) return kExitNumerical;
    const bool stable = std::all_of(table.rows.begin(), table.rows.end(),
                                    [](const ConvergenceRow& r) { return r.max_multiplier < 1.0; });
    log << "converge: " << table.rows.size() << " rows, monotone = "
        << (table.monotone() ? "yes" : "no") << ", multipliers inside unit disc = "
        << (stable ? "yes" : "no") << '\n';
    return table.monotone() ? kExitOk : kExitHypothesis;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Periodic orbits of nearly impact oscillators by averaging", "nio"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir = ".";
    bool trace = false;
    app.add_option("--config", config_path, "JSON run configuration (defaults when omitted)");
    app.add_option("--out", out_dir, "Output directory");
    app.add_flag("--trace", trace, "Also write trajectory / curve CSVs");

    using Command = int (*)(const RunConfig&, const CommandContext&);
    const std::pair<const char*, std::pair<const char*, Command>> commands[] = {
        {"pbar", {"Averaged map on an (A, theta) grid", cmd_pbar}},
        {"analyze", {"Bifurcation analysis of the application model", cmd_analyze}},
        {"simulate", {"Trajectory of the full system", cmd_simulate}},
        {"fixed-point", {"Fixed point of the period map and its multipliers", cmd_fixed_point}},
        {"converge", {"Convergence study over the epsilon list", cmd_converge}},
    };
    for (const auto& [name, entry] : commands) app.add_subcommand(name, entry.first);

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }

    CommandContext ctx;
    ctx.out_dir = out_dir;
    ctx.trace = trace;
    ctx.log = &out;
    try {
        const RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
        for (const auto& [name, entry] : commands) {
            if (app.got_subcommand(name)) return entry.second(config, ctx);
        }
        return kExitValidation;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const Error& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace nio::cli
