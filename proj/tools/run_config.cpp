#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

namespace nio::cli {

using nlohmann::json;

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
    std::string text = "invalid configuration";
    for (const auto& p : problems) text += "\n  " + p;
    return text;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

std::vector<double> GridAxis::values() const {
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        out.push_back(count == 1 ? min : min + (max - min) * i / (count - 1));
    }
    return out;
}

ForcingPair RunConfig::forcing() const {
    return kind == ModelKind::kApplication ? application_forcing(model) : zero_forcing();
}

SmoothedParams RunConfig::smoothed(double eps) const {
    SmoothedParams p;
    p.epsilon = eps;
    p.omega0 = model.omega;
    p.forcing = forcing();
    p.free_flight = free_flight;
    return p;
}

bool RunConfig::has_closed_form() const {
    return kind == ModelKind::kApplication && model.harmonic == 1 &&
           free_flight == FreeFlightForm::kChartAdapted;
}

AveragedMapFn RunConfig::pbar() const {
    if (has_closed_form()) return closed_form_map(model);
    return quadrature_map(forcing(), model.omega, quadrature, free_flight);
}

namespace {

// Walks a document, collecting problems instead of stopping at the first one.
class Reader {
public:
    std::vector<std::string> problems;

    void fail(const std::string& path, const std::string& message) {
        problems.push_back(path + ": " + message);
    }

    /// True when `node` is an object; reports keys outside `allowed`.
    bool object(const json& node, const std::string& path,
                std::initializer_list<const char*> allowed) {
        if (!node.is_object()) {
            fail(path.empty() ? "<root>" : path, "expected an object");
            return false;
        }
        const std::set<std::string> known(allowed.begin(), allowed.end());
        for (const auto& item : node.items()) {
            if (!known.contains(item.key())) fail(join(path, item.key()), "unknown field");
        }
        return true;
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

    template <typename Check>
    void number(const json& obj, const std::string& path, const char* key, double& out,
                Check&& ok, const char* requirement) {
        if (!obj.contains(key)) return;
        const json& node = obj.at(key);
        const std::string where = join(path, key);
        if (!node.is_number()) {
            fail(where, "expected a number");
            return;
        }
        const double value = node.get<double>();
        if (!std::isfinite(value) || !ok(value)) {
            fail(where, std::string("must be ") + requirement);
            return;
        }
        out = value;
    }

    void number(const json& obj, const std::string& path, const char* key, double& out) {
        number(obj, path, key, out, [](double) { return true; }, "finite");
    }

    template <typename Int, typename Check>
    void integer(const json& obj, const std::string& path, const char* key, Int& out, Check&& ok,
                 const char* requirement) {
        if (!obj.contains(key)) return;
        const json& node = obj.at(key);
        const std::string where = join(path, key);
        if (!node.is_number_integer()) {
            fail(where, "expected an integer");
            return;
        }
        const auto value = node.get<long long>();
        if (!ok(value)) {
            fail(where, std::string("must be ") + requirement);
            return;
        }
        out = static_cast<Int>(value);
    }

    void boolean(const json& obj, const std::string& path, const char* key, bool& out) {
        if (!obj.contains(key)) return;
        if (!obj.at(key).is_boolean()) {
            fail(join(path, key), "expected a boolean");
            return;
        }
        out = obj.at(key).get<bool>();
    }

    bool string(const json& obj, const std::string& path, const char* key, std::string& out) {
        if (!obj.contains(key)) return false;
        if (!obj.at(key).is_string()) {
            fail(join(path, key), "expected a string");
            return false;
        }
        out = obj.at(key).get<std::string>();
        return true;
    }
};

bool positive(double x) { return x > 0.0; }
bool in_cap(double x) { return x > 0.0 && x <= kMaxEpsilon; }
bool open_quarter(double x) { return x > 0.0 && x < 0.5 * kPi; }

void read_model(Reader& r, const json& doc, RunConfig& c) {
    if (!doc.contains("model")) return;
    const json& m = doc.at("model");
    if (!r.object(m, "model",
                  {"kind", "a", "c1", "c2", "mu1", "mu2", "gamma", "omega", "harmonic"})) {
        return;
    }
    std::string kind;
    if (r.string(m, "model", "kind", kind)) {
        if (kind == "application") {
            c.kind = ModelKind::kApplication;
        } else if (kind == "free") {
            c.kind = ModelKind::kFree;
        } else {
            r.fail("model.kind", "expected \"application\" or \"free\"");
        }
    }
    BouncingBallParams& p = c.model;
    r.number(m, "model", "a", p.a);
    r.number(m, "model", "c1", p.c1);
    r.number(m, "model", "c2", p.c2);
    r.number(m, "model", "mu1", p.mu1);
    r.number(m, "model", "mu2", p.mu2);
    r.number(m, "model", "gamma", p.gamma);
    r.number(m, "model", "omega", p.omega, positive, "positive");
    r.integer(m, "model", "harmonic", p.harmonic, [](long long n) { return n >= 1 && n <= 64; },
              "an integer in [1, 64]");
    if (p.stiffness() == 0.0) r.fail("model.a", "a + 2 omega must be nonzero");
}

void read_solvers(Reader& r, const json& doc, RunConfig& c) {
    if (doc.contains("integrator") &&
        r.object(doc.at("integrator"), "integrator",
                 {"rel_tol", "abs_tol", "event_tol", "max_steps"})) {
        const json& n = doc.at("integrator");
        r.number(n, "integrator", "rel_tol", c.integrator.rel_tol, positive, "positive");
        r.number(n, "integrator", "abs_tol", c.integrator.abs_tol, positive, "positive");
        r.number(n, "integrator", "event_tol", c.integrator.event_tol, positive, "positive");
        r.integer(n, "integrator", "max_steps", c.integrator.max_steps,
                  [](long long v) { return v >= 1; }, "at least 1");
    }
    if (doc.contains("quadrature") &&
        r.object(doc.at("quadrature"), "quadrature", {"nodes_per_segment"})) {
        r.integer(doc.at("quadrature"), "quadrature", "nodes_per_segment",
                  c.quadrature.nodes_per_segment,
                  [](long long v) { return v >= 8 && v <= 100000; }, "in [8, 100000]");
    }
    if (doc.contains("newton") &&
        r.object(doc.at("newton"), "newton", {"tol", "max_iter", "max_halvings"})) {
        const json& n = doc.at("newton");
        r.number(n, "newton", "tol", c.newton.tol, positive, "positive");
        r.integer(n, "newton", "max_iter", c.newton.max_iter,
                  [](long long v) { return v >= 1; }, "at least 1");
        r.integer(n, "newton", "max_halvings", c.newton.max_halvings,
                  [](long long v) { return v >= 0 && v <= 60; }, "in [0, 60]");
    }
    if (doc.contains("fixed_point") &&
        r.object(doc.at("fixed_point"), "fixed_point",
                 {"tol", "fd_step", "max_iter", "max_halvings", "allow_small_epsilon", "seed"})) {
        const json& n = doc.at("fixed_point");
        FixedPointOptions& o = c.fixed_point;
        r.number(n, "fixed_point", "tol", o.tol, positive, "positive");
        r.number(n, "fixed_point", "fd_step", o.fd_step, positive, "positive");
        r.integer(n, "fixed_point", "max_iter", o.max_iter,
                  [](long long v) { return v >= 1; }, "at least 1");
        r.integer(n, "fixed_point", "max_halvings", o.max_halvings,
                  [](long long v) { return v >= 0 && v <= 60; }, "in [0, 60]");
        r.boolean(n, "fixed_point", "allow_small_epsilon", o.allow_small_epsilon);
        if (n.contains("seed") && !n.at("seed").is_null() &&
            r.object(n.at("seed"), "fixed_point.seed", {"A", "theta"})) {
            const json& s = n.at("seed");
            if (!s.contains("A") || !s.contains("theta")) {
                r.fail("fixed_point.seed", "needs both A and theta");
            } else {
                PolarState seed{};
                r.number(s, "fixed_point.seed", "A", seed.A, positive, "positive");
                r.number(s, "fixed_point.seed", "theta", seed.theta, open_quarter,
                         "in (0, pi/2)");
                c.seed = seed;
            }
        }
    }
}

void read_epsilons(Reader& r, const json& doc, RunConfig& c) {
    r.number(doc, "", "epsilon", c.epsilon, in_cap, "in (0, 0.2]");
    if (!doc.contains("epsilons")) return;
    const json& list = doc.at("epsilons");
    if (!list.is_array()) {
        r.fail("epsilons", "expected an array of numbers");
        return;
    }
    if (list.empty()) {
        r.fail("epsilons", "must not be empty");
        return;
    }
    std::vector<double> values;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string where = "epsilons[" + std::to_string(i) + "]";
        if (!list[i].is_number()) {
            r.fail(where, "expected a number");
            continue;
        }
        const double e = list[i].get<double>();
        if (!in_cap(e)) {
            r.fail(where, "must be in (0, 0.2]");
            continue;
        }
        if (!values.empty() && !(e < values.back())) {
            r.fail(where, "epsilons must be strictly decreasing");
        }
        values.push_back(e);
    }
    c.epsilons = values;
}

void read_axis(Reader& r, const json& grid, const char* key, GridAxis& axis, bool is_theta) {
    const std::string path = std::string("grid.") + key;
    if (!grid.contains(key) || !r.object(grid.at(key), path, {"min", "max", "count"})) return;
    const json& a = grid.at(key);
    if (is_theta) {
        r.number(a, path, "min", axis.min, open_quarter, "in (0, pi/2)");
        r.number(a, path, "max", axis.max, open_quarter, "in (0, pi/2)");
    } else {
        auto ok = [](double x) { return x >= 0.1; };
        r.number(a, path, "min", axis.min, ok, "at least 0.1");
        r.number(a, path, "max", axis.max, ok, "at least 0.1");
    }
    r.integer(a, path, "count", axis.count, [](long long n) { return n >= 0 && n <= 100000; },
              "in [0, 100000]");
    if (axis.count == 0) r.fail(path + ".count", "empty grid");
    if (axis.min > axis.max) r.fail(path, "min exceeds max");
}

void read_commands(Reader& r, const json& doc, RunConfig& c) {
    if (doc.contains("grid") && r.object(doc.at("grid"), "grid", {"A", "theta"})) {
        read_axis(r, doc.at("grid"), "A", c.grid_A, false);
        read_axis(r, doc.at("grid"), "theta", c.grid_theta, true);
    }
    if (doc.contains("simulate") &&
        r.object(doc.at("simulate"), "simulate",
                 {"start", "x", "v", "A", "theta", "periods", "stride"})) {
        const json& s = doc.at("simulate");
        SimulateConfig& sim = c.simulate;
        std::string start;
        if (r.string(s, "simulate", "start", start)) {
            if (start == "fixed_point") {
                sim.start = StartKind::kFixedPoint;
            } else if (start == "cartesian") {
                sim.start = StartKind::kCartesian;
            } else if (start == "polar") {
                sim.start = StartKind::kPolar;
            } else {
                r.fail("simulate.start", "expected \"fixed_point\", \"cartesian\" or \"polar\"");
            }
        }
        r.number(s, "simulate", "x", sim.x);
        r.number(s, "simulate", "v", sim.v);
        r.number(s, "simulate", "A", sim.A, positive, "positive");
        r.number(s, "simulate", "theta", sim.theta, open_quarter, "in (0, pi/2)");
        r.integer(s, "simulate", "periods", sim.periods,
                  [](long long n) { return n >= 1 && n <= 10000; }, "in [1, 10000]");
        r.number(s, "simulate", "stride", sim.stride, positive, "positive");
    }
    if (doc.contains("converge") &&
        r.object(doc.at("converge"), "converge",
                 {"exclusion_half_width", "samples", "sample_count"})) {
        const json& s = doc.at("converge");
        ConvergeConfig& cc = c.converge;
        r.number(s, "converge", "exclusion_half_width", cc.exclusion_half_width,
                 [](double w) { return w >= 0.0 && w < 0.5 * kPi; }, "in [0, pi/2)");
        r.integer(s, "converge", "sample_count", cc.sample_count,
                  [](long long n) { return n >= 1 && n <= 100000; }, "in [1, 100000]");
        if (s.contains("samples")) {
            const json& list = s.at("samples");
            if (!list.is_array()) {
                r.fail("converge.samples", "expected an array of numbers");
            } else {
                cc.samples.clear();
                for (std::size_t i = 0; i < list.size(); ++i) {
                    const std::string where = "converge.samples[" + std::to_string(i) + "]";
                    if (!list[i].is_number()) {
                        r.fail(where, "expected a number");
                        continue;
                    }
                    const double t = list[i].get<double>();
                    if (!(t >= 0.0 && t <= kPi)) {
                        r.fail(where, "must be in [0, pi]");
                        continue;
                    }
                    cc.samples.push_back(t);
                }
            }
        }
    }
}

}  // namespace

RunConfig parse_config(const json& doc) {
    Reader r;
    RunConfig c;
    if (r.object(doc, "",
                 {"model", "free_flight", "epsilon", "epsilons", "integrator", "quadrature",
                  "newton", "fixed_point", "grid", "simulate", "converge", "workers"})) {
        read_model(r, doc, c);
        std::string form;
        if (r.string(doc, "", "free_flight", form)) {
            try {
                c.free_flight = free_flight_form_from_string(form);
            } catch (const Error&) {
                r.fail("free_flight", "expected \"chart_adapted\" or \"harmonic\"");
            }
        }
        read_epsilons(r, doc, c);
        if (c.epsilon * c.model.omega >= 1.0) r.fail("epsilon", "epsilon * omega must be below 1");
        read_solvers(r, doc, c);
        read_commands(r, doc, c);
        r.integer(doc, "", "workers", c.workers, [](long long n) { return n >= 0 && n <= 1024; },
                  "in [0, 1024]");
    }
    if (!r.problems.empty()) throw ConfigError(r.problems);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({path + ": cannot open config file"});
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError({path + ": " + e.what()});
    }
    return parse_config(doc);
}

namespace {

json axis_json(const GridAxis& a) { return {{"min", a.min}, {"max", a.max}, {"count", a.count}}; }

const char* start_name(StartKind k) {
    switch (k) {
        case StartKind::kFixedPoint: return "fixed_point";
        case StartKind::kCartesian: return "cartesian";
        case StartKind::kPolar: return "polar";
    }
    return "fixed_point";
}

}  // namespace

json to_json(const RunConfig& c) {
    const BouncingBallParams& p = c.model;
    json fixed = {{"tol", c.fixed_point.tol},
                  {"fd_step", c.fixed_point.fd_step},
                  {"max_iter", c.fixed_point.max_iter},
                  {"max_halvings", c.fixed_point.max_halvings},
                  {"allow_small_epsilon", c.fixed_point.allow_small_epsilon},
                  {"seed", nullptr}};
    if (c.seed) fixed["seed"] = {{"A", c.seed->A}, {"theta", c.seed->theta}};
    return {
        {"model",
         {{"kind", c.kind == ModelKind::kApplication ? "application" : "free"},
          {"a", p.a},
          {"c1", p.c1},
          {"c2", p.c2},
          {"mu1", p.mu1},
          {"mu2", p.mu2},
          {"gamma", p.gamma},
          {"omega", p.omega},
          {"harmonic", p.harmonic}}},
        {"free_flight", to_string(c.free_flight)},
        {"epsilon", c.epsilon},
        {"epsilons", c.epsilons},
        {"integrator",
         {{"rel_tol", c.integrator.rel_tol},
          {"abs_tol", c.integrator.abs_tol},
          {"event_tol", c.integrator.event_tol},
          {"max_steps", c.integrator.max_steps}}},
        {"quadrature", {{"nodes_per_segment", c.quadrature.nodes_per_segment}}},
        {"newton",
         {{"tol", c.newton.tol},
          {"max_iter", c.newton.max_iter},
          {"max_halvings", c.newton.max_halvings}}},
        {"fixed_point", fixed},
        {"grid", {{"A", axis_json(c.grid_A)}, {"theta", axis_json(c.grid_theta)}}},
        {"simulate",
         {{"start", start_name(c.simulate.start)},
          {"x", c.simulate.x},
          {"v", c.simulate.v},
          {"A", c.simulate.A},
          {"theta", c.simulate.theta},
          {"periods", c.simulate.periods},
          {"stride", c.simulate.stride}}},
        {"converge",
         {{"exclusion_half_width", c.converge.exclusion_half_width},
          {"samples", c.converge.samples},
          {"sample_count", c.converge.sample_count}}},
        {"workers", c.workers},
    };
}

}  // namespace nio::cli
