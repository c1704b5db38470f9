#pragma once

// JSON run configuration shared by all subcommands. Every field is optional and
// falls back to the defaults below; unknown keys are rejected so typos do not
// silently run the defaults.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nio/averaging.hpp"
#include "nio/bifurcation.hpp"
#include "nio/integrator.hpp"
#include "nio/model.hpp"
#include "nio/poincare.hpp"

namespace nio::cli {

/// All validation problems of one document, each prefixed by its field path.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

enum class ModelKind { kApplication, kFree };

struct GridAxis {
    double min = 0.0;
    double max = 0.0;
    int count = 0;

    std::vector<double> values() const;
};

enum class StartKind { kFixedPoint, kCartesian, kPolar };

struct SimulateConfig {
    StartKind start = StartKind::kFixedPoint;
    double x = 1.0;
    double v = 0.0;
    double A = 1.0;
    double theta = 0.8;
    int periods = 1;
    double stride = 0.01;
};

struct ConvergeConfig {
    double exclusion_half_width = 0.2;
    /// Explicit sample times; empty selects `sample_count` evenly spread ones.
    std::vector<double> samples;
    int sample_count = 20;
};

struct RunConfig {
    ModelKind kind = ModelKind::kApplication;
    BouncingBallParams model;
    FreeFlightForm free_flight = FreeFlightForm::kChartAdapted;
    double epsilon = 0.05;
    std::vector<double> epsilons{0.08, 0.04, 0.02, 0.01};
    IntegratorConfig integrator;
    QuadratureConfig quadrature;
    NewtonOptions newton;
    FixedPointOptions fixed_point;
    /// Seed for the averaged zero and the fixed point; defaults to the
    /// analytic (A0, theta0) of the application model.
    std::optional<PolarState> seed;
    GridAxis grid_A{0.2, 1.0, 5};
    GridAxis grid_theta{0.2, 1.4, 5};
    SimulateConfig simulate;
    ConvergeConfig converge;
    /// Worker threads for sweeps; 0 selects the hardware concurrency.
    int workers = 0;

    ForcingPair forcing() const;
    SmoothedParams smoothed(double eps) const;
    /// The closed form applies: application model with harmonic 1.
    bool has_closed_form() const;
    AveragedMapFn pbar() const;
};

/// Parses and validates; throws ConfigError listing every problem found.
RunConfig parse_config(const nlohmann::json& doc);

/// Reads and parses a file; parse diagnostics become a ConfigError.
RunConfig load_config(const std::string& path);

/// Complete echo of a configuration; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& config);

}  // namespace nio::cli
