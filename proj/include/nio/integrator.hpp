#pragma once

// Event-driven integration of the two-branch oscillator. Free flight (x > 0) is
// integrated in physical time; the contact phase (x < 0) is integrated in the
// rescaled time s = (t - t_entry)/(eps w) with y = x/(eps w), where it reads
//     y' = v,   v' = -y + eps w g(t, eps w y, v, eps)
// and is no longer stiff.

#include <functional>
#include <span>
#include <vector>

#include "nio/model.hpp"

namespace nio {

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    /// Time tolerance for localizing a sign change of x.
    double event_tol = 1e-13;
    /// Budget of attempted steps (accepted plus rejected) per call.
    long max_steps = 500000;

    void validate() const;
};

enum class Phase { kFree, kContact };
enum class CrossingDirection { kDownward, kUpward };

const char* to_string(Phase phase);

struct Crossing {
    double t;
    CrossingDirection direction;
};

struct StepStats {
    long accepted = 0;
    long rejected = 0;
    long contact_accepted = 0;

    long total() const { return accepted + rejected; }
};

struct FlowResult {
    CartesianState final;
    std::vector<Crossing> crossings;
    /// Total time spent with x < 0.
    double contact_time = 0.0;
    /// Number of contact intervals overlapping the span.
    int contact_passages = 0;
    StepStats steps;

    bool multiple_contacts() const { return contact_passages > 1; }
};

struct TraceSample {
    double t;
    double x;
    double v;
    Phase phase;
};

/// Optional observation of a flow. Dense-output samples are emitted at each
/// requested time (sorted ascending, inside the span); every crossing is also
/// reported as a sample with x = 0 and the phase being entered. Sampling never
/// alters the step sequence.
struct FlowObserver {
    std::vector<double> sample_times;
    std::function<void(const TraceSample&)> on_sample;
};

/// Integrates from `start` (its t component is the initial time) up to t_end.
///
/// Throws NonConvergenceError when max_steps is exhausted,
/// NumericalBlowupError on non-finite values, DegenerateStateError on a
/// grazing contact (|v| < 1e-8 at x = 0) and TrappedInContactError when a
/// contact phase outlasts ten nominal half-periods.
FlowResult flow(const CartesianState& start, double t_end, const SmoothedParams& params,
                const IntegratorConfig& cfg = {}, const FlowObserver* observer = nullptr);

struct ContactExit {
    CartesianState exit;
    double duration;
    StepStats steps;
};

/// Integrates a single contact phase from an entry point on x = 0 with v < 0
/// to the next upward crossing.
ContactExit integrate_contact(const CartesianState& entry, const SmoothedParams& params,
                              const IntegratorConfig& cfg = {});

/// Flow in chart coordinates: the approach-chart state at t0 is mapped to
/// Cartesian form, flowed to t1, and mapped back through the chart that owns
/// the final point. The returned phase is continued (not reduced), i.e. the
/// representative closest to theta + (t1 - t0). Requires start in the approach
/// chart and 0 <= t1 - t0 <= 2 pi.
PolarState chart_flow(const PolarState& start, double t0, double t1, const SmoothedParams& params,
                      const IntegratorConfig& cfg = {}, FlowResult* details = nullptr);

/// Grazing threshold on |v| at x = 0.
inline constexpr double kGrazingSpeed = 1e-8;

}  // namespace nio
