#pragma once

// Parameters, forcing terms and the three-chart amplitude/phase atlas of the
// nearly impact oscillator
//
//     x'' + x             = eps f(t, x, x', eps),   x > 0
//     x'' + x/(eps w)^2   = g(t, x, x', eps),       x < 0.
//
// Over one pi-period the phase theta in [0, pi] is split into the approach
// chart (x >= 0, x' <= 0), the contact chart (x <= 0) of width pi*eps*w and
// the departure chart (x >= 0, x' >= 0).

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "nio/errors.hpp"

namespace nio {

inline constexpr double kPi = std::numbers::pi;

/// Amplitudes at or below this value are treated as degenerate.
inline constexpr double kMinAmplitude = 1e-8;

/// Largest admissible small parameter.
inline constexpr double kMaxEpsilon = 0.2;

template <typename Scalar>
struct BasicPolarState {
    Scalar A{};
    Scalar theta{};

    Eigen::Matrix<Scalar, 2, 1> vec() const { return {A, theta}; }
    static BasicPolarState from(const Eigen::Matrix<Scalar, 2, 1>& v) { return {v(0), v(1)}; }

    /// Same state with the phase reduced to [0, pi).
    BasicPolarState reduced() const {
        using std::floor;
        const Scalar pi = std::numbers::pi_v<Scalar>;
        return {A, theta - pi * floor(theta / pi)};
    }
};

template <typename Scalar>
struct BasicCartesianState {
    Scalar x{};
    Scalar v{};
    Scalar t{};

    bool finite() const {
        using std::isfinite;
        return isfinite(x) && isfinite(v) && isfinite(t);
    }
};

using PolarState = BasicPolarState<double>;
using CartesianState = BasicCartesianState<double>;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Scalar forcing term evaluated at (t, x, v, eps).
using ForcingFn = std::function<double(double t, double x, double v, double eps)>;

/// The pair (f, g): f drives free flight, g the contact phase. Both are
/// expected to be pi-periodic in t.
struct ForcingPair {
    ForcingFn f;
    ForcingFn g;
};

ForcingPair zero_forcing();

/// Which free-flight equation the integrator solves.
///
/// kChartAdapted is the rewritten free-flight branch
///     x'' + x/(1-eps w)^2 = eps f - (2 eps w + eps^2 w^2) x/(1-eps w)^2,
/// i.e. x'' + ((1+eps w)/(1-eps w))^2 x = eps f. Its averaged map carries the
/// -2 w A cos term. kHarmonic is x'' + x = eps f, whose averaged map carries
/// +2 w A cos instead.
enum class FreeFlightForm { kChartAdapted, kHarmonic };

std::string to_string(FreeFlightForm form);
FreeFlightForm free_flight_form_from_string(const std::string& name);

struct SmoothedParams {
    double epsilon = 0.05;
    double omega0 = 1.0;
    ForcingPair forcing = zero_forcing();
    FreeFlightForm free_flight = FreeFlightForm::kChartAdapted;

    /// Throws DomainError unless 0 < epsilon <= kMaxEpsilon, omega0 > 0 and
    /// epsilon * omega0 < 1.
    void validate() const;
};

/// Preloaded ball against a nearly elastic wall. The forcing term is
/// gamma * sin(harmonic * t); harmonic = 1 is the classical model, harmonic = 2
/// gives a forcing that is genuinely pi-periodic.
struct BouncingBallParams {
    double a = 0.0;
    double c1 = 0.1;
    double c2 = 0.2;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double gamma = 1.0;
    double omega = 1.0;
    int harmonic = 1;

    double damping() const { return c1 + c2 * omega; }
    double rayleigh() const { return mu1 + mu2 * omega; }
    double stiffness() const { return a + 2.0 * omega; }

    /// Throws DomainError unless omega > 0, a + 2 omega != 0 and harmonic >= 1.
    void validate() const;
};

ForcingPair application_forcing(const BouncingBallParams& p);

/// SmoothedParams for the bouncing-ball model at the given eps (omega0 = omega).
SmoothedParams application_params(const BouncingBallParams& p, double epsilon,
                                  FreeFlightForm form = FreeFlightForm::kChartAdapted);

// ---------------------------------------------------------------------------
// Charts

enum class Chart { kApproach = 1, kContact = 2, kDeparture = 3 };

std::string to_string(Chart chart);

/// Closed theta interval covered by a chart.
template <typename Scalar>
std::pair<Scalar, Scalar> chart_domain(Chart chart, Scalar epsilon, Scalar omega0) {
    const Scalar half_pi = std::numbers::pi_v<Scalar> / 2;
    const Scalar ew = epsilon * omega0;
    switch (chart) {
        case Chart::kApproach: return {Scalar(0), half_pi * (1 - ew)};
        case Chart::kContact: return {half_pi * (1 - ew), half_pi * (1 + ew)};
        case Chart::kDeparture: return {half_pi * (1 + ew), std::numbers::pi_v<Scalar>};
    }
    throw DomainError("unknown chart");
}

/// Chart owning theta under the half-open convention [lo, hi); theta = pi
/// belongs to the departure chart. theta must lie in [0, pi].
Chart chart_for_phase(double theta, double epsilon, double omega0);

/// Chart whose image contains the Cartesian point: contact when x < 0,
/// departure when x >= 0 and v > 0, approach otherwise.
Chart chart_for_point(double x, double v);

/// Chart to Cartesian map. theta must lie in the closed chart domain (with a
/// 1e-12 slack). The returned time component is zero.
template <typename Scalar>
BasicCartesianState<Scalar> chart_to_cartesian(const BasicPolarState<Scalar>& s, Chart chart,
                                               Scalar epsilon, Scalar omega0) {
    using std::abs;
    using std::cos;
    using std::sin;
    const Scalar pi = std::numbers::pi_v<Scalar>;
    const Scalar half_pi = pi / 2;
    const Scalar ew = epsilon * omega0;
    const Scalar k = 1 - ew;

    const auto [lo, hi] = chart_domain(chart, epsilon, omega0);
    const Scalar slack = Scalar(1e-12);
    if (!(s.theta >= lo - slack && s.theta <= hi + slack)) {
        throw DomainError("theta = " + std::to_string(static_cast<double>(s.theta)) +
                          " outside the domain of the " + to_string(chart) + " chart");
    }

    switch (chart) {
        case Chart::kApproach: {
            const Scalar psi = s.theta / k;
            return {s.A * cos(psi), -s.A / k * sin(psi), Scalar(0)};
        }
        case Chart::kContact: {
            const Scalar phi = (s.theta - half_pi * k) / ew + half_pi;
            return {ew * s.A / k * cos(phi), -s.A / k * sin(phi), Scalar(0)};
        }
        case Chart::kDeparture: {
            const Scalar chi = (s.theta - half_pi * (1 + ew)) / k + 3 * half_pi;
            return {s.A * cos(chi), -s.A / k * sin(chi), Scalar(0)};
        }
    }
    throw DomainError("unknown chart");
}

inline CartesianState chart_to_cartesian(const PolarState& s, Chart chart,
                                         const SmoothedParams& params) {
    return chart_to_cartesian<double>(s, chart, params.epsilon, params.omega0);
}

/// Inverse of chart_to_cartesian on the image of one chart. The input time
/// component is ignored. Throws DegenerateStateError at the origin and
/// DomainError when the point is outside the chart image.
PolarState cartesian_to_chart(const CartesianState& c, Chart chart, double epsilon,
                              double omega0);

inline PolarState cartesian_to_chart(const CartesianState& c, Chart chart,
                                     const SmoothedParams& params) {
    return cartesian_to_chart(c, chart, params.epsilon, params.omega0);
}

/// Throws DegenerateStateError when A <= kMinAmplitude.
void require_amplitude(double A, const char* where);

}  // namespace nio
