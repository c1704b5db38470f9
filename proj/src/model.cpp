#include "nio/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nio {

ForcingPair zero_forcing() {
    auto zero = [](double, double, double, double) { return 0.0; };
    return {zero, zero};
}

std::string to_string(FreeFlightForm form) {
    switch (form) {
        case FreeFlightForm::kChartAdapted: return "chart_adapted";
        case FreeFlightForm::kHarmonic: return "harmonic";
    }
    return "unknown";
}

FreeFlightForm free_flight_form_from_string(const std::string& name) {
    if (name == "chart_adapted") return FreeFlightForm::kChartAdapted;
    if (name == "harmonic") return FreeFlightForm::kHarmonic;
    throw DomainError("unknown free-flight form '" + name + "'");
}

void SmoothedParams::validate() const {
    if (!(epsilon > 0.0) || !(epsilon <= kMaxEpsilon)) {
        throw DomainError("epsilon = " + std::to_string(epsilon) + " outside (0, 0.2]");
    }
    if (!(omega0 > 0.0)) throw DomainError("omega0 must be positive");
    if (!(epsilon * omega0 < 1.0)) throw DomainError("epsilon * omega0 must be below 1");
    if (!forcing.f || !forcing.g) throw DomainError("forcing pair is incomplete");
}

void BouncingBallParams::validate() const {
    if (!(omega > 0.0)) throw DomainError("omega must be positive");
    if (stiffness() == 0.0) throw DomainError("a + 2 omega must be nonzero");
    if (harmonic < 1) throw DomainError("forcing harmonic must be >= 1");
}

ForcingPair application_forcing(const BouncingBallParams& p) {
    const double n = p.harmonic;
    ForcingPair pair;
    pair.f = [p, n](double t, double x, double v, double) {
        return -p.a * x - p.c1 * v + p.mu1 * v * (1.0 - v * v) + p.gamma * std::sin(n * t);
    };
    pair.g = [p, n](double t, double, double v, double eps) {
        return -(p.c2 + eps * p.c1) * v + (p.mu2 + eps * p.mu1) * v * (1.0 - v * v) +
               eps * p.gamma * std::sin(n * t);
    };
    return pair;
}

SmoothedParams application_params(const BouncingBallParams& p, double epsilon,
                                  FreeFlightForm form) {
    p.validate();
    SmoothedParams params{epsilon, p.omega, application_forcing(p), form};
    params.validate();
    return params;
}

std::string to_string(Chart chart) {
    switch (chart) {
        case Chart::kApproach: return "approach";
        case Chart::kContact: return "contact";
        case Chart::kDeparture: return "departure";
    }
    return "unknown";
}

Chart chart_for_phase(double theta, double epsilon, double omega0) {
    if (!(theta >= 0.0 && theta <= kPi)) {
        throw DomainError("phase " + std::to_string(theta) + " outside [0, pi]");
    }
    const double ew = epsilon * omega0;
    if (theta < 0.5 * kPi * (1.0 - ew)) return Chart::kApproach;
    if (theta < 0.5 * kPi * (1.0 + ew)) return Chart::kContact;
    return Chart::kDeparture;
}

Chart chart_for_point(double x, double v) {
    if (x < 0.0) return Chart::kContact;
    if (v > 0.0) return Chart::kDeparture;
    return Chart::kApproach;
}

void require_amplitude(double A, const char* where) {
    if (!(A > kMinAmplitude)) {
        throw DegenerateStateError(std::string(where) + ": amplitude " + std::to_string(A) +
                                   " at or below the degeneracy floor");
    }
}

PolarState cartesian_to_chart(const CartesianState& c, Chart chart, double epsilon,
                              double omega0) {
    if (!std::isfinite(c.x) || !std::isfinite(c.v)) {
        throw DomainError("non-finite Cartesian state");
    }
    if (c.x == 0.0 && c.v == 0.0) {
        throw DegenerateStateError("origin has no amplitude/phase representation");
    }
    const double ew = epsilon * omega0;
    const double k = 1.0 - ew;
    const double half_pi = 0.5 * kPi;
    // Sign slack for points that sit on a chart boundary up to rounding.
    const double slack = 1e-12 * std::max({1.0, std::abs(c.x), std::abs(c.v)});
    auto outside = [&] {
        return DomainError("point (" + std::to_string(c.x) + ", " + std::to_string(c.v) +
                           ") outside the image of the " + to_string(chart) + " chart");
    };

    switch (chart) {
        case Chart::kApproach: {
            if (c.x < -slack || c.v > slack) throw outside();
            const double A = std::hypot(c.x, k * c.v);
            const double psi = std::clamp(std::atan2(-k * c.v, c.x), 0.0, half_pi);
            return {A, k * psi};
        }
        case Chart::kContact: {
            if (c.x > slack * ew) throw outside();
            const double u = k * c.x / ew;
            const double A = std::hypot(u, k * c.v);
            double phi = std::atan2(-k * c.v, u);
            if (phi < 0.0) phi += 2.0 * kPi;
            phi = std::clamp(phi, half_pi, 3.0 * half_pi);
            return {A, ew * (phi - half_pi) + half_pi * k};
        }
        case Chart::kDeparture: {
            if (c.x < -slack || c.v < -slack) throw outside();
            const double A = std::hypot(c.x, k * c.v);
            double chi = std::atan2(-k * c.v, c.x);
            if (chi <= 0.0) chi += 2.0 * kPi;
            chi = std::clamp(chi, 3.0 * half_pi, 2.0 * kPi);
            return {A, k * (chi - 3.0 * half_pi) + half_pi * (1.0 + ew)};
        }
    }
    throw DomainError("unknown chart");
}

}  // namespace nio
