#include "nio/limit.hpp"

#include <cmath>
#include <string>

namespace nio {

LimitCycle::LimitCycle(double A0, double theta0) : A0_(A0), theta0_(theta0) {
    require_amplitude(A0, "LimitCycle");
    if (!(theta0 > 0.0 && theta0 < 0.5 * kPi)) {
        throw DomainError("limit cycle phase " + std::to_string(theta0) + " outside (0, pi/2)");
    }
}

CartesianState LimitCycle::at(double t) const {
    if (!(t >= 0.0 && t <= kPi)) {
        throw DomainError("limit solution evaluated at t = " + std::to_string(t) +
                          " outside [0, pi]");
    }
    const double tj = jump_time();
    if (t == tj) return {0.0, one_sided_velocities().second, t};
    // After the impact the motion continues on the half-period shifted arc.
    const double angle = t < tj ? t + theta0_ : t + theta0_ + kPi;
    return {A0_ * std::cos(angle), -A0_ * std::sin(angle), t};
}

std::pair<double, double> LimitCycle::one_sided_velocities() const {
    // The pre-impact arc reaches x = 0 at angle pi/2.
    return {-A0_, reflect(-A0_)};
}

}  // namespace nio
