#pragma once

// Closed-form periodic solution of the impact limit
//     x'' + x = 0 for x > 0,   x'(t-0) = -x'(t+0) when x(t) = 0.

#include <utility>

#include "nio/model.hpp"

namespace nio {

class LimitCycle {
public:
    /// A0 > 0 and theta0 in (0, pi/2), so that the single impact falls inside
    /// (0, pi/2).
    LimitCycle(double A0, double theta0);

    double amplitude() const { return A0_; }
    double phase() const { return theta0_; }
    double jump_time() const { return 0.5 * kPi - theta0_; }

    /// State at t in [0, pi]. At the impact time returns x = 0 and the
    /// post-impact velocity.
    CartesianState at(double t) const;

    /// (pre-impact, post-impact) velocity at the jump time.
    std::pair<double, double> one_sided_velocities() const;

private:
    double A0_;
    double theta0_;
};

inline CartesianState limit_solution(const LimitCycle& cycle, double t) { return cycle.at(t); }

/// Velocity reversal at impact.
constexpr double reflect(double v_in) { return -v_in; }

}  // namespace nio
