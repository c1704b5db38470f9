#pragma once

// The averaged displacement map Pbar(A, theta): the first-order coefficient in
// eps of the period-pi return map, in quadrature form for any forcing pair and
// in closed form for the bouncing-ball model.

#include <cmath>
#include <functional>
#include <numbers>

#include <Eigen/Core>

#include "nio/model.hpp"

namespace nio {

struct AveragedValue {
    double dA = 0.0;
    double dTheta = 0.0;

    Vec2 vec() const { return {dA, dTheta}; }
};

struct QuadratureConfig {
    /// Nodes per integration segment. Segments are split into panels of an
    /// 8-point rule, so the count is rounded up to a multiple of 8.
    int nodes_per_segment = 64;

    void validate() const;
};

/// Pbar by composite Gauss-Legendre quadrature over [0, pi/2 - theta],
/// [pi/2 - theta, pi] (free flight, f at eps = 0) and [0, pi] (contact, g at
/// eps = 0 with velocity -A sin(s + pi/2) and frozen time pi/2 - theta).
///
/// Requires A > 1e-8 and theta in (0, pi/2).
AveragedValue averaged_map(const PolarState& s, const ForcingPair& forcing, double omega0,
                           const QuadratureConfig& q = {},
                           FreeFlightForm form = FreeFlightForm::kChartAdapted);

/// Closed form of Pbar for the bouncing-ball model (harmonic 1):
///   dA     = gamma theta cos(theta) - (pi/2) A (c1 + c2 w)
///            + (pi/2)(mu1 + mu2 w) A (1 - 3A^2/4)
///   dTheta = -(gamma/A)(cos(theta) + theta sin(theta)) + (pi/2)(a + 2w).
template <typename Scalar>
BasicPolarState<Scalar> closed_form_pbar(const BasicPolarState<Scalar>& s,
                                         const BouncingBallParams& p) {
    using std::cos;
    using std::sin;
    const Scalar half_pi = std::numbers::pi_v<Scalar> / 2;
    const Scalar A = s.A;
    const Scalar th = s.theta;
    const Scalar gamma = p.gamma;
    const Scalar dA = gamma * th * cos(th) - half_pi * A * Scalar(p.damping()) +
                      half_pi * Scalar(p.rayleigh()) * A * (1 - Scalar(0.75) * A * A);
    const Scalar dTheta =
        -(gamma / A) * (cos(th) + th * sin(th)) + half_pi * Scalar(p.stiffness());
    return {dA, dTheta};
}

/// Double-precision closed form with argument checks (A > 1e-8, harmonic 1).
AveragedValue closed_form_pbar(const PolarState& s, const BouncingBallParams& p);

/// Exact Jacobian of the closed form, rows (dA, dTheta), columns (A, theta).
Mat2 closed_form_jacobian(const PolarState& s, const BouncingBallParams& p);

using AveragedMapFn = std::function<AveragedValue(const PolarState&)>;

/// Central differences with h = 1e-6 max(1, |A|) in both coordinates.
Mat2 averaged_jacobian(const PolarState& s, const AveragedMapFn& map);

/// Quadrature map bound to a forcing pair.
AveragedMapFn quadrature_map(ForcingPair forcing, double omega0, QuadratureConfig q = {},
                             FreeFlightForm form = FreeFlightForm::kChartAdapted);

/// Closed-form map bound to the bouncing-ball parameters.
AveragedMapFn closed_form_map(const BouncingBallParams& p);

}  // namespace nio
