#pragma once

// Zeros of the averaged map, their linear stability, and the bouncing-ball
// analysis chain theta* -> K(theta*) -> theta0 -> A0 -> Jacobian -> verdict.

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <string>

#include "nio/averaging.hpp"
#include "nio/model.hpp"

namespace nio {

enum class Verdict { kStable, kUnstable, kMarginal };

std::string to_string(Verdict verdict);

/// Real parts within this band count as marginal.
inline constexpr double kMarginalBand = 1e-10;

struct StabilityReport {
    double trace = 0.0;
    double det = 0.0;
    std::array<std::complex<double>, 2> eigenvalues{};
    /// Decided by the eigenvalue real parts.
    Verdict verdict = Verdict::kMarginal;
    /// Trace/determinant test: stable iff trace < 0 and det > 0.
    bool trace_det_stable = false;

    bool routes_agree() const { return (verdict == Verdict::kStable) == trace_det_stable; }
};

StabilityReport classify(const Mat2& jacobian);

struct EquilibriumReport {
    PolarState state;
    Mat2 jacobian = Mat2::Zero();
    StabilityReport stability;
};

struct NewtonOptions {
    double tol = 1e-12;
    int max_iter = 50;
    /// Step halvings tried when the residual does not decrease.
    int max_halvings = 8;
};

struct NewtonResult {
    PolarState state;
    double residual;
    int iterations;
};

using JacobianFn = std::function<Mat2(const PolarState&)>;

/// Damped Newton iteration for a zero of `map`. Converged when the sup-norm
/// residual drops below tol.
///
/// Throws SingularityError when |det J| < 1e-14 and NonConvergenceError when
/// max_iter is reached or no damped step reduces the residual.
NewtonResult newton_zero(const AveragedMapFn& map, const JacobianFn& jacobian,
                         const PolarState& seed, const NewtonOptions& options = {});

// ---------------------------------------------------------------------------
// Bouncing-ball bifurcation functions

/// M(theta); its zero theta0 fixes the phase of the emerging orbit.
double M_of_theta(double theta, const BouncingBallParams& p);

/// K(theta), with M(theta) = theta cos(theta) (-1 + K(theta)). Returns +inf at
/// theta = pi/2.
double K_of_theta(double theta, const BouncingBallParams& p);

/// Central-difference derivatives with step 1e-6.
double M_prime(double theta, const BouncingBallParams& p);
double K_prime(double theta, const BouncingBallParams& p);

/// Right end of the last sign change of K' in (0, pi/2). Without Rayleigh
/// terms this is the root of theta = cos(theta); otherwise a 1e-4 sign scan
/// of K' refined by bisection, falling back to 1e-3 when K' never changes
/// sign.
double find_theta_star(const BouncingBallParams& p);

struct Theta0Search {
    double theta_star = 0.0;
    double K_at_star = 0.0;
    std::optional<double> theta0;
    /// Empty when theta0 was found.
    std::string failure;
};

/// Bisection for -1 + K(theta) = 0 on [theta*, pi/2 - 1e-9]. Reports, rather
/// than throws, when K(theta*) >= 1 or no sign change exists.
Theta0Search find_theta0(const BouncingBallParams& p, double tol = 1e-13);

/// A0 = gamma (cos theta0 + theta0 sin theta0) / ((pi/2)(a + 2 w)); requires
/// a + 2 w > 0.
double A0_formula(double theta0, const BouncingBallParams& p);

struct HypothesisChecks {
    bool k_star_below_one = false;
    bool theta0_found = false;
    bool a0_nondegenerate = false;
    bool m_vanishes = false;
    bool trace_condition = false;
    bool det_positive = false;

    bool all() const {
        return k_star_below_one && theta0_found && a0_nondegenerate && m_vanishes &&
               trace_condition && det_positive;
    }
};

struct ApplicationAnalysis {
    double theta_star = 0.0;
    double K_at_star = 0.0;
    double theta0 = 0.0;
    double A0 = 0.0;
    double M_at_theta0 = 0.0;
    double M_prime_at_theta0 = 0.0;
    HypothesisChecks hypotheses;
    std::string failure;
};

struct ApplicationReport {
    ApplicationAnalysis analysis;
    /// Present once (A0, theta0) has been constructed.
    std::optional<EquilibriumReport> equilibrium;
};

/// Runs the full chain. Stage failures are reported in `hypotheses` and
/// `failure`, never thrown (except for invalid parameters).
ApplicationReport analyze_application(const BouncingBallParams& p);

}  // namespace nio
