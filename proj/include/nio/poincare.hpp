#pragma once

// Time-pi return map in chart coordinates, its fixed points and Floquet
// multipliers, and the eps -> 0 convergence study against the averaged map and
// the impact limit cycle.

#include <array>
#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nio/averaging.hpp"
#include "nio/integrator.hpp"
#include "nio/model.hpp"

namespace nio {

/// Smallest eps accepted by fixed_point and convergence_study unless
/// explicitly allowed.
inline constexpr double kMinStudyEpsilon = 0.005;

/// P_eps(A, theta): flow the approach-chart state from t0 to t0 + pi and
/// subtract pi from the continued phase.
///
/// Requires theta in (0, pi/2) inside the approach chart. Throws TopologyError
/// unless the trajectory enters contact exactly once.
PolarState poincare_map(const PolarState& s, const SmoothedParams& params,
                        const IntegratorConfig& cfg = {}, double t0 = 0.0);

/// (P_eps(s) - s) / eps.
AveragedValue scaled_displacement(const PolarState& s, const SmoothedParams& params,
                                  const IntegratorConfig& cfg = {});

/// Central-difference Jacobian of P_eps with step h in both coordinates.
Mat2 poincare_jacobian(const PolarState& s, const SmoothedParams& params,
                       const IntegratorConfig& cfg = {}, double h = 1e-6);

struct FixedPointOptions {
    /// Sup-norm tolerance on P_eps(z) - z.
    double tol = 1e-10;
    double fd_step = 1e-6;
    int max_iter = 30;
    int max_halvings = 8;
    bool allow_small_epsilon = false;
};

struct FixedPointResult {
    double epsilon = 0.0;
    PolarState state;
    std::array<std::complex<double>, 2> multipliers{};
    /// Sup norm of P_eps(z) - z at the returned state.
    double residual = 0.0;
    Mat2 jacobian = Mat2::Zero();
    int iterations = 0;

    double max_multiplier() const;
};

/// Damped Newton on z -> P_eps(z) - z with a finite-difference Jacobian.
/// Throws NonConvergenceError on divergence; topology and integrator errors
/// propagate.
FixedPointResult fixed_point(const SmoothedParams& params, const PolarState& seed,
                             const IntegratorConfig& cfg = {},
                             const FixedPointOptions& options = {});

/// `count` sample times spread evenly over [0, pi] minus the window
/// |t - jump_time| < half_width.
std::vector<double> default_samples(double jump_time, double half_width, int count = 20);

struct ConvergenceSetup {
    /// Model at a given eps.
    std::function<SmoothedParams(double)> params_for;
    /// Averaged map the scaled displacement is compared with.
    AveragedMapFn pbar;
    /// Zero (A0, theta0) of pbar; also seeds every fixed-point solve.
    PolarState limit_ref;
    /// Sample times for the pointwise comparison; filled by default_samples
    /// when empty.
    std::vector<double> samples;
    double exclusion_half_width = 0.2;
    IntegratorConfig integrator;
    FixedPointOptions fixed_point;
    /// Concurrent rows; 0 selects the hardware concurrency.
    int workers = 0;
};

struct ConvergenceRow {
    double epsilon = 0.0;
    double dA = 0.0;
    double dtheta = 0.0;
    double max_multiplier = 0.0;
    double scaled_disp_err = 0.0;
    double pointwise_err = 0.0;
    FixedPointResult fixed_point;
    bool ok = false;
    std::string failure;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;

    /// True when every row succeeded and each error column (dA + dtheta,
    /// scaled displacement, pointwise) strictly decreases down the rows.
    bool monotone() const;
    bool column_decreasing(double ConvergenceRow::*column) const;
    bool all_ok() const;
};

/// Throws DomainError when eps is not strictly decreasing, exceeds the cap,
/// falls below kMinStudyEpsilon (unless allowed), or a sample lies inside the
/// exclusion window. Per-row numerical failures are recorded in the row.
ConvergenceTable convergence_study(const ConvergenceSetup& setup,
                                   std::span<const double> epsilons);

}  // namespace nio
