#include "nio/bifurcation.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace nio {

std::string to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::kStable: return "Stable";
        case Verdict::kUnstable: return "Unstable";
        case Verdict::kMarginal: return "Marginal";
    }
    return "unknown";
}

StabilityReport classify(const Mat2& jacobian) {
    StabilityReport report;
    report.trace = jacobian.trace();
    report.det = jacobian.determinant();
    const Eigen::EigenSolver<Mat2> solver(jacobian, false);
    const auto& values = solver.eigenvalues();
    report.eigenvalues = {values(0), values(1)};

    const double re0 = values(0).real();
    const double re1 = values(1).real();
    if (std::abs(re0) <= kMarginalBand || std::abs(re1) <= kMarginalBand) {
        report.verdict = Verdict::kMarginal;
    } else if (re0 < 0.0 && re1 < 0.0) {
        report.verdict = Verdict::kStable;
    } else {
        report.verdict = Verdict::kUnstable;
    }
    report.trace_det_stable = report.trace < 0.0 && report.det > 0.0;
    return report;
}

NewtonResult newton_zero(const AveragedMapFn& map, const JacobianFn& jacobian,
                         const PolarState& seed, const NewtonOptions& options) {
    PolarState z = seed;
    Vec2 F = map(z).vec();
    double residual = F.lpNorm<Eigen::Infinity>();

    for (int iter = 0; iter < options.max_iter; ++iter) {
        if (residual < options.tol) return {z, residual, iter};
        const Mat2 J = jacobian(z);
        if (!(std::abs(J.determinant()) >= 1e-14)) {
            throw SingularityError("singular Jacobian at (A, theta) = (" + std::to_string(z.A) +
                                   ", " + std::to_string(z.theta) + ")");
        }
        const Vec2 step = J.partialPivLu().solve(-F);

        bool accepted = false;
        double lambda = 1.0;
        for (int halving = 0; halving <= options.max_halvings; ++halving, lambda *= 0.5) {
            const PolarState trial = PolarState::from(z.vec() + lambda * step);
            Vec2 trial_F;
            try {
                trial_F = map(trial).vec();
            } catch (const DomainError&) {
                continue;
            } catch (const DegenerateStateError&) {
                continue;
            }
            const double trial_residual = trial_F.lpNorm<Eigen::Infinity>();
            if (trial_residual < residual) {
                z = trial;
                F = trial_F;
                residual = trial_residual;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (residual < options.tol) break;
            throw NonConvergenceError("Newton stalled at (A, theta) = (" + std::to_string(z.A) +
                                      ", " + std::to_string(z.theta) + "), residual " +
                                      std::to_string(residual));
        }
    }
    if (residual < options.tol) return {z, residual, options.max_iter};
    throw NonConvergenceError("Newton did not converge in " + std::to_string(options.max_iter) +
                              " iterations; last iterate (" + std::to_string(z.A) + ", " +
                              std::to_string(z.theta) + "), residual " + std::to_string(residual));
}

namespace {

double phase_ratio(double theta, const BouncingBallParams& p) {
    return (std::cos(theta) + theta * std::sin(theta)) / p.stiffness();
}

bool has_rayleigh(const BouncingBallParams& p) { return p.mu1 != 0.0 || p.mu2 != 0.0; }

constexpr double kDerivativeStep = 1e-6;

}  // namespace

double M_of_theta(double theta, const BouncingBallParams& p) {
    if (p.stiffness() == 0.0) throw DomainError("a + 2 omega must be nonzero");
    const double u = phase_ratio(theta, p);
    const double cubic = 3.0 * p.gamma * p.gamma / (kPi * kPi) * u * u * u;
    return -theta * std::cos(theta) + p.damping() * u - p.rayleigh() * (u - cubic);
}

double K_of_theta(double theta, const BouncingBallParams& p) {
    if (p.stiffness() == 0.0) throw DomainError("a + 2 omega must be nonzero");
    const double u = phase_ratio(theta, p);
    const double S = p.stiffness();
    const double coefficient =
        p.damping() / S - p.rayleigh() / S * (1.0 - 3.0 * p.gamma * p.gamma / (kPi * kPi) * u * u);
    if (theta >= 0.5 * kPi) {
        if (coefficient == 0.0) return 0.0;
        return std::copysign(std::numeric_limits<double>::infinity(), coefficient);
    }
    return coefficient * (1.0 / theta + std::tan(theta));
}

double M_prime(double theta, const BouncingBallParams& p) {
    const double h = kDerivativeStep;
    return (M_of_theta(theta + h, p) - M_of_theta(theta - h, p)) / (2.0 * h);
}

double K_prime(double theta, const BouncingBallParams& p) {
    const double h = kDerivativeStep;
    return (K_of_theta(theta + h, p) - K_of_theta(theta - h, p)) / (2.0 * h);
}

namespace {

template <typename F>
double bisect(F&& fn, double lo, double hi, double tol) {
    double f_lo = fn(lo);
    const double f_hi = fn(hi);
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo > 0.0) == (f_hi > 0.0)) {
        throw NoRootError("no sign change on [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double f_mid = fn(mid);
        if (f_mid == 0.0) return mid;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double find_theta_star(const BouncingBallParams& p) {
    p.validate();
    if (!has_rayleigh(p)) {
        return bisect([](double th) { return th - std::cos(th); }, 0.0, 0.5 * kPi, 1e-14);
    }
    constexpr double kGrid = 1e-4;
    auto dK = [&](double th) { return K_prime(th, p); };
    double last_lo = -1.0;
    double prev = dK(kGrid);
    for (double th = 2.0 * kGrid; th < 0.5 * kPi - kGrid; th += kGrid) {
        const double cur = dK(th);
        if ((prev > 0.0) != (cur > 0.0)) last_lo = th - kGrid;
        prev = cur;
    }
    if (last_lo < 0.0) return 1e-3;
    return bisect(dK, last_lo, last_lo + kGrid, 1e-14);
}

Theta0Search find_theta0(const BouncingBallParams& p, double tol) {
    Theta0Search search;
    search.theta_star = find_theta_star(p);
    search.K_at_star = K_of_theta(search.theta_star, p);
    if (!(search.K_at_star < 1.0)) {
        search.failure = "K(theta*) = " + std::to_string(search.K_at_star) + " is not below 1";
        return search;
    }
    const double lo = search.theta_star;
    const double hi = 0.5 * kPi - 1e-9;
    auto excess = [&](double th) { return K_of_theta(th, p) - 1.0; };
    if (!(excess(hi) > 0.0)) {
        search.failure = "-1 + K(theta) has no root on [theta*, pi/2)";
        return search;
    }
    search.theta0 = bisect(excess, lo, hi, tol);
    return search;
}

double A0_formula(double theta0, const BouncingBallParams& p) {
    if (!(p.stiffness() > 0.0)) throw DomainError("A0 requires a + 2 omega > 0");
    return p.gamma * (std::cos(theta0) + theta0 * std::sin(theta0)) /
           (0.5 * kPi * p.stiffness());
}

ApplicationReport analyze_application(const BouncingBallParams& p) {
    p.validate();
    ApplicationReport report;
    ApplicationAnalysis& a = report.analysis;
    HypothesisChecks& h = a.hypotheses;

    Theta0Search search;
    try {
        search = find_theta0(p);
    } catch (const Error& e) {
        a.failure = e.what();
        return report;
    }
    a.theta_star = search.theta_star;
    a.K_at_star = search.K_at_star;
    h.k_star_below_one = search.K_at_star < 1.0;
    if (!search.theta0) {
        a.failure = search.failure;
        return report;
    }
    h.theta0_found = true;
    a.theta0 = *search.theta0;

    if (!(p.stiffness() > 0.0)) {
        a.failure = "a + 2 omega must be positive for A0";
        return report;
    }
    a.A0 = A0_formula(a.theta0, p);
    a.M_at_theta0 = M_of_theta(a.theta0, p);
    a.M_prime_at_theta0 = M_prime(a.theta0, p);
    h.m_vanishes = std::abs(a.M_at_theta0) < 1e-10;
    h.a0_nondegenerate = a.A0 > kMinAmplitude;
    if (!h.a0_nondegenerate) {
        a.failure = "A0 = " + std::to_string(a.A0) + " is degenerate";
        return report;
    }
    h.trace_condition = -p.damping() + p.rayleigh() * (1.0 - 3.0 * a.A0 * a.A0) < 0.0;

    EquilibriumReport eq;
    eq.state = {a.A0, a.theta0};
    eq.jacobian = closed_form_jacobian(eq.state, p);
    eq.stability = classify(eq.jacobian);
    h.det_positive = eq.stability.det > 0.0;
    report.equilibrium = eq;
    if (!h.all()) {
        a.failure = !h.m_vanishes        ? "M(theta0) does not vanish"
                    : !h.trace_condition ? "trace condition violated"
                                         : "Jacobian determinant not positive";
    }
    return report;
}

}  // namespace nio
