#include "nio/poincare.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "nio/limit.hpp"

namespace nio {

PolarState poincare_map(const PolarState& s, const SmoothedParams& params,
                        const IntegratorConfig& cfg, double t0) {
    params.validate();
    if (!(s.theta > 0.0 && s.theta < 0.5 * kPi)) {
        throw DomainError("Poincare map requires theta in (0, pi/2), got " +
                          std::to_string(s.theta));
    }
    FlowResult details;
    PolarState end = chart_flow(s, t0, t0 + kPi, params, cfg, &details);
    if (details.contact_passages != 1) {
        throw TopologyError("trajectory from (A, theta) = (" + std::to_string(s.A) + ", " +
                            std::to_string(s.theta) + ") makes " +
                            std::to_string(details.contact_passages) +
                            " contact passages in one period");
    }
    end.theta -= kPi;
    return end;
}

AveragedValue scaled_displacement(const PolarState& s, const SmoothedParams& params,
                                  const IntegratorConfig& cfg) {
    const Vec2 d = (poincare_map(s, params, cfg).vec() - s.vec()) / params.epsilon;
    return {d(0), d(1)};
}

Mat2 poincare_jacobian(const PolarState& s, const SmoothedParams& params,
                       const IntegratorConfig& cfg, double h) {
    Mat2 J;
    for (int j = 0; j < 2; ++j) {
        Vec2 step = Vec2::Zero();
        step(j) = h;
        const Vec2 plus = poincare_map(PolarState::from(s.vec() + step), params, cfg).vec();
        const Vec2 minus = poincare_map(PolarState::from(s.vec() - step), params, cfg).vec();
        J.col(j) = (plus - minus) / (2.0 * h);
    }
    return J;
}

double FixedPointResult::max_multiplier() const {
    return std::max(std::abs(multipliers[0]), std::abs(multipliers[1]));
}

namespace {

void check_epsilon(double epsilon, bool allow_small) {
    if (!(epsilon > 0.0 && epsilon <= kMaxEpsilon)) {
        throw DomainError("epsilon = " + std::to_string(epsilon) + " outside (0, 0.2]");
    }
    if (!allow_small && epsilon < kMinStudyEpsilon) {
        throw DomainError("epsilon = " + std::to_string(epsilon) +
                          " is below 0.005; enable small epsilons explicitly");
    }
}

}  // namespace

FixedPointResult fixed_point(const SmoothedParams& params, const PolarState& seed,
                             const IntegratorConfig& cfg, const FixedPointOptions& options) {
    check_epsilon(params.epsilon, options.allow_small_epsilon);
    auto displacement = [&](const PolarState& z) -> Vec2 {
        return poincare_map(z, params, cfg).vec() - z.vec();
    };

    FixedPointResult result;
    result.epsilon = params.epsilon;
    PolarState z = seed;
    Vec2 F = displacement(z);
    double residual = F.lpNorm<Eigen::Infinity>();
    int iter = 0;
    for (; iter < options.max_iter && !(residual < options.tol); ++iter) {
        const Mat2 J = poincare_jacobian(z, params, cfg, options.fd_step) - Mat2::Identity();
        const Vec2 step = J.partialPivLu().solve(-F);
        if (!step.allFinite()) throw NonConvergenceError("singular fixed-point Jacobian");

        bool accepted = false;
        double lambda = 1.0;
        for (int halving = 0; halving <= options.max_halvings; ++halving, lambda *= 0.5) {
            const PolarState trial = PolarState::from(z.vec() + lambda * step);
            Vec2 trial_F;
            try {
                trial_F = displacement(trial);
            } catch (const DomainError&) {
                continue;
            } catch (const TopologyError&) {
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
        if (!accepted) break;
    }
    if (!(residual < options.tol)) {
        throw NonConvergenceError("fixed-point Newton stopped at (A, theta) = (" +
                                  std::to_string(z.A) + ", " + std::to_string(z.theta) +
                                  ") with residual " + std::to_string(residual) + " after " +
                                  std::to_string(iter) + " iterations");
    }

    result.state = z;
    result.residual = residual;
    result.iterations = iter;
    result.jacobian = poincare_jacobian(z, params, cfg, options.fd_step);
    const Eigen::EigenSolver<Mat2> solver(result.jacobian, false);
    result.multipliers = {solver.eigenvalues()(0), solver.eigenvalues()(1)};
    return result;
}

std::vector<double> default_samples(double jump_time, double half_width, int count) {
    // Allowed set: [0, a) and (b, pi] with a = jump - w, b = jump + w; spread the
    // samples over its total length, excluding the window edges.
    const double a = std::clamp(jump_time - half_width, 0.0, kPi);
    const double b = std::clamp(jump_time + half_width, 0.0, kPi);
    const double length = a + (kPi - b);
    std::vector<double> samples;
    samples.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double position = length * (i + 0.5) / count;
        samples.push_back(position < a ? position : b + (position - a));
    }
    return samples;
}

bool ConvergenceTable::all_ok() const {
    return std::all_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return r.ok; });
}

bool ConvergenceTable::column_decreasing(double ConvergenceRow::*column) const {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (!(rows[i].*column < rows[i - 1].*column)) return false;
    }
    return true;
}

bool ConvergenceTable::monotone() const {
    if (!all_ok()) return false;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (!(rows[i].dA + rows[i].dtheta < rows[i - 1].dA + rows[i - 1].dtheta)) return false;
    }
    return column_decreasing(&ConvergenceRow::scaled_disp_err) &&
           column_decreasing(&ConvergenceRow::pointwise_err);
}

namespace {

ConvergenceRow study_row(const ConvergenceSetup& setup, const std::vector<double>& samples,
                         double epsilon) {
    ConvergenceRow row;
    row.epsilon = epsilon;
    try {
        const SmoothedParams params = setup.params_for(epsilon);
        const FixedPointResult fp =
            fixed_point(params, setup.limit_ref, setup.integrator, setup.fixed_point);
        row.fixed_point = fp;
        row.dA = std::abs(fp.state.A - setup.limit_ref.A);
        row.dtheta = std::abs(fp.state.theta - setup.limit_ref.theta);
        row.max_multiplier = fp.max_multiplier();

        const Vec2 scaled = scaled_displacement(setup.limit_ref, params, setup.integrator).vec();
        row.scaled_disp_err = (scaled - setup.pbar(setup.limit_ref).vec()).norm();

        const LimitCycle limit(setup.limit_ref.A, setup.limit_ref.theta);
        CartesianState start = chart_to_cartesian(fp.state, Chart::kApproach, params);
        start.t = 0.0;
        FlowObserver observer;
        observer.sample_times = samples;
        double worst = 0.0;
        observer.on_sample = [&](const TraceSample& sample) {
            // Crossing reports are not among the requested samples.
            if (!std::binary_search(samples.begin(), samples.end(), sample.t)) return;
            worst = std::max(worst, std::abs(sample.x - limit.at(sample.t).x));
        };
        flow(start, kPi, params, setup.integrator, &observer);
        row.pointwise_err = worst;
        row.ok = true;
    } catch (const Error& e) {
        row.failure = e.what();
    }
    return row;
}

}  // namespace

ConvergenceTable convergence_study(const ConvergenceSetup& setup,
                                   std::span<const double> epsilons) {
    if (!setup.params_for || !setup.pbar) throw DomainError("convergence setup is incomplete");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        check_epsilon(epsilons[i], setup.fixed_point.allow_small_epsilon);
        if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
            throw DomainError("epsilons must be strictly decreasing");
        }
    }
    const double jump = 0.5 * kPi - setup.limit_ref.theta;
    std::vector<double> samples = setup.samples;
    if (samples.empty()) samples = default_samples(jump, setup.exclusion_half_width);
    std::sort(samples.begin(), samples.end());
    for (double t : samples) {
        if (!(t >= 0.0 && t <= kPi)) {
            throw DomainError("sample time " + std::to_string(t) + " outside [0, pi]");
        }
        if (std::abs(t - jump) < setup.exclusion_half_width) {
            throw DomainError("sample time " + std::to_string(t) +
                              " lies inside the exclusion window around the impact");
        }
    }

    ConvergenceTable table;
    table.rows.resize(epsilons.size());
    int workers = setup.workers > 0 ? setup.workers
                                    : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(1, epsilons.size())));

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < epsilons.size(); i = next++) {
            table.rows[i] = study_row(setup, samples, epsilons[i]);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    return table;
}

}  // namespace nio
