#include "nio/integrator.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "nio/dopri5.hpp"

namespace nio {

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(event_tol > 0.0)) {
        throw DomainError("integrator tolerances must be positive");
    }
    if (max_steps <= 0) throw DomainError("integrator max_steps must be positive");
}

const char* to_string(Phase phase) { return phase == Phase::kFree ? "free" : "contact"; }

namespace {

using Stepper = Dopri5<double, 2>;

constexpr double kInitialStep = 1e-2;
/// A contact phase longer than this many nominal half-periods (pi in s) is
/// considered trapped.
constexpr double kTrappedHalfPeriods = 10.0;

bool finite(const Vec2& y) { return std::isfinite(y(0)) && std::isfinite(y(1)); }

struct SegmentEnd {
    bool crossed = false;
    double t = 0.0;  // physical time reached
    Vec2 y = Vec2::Zero();  // (x, v) in physical units
};

class Integration {
public:
    Integration(const SmoothedParams& params, const IntegratorConfig& cfg,
                const FlowObserver* observer)
        : params_(params),
          cfg_(cfg),
          observer_(observer),
          eps_(params.epsilon),
          ew_(params.epsilon * params.omega0) {
        const double ratio = params.free_flight == FreeFlightForm::kChartAdapted
                                 ? (1.0 + ew_) / (1.0 - ew_)
                                 : 1.0;
        stiffness_ = ratio * ratio;
    }

    FlowResult run(const CartesianState& start, double t_end) {
        if (!start.finite()) throw DomainError("flow start state is not finite");
        if (!(t_end > start.t)) throw DomainError("flow span must have t1 > t0");

        result_.final = start;
        double t = start.t;
        Vec2 y(start.x, start.v);
        Phase phase;
        if (start.x > 0.0) {
            phase = Phase::kFree;
        } else if (start.x < 0.0) {
            phase = Phase::kContact;
        } else {
            check_transversal(start.v, t);
            phase = start.v < 0.0 ? Phase::kContact : Phase::kFree;
        }
        if (phase == Phase::kContact) result_.contact_passages = 1;
        emit_until(t, [&](double) { return y; }, phase, true);

        while (t < t_end) {
            if (phase == Phase::kFree) {
                const SegmentEnd end = free_segment(t, y, t_end);
                t = end.t;
                y = end.y;
                if (end.crossed) {
                    check_transversal(y(1), t);
                    result_.crossings.push_back({t, CrossingDirection::kDownward});
                    ++result_.contact_passages;
                    phase = Phase::kContact;
                    emit_event(t, y(1), phase);
                }
            } else {
                const SegmentEnd end = contact_segment(t, y, t_end);
                result_.contact_time += end.t - t;
                t = end.t;
                y = end.y;
                if (end.crossed) {
                    check_transversal(y(1), t);
                    result_.crossings.push_back({t, CrossingDirection::kUpward});
                    phase = Phase::kFree;
                    emit_event(t, y(1), phase);
                }
            }
        }
        result_.final = {y(0), y(1), t};
        return result_;
    }

    /// Contact phase from an entry point with v < 0 until the upward crossing.
    ContactExit contact_only(const CartesianState& entry) {
        const SegmentEnd end = contact_segment(entry.t, Vec2(0.0, entry.v),
                                               std::numeric_limits<double>::infinity());
        return {{0.0, end.y(1), end.t}, end.t - entry.t, result_.steps};
    }

private:
    void check_transversal(double v, double t) const {
        if (std::abs(v) < kGrazingSpeed) {
            throw DegenerateStateError("grazing contact at t = " + std::to_string(t) +
                                       " (|v| = " + std::to_string(std::abs(v)) + ")");
        }
    }

    void count_attempt(double t) {
        if (result_.steps.total() >= cfg_.max_steps) {
            throw NonConvergenceError("integrator exceeded max_steps = " +
                                      std::to_string(cfg_.max_steps) + " at t = " +
                                      std::to_string(t) + " (last state x = " +
                                      std::to_string(result_.final.x) + ", v = " +
                                      std::to_string(result_.final.v) + ")");
        }
    }

    void check_finite(const Stepper::Trial& trial, double t) const {
        if (!finite(trial.y) || !std::isfinite(trial.error_norm)) {
            throw NumericalBlowupError("non-finite state near t = " + std::to_string(t));
        }
    }

    /// Emits requested samples with time <= t_limit. `state_at` maps a
    /// physical time to the physical (x, v) state.
    template <typename StateAt>
    void emit_until(double t_limit, StateAt&& state_at, Phase phase, bool inclusive = true) {
        if (observer_ == nullptr || !observer_->on_sample) return;
        const auto& times = observer_->sample_times;
        while (next_sample_ < times.size() &&
               (inclusive ? times[next_sample_] <= t_limit : times[next_sample_] < t_limit)) {
            const double ts = times[next_sample_++];
            const Vec2 z = state_at(ts);
            observer_->on_sample({ts, z(0), z(1), phase});
        }
    }

    void emit_event(double t, double v, Phase entered) {
        if (observer_ != nullptr && observer_->on_sample) {
            observer_->on_sample({t, 0.0, v, entered});
        }
    }

    /// Bisection on the dense output of the last step for the sign change of
    /// the first component; returns the local parameter of the crossing.
    template <typename Dense>
    double locate(const Dense& dense, double h, double tol, bool downward) const {
        double lo = 0.0;
        double hi = 1.0;
        while (h * (hi - lo) > tol) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            const double value = dense(mid)(0);
            const bool past = downward ? value <= 0.0 : value >= 0.0;
            (past ? hi : lo) = mid;
        }
        return 0.5 * (lo + hi);
    }

    SegmentEnd free_segment(double t, Vec2 y, double t_end) {
        const double eps = eps_;
        const double stiffness = stiffness_;
        const ForcingFn& f = params_.forcing.f;
        auto rhs = [&](double tt, const Vec2& z) -> Vec2 {
            return {z(1), -stiffness * z(0) + eps * f(tt, z(0), z(1), eps)};
        };
        Stepper stepper(cfg_.rel_tol, cfg_.abs_tol);
        Vec2 k1 = rhs(t, y);
        double h = h_free_ > 0.0 ? h_free_ : kInitialStep;

        while (t < t_end) {
            const bool clipped = t + h >= t_end;
            const double step = clipped ? t_end - t : h;
            count_attempt(t);
            const auto trial = stepper.attempt(rhs, t, y, k1, step);
            check_finite(trial, t);
            if (trial.error_norm > 1.0) {
                ++result_.steps.rejected;
                h = Stepper::next_step(step, trial.error_norm);
                continue;
            }
            ++result_.steps.accepted;
            const auto& dense = stepper.dense();
            const double t0 = t;
            auto state_at = [&](double ts) -> Vec2 { return dense((ts - t0) / step); };

            if (y(0) > 0.0 && trial.y(0) <= 0.0) {
                const double u = locate(dense, step, cfg_.event_tol, true);
                const double tc = t0 + u * step;
                emit_until(tc, state_at, Phase::kFree, false);
                h_free_ = Stepper::next_step(step, trial.error_norm);
                return {true, tc, Vec2(0.0, dense(u)(1))};
            }

            const double t_new = clipped ? t_end : t0 + step;
            emit_until(t_new, state_at, Phase::kFree);
            if (!clipped) h_free_ = Stepper::next_step(step, trial.error_norm);
            h = h_free_ > 0.0 ? h_free_ : h;
            t = t_new;
            y = trial.y;
            result_.final = {y(0), y(1), t};
            k1 = stepper.last_derivative();
        }
        return {false, t, y};
    }

    /// Contact phase in rescaled variables starting at physical time t_start.
    /// The incoming/outgoing state is in physical (x, v).
    SegmentEnd contact_segment(double t_start, const Vec2& physical, double t_end) {
        const double eps = eps_;
        const double ew = ew_;
        const ForcingFn& g = params_.forcing.g;
        auto rhs = [&](double s, const Vec2& z) -> Vec2 {
            return {z(1), -z(0) + ew * g(t_start + ew * s, ew * z(0), z(1), eps)};
        };
        const double s_end = std::isfinite(t_end) ? (t_end - t_start) / ew
                                                  : std::numeric_limits<double>::infinity();
        const double s_trapped = kTrappedHalfPeriods * kPi;
        const double s_tol = cfg_.event_tol / ew;

        Stepper stepper(cfg_.rel_tol, cfg_.abs_tol);
        double s = 0.0;
        Vec2 y(physical(0) / ew, physical(1));
        Vec2 k1 = rhs(s, y);
        double h = h_contact_ > 0.0 ? h_contact_ : kInitialStep;

        while (s < s_end) {
            if (s > s_trapped) {
                throw TrappedInContactError(
                    "no exit from contact within ten nominal half-periods after t = " +
                    std::to_string(t_start));
            }
            const bool clipped = s + h >= s_end;
            const double step = clipped ? s_end - s : h;
            count_attempt(t_start + ew * s);
            const auto trial = stepper.attempt(rhs, s, y, k1, step);
            check_finite(trial, t_start + ew * s);
            if (trial.error_norm > 1.0) {
                ++result_.steps.rejected;
                h = Stepper::next_step(step, trial.error_norm);
                continue;
            }
            ++result_.steps.accepted;
            ++result_.steps.contact_accepted;
            const auto& dense = stepper.dense();
            const double s0 = s;
            auto state_at = [&](double ts) -> Vec2 {
                const Vec2 z = dense(((ts - t_start) / ew - s0) / step);
                return {ew * z(0), z(1)};
            };

            if (y(0) < 0.0 && trial.y(0) >= 0.0) {
                const double u = locate(dense, step, s_tol, false);
                const double tc = t_start + ew * (s0 + u * step);
                emit_until(tc, state_at, Phase::kContact, false);
                h_contact_ = Stepper::next_step(step, trial.error_norm);
                return {true, tc, Vec2(0.0, dense(u)(1))};
            }

            const double t_new = clipped ? t_end : t_start + ew * (s0 + step);
            emit_until(t_new, state_at, Phase::kContact);
            if (!clipped) h_contact_ = Stepper::next_step(step, trial.error_norm);
            h = h_contact_ > 0.0 ? h_contact_ : h;
            s = clipped ? s_end : s0 + step;
            y = trial.y;
            result_.final = {ew * y(0), y(1), t_new};
            k1 = stepper.last_derivative();
        }
        return {false, t_end, Vec2(ew * y(0), y(1))};
    }

    const SmoothedParams& params_;
    const IntegratorConfig& cfg_;
    const FlowObserver* observer_;
    double eps_;
    double ew_;
    double stiffness_ = 1.0;
    double h_free_ = 0.0;
    double h_contact_ = 0.0;
    std::size_t next_sample_ = 0;
    FlowResult result_;
};

}  // namespace

FlowResult flow(const CartesianState& start, double t_end, const SmoothedParams& params,
                const IntegratorConfig& cfg, const FlowObserver* observer) {
    params.validate();
    cfg.validate();
    return Integration(params, cfg, observer).run(start, t_end);
}

ContactExit integrate_contact(const CartesianState& entry, const SmoothedParams& params,
                              const IntegratorConfig& cfg) {
    params.validate();
    cfg.validate();
    if (!entry.finite()) throw DomainError("contact entry state is not finite");
    const double x_slack = std::max(1e-12, 10.0 * cfg.event_tol * std::abs(entry.v));
    if (std::abs(entry.x) > x_slack) {
        throw DomainError("contact entry must lie on x = 0 (x = " + std::to_string(entry.x) + ")");
    }
    if (std::abs(entry.v) < kGrazingSpeed) {
        throw DegenerateStateError("grazing contact entry");
    }
    if (!(entry.v < 0.0)) throw DomainError("contact entry requires v < 0");
    return Integration(params, cfg, nullptr).contact_only(entry);
}

PolarState chart_flow(const PolarState& start, double t0, double t1, const SmoothedParams& params,
                      const IntegratorConfig& cfg, FlowResult* details) {
    params.validate();
    require_amplitude(start.A, "chart_flow");
    if (!(t1 >= t0) || t1 - t0 > 2.0 * kPi + 1e-12) {
        throw DomainError("chart_flow span must satisfy 0 <= t1 - t0 <= 2 pi");
    }
    CartesianState c = chart_to_cartesian(start, Chart::kApproach, params);
    c.t = t0;
    if (t1 == t0) return start;

    const FlowResult r = flow(c, t1, params, cfg);
    if (details != nullptr) *details = r;
    const Chart chart = chart_for_point(r.final.x, r.final.v);
    PolarState end = cartesian_to_chart(r.final, chart, params);
    const double expected = start.theta + (t1 - t0);
    end.theta += kPi * std::round((expected - end.theta) / kPi);
    return end;
}

}  // namespace nio
