#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "nio/dopri5.hpp"
#include "nio/integrator.hpp"

using namespace nio;

namespace {

SmoothedParams unforced(double eps, FreeFlightForm form = FreeFlightForm::kChartAdapted) {
    SmoothedParams p;
    p.epsilon = eps;
    p.free_flight = form;
    return p;
}

// Exact flow of the unforced piecewise-linear system: x'' = -W^2 x for x > 0
// and a contact half-oscillation of duration pi eps w that reverses v.
struct ExactContacts {
    int passages = 0;
    double time = 0.0;
};

CartesianState exact_unforced(CartesianState s, double t_end, double eps, double w, double W,
                              ExactContacts* contacts = nullptr) {
    const double contact = kPi * eps * w;
    ExactContacts local;
    ExactContacts& count = contacts ? *contacts : local;
    while (true) {
        if (s.x > 0.0 || (s.x == 0.0 && s.v > 0.0)) {
            const double B = std::hypot(s.x, s.v / W);
            const double phi = std::atan2(-s.v / W, s.x);
            const double to_impact = (0.5 * kPi - phi) / W;
            if (s.t + to_impact >= t_end) {
                const double p = phi + W * (t_end - s.t);
                return {B * std::cos(p), -B * W * std::sin(p), t_end};
            }
            s = {0.0, -B * W, s.t + to_impact};
        } else {
            // On x = 0 with v < 0: x = (eps w) V sin(-(t - t0)/(eps w)).
            const double V = -s.v;
            ++count.passages;
            count.time += std::min(contact, t_end - s.t);
            if (s.t + contact >= t_end) {
                const double r = (t_end - s.t) / (eps * w);
                return {-eps * w * V * std::sin(r), -V * std::cos(r), t_end};
            }
            s = {0.0, V, s.t + contact};
        }
    }
}

}  // namespace

TEST_CASE("Dormand-Prince pair is fifth order with a fourth-order dense output") {
    using Stepper = Dopri5<double, 1>;
    using State = Stepper::State;
    auto rhs = [](double, const State& y) -> State { return -y; };
    auto error_at = [&](int steps) {
        Stepper stepper(1e-6, 1e-6);
        State y = State::Constant(1.0);
        const double h = 1.0 / steps;
        double mid = 0.0;
        for (int i = 0; i < steps; ++i) {
            const auto trial = stepper.attempt(rhs, i * h, y, rhs(i * h, y), h);
            if (i == 0) mid = std::abs(stepper.dense()(0.5)(0) - std::exp(-0.5 * h));
            y = trial.y;
        }
        return std::pair{std::abs(y(0) - std::exp(-1.0)), mid};
    };
    const auto [e1, d1] = error_at(10);
    const auto [e2, d2] = error_at(20);
    CHECK(std::log2(e1 / e2) == doctest::Approx(5.0).epsilon(0.1));
    // Local dense-output error at the half step scales like h^5.
    CHECK(std::log2(d1 / d2) == doctest::Approx(5.0).epsilon(0.15));
    CHECK(Stepper::next_step(1.0, 1e-12) == doctest::Approx(5.0));
    CHECK(Stepper::next_step(1.0, 1e6) == doctest::Approx(0.2));
}

TEST_CASE("free flight of both forms matches the harmonic solution") {
    const double eps = 0.05;
    const double W = (1 + eps) / (1 - eps);
    const FlowResult a = flow({1.0, 0.0, 0.0}, 0.6, unforced(eps));
    CHECK(a.final.x == doctest::Approx(std::cos(W * 0.6)).epsilon(1e-9));
    CHECK(a.final.v == doctest::Approx(-W * std::sin(W * 0.6)).epsilon(1e-9));
    CHECK(a.contact_passages == 0);

    const FlowResult b = flow({1.0, 0.0, 0.0}, 1.2, unforced(eps, FreeFlightForm::kHarmonic));
    CHECK(b.final.x == doctest::Approx(std::cos(1.2)).epsilon(1e-9));
    CHECK(b.final.v == doctest::Approx(-std::sin(1.2)).epsilon(1e-9));
}

TEST_CASE("unforced contact lasts exactly pi eps w and reverses the velocity") {
    for (double eps : {0.1, 0.05, 0.01}) {
        for (double w : {0.5, 1.0, 2.0}) {
            SmoothedParams p = unforced(eps);
            p.omega0 = w;
            const ContactExit out = integrate_contact({0.0, -0.8, 1.3}, p);
            CHECK(out.duration == doctest::Approx(kPi * eps * w).epsilon(1e-10));
            CHECK(out.exit.v == doctest::Approx(0.8).epsilon(1e-9));
            CHECK(out.exit.t == doctest::Approx(1.3 + kPi * eps * w).epsilon(1e-12));
        }
    }
}

TEST_CASE("contact step counts do not grow as eps shrinks") {
    SmoothedParams coarse = unforced(0.1);
    SmoothedParams fine = unforced(0.01);
    const long n_coarse = integrate_contact({0.0, -1.0, 0.0}, coarse).steps.contact_accepted;
    const long n_fine = integrate_contact({0.0, -1.0, 0.0}, fine).steps.contact_accepted;
    CHECK(n_fine <= 2 * n_coarse);
    CHECK(n_coarse <= 2 * n_fine);
}

TEST_CASE("unforced flow against the exact piecewise-linear solution") {
    for (double eps : {0.1, 0.05, 0.02}) {
        const double W = (1 + eps) / (1 - eps);
        for (const CartesianState start : {CartesianState{1.0, 0.0, 0.0},
                                           CartesianState{0.3, -0.9, 0.0},
                                           CartesianState{0.5, 0.7, 0.2}}) {
            const double t_end = start.t + 2 * kPi;
            const FlowResult out = flow(start, t_end, unforced(eps));
            ExactContacts contacts;
            const CartesianState exact = exact_unforced(start, t_end, eps, 1.0, W, &contacts);
            CHECK(out.final.x == doctest::Approx(exact.x).epsilon(1e-8));
            CHECK(out.final.v == doctest::Approx(exact.v).epsilon(1e-8));
            CHECK(out.contact_passages == contacts.passages);
            CHECK(out.contact_time == doctest::Approx(contacts.time).epsilon(1e-9));
            CHECK(out.multiple_contacts());
        }
    }
}

TEST_CASE("observer samples follow the trajectory and report crossings") {
    const SmoothedParams p = unforced(0.05);
    const double W = (1 + 0.05) / (1 - 0.05);
    FlowObserver observer;
    for (int k = 0; k <= 30; ++k) observer.sample_times.push_back(k * 0.1);
    std::vector<TraceSample> samples;
    observer.on_sample = [&](const TraceSample& s) { samples.push_back(s); };
    const FlowResult out = flow({1.0, 0.0, 0.0}, 3.0, p, {}, &observer);

    int crossings = 0;
    for (const TraceSample& s : samples) {
        const CartesianState exact = exact_unforced({1.0, 0.0, 0.0}, s.t, 0.05, 1.0, W);
        CHECK(s.x == doctest::Approx(exact.x).epsilon(1e-8));
        if (s.x == 0.0) {
            ++crossings;
        } else {
            CHECK((s.phase == Phase::kContact) == (exact.x < 0.0));
        }
    }
    CHECK(crossings == 2);
    CHECK(out.crossings.size() == 2);
    CHECK(out.crossings[0].direction == CrossingDirection::kDownward);
    CHECK(out.crossings[1].direction == CrossingDirection::kUpward);
    CHECK(out.crossings[0].t == doctest::Approx(kPi / (2 * W)).epsilon(1e-12));
    CHECK(samples.size() == 31 + 2);
    CHECK(std::string(to_string(Phase::kFree)) == "free");

    // Sampling leaves the step sequence unchanged.
    const FlowResult bare = flow({1.0, 0.0, 0.0}, 3.0, p);
    CHECK(bare.final.x == out.final.x);
    CHECK(bare.steps.accepted == out.steps.accepted);
}

TEST_CASE("forced flow is deterministic and matches a tighter run") {
    BouncingBallParams bb;
    const SmoothedParams p = application_params(bb, 0.05);
    const FlowResult a = flow({0.4, -0.3, 0.0}, kPi, p);
    const FlowResult b = flow({0.4, -0.3, 0.0}, kPi, p);
    CHECK(a.final.x == b.final.x);
    CHECK(a.final.v == b.final.v);
    IntegratorConfig tight;
    tight.rel_tol = 1e-12;
    tight.abs_tol = 1e-14;
    const FlowResult c = flow({0.4, -0.3, 0.0}, kPi, p, tight);
    CHECK(std::abs(a.final.x - c.final.x) < 1e-8);
    CHECK(std::abs(a.final.v - c.final.v) < 1e-8);
}

TEST_CASE("chart flow returns the continued phase") {
    const double eps = 0.05;
    const SmoothedParams p = unforced(eps);
    FlowResult details;
    const PolarState end = chart_flow({1.0, 0.5}, 0.0, kPi, p, {}, &details);
    // Unforced: A is conserved across the charts up to O(eps) distortion and
    // the phase advances by pi + O(eps).
    CHECK(end.A == doctest::Approx(1.0).epsilon(0.05));
    CHECK(end.theta - 0.5 == doctest::Approx(kPi).epsilon(0.1));
    CHECK(details.contact_passages == 1);
    CHECK_THROWS_AS(chart_flow({1.0, 0.5}, 0.0, 7.0, p), DomainError);
    CHECK_THROWS_AS(chart_flow({1.0, 1.6}, 0.0, 1.0, p), DomainError);
}

TEST_CASE("integrator failure modes") {
    SUBCASE("grazing contact") {
        CHECK_THROWS_AS(flow({1e-12, -1e-10, 0.0}, 1.0, unforced(0.05)), DegenerateStateError);
    }
    SUBCASE("step budget") {
        IntegratorConfig cfg;
        cfg.max_steps = 10;
        CHECK_THROWS_AS(flow({1.0, 0.0, 0.0}, kPi, unforced(0.05), cfg), NonConvergenceError);
    }
    SUBCASE("trapped in contact") {
        SmoothedParams p = unforced(0.1);
        p.forcing.g = [](double, double, double v, double) { return -50.0 - 20.0 * v; };
        // Critically damped towards y = -5: the ball never leaves the wall.
        CHECK_THROWS_AS(flow({0.5, -1.0, 0.0}, 6.0, p), TrappedInContactError);
    }
    SUBCASE("non-finite forcing") {
        SmoothedParams p = unforced(0.1);
        p.forcing.f = [](double, double, double, double) {
            return std::numeric_limits<double>::quiet_NaN();
        };
        CHECK_THROWS_AS(flow({1.0, 0.0, 0.0}, 1.0, p), NumericalBlowupError);
    }
    SUBCASE("invalid configuration") {
        IntegratorConfig cfg;
        cfg.rel_tol = -1.0;
        CHECK_THROWS_AS(flow({1.0, 0.0, 0.0}, 1.0, unforced(0.1), cfg), DomainError);
    }
}
