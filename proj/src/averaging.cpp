#include "nio/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nio/quadrature.hpp"

namespace nio {

namespace {

constexpr int kRuleOrder = 8;

const GaussLegendreRule<double>& base_rule() {
    static const GaussLegendreRule<double> rule = gauss_legendre<double>(kRuleOrder);
    return rule;
}

int panels_for(const QuadratureConfig& q) {
    return (q.nodes_per_segment + kRuleOrder - 1) / kRuleOrder;
}

void check_phase(double theta) {
    if (!(theta > 0.0 && theta < 0.5 * kPi)) {
        throw DomainError("averaged map requires theta in (0, pi/2), got " +
                          std::to_string(theta));
    }
}

}  // namespace

void QuadratureConfig::validate() const {
    if (nodes_per_segment < 8) throw DomainError("quadrature nodes_per_segment must be >= 8");
}

AveragedValue averaged_map(const PolarState& s, const ForcingPair& forcing, double omega0,
                           const QuadratureConfig& q, FreeFlightForm form) {
    q.validate();
    require_amplitude(s.A, "averaged_map");
    check_phase(s.theta);
    if (!(omega0 > 0.0)) throw DomainError("omega0 must be positive");

    const double A = s.A;
    const double th = s.theta;
    const double detuning = form == FreeFlightForm::kChartAdapted ? -2.0 * omega0 : 2.0 * omega0;
    const auto& rule = base_rule();
    const int panels = panels_for(q);

    // Free flight before (shift 0) and after (shift pi) the impact.
    auto free_integrand = [&](double shift) {
        return [&, shift](double tau) -> Vec2 {
            const double angle = tau + th + shift;
            const double c = std::cos(angle);
            const double sn = std::sin(angle);
            const double drive = forcing.f(tau, A * c, -A * sn, 0.0) + detuning * A * c;
            return Vec2(sn, c / A) * drive;
        };
    };
    const double impact = 0.5 * kPi - th;
    Vec2 total = -integrate_composite(free_integrand(0.0), 0.0, impact, rule, panels);
    total -= integrate_composite(free_integrand(kPi), impact, kPi, rule, panels);

    auto contact_integrand = [&](double s_) -> double {
        const double sn = std::sin(s_ + 0.5 * kPi);
        return sn * forcing.g(impact, 0.0, -A * sn, 0.0);
    };
    total(0) -= omega0 * integrate_composite(contact_integrand, 0.0, kPi, rule, panels);
    return {total(0), total(1)};
}

AveragedValue closed_form_pbar(const PolarState& s, const BouncingBallParams& p) {
    require_amplitude(s.A, "closed_form_pbar");
    if (p.harmonic != 1) throw DomainError("closed form requires forcing harmonic 1");
    const PolarState r = closed_form_pbar<double>(s, p);
    return {r.A, r.theta};
}

Mat2 closed_form_jacobian(const PolarState& s, const BouncingBallParams& p) {
    require_amplitude(s.A, "closed_form_jacobian");
    if (p.harmonic != 1) throw DomainError("closed form requires forcing harmonic 1");
    const double A = s.A;
    const double th = s.theta;
    const double half_pi = 0.5 * kPi;
    const double c = std::cos(th);
    const double sn = std::sin(th);
    Mat2 J;
    J(0, 0) = -half_pi * p.damping() + half_pi * p.rayleigh() * (1.0 - 2.25 * A * A);
    J(0, 1) = p.gamma * (c - th * sn);
    J(1, 0) = p.gamma / (A * A) * (c + th * sn);
    J(1, 1) = -p.gamma / A * th * c;
    return J;
}

Mat2 averaged_jacobian(const PolarState& s, const AveragedMapFn& map) {
    const double h = 1e-6 * std::max(1.0, std::abs(s.A));
    Mat2 J;
    for (int j = 0; j < 2; ++j) {
        Vec2 step = Vec2::Zero();
        step(j) = h;
        const Vec2 plus = map(PolarState::from(s.vec() + step)).vec();
        const Vec2 minus = map(PolarState::from(s.vec() - step)).vec();
        J.col(j) = (plus - minus) / (2.0 * h);
    }
    return J;
}

AveragedMapFn quadrature_map(ForcingPair forcing, double omega0, QuadratureConfig q,
                             FreeFlightForm form) {
    return [forcing = std::move(forcing), omega0, q, form](const PolarState& s) {
        return averaged_map(s, forcing, omega0, q, form);
    };
}

AveragedMapFn closed_form_map(const BouncingBallParams& p) {
    return [p](const PolarState& s) { return closed_form_pbar(s, p); };
}

}  // namespace nio
