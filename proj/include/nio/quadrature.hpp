#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace nio {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
template <typename Scalar>
struct GaussLegendreRule {
    std::vector<Scalar> nodes;
    std::vector<Scalar> weights;
};

template <typename Scalar>
GaussLegendreRule<Scalar> gauss_legendre(int n) {
    GaussLegendreRule<Scalar> rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const Scalar pi = std::numbers::pi_v<Scalar>;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
        Scalar dp = 0;
        for (int iter = 0; iter < 100; ++iter) {
            Scalar p0 = 1;
            Scalar p1 = x;
            for (int k = 2; k <= n; ++k) {
                const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1);
            const Scalar dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) <= std::numeric_limits<Scalar>::epsilon()) break;
        }
        const Scalar w = 2 / ((1 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

/// Composite Gauss-Legendre integration: `panels` equal panels, each with the
/// same fixed-order rule. Integrand returns any type supporting + and scalar *.
template <typename Scalar, typename F>
auto integrate_composite(F&& integrand, Scalar lo, Scalar hi, const GaussLegendreRule<Scalar>& rule,
                         int panels) {
    const Scalar width = (hi - lo) / panels;
    using Value = decltype(integrand(lo));
    Value sum = integrand(lo) * Scalar(0);
    for (int p = 0; p < panels; ++p) {
        const Scalar mid = lo + (p + Scalar(0.5)) * width;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            sum = sum + integrand(mid + Scalar(0.5) * width * rule.nodes[i]) *
                            (Scalar(0.5) * width * rule.weights[i]);
        }
    }
    return sum;
}

}  // namespace nio
