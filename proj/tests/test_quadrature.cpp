#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nio/quadrature.hpp"

using namespace nio;

TEST_CASE("Gauss-Legendre nodes and weights") {
    const auto r2 = gauss_legendre<double>(2);
    CHECK(r2.nodes[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(r2.weights[0] == doctest::Approx(1.0).epsilon(1e-15));

    const auto r3 = gauss_legendre<double>(3);
    CHECK(std::abs(r3.nodes[1]) < 1e-15);
    CHECK(r3.nodes[2] == doctest::Approx(std::sqrt(0.6)).epsilon(1e-15));
    CHECK(r3.weights[1] == doctest::Approx(8.0 / 9.0).epsilon(1e-15));

    for (int n : {4, 8, 16, 33}) {
        const auto r = gauss_legendre<double>(n);
        double total = 0.0;
        for (double w : r.weights) total += w;
        CHECK(total == doctest::Approx(2.0).epsilon(1e-14));
        for (std::size_t i = 1; i < r.nodes.size(); ++i) CHECK(r.nodes[i] > r.nodes[i - 1]);
    }
}

TEST_CASE("n-point rule is exact for degree 2n-1") {
    const auto rule = gauss_legendre<double>(8);
    for (int degree = 0; degree <= 15; ++degree) {
        const double value = integrate_composite(
            [degree](double x) { return std::pow(x, degree); }, 0.0, 1.0, rule, 1);
        CHECK(value == doctest::Approx(1.0 / (degree + 1)).epsilon(1e-14));
    }
}

TEST_CASE("composite rule against adaptive Gauss-Kronrod") {
    using boost::math::quadrature::gauss_kronrod;
    const auto rule = gauss_legendre<double>(8);
    auto f = [](double t) { return std::exp(std::sin(3 * t)) * std::cos(t); };
    const double oracle = gauss_kronrod<double, 61>::integrate(f, 0.0, 2.5, 15, 1e-15);
    CHECK(integrate_composite(f, 0.0, 2.5, rule, 8) == doctest::Approx(oracle).epsilon(1e-13));

    // Long double instantiation of the same rule.
    const auto rule_ld = gauss_legendre<long double>(8);
    auto g = [](long double t) { return std::exp(-t * t); };
    const long double value = integrate_composite(g, 0.0L, 2.0L, rule_ld, 8);
    CHECK(static_cast<double>(value) ==
          doctest::Approx(std::sqrt(std::acos(-1.0)) / 2 * std::erf(2.0)).epsilon(1e-15));
}
