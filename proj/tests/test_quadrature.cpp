#include "qci/quadrature.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace qci::quadrature;

TEST_CASE("Gauss-Legendre nodes integrate polynomials exactly", "[quadrature]") {
    auto r = gauss_legendre(7);
    double w = 0.0;
    for (double x : r.w) w += x;
    CHECK(w == Catch::Approx(2.0).epsilon(1e-15));
    // degree 13 is exact for 7 nodes: int_{-1}^{1} x^12 = 2/13
    double s = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * std::pow(r.x[i], 12);
    CHECK(s == Catch::Approx(2.0 / 13.0).epsilon(1e-14));
}

TEST_CASE("adaptive integration of smooth and endpoint-singular integrands", "[quadrature]") {
    auto r1 = integrate([](double x) { return std::exp(-x * x); }, 0.0, 3.0);
    CHECK(r1.value == Catch::Approx(0.5 * std::sqrt(std::numbers::pi) * std::erf(3.0)).epsilon(1e-12));
    // sqrt singularity at the endpoint: int_0^1 sqrt(x) = 2/3
    auto r2 = integrate([](double x) { return std::sqrt(x); }, 0.0, 1.0, 1e-11);
    CHECK(r2.value == Catch::Approx(2.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("panel cap raises a quadrature stall", "[quadrature]") {
    CHECK_THROWS_AS(integrate([](double x) { return 1.0 / std::sqrt(std::abs(x - 0.3)); }, 0.0, 1.0, 1e-14, 1e-300, 8),
                    qci::Error);
}
