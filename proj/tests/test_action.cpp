#include "qci/action.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>

using namespace qci;
using namespace qci::action;

namespace {

const double pi = std::numbers::pi;

auto cosine() { return models::RevolutionProfile::named("cosine"); }

/// Independent route: composite trapezoid in t with s = root + t^2 (10^6 panels).
template <class G>
double trapezoid_action(G&& g, double root, double x, int panels = 1000000) {
    const double T = std::sqrt(std::abs(x - root)), sign = x > root ? 1.0 : -1.0;
    auto f = [&](double t) { return 2.0 * t * std::sqrt(std::max(g(root + sign * t * t), 0.0)); };
    double s = 0.5 * (f(0.0) + f(T));
    for (int i = 1; i < panels; ++i) s += f(T * i / panels);
    return s * T / panels;
}

// high-precision reference values (tanh-sinh, 30 digits)
constexpr double kSorAt08 = 0.0949049667114748197593;
constexpr double kSorAt09 = 0.292561026661043357429;
constexpr double kLiouvilleAtHalf = 0.0852791340845858660948;

} // namespace

TEST_CASE("oscillator action against the closed form", "[action]") {
    auto tp = ho_turning_points(1.0);
    const double x = std::sqrt(2.0);
    CHECK(action_1d(tp, x) == Catch::Approx(0.26642).margin(5e-6));
    CHECK(action_1d(tp, x) == Catch::Approx(ho_action_exact(1.0, x)).epsilon(1e-10));
    CHECK(action_1d(tp, -x) == Catch::Approx(ho_action_exact(1.0, x)).epsilon(1e-10));
    CHECK(action_1d(tp, 1.0) == 0.0);
    for (double xx : {1.1, 1.5, 2.0, 2.7})
        CHECK(action_1d(tp, xx) == Catch::Approx(ho_action_exact(1.0, xx)).epsilon(1e-10));
    CHECK(action_1d(ho_turning_points(2.0), 2.0) == Catch::Approx(ho_action_exact(2.0, 2.0)).epsilon(1e-10));
    // inside the well the deficit is negative
    CHECK_THROWS_AS(action_1d(tp, 0.5), Error);
    try {
        action_1d(tp, 0.5);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NegativeIntegrand);
    }
}

TEST_CASE("surface of revolution action", "[action]") {
    auto p = cosine();
    CHECK(sor_action(p, 0.5, 2.0 / 3.0).value == Catch::Approx(0.0).margin(1e-10));
    auto v = sor_action(p, 0.5, 0.8);
    CHECK(v.value == Catch::Approx(kSorAt08).epsilon(1e-10));
    CHECK(sor_action(p, 0.5, 0.9).value == Catch::Approx(kSorAt09).epsilon(1e-10));
    auto g = [&](double s) { double f = p.f(s); return 0.25 / (f * f) - 1.0; };
    CHECK(v.value == Catch::Approx(trapezoid_action(g, 2.0 / 3.0, 0.8)).epsilon(1e-8));
    CHECK_FALSE(v.nearPole);
    // mirror symmetry of the two one-sided routes
    CHECK(std::abs(sor_action(p, 0.5, -0.8).value - v.value) < 1e-10);
    CHECK(sor_action(p, -0.5, 0.8).value == v.value);
    try {
        sor_action(p, 0.5, 0.5);
        FAIL("expected AllowedRegion");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AllowedRegion);
    }
    auto far = sor_action(p, 0.5, 0.9995);
    CHECK(far.truncated);
    CHECK(std::isinf(far.value));
    auto near = sor_action(models::RevolutionProfile::named("cosine", 0.3), 0.15, 0.9985);
    CHECK(near.nearPole);
    CHECK(std::isfinite(near.value));
}

TEST_CASE("Liouville action is separable", "[action]") {
    models::LiouvilleData d({2.0, 0.3}, {0.5, 0.2});
    classical::EnergyPair E{1.0, 0.5};
    auto s = liouville_action(d, E, {0.1, 0.5});
    CHECK(s.value == Catch::Approx(kLiouvilleAtHalf).epsilon(1e-10));
    auto g = [](double x) { return -0.2 * std::cos(2 * pi * x); };
    CHECK(s.value == Catch::Approx(trapezoid_action(g, 0.25, 0.5)).epsilon(1e-8));
    CHECK(liouville_action(d, E, {0.7, 0.25}).value == Catch::Approx(0.0).margin(1e-12));
    // left and right routes agree at symmetric points
    CHECK(liouville_action(d, E, {0.0, 0.4}).value == Catch::Approx(liouville_action(d, E, {0.0, 0.6}).value).epsilon(1e-10));
    try {
        liouville_action(d, {1.0, 0.0}, {0.3, 0.3});
        FAIL("expected AllowedRegion");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::AllowedRegion);
    }
}

TEST_CASE("fold exponents", "[action]") {
    std::vector<std::array<double, 2>> windows{{1e-4, 1e-2}, {1e-4, 2e-2}};
    auto p = cosine();
    const double rc = 2.0 / 3.0;
    auto sorField = sample_field([&](double r) { return sor_action(p, 0.5, r); }, rc, +1, 1e-4, 1e-2, 20);
    auto fit = fold_exponent_fit(sorField, rc, {{1e-4, 1e-2}});
    CHECK(fit.exponent == Catch::Approx(1.5).margin(0.02));

    auto hoField = sample_field([&](double x) { return action_1d_detail(ho_turning_points(1.0), x); }, 1.0, +1, 1e-4,
                                2e-2, 20);
    auto hf = fold_exponent_fit(hoField, 1.0, windows);
    CHECK(hf.exponent == Catch::Approx(1.5).margin(0.02));
    CHECK(std::abs(hf.extrapolated - 1.5) <= std::abs(hf.exponent - 1.5) + 1e-3);

    // multiplicity-3 turning point: S = (2/5) (x - r)^{5/2} (1 + O(x - r))
    const double r = 0.3;
    TurningPointData cubic{{{r, 3}}, [r](double s) { return std::pow(s - r, 3) * (1.0 + s); }};
    auto cf = sample_field([&](double x) { return action_1d_detail(cubic, x); }, r, +1, 1e-4, 1e-2, 20);
    CHECK(fold_exponent_fit(cf, r, {{1e-4, 1e-2}}).exponent == Catch::Approx(2.5).margin(0.02));
    TurningPointData pure{{{r, 3}}, [r](double s) { return std::pow(s - r, 3); }};
    CHECK(action_1d(pure, r + 0.04) == Catch::Approx(0.4 * std::pow(0.04, 2.5)).epsilon(1e-10));

    auto sparse = sample_field([&](double x) { return action_1d_detail(cubic, x); }, r, +1, 1e-4, 1e-2, 3);
    CHECK_THROWS_AS(fold_exponent_fit(sparse, r, {{1e-4, 1e-2}}), Error);
    CHECK_THROWS_AS(action_1d(TurningPointData{{{r, 2}}, [](double) { return 1.0; }}, 0.5), Error);
}
