#include "qci/models.hpp"

#include <catch_amalgamated.hpp>

using namespace qci;
using namespace qci::models;

namespace {

LiouvilleData standard_liouville() { return LiouvilleData({2.0, 0.3}, {0.5, 0.2}); }

} // namespace

TEST_CASE("surface of revolution symbols", "[models]") {
    QciModel m = SurfaceOfRevolution{RevolutionProfile::named("cosine")};
    CHECK(eval_p1(m, {{0.0, 0.0}, {1.0, 0.0}}) == Catch::Approx(1.0));
    CHECK(eval_p2(m, {{0.3, 1.0}, {0.2, 0.7}}) == Catch::Approx(0.7));
    // at r = 0.5, f = cos(pi/4): p1 = 0.25 + 1 / 0.5
    CHECK(eval_p1(m, {{0.5, 0.0}, {0.5, 1.0}}) == Catch::Approx(2.25).epsilon(1e-14));
    CHECK_THROWS_AS(eval_p1(m, {{1.0, 0.0}, {1.0, 0.0}}), Error);
    try {
        eval_p2(m, {{-1.2, 0.0}, {0.0, 0.0}});
        FAIL("expected OutOfChart");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OutOfChart);
    }
    CHECK(volume_density(m, {1.0, 0.0}) == 0.0);
    CHECK(volume_density(m, {0.0, 2.0}) == Catch::Approx(1.0));
}

TEST_CASE("Liouville symbols", "[models]") {
    QciModel m = LiouvilleTorus{standard_liouville()};
    // at x = (0,0): a = 2.3, b = 0.7
    CHECK(volume_density(m, {0.0, 0.0}) == Catch::Approx(3.0).epsilon(1e-14));
    CHECK(eval_p1(m, {{0.0, 0.0}, {std::sqrt(3.0), 0.0}}) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(eval_p2(m, {{0.0, 0.0}, {std::sqrt(3.0), 0.0}}) == Catch::Approx(0.7).epsilon(1e-14));
    CHECK(eval_p2(m, {{0.0, 0.0}, {0.0, std::sqrt(3.0)}}) == Catch::Approx(-2.3).epsilon(1e-14));
    auto d = standard_liouville();
    CHECK(d.aMin == Catch::Approx(1.7).epsilon(1e-12));
    CHECK(d.aMax == Catch::Approx(2.3).epsilon(1e-12));
    CHECK(d.bMin == Catch::Approx(0.3).epsilon(1e-12));
    CHECK(d.bMax == Catch::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("Liouville oscillator adds the potential", "[models]") {
    QciModel m = LiouvilleOscillator{standard_liouville()};
    PhasePoint p{{0.0, 0.0}, {std::sqrt(3.0), 0.0}};
    CHECK(eval_p1(m, p) == Catch::Approx(1.0 + 0.7 - 2.3).epsilon(1e-14));
    CHECK(eval_p2(m, p) == Catch::Approx(0.7 - 2.3 * 0.7).epsilon(1e-14));
}

TEST_CASE("harmonic oscillator has one integral", "[models]") {
    QciModel m = HarmonicOscillatorModel{};
    CHECK(eval_p1(m, {{0.6, 0.0}, {0.8, 0.0}}) == Catch::Approx(1.0));
    try {
        eval_p2(m, {{0.0, 0.0}, {0.0, 0.0}});
        FAIL("expected Unsupported");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Unsupported);
    }
}

TEST_CASE("model validation", "[models]") {
    auto ok = validate_model(SurfaceOfRevolution{RevolutionProfile::named("cosine")});
    CHECK(ok.ok());
    auto bad = validate_model(SurfaceOfRevolution{RevolutionProfile::named("parabola")});
    CHECK_FALSE(bad.ok());
    REQUIRE(bad.find("even-derivatives") != nullptr);
    CHECK_FALSE(bad.find("even-derivatives")->passed);
    CHECK(bad.find("poles")->passed);

    CHECK(validate_model(LiouvilleTorus{standard_liouville()}).ok());
    auto overlap = validate_model(LiouvilleTorus{LiouvilleData({1.0, 0.3}, {0.9, 0.2})});
    CHECK_FALSE(overlap.find("min-a-exceeds-max-b")->passed);
    CHECK_THROWS_AS(RevolutionProfile::named("sphere"), Error);
}

TEST_CASE("profile helpers", "[models]") {
    auto p = RevolutionProfile::named("cosine", 1.0);
    CHECK(p.critical_point() == Catch::Approx(0.0).margin(1e-14));
    CHECK(p.max_value() == Catch::Approx(1.0));
    double r = p.level_crossing(0.5, +1);
    CHECK(r == Catch::Approx(2.0 / 3.0).epsilon(1e-13));   // cos(pi r / 2) = 1/2
    CHECK(p.level_crossing(0.5, -1) == Catch::Approx(-2.0 / 3.0).epsilon(1e-13));
}
