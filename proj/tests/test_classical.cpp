#include "qci/classical.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>

using namespace qci;
using namespace qci::classical;
using namespace qci::models;

namespace {

QciModel sor() { return SurfaceOfRevolution{RevolutionProfile::named("cosine")}; }
QciModel liouville() { return LiouvilleTorus{LiouvilleData({2.0, 0.3}, {0.5, 0.2})}; }
QciModel oscillator() { return LiouvilleOscillator{LiouvilleData({2.0, 0.3}, {0.5, 0.2})}; }

} // namespace

TEST_CASE("fiber over a surface of revolution", "[classical]") {
    auto fib = torus_fiber(sor(), {1.0, 0.5}, {0.0, 0.0});
    REQUIRE(fib.covectors.size() == 2);
    CHECK(std::abs(fib.covectors[0][0]) == Catch::Approx(std::sqrt(0.75)).epsilon(1e-14));
    CHECK(fib.covectors[0][1] == 0.5);
    CHECK_FALSE(fib.degenerate);

    auto caustic = torus_fiber(sor(), {1.0, 0.5}, {2.0 / 3.0, 0.0});
    CHECK(caustic.degenerate);
    REQUIRE(caustic.covectors.size() == 1);
    CHECK(caustic.covectors[0][0] == Catch::Approx(0.0).margin(1e-7));

    CHECK(torus_fiber(sor(), {1.0, 0.5}, {0.9, 0.0}).covectors.empty());
}

TEST_CASE("fiber over a Liouville torus", "[classical]") {
    auto fib = torus_fiber(liouville(), {1.0, 0.0}, {0.0, 0.0});
    REQUIRE(fib.covectors.size() == 4);
    for (const auto& c : fib.covectors) {
        CHECK(std::abs(c[0]) == Catch::Approx(std::sqrt(2.3)).epsilon(1e-14));
        CHECK(std::abs(c[1]) == Catch::Approx(std::sqrt(0.7)).epsilon(1e-14));
        PhasePoint p{{0.0, 0.0}, c};
        CHECK(eval_p1(liouville(), p) == Catch::Approx(1.0).margin(1e-12));
        CHECK(eval_p2(liouville(), p) == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("fiber over the Liouville oscillator re-evaluates to the energies", "[classical]") {
    EnergyPair E{1.0, -1.5};
    for (double x1 : {0.0, 0.2, 0.7})
        for (double x2 : {0.1, 0.5}) {
            auto fib = torus_fiber(oscillator(), E, {x1, x2});
            for (const auto& c : fib.covectors) {
                PhasePoint p{{x1, x2}, c};
                CHECK(eval_p1(oscillator(), p) == Catch::Approx(E.e1).margin(1e-10));
                CHECK(eval_p2(oscillator(), p) == Catch::Approx(E.e2).margin(1e-10));
            }
        }
}

TEST_CASE("projection classification truth table", "[classical]") {
    auto fold = classify_projection(liouville(), {1.0, 0.5});
    CHECK(fold.classification == Classification::Fold);
    // b(x2) = 0.5 + 0.2 cos(2 pi x2) = 0.5 at x2 = 1/4, 3/4
    REQUIRE(fold.caustics.size() == 2);
    CHECK(fold.caustics[0].axis == 1);
    CHECK(fold.caustics[0].location == Catch::Approx(0.25).margin(1e-12));
    CHECK(fold.caustics[1].location == Catch::Approx(0.75).margin(1e-12));

    CHECK(classify_projection(liouville(), {1.0, 0.0}).classification == Classification::RegularGraph);
    CHECK(classify_projection(liouville(), {1.0, 0.75}).classification == Classification::Empty);
    CHECK(classify_projection(liouville(), {1.0, 0.7}).classification == Classification::Degenerate);
    CHECK(classify_projection(sor(), {1.0, 1.0}).classification == Classification::Degenerate);
    CHECK(classify_projection(sor(), {1.0, 0.0}).classification == Classification::RegularGraph);
    CHECK(classify_projection(sor(), {1.0, 1.2}).classification == Classification::Empty);

    auto sorFold = classify_projection(sor(), {1.0, 0.5});
    CHECK(sorFold.classification == Classification::Fold);
    REQUIRE(sorFold.caustics.size() == 2);
    CHECK(sorFold.caustics[1].location == Catch::Approx(2.0 / 3.0).margin(1e-12));
}

TEST_CASE("non-regular levels are rejected", "[classical]") {
    try {
        classify_projection(liouville(), {0.0, 0.0});
        FAIL("expected NotRegularLevel");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotRegularLevel);
    }
    // oscillator: b(0) - a(0) = 0.7 - 2.3 is a critical value of p1
    CHECK_THROWS_AS(classify_projection(oscillator(), {-1.6, 0.0}), Error);
}

TEST_CASE("Morse check on Liouville and SOR shells", "[classical]") {
    auto rep = morse_check(liouville(), {0.0, 0.0}, 1.0);
    REQUIRE(rep.criticalPoints.size() == 4);
    const double pi = std::numbers::pi;
    const double thetas[] = {0.0, pi / 2, pi, 3 * pi / 2};
    const double vals[] = {0.7, -2.3, 0.7, -2.3};
    const double second[] = {-6.0, 6.0, -6.0, 6.0};
    for (int i = 0; i < 4; ++i) {
        CHECK(rep.criticalPoints[i].theta == Catch::Approx(thetas[i]).margin(1e-12));
        CHECK(rep.criticalPoints[i].value == Catch::Approx(vals[i]).epsilon(1e-12));
        CHECK(rep.criticalPoints[i].secondDeriv == Catch::Approx(second[i]).epsilon(1e-12));
    }
    CHECK(rep.isMorse);
    CHECK(rep.minGap == Catch::Approx(6.0).epsilon(1e-12));

    auto s = morse_check(sor(), {0.5, 0.0}, 1.0);
    REQUIRE(s.criticalPoints.size() == 2);
    CHECK(s.criticalPoints[0].value == Catch::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(s.criticalPoints[1].value == Catch::Approx(-std::sqrt(0.5)).epsilon(1e-12));
    CHECK(s.isMorse);

    try {
        morse_check(sor(), {1.0 - 1e-7, 0.0}, 1.0);
        FAIL("expected PoleSingularity");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PoleSingularity);
    }
}

TEST_CASE("moment image slices", "[classical]") {
    auto s = moment_image_sample(sor(), 1.0, 200);
    CHECK(s[0] == Catch::Approx(-1.0).margin(1e-9));
    CHECK(s[1] == Catch::Approx(1.0).margin(1e-9));
    auto l = moment_image_sample(liouville(), 1.0, 400);
    CHECK(l[0] == Catch::Approx(-2.3).margin(1e-9));
    CHECK(l[1] == Catch::Approx(0.7).margin(1e-9));
    try {
        moment_image_sample(HarmonicOscillatorModel{}, 1.0, 200);
        FAIL("expected Unsupported");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Unsupported);
    }
}
