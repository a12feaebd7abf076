/// Grid construction: clustering, symmetry, wall-resolution validation.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fiml/errors.hpp"
#include "fiml/grid.hpp"

using namespace fiml;

TEST_CASE("stretch = 1 gives exactly uniform nodes") {
    const Grid1D g = build_grid(3, 1.0, 1.0);
    REQUIRE(g.n() == 3);
    CHECK(g.y[0] == 0.0);
    CHECK(g.y[1] == 0.5);
    CHECK(g.y[2] == 1.0);
}

TEST_CASE("clustered half-channel grid is monotone with exact endpoints") {
    const Grid1D g = build_grid(129, 1.0, 5.0);
    CHECK(g.y[0] == 0.0);
    CHECK(g.y[128] == 1.0);
    for (int i = 1; i < 129; ++i) CHECK(g.y[i] > g.y[i - 1]);
    // clustering pulls the first spacing well under the uniform one
    CHECK(g.y[1] < 1.0 / 128.0 / 10.0);
    for (int i = 0; i < 129; ++i) CHECK(g.d[i] == g.y[i]);
}

TEST_CASE("full-channel grid is symmetric and measures wall distance") {
    const Grid1D g = build_grid(97, 1.0, 5.0, false);
    CHECK(g.y[0] == 0.0);
    CHECK(g.y[96] == 2.0);
    for (int i = 0; i < 97; ++i) {
        CHECK(g.y[i] + g.y[96 - i] == doctest::Approx(2.0).epsilon(1e-14));
        const double d_expected = g.y[i] <= 1.0 ? g.y[i] : 2.0 - g.y[i];
        CHECK(g.d[i] == doctest::Approx(d_expected).epsilon(1e-14));
    }
}

TEST_CASE("wall-resolution check passes for a clustered grid and names a fix") {
    const Grid1D fine = build_grid(129, 1.0, 5.0);
    CHECK(first_spacing_plus(fine, 1000.0) < 1.0);
    CHECK_NOTHROW(check_wall_resolution(fine, 1000.0, 5.0));

    const Grid1D coarse = build_grid(16, 1.0, 1.0); // uniform: y1+ = 1000/15
    CHECK(first_spacing_plus(coarse, 1000.0) > 1.0);
    try {
        check_wall_resolution(coarse, 1000.0, 1.0);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("y1+") != std::string::npos);
        CHECK(msg.find("increase n") != std::string::npos);
    }
}

TEST_CASE("degenerate arguments are rejected") {
    CHECK_THROWS_AS(build_grid(2, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(build_grid(33, -1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(build_grid(33, 1.0, 0.5), ConfigError);
}
