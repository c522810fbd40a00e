#include <doctest.h>

#include "entroflow/grid.hpp"
#include "entroflow/profiles.hpp"

using namespace entroflow;

TEST_CASE("grid sampling and norms") {
    auto u = GridFunction::sample(1, 64, [](double x, double) { return std::sin(kTwoPi * x); });
    CHECK(u.spacing() == doctest::Approx(1.0 / 64));
    CHECK(u.mass() == doctest::Approx(0.0).epsilon(1e-12));
    // periodic trapezoid of sin^2 over a full period is exact
    CHECK(u.l2_norm() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

    auto ones = GridFunction(2, 16, 1.0);
    CHECK(ones.mass() == doctest::Approx(1.0));
    CHECK(ones.l1_norm() == doctest::Approx(1.0));
}

TEST_CASE("wrapped indexing") {
    GridFunction u(1, 8);
    for (int i = 0; i < 8; ++i) u[i] = i;
    CHECK(u.at_wrapped(-1) == 7.0);
    CHECK(u.at_wrapped(8) == 0.0);
    GridFunction v(2, 4);
    v[v.index(3, 0)] = 5.0;
    CHECK(v.at_wrapped(-1, 4) == 5.0);
}

TEST_CASE("initial truncation clamps pointwise") {
    GridFunction u(1, 16, 5.0);
    auto t = truncate_initial(u, 3.0);
    CHECK(t.max_abs() == 3.0);

    auto inside = GridFunction::sample(1, 16, [](double x, double) { return 0.5 * std::cos(x); });
    auto same = truncate_initial(inside, 2.0);
    CHECK((same.values() - inside.values()).abs().maxCoeff() == 0.0);

    auto wave =
        GridFunction::sample(1, 64, [](double x, double) { return 10.0 * std::sin(kTwoPi * x); });
    auto clip = truncate_initial(wave, 2.0);
    CHECK(clip.max_abs() <= 2.0);
    for (int i = 0; i < 64; ++i)
        if (std::abs(wave[i]) <= 2.0) CHECK(clip[i] == wave[i]);
}
