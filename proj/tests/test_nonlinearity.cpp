#include <doctest.h>

#include <cmath>

#include "entroflow/nonlinearity.hpp"

using namespace entroflow;

TEST_CASE("power law values") {
    auto fam = make_power_law(2.0, 1.0);
    CHECK(fam.phi(1.0) == doctest::Approx(1.0));
    CHECK(fam.a_frak(1.0) == doctest::Approx(std::sqrt(2.0)));
    auto cubic = make_power_law(3.0, 1.0);
    CHECK(cubic.phi(-2.0) == doctest::Approx(-8.0));
    CHECK_THROWS(make_power_law(1.0, 1.0));
    CHECK_THROWS(make_power_law(0.5, 1.0));
}

TEST_CASE("power law derivative envelope") {
    // |a'(r)| = (sqrt(2)/2) |r|^{-1/2} for m = 2; the ratio against
    // K |r|^{(m-3)/2} maximizes to sqrt(2)/2 <= 1
    auto fam = make_power_law(2.0, 1.0);
    double worst = 0.0;
    for (int i = 1; i <= 2000; ++i) {
        const double r = 5.0 * i / 2000.0;
        worst = std::max(worst, std::abs(fam.a_frak_prime(r)) / std::pow(r, -0.5));
    }
    CHECK(worst == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-12));
    CHECK(worst <= fam.K);
}

TEST_CASE("bracket quadrature") {
    CHECK(bracket([](double) { return 1.0; }, 2.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(bracket([](double s) { return s * s; }, -3.0) == doctest::Approx(-9.0).epsilon(1e-10));
    CHECK(bracket([](double s) { return 1.0 / std::sqrt(1.0 + s * s); }, 1.0) ==
          doctest::Approx(std::asinh(1.0)).epsilon(1e-10));
    CHECK(bracket([](double s) { return std::exp(s); }, 0.0) == 0.0);
    // sign convention
    CHECK(bracket([](double) { return 1.0; }, -2.0) == doctest::Approx(-2.0));
}

TEST_CASE("structure predicates") {
    SUBCASE("power law passes at K = 2") {
        auto rep = check_assumption_A(make_power_law(2.0, 2.0), 5.0, 201);
        CHECK(rep.all_ok);
    }
    SUBCASE("arctan fails the nondegeneracy bound on a wide range") {
        auto rep = check_assumption_A(make_arctan(2.0), 10.0, 201);
        CHECK_FALSE(rep.all_ok);
    }
    SUBCASE("heat equation passes trivially") {
        auto rep = check_assumption_A(make_linear(1.0), 5.0, 201);
        CHECK(rep.all_ok);
    }
}

TEST_CASE("regularization floor and approximation bounds") {
    auto fam = make_power_law(2.0, 2.0);
    for (int n : {2, 4, 8, 16}) {
        auto reg = regularize(fam, n);
        double min_a = 1e300, worst_gap = 0.0;
        for (int i = 0; i <= 20000; ++i) {
            const double r = -static_cast<double>(n) + 2.0 * n * i / 20000.0;
            min_a = std::min(min_a, reg.a_n(r));
            worst_gap = std::max(worst_gap, std::abs(fam.a_frak(r) - reg.a_n(r)));
        }
        CHECK(min_a >= 2.0 / n);
        CHECK(worst_gap <= 4.0 / n);
        CHECK(std::isfinite(reg.phi_prime_sup()));
        // convergence: the observed gap shrinks at the stated rate
        CHECK(worst_gap <= 4.0 / n);
    }

    SUBCASE("n = 4 spot values") {
        auto reg = regularize(fam, 4);
        double min_a = 1e300, worst_gap = 0.0;
        for (int i = 0; i <= 8000; ++i) {
            const double r = -4.0 + 8.0 * i / 8000.0;
            min_a = std::min(min_a, reg.a_n(r));
            worst_gap = std::max(worst_gap, std::abs(fam.a_frak(r) - reg.a_n(r)));
        }
        CHECK(min_a >= 0.5);
        CHECK(worst_gap <= 1.0);
    }
}

TEST_CASE("identity regularization for the heat family") {
    auto reg = regularize(make_linear(1.0), 2);
    CHECK(reg.mode() == RegularizedNonlinearity::Mode::Identity);
    for (double r : {-3.0, 0.0, 0.7, 12.0}) {
        CHECK(reg.a_n(r) == 1.0);
        CHECK(reg.phi_n(r) == r);
    }
}

TEST_CASE("regularized family stays odd and consistent") {
    auto reg = regularize(make_power_law(2.0, 2.0), 4);
    for (double r : {0.1, 0.37, 1.0, 2.5, 3.9, 5.2}) {
        CHECK(reg.phi_n(-r) == doctest::Approx(-reg.phi_n(r)).epsilon(1e-13));
        CHECK(reg.a_n(-r) == doctest::Approx(reg.a_n(r)).epsilon(1e-13));
    }
    // d/dr Phi_n = a_n^2 via centered differences, away from the floor kink
    const double fd = 1e-4;
    for (double r : {0.8, 1.5, 2.0, 3.0}) {
        const double lhs = (reg.phi_n(r + fd) - reg.phi_n(r - fd)) / (2 * fd);
        const double rhs = reg.a_n(r) * reg.a_n(r);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-4));
    }
}

TEST_CASE("cached antiderivative tracks direct quadrature") {
    auto fam = make_power_law(2.0, 2.0);
    auto reg = regularize(fam, 4);
    for (double r : {-3.2, -1.0, 0.55, 2.7}) {
        const double direct = bracket([&](double s) { return reg.a_n(s); }, r, 1e-10);
        CHECK(reg.a_n_bracket(r) == doctest::Approx(direct).epsilon(1e-7));
    }
}

TEST_CASE("mean curvature truncation") {
    SUBCASE("cutoff and matching area") {
        CHECK(mcf_cutoff(1) == doctest::Approx(3.0));
        // integral of the linear tail balances the dropped mass
        for (int n : {1, 2, 4, 8, 16}) {
            const double got = bracket([n](double s) { return mcf_bn(n, s); }, mcf_cutoff(n)) -
                               bracket([n](double s) { return mcf_bn(n, s); }, n);
            const double want = -0.5 / std::sqrt(1.0 + static_cast<double>(n) * n);
            CHECK(got == doctest::Approx(want).epsilon(1e-10));
        }
        CHECK(bracket([](double s) { return mcf_bn(1, s); }, 3.0) -
                  bracket([](double s) { return mcf_bn(1, s); }, 1.0) ==
              doctest::Approx(-1.0 / (2.0 * std::sqrt(2.0))).epsilon(1e-10));
    }

    SUBCASE("slope profile inside the matching region") {
        for (int n : {1, 4}) {
            for (double r : {0.2, 0.9, static_cast<double>(n) * 0.99}) {
                CHECK(mcf_bn(n, r) ==
                      doctest::Approx(-r * std::pow(1.0 + r * r, -1.5)).epsilon(1e-13));
                CHECK(mcf_bn(n, -r) == doctest::Approx(-mcf_bn(n, r)).epsilon(1e-13));
            }
        }
    }

    SUBCASE("constant tail and coercivity") {
        for (int n : {1, 2, 4, 8}) {
            auto reg = mcf_regularize(n);
            const double cn = mcf_cutoff(n);
            const double tail = reg.a_n(cn);
            CHECK(reg.a_n(cn + 3.0) == doctest::Approx(tail).epsilon(1e-14));
            CHECK(tail == doctest::Approx(0.5 / std::sqrt(1.0 + static_cast<double>(n) * n)));
            for (int i = 0; i <= 1000; ++i) {
                const double r = -50.0 + 100.0 * i / 1000.0;
                CHECK(1.0 / std::abs(reg.a_n(r)) <= 2.0 * (1.0 + std::abs(r)) + 1e-12);
            }
        }
        // the limit family satisfies the same coercivity
        auto lim = make_arctan();
        for (int i = 0; i <= 1000; ++i) {
            const double r = -50.0 + 100.0 * i / 1000.0;
            CHECK(1.0 / lim.a_frak(r) <= 2.0 * (1.0 + std::abs(r)));
        }
    }

    SUBCASE("phi agrees with arctan inside the matching region") {
        auto reg = mcf_regularize(4);
        for (double r : {-3.9, -1.0, 0.3, 2.2}) {
            CHECK(reg.phi_n(r) == doctest::Approx(std::atan(r)).epsilon(1e-14));
            CHECK(reg.a_n_bracket(r) == doctest::Approx(std::asinh(r)).epsilon(1e-14));
        }
        // quadrature agreement of the limit: arctan(r) = integral of (1+s^2)^{-1}
        for (double r : {0.7, 1.9, 6.0}) {
            const double quad = bracket([](double s) { return 1.0 / (1.0 + s * s); }, r, 1e-12);
            CHECK(std::abs(std::atan(r) - quad) <= 1e-10);
        }
    }

    SUBCASE("derivative consistency across the junctions") {
        auto reg = mcf_regularize(2);
        const double fd = 1e-5;
        for (double r : {0.5, 1.9, 2.1, 3.5, 4.4, 6.0}) {
            const double dphi = (reg.phi_n(r + fd) - reg.phi_n(r - fd)) / (2 * fd);
            CHECK(dphi == doctest::Approx(reg.a_n(r) * reg.a_n(r)).epsilon(1e-6));
            const double dabr = (reg.a_n_bracket(r + fd) - reg.a_n_bracket(r - fd)) / (2 * fd);
            CHECK(dabr == doctest::Approx(reg.a_n(r)).epsilon(1e-6));
        }
    }
}

TEST_CASE("mode gap controls the stability radius") {
    // |a_n - a_2n| stays within 6/n on [-n, n] by the approximation bound
    auto fam = make_power_law(2.0, 2.0);
    for (int n : {2, 4, 8}) {
        auto ra = regularize(fam, n);
        auto rb = regularize(fam, 2 * n);
        double worst = 0.0;
        for (int i = 0; i <= 4000; ++i) {
            const double r = -static_cast<double>(n) + 2.0 * n * i / 4000.0;
            worst = std::max(worst, std::abs(ra.a_n(r) - rb.a_n(r)));
        }
        CHECK(worst <= 6.0 / n);
    }
}
