#include <doctest.h>

#include <cmath>

#include "entroflow/coefficients.hpp"

using namespace entroflow;

namespace {

// sigma^{11}(x,r) = cos(2 pi k x) sqrt(1+r^2) style sets, d = 1
CoefficientSet sqrt_set(double amp, double freq, CoefficientBounds b = {}) {
    NoiseMode mode;
    mode.h[0] = freq == 0.0 ? profile_const(amp) : profile_cos_x(amp, freq);
    return CoefficientSet(1, {RadialKind::SqrtOnePlusSq, 1.0}, {mode}, {}, b);
}

// finite-difference cross-check of an analytic derivative
double fd(const std::function<double(double)>& f, double x, double step = 1e-5) {
    return (f(x + step) - f(x - step)) / (2.0 * step);
}

}  // namespace

TEST_CASE("a from the square-root family") {
    // sigma = sqrt(1+r^2): sigma_r = r/sqrt(1+r^2), a = sigma_r^2/2
    auto cs = sqrt_set(1.0, 0.0);
    const Vec2 x0(0.0, 0.0);
    auto a = compute_a(cs, x0, 1.0);
    CHECK(a(0, 0) == doctest::Approx(0.25).epsilon(1e-12));

    // derivative consistency against finite differences
    const double sr = cs.sigma_r(0, 0, x0, 1.0);
    const double sr_fd = fd([&](double r) { return cs.sigma(0, 0, x0, r); }, 1.0);
    CHECK(sr == doctest::Approx(sr_fd).epsilon(1e-6));
}

TEST_CASE("a vanishes without noise and is constant for linear noise") {
    auto zero = make_zero_coefficients(1);
    CHECK(compute_a(zero, Vec2(0.3, 0.0), 2.0).norm() == 0.0);

    NoiseMode mode;
    mode.h[0] = profile_const(1.0);
    CoefficientSet lin(1, {RadialKind::Linear, 1.0}, {mode});
    for (double r : {-3.0, 0.0, 1.7})
        CHECK(compute_a(lin, Vec2(0.1, 0.0), r)(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("b matches the symbolic product rule") {
    // d=1, sigma = cos(x') sqrt(1+r^2) in torus coordinates: the profile is
    // cos(2 pi x), so evaluate where 2 pi x = pi/4.
    auto cs = sqrt_set(1.0, 1.0);
    const double x_quarter = 0.125;  // 2 pi x = pi/4
    const Vec2 xq(x_quarter, 0.0);
    // b = sigma_r * sigma_x = [cos(w x) r/sqrt(1+r^2)] [-w sin(w x) sqrt(1+r^2)]
    //   = -r w sin cos, with w = 2 pi
    const double expected = -1.0 * kTwoPi * std::sin(M_PI / 4) * std::cos(M_PI / 4);
    CHECK(compute_b(cs, xq, 1.0)[0] == doctest::Approx(expected).epsilon(1e-12));

    // x-independent noise has b = 0
    auto flat = sqrt_set(0.7, 0.0);
    CHECK(compute_b(flat, xq, 2.3)[0] == 0.0);
    CHECK(compute_b(make_zero_coefficients(1), xq, 1.0)[0] == 0.0);
}

TEST_CASE("f is G minus half b") {
    auto cs = sqrt_set(1.0, 1.0);
    const Vec2 xq(0.125, 0.0);
    // zero flux: f = -b/2 exactly
    const double b = compute_b(cs, xq, 1.0)[0];
    CHECK(compute_f(cs, xq, 1.0)[0] == doctest::Approx(-0.5 * b).epsilon(1e-14));

    // G = r^2, x-free noise: b = 0, f = r^2
    NoiseMode mode;
    mode.h[0] = profile_const(0.3);
    std::array<std::vector<FluxTerm>, 2> flux;
    flux[0].push_back({profile_const(1.0), {RadialKind::Square, 1.0}});
    CoefficientSet with_flux(1, {RadialKind::SqrtOnePlusSq, 1.0}, {mode}, flux);
    CHECK(compute_f(with_flux, xq, 2.0)[0] == doctest::Approx(4.0));

    // identity f + b/2 - G = 0 on random samples
    for (double r : {-2.0, 0.4, 3.1}) {
        const double lhs = compute_f(cs, Vec2(0.3, 0.0), r)[0] +
                           0.5 * compute_b(cs, Vec2(0.3, 0.0), r)[0] - cs.G(0, Vec2(0.3, 0.0), r);
        CHECK(std::abs(lhs) <= 1e-15);
    }
}

TEST_CASE("gram matrix is symmetric positive semidefinite") {
    NoiseMode m1, m2;
    m1.h[0] = profile_cos_x(0.4, 1.0);
    m1.h[1] = profile_sin_x(0.2, 2.0);
    m2.h[0] = profile_const(0.3);
    m2.h[1] = profile_cos_x(0.5, 1.0);
    CoefficientSet cs(2, {RadialKind::SqrtOnePlusSq, 1.0}, {m1, m2});
    for (double r : {-1.5, 0.0, 0.8})
        for (double xx : {0.1, 0.6})
            for (double yy : {0.25, 0.9}) {
                auto a = compute_a(cs, Vec2(xx, yy), r);
                CHECK(a(0, 1) == doctest::Approx(a(1, 0)).epsilon(1e-14));
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
                CHECK(es.eigenvalues().minCoeff() >= -1e-14);
            }
}

TEST_CASE("divergence-form drift matches the correction expansion") {
    // d(a du) + b'/2 acting on smooth fields should agree with
    // 1/2 d[sigma_r d(sigma(x,u))] to second order in h
    auto cs = sqrt_set(0.5, 1.0);
    auto u_fn = [](double x) { return 0.3 * std::sin(kTwoPi * x) + 0.1; };

    auto mismatch = [&](int M) {
        const double h = 1.0 / M;
        double worst = 0.0;
        auto sigma_of_u = [&](double x) { return cs.sigma(0, 0, Vec2(x, 0.0), u_fn(x)); };
        auto a_of = [&](double x) { return cs.a(0, 0, Vec2(x, 0.0), u_fn(x)); };
        auto b_of = [&](double x) { return cs.b(0, Vec2(x, 0.0), u_fn(x)); };
        auto sr_of = [&](double x) { return cs.sigma_r(0, 0, Vec2(x, 0.0), u_fn(x)); };
        for (int i = 0; i < M; ++i) {
            const double x = i * h;
            // flux-form first route
            auto flux1 = [&](double xx) {
                const double du = (u_fn(xx + h) - u_fn(xx - h)) / (2 * h);
                return a_of(xx) * du;
            };
            const double route1 = (flux1(x + h) - flux1(x - h)) / (2 * h) +
                                  0.5 * (b_of(x + h) - b_of(x - h)) / (2 * h);
            // Stratonovich-to-Ito expansion route
            auto flux2 = [&](double xx) {
                const double dsig = (sigma_of_u(xx + h) - sigma_of_u(xx - h)) / (2 * h);
                return 0.5 * sr_of(xx) * dsig;
            };
            const double route2 = (flux2(x + h) - flux2(x - h)) / (2 * h);
            worst = std::max(worst, std::abs(route1 - route2));
        }
        return worst;
    };

    const double coarse = mismatch(64);
    const double fine = mismatch(128);
    CHECK(fine < coarse);
    CHECK(coarse / fine > 3.0);  // second-order agreement
}

TEST_CASE("declared bounds hold for the bounded family") {
    CoefficientBounds b;
    b.N0 = 2.0;
    b.N1 = 8.0;
    b.kappa_bar = 1.0;
    b.beta = 1.0;
    b.beta_tilde = 0.5;
    auto cs = sqrt_set(1.0, 0.0, b);  // |sigma_r| <= 1, |sigma_rr| <= 1
    auto rep = check_assumption_sigma(cs, {5.0, 17, 33});
    CHECK(rep.all_ok);
}

TEST_CASE("unbounded sigma_r is flagged") {
    NoiseMode mode;
    mode.h[0] = profile_const(1.0);
    CoefficientBounds b;
    b.N0 = 10.0;
    b.N1 = 10.0;
    CoefficientSet cs(1, {RadialKind::Square, 1.0}, {mode}, {}, b);  // sigma_r = 2r
    auto rep = check_assumption_sigma(cs, {20.0, 9, 41});
    CHECK_FALSE(rep.all_ok);
}

TEST_CASE("zero noise reports zero suprema") {
    auto rep = check_assumption_sigma(make_zero_coefficients(1), {5.0, 9, 17});
    CHECK(rep.all_ok);
    for (const auto& item : rep.items) CHECK(item.observed == 0.0);
}
