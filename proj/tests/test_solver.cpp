#include <doctest.h>

#include <cmath>

#include "entroflow/solver.hpp"

using namespace entroflow;

namespace {

SolverConfig heat_config(int M, double dt, double T) {
    SolverConfig cfg;
    cfg.nonlinearity = regularize(make_linear(1.0), 2);
    cfg.coeffs = make_zero_coefficients(1);
    cfg.dt = dt;
    cfg.t_final = T;
    return cfg;
}

SolverConfig pme_config(int n, int M, double T, CoefficientSet coeffs) {
    SolverConfig cfg;
    cfg.nonlinearity = regularize(make_power_law(2.0, 2.0), n);
    cfg.coeffs = std::move(coeffs);
    cfg.t_final = T;
    cfg.dt = 1.0;
    const double budget = cfl_budget(cfg, M, 1, static_cast<double>(n));
    double dt = T;
    while (dt > budget) dt *= 0.5;
    cfg.dt = dt;
    return cfg;
}

GridFunction bump(int M, double amp, double width = 0.18, double center = 0.5) {
    return GridFunction::sample(1, M, [=](double x, double) {
        double d = std::abs(x - center);
        d = std::min(d, 1.0 - d);
        const double s = d / width;
        return s >= 1.0 ? 0.0 : amp * std::exp(1.0 - 1.0 / (1.0 - s * s));
    });
}

}  // namespace

TEST_CASE("constants are fixed points of the heat step") {
    auto cfg = heat_config(64, 1e-5, 1e-4);
    GridFunction u(1, 64, 0.37);
    auto next = step(u, cfg, Eigen::ArrayXd());
    CHECK((next.values() - u.values()).abs().maxCoeff() == 0.0);
}

TEST_CASE("heat kernel oracle") {
    const double T = 0.01;
    const int M = 256;
    auto cfg = heat_config(M, 1e-6, T);
    auto xi = GridFunction::sample(1, M, [](double x, double) { return std::cos(kTwoPi * x); });
    auto traj = run(xi, cfg, NoisePath::sample(0, 0, cfg.dt, 10000));
    const double decay = std::exp(-4.0 * M_PI * M_PI * T);
    double err = 0.0;
    for (int i = 0; i < M; ++i)
        err = std::max(err, std::abs(traj.final_state()[i] -
                                     decay * std::cos(kTwoPi * i / static_cast<double>(M))));
    CHECK(err <= 1e-3);
}

TEST_CASE("heat error drops at second order in h") {
    // fixed small dt isolates the spatial error
    const double T = 0.005;
    const double dt = 1e-7;
    auto max_err = [&](int M) {
        auto cfg = heat_config(M, dt, T);
        auto xi =
            GridFunction::sample(1, M, [](double x, double) { return std::cos(kTwoPi * x); });
        auto traj = run(xi, cfg, NoisePath::sample(0, 0, dt, 1));
        const double decay = std::exp(-4.0 * M_PI * M_PI * T);
        double err = 0.0;
        for (int i = 0; i < M; ++i)
            err = std::max(err, std::abs(traj.final_state()[i] -
                                         decay * std::cos(kTwoPi * i / static_cast<double>(M))));
        return err;
    };
    const double ratio = max_err(64) / max_err(128);
    CHECK(ratio >= 3.5);
    CHECK(ratio <= 4.5);
}

TEST_CASE("every term telescopes: single-step mean preservation") {
    NoiseMode mode;
    mode.h[0] = profile_cos_x(0.2, 1.0);
    CoefficientSet coeffs(1, {RadialKind::SqrtOnePlusSq, 1.0}, {mode});
    auto cfg = pme_config(4, 128, 0.01, coeffs);
    auto u = bump(128, 1.5);
    Eigen::ArrayXd dW(1);
    dW[0] = 0.013;
    auto next = step(u, cfg, dW);
    CHECK(std::abs(next.mean() - u.mean()) <= 1e-13);
}

TEST_CASE("mass conservation along a stochastic run") {
    NoiseMode mode;
    mode.h[0] = profile_cos_x(0.2, 1.0);
    CoefficientSet coeffs(1, {RadialKind::SqrtOnePlusSq, 1.0}, {mode});
    auto cfg = pme_config(4, 128, 0.01, coeffs);
    const int steps = static_cast<int>(std::llround(cfg.t_final / cfg.dt));
    auto traj = run(bump(128, 1.5), cfg, NoisePath::sample(5, 1, cfg.dt, steps));
    double worst = 0.0;
    for (size_t i = 1; i < traj.mass_series.size(); ++i)
        worst = std::max(worst, std::abs(traj.mass_series[i] - traj.mass_series[i - 1]));
    CHECK(worst <= 1e-12);  // physical mass; equals 1e-12 M^d in cell units
    CHECK(std::abs(traj.mass_series.back() - traj.mass_series.front()) <= 1e-9);
}

TEST_CASE("trajectory bookkeeping") {
    SUBCASE("zero horizon returns the truncated initial state") {
        auto cfg = heat_config(32, 1e-5, 0.0);
        cfg.truncation_level = 1.0;
        GridFunction xi(1, 32, 4.0);
        auto traj = run(xi, cfg, NoisePath::sample(0, 0, 1e-5, 1));
        CHECK(traj.snapshots.size() == 1);
        CHECK(traj.final_state().max_abs() == 1.0);
    }
    SUBCASE("same path twice gives bitwise-identical trajectories") {
        NoiseMode mode;
        mode.h[0] = profile_cos_x(0.2, 1.0);
        CoefficientSet coeffs(1, {RadialKind::SqrtOnePlusSq, 1.0}, {mode});
        auto cfg = pme_config(4, 64, 0.004, coeffs);
        const int steps = static_cast<int>(std::llround(cfg.t_final / cfg.dt));
        auto path = NoisePath::sample(11, 1, cfg.dt, steps);
        auto t1 = run(bump(64, 1.0), cfg, path);
        auto t2 = run(bump(64, 1.0), cfg, path);
        CHECK((t1.final_state().values() - t2.final_state().values()).abs().maxCoeff() == 0.0);
    }
    SUBCASE("snapshot times are increasing and within the horizon") {
        auto cfg = heat_config(32, 1e-5, 1e-3);
        cfg.snapshot_times = {2.5e-4, 5e-4, 7.5e-4};
        auto xi = GridFunction::sample(1, 32, [](double x, double) { return std::sin(kTwoPi * x); });
        auto traj = run(xi, cfg, NoisePath::sample(0, 0, cfg.dt, 100));
        for (size_t i = 1; i < traj.times.size(); ++i) CHECK(traj.times[i] > traj.times[i - 1]);
        CHECK(traj.times.front() == 0.0);
        CHECK(traj.times.back() == doctest::Approx(1e-3));
    }
}

TEST_CASE("coupled runs") {
    NoiseMode mode;
    mode.h[0] = profile_cos_x(0.2, 1.0);
    CoefficientSet coeffs(1, {RadialKind::SqrtOnePlusSq, 1.0}, {mode});
    auto cfg = pme_config(4, 64, 0.004, coeffs);
    const int steps = static_cast<int>(std::llround(cfg.t_final / cfg.dt));
    auto path = NoisePath::sample(21, 1, cfg.dt, steps);

    SUBCASE("identical data stays identical bitwise") {
        auto [a, b] = run_coupled(bump(64, 1.0), bump(64, 1.0), cfg, path);
        CHECK((a.final_state().values() - b.final_state().values()).abs().maxCoeff() == 0.0);
    }
    SUBCASE("zero stays a fixed point without noise or flux") {
        auto det = pme_config(4, 64, 0.004, make_zero_coefficients(1));
        auto [a, b] = run_coupled(bump(64, 1.0), GridFunction(1, 64, 0.0), det,
                                  NoisePath::sample(3, 0, det.dt, steps));
        CHECK(b.final_state().max_abs() == 0.0);
        CHECK(a.final_state().max_abs() > 0.0);
    }
}

TEST_CASE("deterministic comparison principle") {
    auto det = pme_config(4, 96, 0.01, make_zero_coefficients(1));
    det.dt *= 0.5;  // half the stability budget keeps the update monotone
    det.snapshot_times = {0.0025, 0.005, 0.0075, 0.01};
    const int steps = static_cast<int>(std::llround(det.t_final / det.dt));
    auto path = NoisePath::sample(0, 0, det.dt, steps);
    auto [hi, lo] = run_coupled(bump(96, 1.5), bump(96, 0.8), det, path);
    for (size_t s = 0; s < hi.snapshots.size(); ++s) {
        const double gap = (hi.snapshots[s].values() - lo.snapshots[s].values()).minCoeff();
        CHECK(gap >= -1e-10);
    }
    // sup|u| does not grow for nonnegative bump data
    double prev = 1e300;
    for (size_t i = 0; i < hi.diag_times.size(); i += 50) {
        // piggyback on the recorded norms: the max norm is monotone here
        (void)prev;
    }
    double sup0 = hi.snapshots.front().max_abs();
    CHECK(hi.final_state().max_abs() <= sup0 + 1e-12);
}

TEST_CASE("guard rails") {
    SUBCASE("a time step above the budget is rejected") {
        auto cfg = heat_config(128, 1.0, 1.0);  // absurd dt
        GridFunction u(1, 128, 0.5);
        CHECK_THROWS_AS(step(u, cfg, Eigen::ArrayXd()), CflError);
    }
    SUBCASE("mode count mismatch is rejected") {
        auto cfg = heat_config(32, 1e-5, 1e-4);
        GridFunction u(1, 32, 0.5);
        Eigen::ArrayXd dW(2);
        dW.setZero();
        CHECK_THROWS(step(u, cfg, dW));
    }
    SUBCASE("dt must divide the horizon") {
        auto cfg = heat_config(32, 3e-5, 1e-4);
        CHECK_THROWS(run(GridFunction(1, 32, 0.1), cfg, NoisePath::sample(0, 0, 3e-5, 10)));
    }
}
