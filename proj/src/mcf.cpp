#include "entroflow/mcf.hpp"

#include <cmath>

namespace entroflow {

CoefficientSet mcf_coefficients(const McfConfig& mc) {
    std::vector<NoiseMode> modes;
    for (const auto& p : mc.h_modes) {
        NoiseMode mode;
        mode.h[0] = p;
        modes.push_back(mode);
    }
    CoefficientBounds bounds;
    bounds.N0 = mc.N0;
    bounds.N1 = mc.N1 > 0.0 ? mc.N1 : mc.N0 * mc.N0 + mc.N0;
    bounds.kappa_bar = 1.0;
    bounds.beta = 1.0;
    bounds.beta_tilde = 1.0;
    return CoefficientSet(1, RadialProfile{RadialKind::SqrtOnePlusSq, 1.0}, std::move(modes), {},
                          bounds);
}

AssumptionReport check_mcf_h_regularity(const McfConfig& mc, int x_samples) {
    AssumptionReport rep;
    for (int order = 0; order <= 3; ++order) {
        double worst = 0.0;
        for (int i = 0; i < x_samples; ++i) {
            const Vec2 x(static_cast<double>(i) / x_samples, 0.0);
            double s = 0.0;
            for (const auto& p : mc.h_modes) {
                double v = 0.0;
                switch (order) {
                    case 0: v = p.value(x); break;
                    case 1: v = p.deriv(x, 0); break;
                    case 2: v = p.deriv2(x, 0, 0); break;
                    case 3: v = p.deriv3(x, 0, 0, 0); break;
                }
                s += v * v;
            }
            worst = std::max(worst, std::sqrt(s));
        }
        rep.add("sup_x |h^(" + std::to_string(order) + ")|_{l2}", worst, mc.N0);
    }
    return rep;
}

namespace {

double snap_dt(double t_final, double budget) {
    // largest t_final / 2^k not exceeding the budget
    double dt = t_final;
    while (dt > budget) dt *= 0.5;
    return dt;
}

}  // namespace

SolverConfig make_mcf_solver_config(const McfConfig& mc) {
    SolverConfig cfg;
    cfg.nonlinearity = mcf_regularize(mc.n);
    cfg.coeffs = mcf_coefficients(mc);
    cfg.t_final = mc.t_final;
    cfg.cfl_safety = mc.cfl_safety;
    cfg.snapshot_times = mc.snapshot_times;
    cfg.truncation_level = static_cast<double>(mc.n);
    if (mc.dt > 0.0) {
        cfg.dt = mc.dt;
    } else {
        cfg.dt = 1.0;  // placeholder for the budget probe
        const double budget = cfl_budget(cfg, mc.M, 1, 2.0);
        cfg.dt = snap_dt(mc.t_final, budget);
    }
    return cfg;
}

Trajectory run_mcf_u(const McfConfig& mc, const GridFunction& xi_u, const NoisePath& path) {
    if (xi_u.dim() != 1) throw std::invalid_argument("run_mcf_u: slope equation is 1D");
    if (xi_u.cells_per_axis() != mc.M)
        throw std::invalid_argument("run_mcf_u: grid size does not match the config");
    return run(xi_u, make_mcf_solver_config(mc), path);
}

CurveReconstruction reconstruct_curve(const Trajectory& traj_u, double v0_mean) {
    CurveReconstruction out;
    out.curve.times = traj_u.times;
    out.curve.step_dt = traj_u.step_dt;
    for (const auto& u : traj_u.snapshots) {
        if (u.dim() != 1) throw std::invalid_argument("reconstruct_curve: needs 1D slope data");
        const int M = u.cells_per_axis();
        const double h = u.spacing();
        GridFunction v(1, M);
        double acc = 0.0;
        for (int i = 0; i < M; ++i) {
            acc += h * u[i];  // v at the face x_{i+1/2}
            v[i] = acc;
        }
        const double defect = std::abs(acc);  // |integral of u| over the torus
        v.values() += v0_mean - v.mean();
        out.curve.snapshots.push_back(std::move(v));
        out.periodicity_defect.push_back(defect);
        if (defect > 1e-8) out.periodic = false;
    }
    return out;
}

GridFunction curve_slope(const GridFunction& v) {
    if (v.dim() != 1) throw std::invalid_argument("curve_slope: needs 1D data");
    const int M = v.cells_per_axis();
    const double h = v.spacing();
    GridFunction u(1, M);
    for (int i = 0; i < M; ++i) u[i] = (v[i] - v.at_wrapped(i - 1)) / h;
    return u;
}

CurvatureReport curvature_consistency(const Trajectory& traj_u) {
    CurvatureReport rep;
    const auto& states = traj_u.dense.empty() ? traj_u.snapshots : traj_u.dense;
    const auto times = [&] {
        if (!traj_u.dense.empty()) {
            std::vector<double> t(states.size());
            for (size_t j = 0; j < states.size(); ++j)
                t[j] = traj_u.step_dt * static_cast<double>(j);
            return t;
        }
        return traj_u.times;
    }();
    if (states.size() < 2)
        throw std::invalid_argument("curvature_consistency: needs at least two recorded states");

    const int M = states.front().cells_per_axis();
    const double h = states.front().spacing();
    rep.h = h;
    const double inv_12h2 = 1.0 / (12.0 * h * h);

    for (size_t j = 0; j + 1 < states.size(); ++j) {
        const double gap = times[j + 1] - times[j];
        if (gap <= 0.0) continue;
        rep.dt_gap = std::max(rep.dt_gap, gap);
        const auto& u0 = states[j];
        const auto& u1 = states[j + 1];
        for (int c = 0; c < M; ++c) {
            // fourth-order five-point second derivative of arctan(u)
            const double f_m2 = std::atan(u0.at_wrapped(c - 2));
            const double f_m1 = std::atan(u0.at_wrapped(c - 1));
            const double f_0 = std::atan(u0[c]);
            const double f_p1 = std::atan(u0.at_wrapped(c + 1));
            const double f_p2 = std::atan(u0.at_wrapped(c + 2));
            const double lap4 =
                (-f_m2 + 16.0 * f_m1 - 30.0 * f_0 + 16.0 * f_p1 - f_p2) * inv_12h2;
            const double resid = (u1[c] - u0[c]) / gap - lap4;
            rep.max_residual = std::max(rep.max_residual, std::abs(resid));
        }
        ++rep.pairs;
    }
    rep.fitted_c = rep.max_residual / (h * h + rep.dt_gap);
    return rep;
}

}  // namespace entroflow
