#include "entroflow/experiments.hpp"

#include <cmath>
#include <iostream>

#include "entroflow/mcf.hpp"
#include "entroflow/svg.hpp"

namespace entroflow {

namespace {

GridFunction default_second_initial(const RunConfig& cfg) {
    if (cfg.has_initial_b) return build_initial(cfg.initial_b, cfg.dim, cfg.M);
    InitialSpec spec = cfg.initial;
    spec.offset -= 0.5;  // a unit-order L1 separation by default
    return build_initial(spec, cfg.dim, cfg.M);
}

std::vector<SpatialProfile> parse_h_modes(const RunConfig& cfg) {
    std::vector<SpatialProfile> out;
    for (const auto& s : cfg.mcf_modes) out.push_back(parse_mode_spec(s, 1.0, 1).h[0]);
    return out;
}

}  // namespace

ContractionSetup make_contraction_setup(const RunConfig& cfg) {
    ContractionSetup setup;
    setup.cfg = build_solver_config(cfg);
    setup.xi_a = build_initial(cfg.initial, cfg.dim, cfg.M);
    setup.xi_b = default_second_initial(cfg);
    setup.ensemble = {cfg.seed, cfg.count, cfg.jobs};
    setup.c_hat_limit = cfg.c_hat_limit;
    return setup;
}

MomentReport run_moments(const RunConfig& cfg) {
    RunConfig auto_dt = cfg;
    auto_dt.dt = 0.0;  // each matrix cell snaps its own step
    std::vector<MomentCase> matrix;
    for (int n : cfg.moment_n)
        for (int M : cfg.moment_M) matrix.push_back({n, M});
    auto make_case = [auto_dt](int n, int M) {
        SolverConfig sc = build_solver_config(auto_dt, n, M);
        GridFunction xi = build_initial(auto_dt.initial, auto_dt.dim, M);
        return std::make_pair(sc, xi);
    };
    return moment_check(make_case, matrix, {cfg.seed, cfg.moment_count, cfg.jobs});
}

EntropyReport run_entropy_levels(const RunConfig& cfg) {
    EntropyReport rep;
    if (cfg.entropy_M.empty()) return rep;

    // deterministic smooth run: zero noise, small horizon, conservative step
    {
        RunConfig det = cfg;
        det.modes.clear();
        det.dt = 0.0;
        const int M_det = cfg.entropy_M.size() > 1 ? cfg.entropy_M[1] : cfg.entropy_M[0];
        SolverConfig sc = build_solver_config(det, 0, M_det, 0.01);
        sc.dt = snap_time_step(sc.t_final, std::min(sc.dt, 2.5e-7));
        sc.record_dense = true;
        const GridFunction xi = build_initial(det.initial, det.dim, M_det);
        const GridFunction xi_n = truncate_initial(xi, sc.effective_truncation());
        const NoisePath path = NoisePath::sample(det.seed, 0, sc.dt, 1);
        const auto traj = run(xi, sc, path);
        const EntropyPair pair(0.5);
        const TestFunction tf(sc.t_final, 0.9, 0.5, 1.0, det.dim);
        rep.det_residual = entropy_residual(traj, pair, tf, path, xi_n);
    }

    // stochastic refinement levels with bridge-coupled paths
    const double T = cfg.entropy_T;
    RunConfig level_cfg = cfg;
    level_cfg.dt = 0.0;
    SolverConfig coarse = build_solver_config(level_cfg, 0, cfg.entropy_M.front(), T);
    const double dt0 = coarse.dt;

    std::vector<NoisePath> base_paths;
    const int steps0 = static_cast<int>(std::llround(T / dt0));
    for (int s = 0; s < cfg.entropy_count; ++s)
        base_paths.push_back(
            NoisePath::sample(cfg.seed + static_cast<std::uint64_t>(s), static_cast<int>(cfg.modes.size()),
                              dt0, steps0));

    for (size_t lvl = 0; lvl < cfg.entropy_M.size(); ++lvl) {
        const int M = cfg.entropy_M[lvl];
        SolverConfig sc = build_solver_config(level_cfg, 0, M, T);
        sc.dt = dt0 / std::pow(4.0, static_cast<double>(lvl));
        sc.record_dense = true;
        const GridFunction xi = build_initial(cfg.initial, cfg.dim, M);
        const EntropyPair pair(cfg.entropy_delta0 / std::pow(2.0, static_cast<double>(lvl)));
        const TestFunction tf(T, 0.9, 0.5, 1.0, cfg.dim);
        rep.levels.push_back(entropy_ensemble(sc, xi, pair, tf, base_paths, cfg.jobs));
        if (lvl + 1 < cfg.entropy_M.size())
            for (auto& p : base_paths) p = p.refine().refine();
    }

    rep.det_tolerance = 1e-6;
    if (!rep.levels.empty()) {
        const auto& l0 = rep.levels.front();
        const double scale0 = l0.h + std::sqrt(l0.dt) + l0.delta;
        rep.calibrated_c = (std::abs(l0.mean_residual) + l0.half_width) / scale0;
        rep.envelope_ok = true;
        for (const auto& lv : rep.levels) {
            const double tau = rep.calibrated_c * (lv.h + std::sqrt(lv.dt) + lv.delta);
            if (std::abs(lv.mean_residual) - lv.half_width > tau) rep.envelope_ok = false;
        }
        rep.shrink_ok = true;
        for (size_t i = 0; i + 1 < rep.levels.size(); ++i) {
            const auto& a = rep.levels[i];
            const auto& b = rep.levels[i + 1];
            // CI-adjusted: the finer level must sit at or below half the coarser one
            if (std::abs(b.mean_residual) - b.half_width >
                0.5 * (std::abs(a.mean_residual) + a.half_width))
                rep.shrink_ok = false;
        }
    }
    rep.pass = rep.det_residual <= rep.det_tolerance && rep.envelope_ok && rep.shrink_ok;
    return rep;
}

FracRegReport run_fracreg(const RunConfig& cfg) {
    RunConfig local = cfg;
    local.dt = 0.0;
    SolverConfig sc = build_solver_config(local);
    sc.track_gradient_stats = true;
    sc.snapshot_times.clear();
    for (int i = 1; i <= 32; ++i) sc.snapshot_times.push_back(cfg.T * i / 32.0);
    const GridFunction xi = build_initial(cfg.initial, cfg.dim, cfg.M);
    const int steps = static_cast<int>(std::llround(sc.t_final / sc.dt));

    std::vector<Trajectory> ens(cfg.fracreg_count);
    parallel_for_index(cfg.fracreg_count, cfg.jobs, [&](int s) {
        const auto path = NoisePath::sample(cfg.seed + static_cast<std::uint64_t>(s),
                                            sc.coeffs.modes(), sc.dt, std::max(steps, 1));
        ens[s] = run(xi, sc, path);
    });

    std::vector<double> eps;
    for (double mult : cfg.fracreg_eps_over_h) eps.push_back(mult / cfg.M);
    return frac_regularity_check(ens, build_family(cfg), eps);
}

PhiStabilityReport run_phistab(const RunConfig& cfg) {
    const NonlinearityFamily fam = build_family(cfg);
    const CoefficientSet coeffs = build_coefficients(cfg);
    const GridFunction xi = build_initial(cfg.initial, cfg.dim, cfg.M);

    auto make_cfg = [&](const RegularizedNonlinearity& reg) {
        SolverConfig sc;
        sc.nonlinearity = reg;
        sc.coeffs = coeffs;
        sc.t_final = cfg.T;
        sc.cfl_safety = cfg.cfl_safety;
        sc.dt = 1.0;
        const double budget =
            cfl_budget(sc, cfg.M, cfg.dim, std::max(2.0, static_cast<double>(reg.index())));
        sc.dt = snap_time_step(cfg.T, budget);
        for (int i = 1; i <= 32; ++i) sc.snapshot_times.push_back(cfg.T * i / 32.0);
        return sc;
    };
    return phi_stability_experiment(fam, cfg.phistab_n, make_cfg, xi,
                                    {cfg.seed, cfg.phistab_count, cfg.jobs});
}

std::string svg_from_report(const json& report, const std::string& title) {
    std::vector<SvgSeries> series;
    if (report.contains("series"))
        for (const auto& s : report["series"]) {
            SvgSeries sv;
            sv.label = s.value("label", "series");
            sv.x = s["x"].get<std::vector<double>>();
            sv.y = s["y"].get<std::vector<double>>();
            if (s.contains("ylo")) sv.ylo = s["ylo"].get<std::vector<double>>();
            if (s.contains("yhi")) sv.yhi = s["yhi"].get<std::vector<double>>();
            series.push_back(std::move(sv));
        }
    SvgOptions opts;
    opts.title = title;
    opts.log_x = report.value("log_log", false);
    opts.log_y = report.value("log_log", false);
    return render_line_chart(series, opts);
}

int run_experiments(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
    Manifest manifest(cfg.out_dir);
    std::vector<std::string> failed;

    auto emit = [&](const std::string& name, const json& j, bool pass) {
        manifest.write_report(name + ".json", j);
        if (cfg.write_svg) manifest.write_file(name + ".svg", svg_from_report(j, name));
        log << (pass ? "[PASS] " : "[FAIL] ") << name << "\n";
        if (!pass) failed.push_back(name);
    };

    for (const auto& name : cfg.experiments) {
        if (name == "contraction") {
            const auto rep = contraction_experiment(make_contraction_setup(cfg));
            emit(name, to_json(rep), rep.pass);
        } else if (name == "moments") {
            const auto rep = run_moments(cfg);
            emit(name, to_json(rep), rep.pass);
        } else if (name == "entropy") {
            const auto rep = run_entropy_levels(cfg);
            emit(name, to_json(rep), rep.pass);
        } else if (name == "fracreg") {
            const auto rep = run_fracreg(cfg);
            emit(name, to_json(rep), rep.pass);
        } else if (name == "phistab") {
            const auto rep = run_phistab(cfg);
            emit(name, to_json(rep), rep.pass);
        } else if (name == "mcf-consistency") {
            McfConfig mc;
            mc.h_modes.clear();  // consistency check runs the deterministic flow
            mc.n = cfg.mcf_n;
            mc.M = cfg.M;
            mc.t_final = 0.001;
            SolverConfig sc = make_mcf_solver_config(mc);
            sc.dt = snap_time_step(sc.t_final, std::min(sc.dt, 1e-6));
            sc.record_dense = true;
            const GridFunction xi = build_initial(cfg.initial, 1, cfg.M);
            const NoisePath path = NoisePath::sample(cfg.seed, 0, sc.dt, 1);
            const auto traj = run(xi, sc, path);
            const auto rep = curvature_consistency(traj);
            const bool pass = rep.max_residual <= rep.fitted_c * (rep.h * rep.h + rep.dt_gap) + 1e-12;

            json j = to_json(rep);
            j["pass"] = pass;
            emit(name, j, pass);

            const auto curve = reconstruct_curve(traj, 0.0);
            if (cfg.write_csv) {
                std::ostringstream tmp;
                write_trajectory_csv(curve.curve, std::filesystem::path(cfg.out_dir) / "mcf_curve.csv",
                                     0.5 / cfg.M);
                manifest.record("mcf_curve.csv",
                                read_text_file(std::filesystem::path(cfg.out_dir) / "mcf_curve.csv"));
            }
            if (cfg.write_svg) {
                std::vector<SvgSeries> overlay;
                const size_t count = curve.curve.snapshots.size();
                const size_t stride = std::max<size_t>(1, count / 6);
                for (size_t s = 0; s < count; s += stride) {
                    SvgSeries sv;
                    sv.label = "t=" + std::to_string(curve.curve.times[s]);
                    const auto& v = curve.curve.snapshots[s];
                    for (int i = 0; i < v.cells_per_axis(); ++i) {
                        sv.x.push_back((i + 0.5) * v.spacing());
                        sv.y.push_back(v[i]);
                    }
                    overlay.push_back(std::move(sv));
                }
                SvgOptions opts;
                opts.title = "evolving graph";
                opts.x_label = "x";
                opts.y_label = "v";
                manifest.write_file("mcf_curve.svg", render_line_chart(overlay, opts));
            }
        } else {
            err << "unknown experiment: " << name << "\n";
            failed.push_back(name);
        }
    }

    if (cfg.write_csv && !cfg.experiments.empty()) {
        // one representative trajectory dump
        SolverConfig sc = build_solver_config(cfg);
        const GridFunction xi = build_initial(cfg.initial, cfg.dim, cfg.M);
        const int steps = static_cast<int>(std::llround(sc.t_final / sc.dt));
        const auto path = NoisePath::sample(cfg.seed, sc.coeffs.modes(), sc.dt, std::max(steps, 1));
        const auto traj = run(xi, sc, path);
        write_trajectory_csv(traj, std::filesystem::path(cfg.out_dir) / "trajectory.csv");
        manifest.record("trajectory.csv",
                        read_text_file(std::filesystem::path(cfg.out_dir) / "trajectory.csv"));
        write_trajectory_binary(traj, std::filesystem::path(cfg.out_dir) / "trajectory.bin");
        manifest.record("trajectory.bin",
                        read_text_file(std::filesystem::path(cfg.out_dir) / "trajectory.bin"));
    }

    manifest.finalize();
    if (!failed.empty()) {
        err << "failed experiments:";
        for (const auto& f : failed) err << ' ' << f;
        err << "\n";
        return 1;
    }
    return 0;
}

}  // namespace entroflow
