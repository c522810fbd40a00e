#include "entroflow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace entroflow {

namespace {

/// Per-grid compilation of the separable coefficient data: every spatial
/// factor is sampled once, so the inner loop touches only flat arrays and
/// the radial factor of the current cell value.
struct StepKernel {
    int dim = 1;
    int M = 0;
    Eigen::Index cells = 0;
    double h = 0.0;
    int modes = 0;

    RadialProfile g;
    // noise spatial factors H[k*dim + i][cell]
    std::vector<ArrayXd> Hk;
    // 0.5 * sum_k H_i H_j  (Gram spatial part), indexed i*dim+j
    std::vector<ArrayXd> A2;
    // sum_k H_i div H_k, per component
    std::vector<ArrayXd> Bv;
    // flux terms: spatial w per (component, term) with its radial factor
    std::vector<std::vector<std::pair<ArrayXd, RadialProfile>>> flux;

    double max_a2_row = 0.0;

    // wrap tables
    std::vector<int> next, prev;

    // scratch
    ArrayXd phi, gval, gder, noise_amp, fa, fp_total, dxu, dyu;

    StepKernel(const CoefficientSet& cs, int dim_, int M_) : dim(dim_), M(M_) {
        cells = dim == 1 ? M : static_cast<Eigen::Index>(M) * M;
        h = 1.0 / M;
        modes = cs.modes();
        g = cs.radial();

        auto node = [&](Eigen::Index c) {
            if (dim == 1) return Vec2(c * h, 0.0);
            return Vec2(static_cast<double>(c % M) * h, static_cast<double>(c / M) * h);
        };

        Hk.assign(static_cast<size_t>(modes) * dim, ArrayXd::Zero(cells));
        for (int k = 0; k < modes; ++k)
            for (int i = 0; i < dim; ++i)
                for (Eigen::Index c = 0; c < cells; ++c)
                    Hk[static_cast<size_t>(k) * dim + i][c] = cs.H(i, k, node(c));

        A2.assign(static_cast<size_t>(dim) * dim, ArrayXd::Zero(cells));
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                ArrayXd acc = ArrayXd::Zero(cells);
                for (int k = 0; k < modes; ++k)
                    acc += Hk[static_cast<size_t>(k) * dim + i] * Hk[static_cast<size_t>(k) * dim + j];
                A2[static_cast<size_t>(i) * dim + j] = 0.5 * acc;
            }
        for (Eigen::Index c = 0; c < cells; ++c)
            for (int i = 0; i < dim; ++i) {
                double row = 0.0;
                for (int j = 0; j < dim; ++j) row += std::abs(A2[static_cast<size_t>(i) * dim + j][c]);
                max_a2_row = std::max(max_a2_row, row);
            }

        Bv.assign(dim, ArrayXd::Zero(cells));
        for (int i = 0; i < dim; ++i)
            for (Eigen::Index c = 0; c < cells; ++c) {
                double s = 0.0;
                for (int k = 0; k < modes; ++k) s += cs.H(i, k, node(c)) * cs.divH(k, node(c));
                Bv[i][c] = s;
            }

        flux.resize(dim);
        for (int i = 0; i < dim; ++i)
            for (const auto& term : cs.flux_terms()[i]) {
                ArrayXd w(cells);
                for (Eigen::Index c = 0; c < cells; ++c) w[c] = term.w.value(node(c));
                flux[i].emplace_back(std::move(w), term.q);
            }

        next.resize(M);
        prev.resize(M);
        for (int i = 0; i < M; ++i) {
            next[i] = (i + 1) % M;
            prev[i] = (i + M - 1) % M;
        }

        phi.resize(cells);
        gval.resize(cells);
        gder.resize(cells);
        noise_amp.resize(cells);
        fa.resize(cells);
        fp_total.resize(cells);
        if (dim == 2) {
            dxu.resize(cells);
            dyu.resize(cells);
        }
    }

    double sup_a(double u_range) const {
        const double gp = g.deriv_sup(u_range);
        return max_a2_row * gp * gp;
    }

    /// u_next = u + dt * (lap Phi_n(u) + div(a grad u + b + f)) + div(sigma) dW
    void advance(const RegularizedNonlinearity& nl, const ArrayXd& u, double dt, const double* dW,
                 ArrayXd& out) {
        const Eigen::Index n = cells;
        for (Eigen::Index c = 0; c < n; ++c) {
            const double uc = u[c];
            phi[c] = nl.phi_n(uc);
            gval[c] = g.value(uc);
            gder[c] = g.deriv(uc);
        }

        // sum_k sigma^{ik} dW^k at nodes, folded into one array per component
        const bool noisy = modes > 0;

        if (dim == 1) {
            const double inv_h2 = 1.0 / (h * h);
            const double inv_2h = 0.5 / h;

            // centered du/dx and node fluxes
            for (int c = 0; c < M; ++c) {
                const double du = (u[next[c]] - u[prev[c]]) * inv_2h;
                const double a_node = A2[0][c] * gder[c] * gder[c];
                // b + f = G + b/2
                double p = 0.5 * Bv[0][c] * gder[c] * gval[c];
                for (const auto& [w, q] : flux[0]) p += w[c] * q.value(u[c]);
                fa[c] = a_node * du + p;
            }
            if (noisy) {
                for (int c = 0; c < M; ++c) {
                    double s = 0.0;
                    for (int k = 0; k < modes; ++k) s += Hk[static_cast<size_t>(k)][c] * dW[k];
                    noise_amp[c] = gval[c] * s;
                }
            }
            for (int c = 0; c < M; ++c) {
                const int cp = next[c], cm = prev[c];
                double v = u[c] +
                           dt * ((phi[cp] - 2.0 * phi[c] + phi[cm]) * inv_h2 +
                                 (fa[cp] - fa[cm]) * inv_2h);
                if (noisy) v += (noise_amp[cp] - noise_amp[cm]) * inv_2h;
                out[c] = v;
            }
            return;
        }

        // dim == 2
        const double inv_h2 = 1.0 / (h * h);
        const double inv_2h = 0.5 / h;
        auto idx = [&](int ix, int iy) { return static_cast<Eigen::Index>(iy) * M + ix; };

        for (int iy = 0; iy < M; ++iy)
            for (int ix = 0; ix < M; ++ix) {
                const Eigen::Index c = idx(ix, iy);
                dxu[c] = (u[idx(next[ix], iy)] - u[idx(prev[ix], iy)]) * inv_2h;
                dyu[c] = (u[idx(ix, next[iy])] - u[idx(ix, prev[iy])]) * inv_2h;
            }
        // per-component node fluxes: fa = component 0, fp_total = component 1
        for (Eigen::Index c = 0; c < n; ++c) {
            const double gp2 = gder[c] * gder[c];
            double f0 = gp2 * (A2[0][c] * dxu[c] + A2[1][c] * dyu[c]);
            double f1 = gp2 * (A2[2][c] * dxu[c] + A2[3][c] * dyu[c]);
            f0 += 0.5 * Bv[0][c] * gder[c] * gval[c];
            f1 += 0.5 * Bv[1][c] * gder[c] * gval[c];
            for (const auto& [w, q] : flux[0]) f0 += w[c] * q.value(u[c]);
            for (const auto& [w, q] : flux[1]) f1 += w[c] * q.value(u[c]);
            fa[c] = f0;
            fp_total[c] = f1;
        }
        ArrayXd* noise0 = nullptr;
        ArrayXd* noise1 = nullptr;
        static thread_local ArrayXd na0, na1;
        if (noisy) {
            na0.resize(n);
            na1.resize(n);
            for (Eigen::Index c = 0; c < n; ++c) {
                double s0 = 0.0, s1 = 0.0;
                for (int k = 0; k < modes; ++k) {
                    s0 += Hk[static_cast<size_t>(k) * 2][c] * dW[k];
                    s1 += Hk[static_cast<size_t>(k) * 2 + 1][c] * dW[k];
                }
                na0[c] = gval[c] * s0;
                na1[c] = gval[c] * s1;
            }
            noise0 = &na0;
            noise1 = &na1;
        }
        for (int iy = 0; iy < M; ++iy)
            for (int ix = 0; ix < M; ++ix) {
                const Eigen::Index c = idx(ix, iy);
                const Eigen::Index cxp = idx(next[ix], iy), cxm = idx(prev[ix], iy);
                const Eigen::Index cyp = idx(ix, next[iy]), cym = idx(ix, prev[iy]);
                const double lap =
                    (phi[cxp] + phi[cxm] + phi[cyp] + phi[cym] - 4.0 * phi[c]) * inv_h2;
                double v = u[c] + dt * (lap + (fa[cxp] - fa[cxm]) * inv_2h +
                                        (fp_total[cyp] - fp_total[cym]) * inv_2h);
                if (noisy)
                    v += ((*noise0)[cxp] - (*noise0)[cxm]) * inv_2h +
                         ((*noise1)[cyp] - (*noise1)[cym]) * inv_2h;
                out[c] = v;
            }
    }
};

double budget_from(const SolverConfig& cfg, const StepKernel& kern, double u_range) {
    const int d = kern.dim;
    const double h2 = kern.h * kern.h;
    const double denom = 2.0 * d * cfg.nonlinearity.phi_prime_sup() + d * d * kern.sup_a(u_range);
    return cfg.cfl_safety * h2 / std::max(denom, 1e-300);
}

void check_cfl(const SolverConfig& cfg, const StepKernel& kern, double u_range, int step_index) {
    const double budget = budget_from(cfg, kern, std::max(u_range, 1.0));
    if (cfg.dt > budget) {
        std::ostringstream os;
        os << "time step rejected at step " << step_index << ": dt = " << cfg.dt
           << " exceeds the stability budget " << budget << " (sup|u| = " << u_range
           << "); reduce dt";
        throw CflError(os.str());
    }
}

/// forward-difference gradient accumulators for the moment/regularity diagnostics
void accumulate_gradients(const GridFunction& u, const RegularizedNonlinearity& nl, double dt,
                          Trajectory& traj) {
    const int M = u.cells_per_axis();
    const double h = u.spacing();
    const double vol = u.cell_volume();
    const auto& base_bracket = nl.base().a_bracket;
    double sum_sq = 0.0, sum_abs = 0.0;
    if (u.dim() == 1) {
        for (int c = 0; c < M; ++c) {
            const int cp = (c + 1) % M;
            const double dn = (nl.a_n_bracket(u[cp]) - nl.a_n_bracket(u[c])) / h;
            const double db = (base_bracket(u[cp]) - base_bracket(u[c])) / h;
            sum_sq += dn * dn;
            sum_abs += std::abs(db);
        }
    } else {
        auto idx = [&](int ix, int iy) { return static_cast<Eigen::Index>(iy) * M + ix; };
        for (int iy = 0; iy < M; ++iy)
            for (int ix = 0; ix < M; ++ix) {
                const Eigen::Index c = idx(ix, iy);
                const double vx_n = (nl.a_n_bracket(u[idx((ix + 1) % M, iy)]) - nl.a_n_bracket(u[c])) / h;
                const double vy_n = (nl.a_n_bracket(u[idx(ix, (iy + 1) % M)]) - nl.a_n_bracket(u[c])) / h;
                const double vx_b = (base_bracket(u[idx((ix + 1) % M, iy)]) - base_bracket(u[c])) / h;
                const double vy_b = (base_bracket(u[idx(ix, (iy + 1) % M)]) - base_bracket(u[c])) / h;
                sum_sq += vx_n * vx_n + vy_n * vy_n;
                sum_abs += std::hypot(vx_b, vy_b);
            }
    }
    traj.grad_bracket_l2_sq_qt += dt * vol * sum_sq;
    traj.grad_bracket_l1_qt += dt * vol * sum_abs;
}

void record_scalars(const GridFunction& u, double t, double m_exp, Trajectory& traj) {
    traj.diag_times.push_back(t);
    traj.mass_series.push_back(u.mass());
    const double l2 = u.l2_norm();
    traj.l2_series.push_back(l2);
    const double lm = u.cell_volume() * u.values().abs().pow(m_exp + 1.0).sum();
    traj.lmp1_series.push_back(std::pow(lm, 1.0 / (m_exp + 1.0)));
    traj.sup_l2_sq = std::max(traj.sup_l2_sq, l2 * l2);
    traj.sup_lmp1_pow = std::max(traj.sup_lmp1_pow, lm);
}

}  // namespace

double cfl_budget(const SolverConfig& cfg, int cells_per_axis, int dim, double u_range) {
    StepKernel kern(cfg.coeffs, dim, cells_per_axis);
    return budget_from(cfg, kern, u_range);
}

GridFunction step(const GridFunction& u, const SolverConfig& cfg, const Eigen::ArrayXd& dW) {
    if (cfg.coeffs.modes() != dW.size())
        throw std::invalid_argument("step: increment count does not match mode count");
    StepKernel kern(cfg.coeffs, u.dim(), u.cells_per_axis());
    check_cfl(cfg, kern, u.max_abs(), 0);
    GridFunction out(u.dim(), u.cells_per_axis());
    kern.advance(cfg.nonlinearity, u.values(), cfg.dt, dW.data(), out.values());
    if (!out.all_finite() || out.max_abs() > cfg.blowup_guard) {
        std::ostringstream os;
        os << "blow-up at step 0: max|u| = " << out.max_abs();
        throw BlowUpError(os.str(), 0, out.max_abs());
    }
    return out;
}

namespace {

/// Shared driver for single and coupled runs.
std::vector<Trajectory> run_many(const std::vector<GridFunction>& initial, const SolverConfig& cfg,
                                 const NoisePath& path) {
    if (initial.empty()) return {};
    const int dim = initial.front().dim();
    const int M = initial.front().cells_per_axis();
    for (const auto& xi : initial)
        if (xi.dim() != dim || xi.cells_per_axis() != M)
            throw std::invalid_argument("run: initial states must share one grid");
    if (cfg.coeffs.dim() != dim)
        throw std::invalid_argument("run: coefficient dimension does not match the grid");
    if (cfg.coeffs.modes() != path.modes())
        throw std::invalid_argument("run: path mode count does not match the coefficients");

    const int steps = cfg.t_final > 0.0
                          ? static_cast<int>(std::llround(cfg.t_final / cfg.dt))
                          : 0;
    if (cfg.t_final > 0.0) {
        if (steps < 1 || std::abs(steps * cfg.dt - cfg.t_final) > 1e-9 * std::max(1.0, cfg.t_final))
            throw std::invalid_argument("run: t_final must be an integer multiple of dt");
        if (cfg.coeffs.modes() > 0 && path.steps() < steps)
            throw std::invalid_argument("run: noise path does not cover [0, t_final]");
        if (path.dt() > 0 && cfg.coeffs.modes() > 0 &&
            std::abs(path.dt() - cfg.dt) > 1e-12 * cfg.dt)
            throw std::invalid_argument("run: path dt does not match solver dt");
    }
    if (cfg.record_dense &&
        static_cast<double>(steps + 1) * static_cast<double>(M) * (dim == 2 ? M : 1) > 2e8)
        throw std::invalid_argument("run: dense recording would exceed the memory budget");

    StepKernel kern(cfg.coeffs, dim, M);
    const double m_exp = cfg.nonlinearity.base().m;
    auto shared_cfg = std::make_shared<const SolverConfig>(cfg);

    std::vector<double> wanted = cfg.snapshot_times;
    std::sort(wanted.begin(), wanted.end());

    std::vector<Trajectory> out(initial.size());
    std::vector<ArrayXd> state, scratch;
    for (size_t q = 0; q < initial.size(); ++q) {
        Trajectory& traj = out[q];
        traj.config = shared_cfg;
        traj.step_dt = cfg.dt;
        GridFunction u0 = truncate_initial(initial[q], cfg.effective_truncation());
        traj.times.push_back(0.0);
        traj.snapshots.push_back(u0);
        record_scalars(u0, 0.0, m_exp, traj);
        if (cfg.record_dense) traj.dense.push_back(u0);
        state.push_back(u0.values());
        scratch.push_back(ArrayXd::Zero(u0.size()));
    }

    std::vector<size_t> next_snapshot(initial.size(), 0);
    ArrayXd dW = ArrayXd::Zero(std::max(cfg.coeffs.modes(), 1));

    for (int s = 0; s < steps; ++s) {
        double sup_u = 0.0;
        for (const auto& v : state) sup_u = std::max(sup_u, v.abs().maxCoeff());
        check_cfl(cfg, kern, sup_u, s);
        for (int k = 0; k < cfg.coeffs.modes(); ++k) dW[k] = path.increment(s, k);
        const double t_next = (s + 1) * cfg.dt;

        for (size_t q = 0; q < state.size(); ++q) {
            Trajectory& traj = out[q];
            if (cfg.track_gradient_stats) {
                GridFunction view = GridFunction::from_values(dim, M, state[q]);
                accumulate_gradients(view, cfg.nonlinearity, cfg.dt, traj);
            }
            kern.advance(cfg.nonlinearity, state[q], cfg.dt, dW.data(), scratch[q]);
            std::swap(state[q], scratch[q]);

            const double sup_after = state[q].abs().maxCoeff();
            if (!state[q].isFinite().all() || sup_after > cfg.blowup_guard) {
                std::ostringstream os;
                os << "blow-up at step " << s << ": max|u| = " << sup_after;
                throw BlowUpError(os.str(), s, sup_after);
            }

            GridFunction u_now = GridFunction::from_values(dim, M, state[q]);
            record_scalars(u_now, t_next, m_exp, traj);
            if (cfg.record_dense) traj.dense.push_back(u_now);

            bool want = s + 1 == steps;  // final state always recorded
            while (next_snapshot[q] < wanted.size() && wanted[next_snapshot[q]] <= t_next + 1e-12) {
                ++next_snapshot[q];
                want = true;
            }
            if (want) {
                traj.times.push_back(t_next);
                traj.snapshots.push_back(std::move(u_now));
            }
        }
    }
    return out;
}

}  // namespace

Trajectory run(const GridFunction& xi, const SolverConfig& cfg, const NoisePath& path) {
    return run_many({xi}, cfg, path).front();
}

std::pair<Trajectory, Trajectory> run_coupled(const GridFunction& xi_a, const GridFunction& xi_b,
                                              const SolverConfig& cfg, const NoisePath& path) {
    auto both = run_many({xi_a, xi_b}, cfg, path);
    return {std::move(both[0]), std::move(both[1])};
}

}  // namespace entroflow
