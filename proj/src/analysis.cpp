#include "entroflow/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

namespace entroflow {

// ---------------------------------------------------------------------------
// mollifier and entropy pair
// ---------------------------------------------------------------------------

namespace {

double bump_raw(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double s = 2.0 * t - 1.0;
    return std::exp(-1.0 / (1.0 - s * s));
}

double bump_norm() {
    static const double z = [] {
        const int n = 8192;
        double acc = 0.0;
        const double dx = 1.0 / n;
        for (int i = 0; i < n; ++i) {
            const double a = i * dx;
            acc += dx / 6.0 * (bump_raw(a) + 4.0 * bump_raw(a + 0.5 * dx) + bump_raw(a + dx));
        }
        return acc;
    }();
    return z;
}

}  // namespace

double mollifier_rho(double t) { return bump_raw(t) / bump_norm(); }

namespace {

struct BumpTables {
    HalfLineTable cdf;      // C(t) = integral_0^t rho on [0,1], constant 1 beyond
    HalfLineTable cdf_int;  // Q(t) = integral_0^t C

    BumpTables() {
        const int n = 4096;
        const double dx = 1.0 / n;
        ArrayXd c(n + 1), q(n + 1);
        c[0] = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a = i * dx;
            c[i + 1] = c[i] + dx / 6.0 *
                                  (mollifier_rho(a) + 4.0 * mollifier_rho(a + 0.5 * dx) +
                                   mollifier_rho(a + dx));
        }
        const double total = c[n];  // force exact saturation of eta' at 1
        for (int i = 0; i <= n; ++i) c[i] /= total;
        q[0] = 0.0;
        for (int i = 0; i < n; ++i) q[i + 1] = q[i] + 0.5 * dx * (c[i] + c[i + 1]);
        cdf = HalfLineTable(Parity::Odd, dx, c, 0.0);
        cdf_int = HalfLineTable(Parity::Odd, dx, q, 1.0);
    }
};

const BumpTables& bump_tables() {
    static const BumpTables t;
    return t;
}

}  // namespace

EntropyPair::EntropyPair(double delta) : delta_(delta) {
    if (delta <= 0.0) throw std::invalid_argument("EntropyPair: delta must be positive");
}

double EntropyPair::eta(double r) const {
    const double y = std::abs(r);
    if (y >= delta_) return delta_ * bump_tables().cdf_int(1.0) + (y - delta_);
    return delta_ * bump_tables().cdf_int(y / delta_);
}

double EntropyPair::eta_prime(double r) const {
    const double y = std::abs(r);
    const double c = y >= delta_ ? 1.0 : bump_tables().cdf(y / delta_);
    return r < 0 ? -c : c;
}

double EntropyPair::eta_dprime(double r) const {
    return mollifier_rho(std::abs(r) / delta_) / delta_;
}

GridFunction mollify_periodic(const GridFunction& u, double theta) {
    if (theta <= 0.0) return u;
    const int M = u.cells_per_axis();
    const double h = u.spacing();
    const int w = std::max(1, static_cast<int>(std::floor(theta / h)));
    std::vector<double> weights(2 * w + 1);
    double total = 0.0;
    for (int o = -w; o <= w; ++o) {
        // centered remap of the (0,1) bump onto (-theta, theta)
        weights[o + w] = mollifier_rho(0.5 * (o * h / theta + 1.0));
        total += weights[o + w];
    }
    for (auto& x : weights) x /= total;

    auto convolve_axis = [&](const GridFunction& in, int axis) {
        GridFunction res = in;
        if (u.dim() == 1) {
            for (int c = 0; c < M; ++c) {
                double s = 0.0;
                for (int o = -w; o <= w; ++o) s += weights[o + w] * in.at_wrapped(c + o);
                res[c] = s;
            }
            return res;
        }
        for (int iy = 0; iy < M; ++iy)
            for (int ix = 0; ix < M; ++ix) {
                double s = 0.0;
                for (int o = -w; o <= w; ++o)
                    s += weights[o + w] *
                         (axis == 0 ? in.at_wrapped(ix + o, iy) : in.at_wrapped(ix, iy + o));
                res[res.index(ix, iy)] = s;
            }
        return res;
    };
    GridFunction out = convolve_axis(u, 0);
    if (u.dim() == 2) out = convolve_axis(out, 1);
    return out;
}

// ---------------------------------------------------------------------------
// test function
// ---------------------------------------------------------------------------

TestFunction::TestFunction(double T, double support_frac, double space_amp, double space_freq,
                           int dim)
    : T_(T), tau_(support_frac * T), amp_(space_amp), freq_(space_freq), dim_(dim) {
    if (support_frac <= 0.0 || support_frac >= 1.0)
        throw std::invalid_argument("TestFunction: support fraction must lie in (0,1)");
    if (std::abs(space_amp) >= 1.0)
        throw std::invalid_argument("TestFunction: |space amplitude| must stay below 1");
}

double TestFunction::time(double t) const {
    const double s = t / tau_;
    if (s >= 1.0 || t < 0.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double TestFunction::time_deriv(double t) const {
    const double s = t / tau_;
    if (s >= 1.0 || t < 0.0) return 0.0;
    const double q = 1.0 - s * s;
    return time(t) * (-2.0 * s / (q * q)) / tau_;
}

namespace {
inline double axis_val(double a, double k, double x) { return 1.0 + a * std::cos(kTwoPi * k * x); }
inline double axis_d1(double a, double k, double x) {
    return -a * kTwoPi * k * std::sin(kTwoPi * k * x);
}
inline double axis_d2(double a, double k, double x) {
    return -a * kTwoPi * k * kTwoPi * k * std::cos(kTwoPi * k * x);
}
}  // namespace

double TestFunction::space(const Vec2& x) const {
    double v = axis_val(amp_, freq_, x[0]);
    if (dim_ == 2) v *= axis_val(amp_, freq_, x[1]);
    return v;
}

double TestFunction::space_grad(const Vec2& x, int l) const {
    if (dim_ == 1) return l == 0 ? axis_d1(amp_, freq_, x[0]) : 0.0;
    return (l == 0) ? axis_d1(amp_, freq_, x[0]) * axis_val(amp_, freq_, x[1])
                    : axis_val(amp_, freq_, x[0]) * axis_d1(amp_, freq_, x[1]);
}

double TestFunction::space_hess(const Vec2& x, int l, int m) const {
    if (dim_ == 1) return (l == 0 && m == 0) ? axis_d2(amp_, freq_, x[0]) : 0.0;
    if (l == m)
        return l == 0 ? axis_d2(amp_, freq_, x[0]) * axis_val(amp_, freq_, x[1])
                      : axis_val(amp_, freq_, x[0]) * axis_d2(amp_, freq_, x[1]);
    return axis_d1(amp_, freq_, x[0]) * axis_d1(amp_, freq_, x[1]);
}

// ---------------------------------------------------------------------------
// ensemble statistics
// ---------------------------------------------------------------------------

ScalarStats reduce_scalar(const std::vector<double>& xs) {
    ScalarStats st;
    st.count = static_cast<int>(xs.size());
    if (xs.empty()) return st;
    double sum = 0.0;
    for (double x : xs) sum += x;
    st.mean = sum / st.count;
    if (st.count > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - st.mean) * (x - st.mean);
        const double sd = std::sqrt(ss / (st.count - 1));
        st.half_width = 1.959963984540054 * sd / std::sqrt(static_cast<double>(st.count));
    }
    return st;
}

SeriesStats reduce_series(const std::vector<double>& t,
                          const std::vector<std::vector<double>>& per_seed) {
    SeriesStats out;
    out.t = t;
    out.mean.assign(t.size(), 0.0);
    out.half_width.assign(t.size(), 0.0);
    for (size_t i = 0; i < t.size(); ++i) {
        std::vector<double> xs;
        xs.reserve(per_seed.size());
        for (const auto& s : per_seed)
            if (i < s.size()) xs.push_back(s[i]);
        const auto st = reduce_scalar(xs);
        out.mean[i] = st.mean;
        out.half_width[i] = st.half_width;
    }
    return out;
}

void parallel_for_index(int count, int jobs, const std::function<void(int)>& body) {
    if (jobs <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> cursor{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (true) {
            const int i = cursor.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min(jobs, count);
    pool.reserve(nthreads);
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

double l1_distance(const GridFunction& u, const GridFunction& v) {
    if (!u.same_grid(v)) throw std::invalid_argument("l1_distance: grid mismatch");
    return u.cell_volume() * (u.values() - v.values()).abs().sum();
}

double compute_r_lambda(const RegularizedNonlinearity& a, const RegularizedNonlinearity& b,
                        double lambda, double r_max, double step) {
    double r = 0.0;
    while (r <= r_max) {
        if (std::abs(a.a_n(r) - b.a_n(r)) > lambda) return r;
        r += step;
    }
    return r_max;
}

// ---------------------------------------------------------------------------
// contraction experiment
// ---------------------------------------------------------------------------

ContractionReport contraction_experiment(const ContractionSetup& setup) {
    ContractionReport rep;
    rep.count = setup.ensemble.count;
    rep.denom = l1_distance(setup.xi_a, setup.xi_b);

    const int steps = static_cast<int>(std::llround(setup.cfg.t_final / setup.cfg.dt));
    std::vector<std::vector<double>> dists(setup.ensemble.count);
    std::vector<std::vector<double>> seed_times(setup.ensemble.count);
    std::vector<char> ok(setup.ensemble.count, 0);

    parallel_for_index(setup.ensemble.count, setup.ensemble.jobs, [&](int s) {
        const auto path = NoisePath::sample(setup.ensemble.seed_base + s, setup.cfg.coeffs.modes(),
                                            setup.cfg.dt, std::max(steps, 1));
        try {
            auto [ta, tb] = run_coupled(setup.xi_a, setup.xi_b, setup.cfg, path);
            std::vector<double> d(ta.snapshots.size());
            for (size_t i = 0; i < ta.snapshots.size(); ++i)
                d[i] = l1_distance(ta.snapshots[i], tb.snapshots[i]);
            dists[s] = std::move(d);
            seed_times[s] = ta.times;
            ok[s] = 1;
        } catch (const BlowUpError&) {
            ok[s] = 0;
        }
    });

    std::vector<std::vector<double>> kept;
    std::vector<double> times;
    for (int s = 0; s < setup.ensemble.count; ++s) {
        if (ok[s]) {
            if (times.empty()) times = seed_times[s];
            kept.push_back(std::move(dists[s]));
        } else {
            ++rep.excluded;
        }
    }
    if (kept.empty()) {
        rep.pass = false;
        rep.note = "all paths blew up";
        return rep;
    }
    rep.times = times;

    if (rep.denom == 0.0) {
        rep.degenerate_zero = true;
        double worst = 0.0;
        for (const auto& d : kept)
            for (double v : d) worst = std::max(worst, v);
        rep.ratio.t = times;
        rep.ratio.mean.assign(times.size(), 0.0);
        rep.ratio.half_width.assign(times.size(), 0.0);
        rep.pass =
            worst == 0.0 && rep.excluded <= setup.max_excluded_frac * setup.ensemble.count;
        rep.note = "identical initial data; coupled distance stays zero";
        return rep;
    }

    for (auto& d : kept)
        for (double& v : d) v /= rep.denom;
    rep.ratio = reduce_series(times, kept);

    double lsq_num = 0.0, lsq_den = 0.0;
    bool blowup_flag = false;
    for (size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        const double mean = rep.ratio.mean[i];
        const double upper = mean + rep.ratio.half_width[i];
        const double lower = mean - rep.ratio.half_width[i];
        rep.sup_ratio_upper = std::max(rep.sup_ratio_upper, upper);
        if (t <= 0.0) continue;
        if (mean > 0.0) {
            lsq_num += t * std::log(mean);
            lsq_den += t * t;
        }
        if (upper > 0.0) rep.c_hat_envelope = std::max(rep.c_hat_envelope, std::log(upper) / t);
        if (lower > std::exp(setup.c_hat_limit * t)) blowup_flag = true;
    }
    rep.c_hat_lsq = lsq_den > 0.0 ? lsq_num / lsq_den : 0.0;
    rep.bound = std::exp(std::max(rep.c_hat_envelope, 0.0) * setup.cfg.t_final);

    const bool exclusions_ok = rep.excluded <= setup.max_excluded_frac * setup.ensemble.count;
    rep.pass = exclusions_ok && !blowup_flag && rep.c_hat_envelope <= setup.c_hat_limit;
    if (!exclusions_ok) rep.note = "too many excluded paths";
    if (blowup_flag) rep.note = "ratio curve exceeds the admissible envelope";
    return rep;
}

// ---------------------------------------------------------------------------
// moment uniformity
// ---------------------------------------------------------------------------

MomentReport moment_check(
    const std::function<std::pair<SolverConfig, GridFunction>(int, int)>& make_case,
    const std::vector<MomentCase>& matrix, const EnsembleConfig& ensemble, double spread_limit) {
    MomentReport rep;
    rep.spread_limit = spread_limit;

    for (const auto& mc : matrix) {
        auto [cfg, xi] = make_case(mc.n, mc.M);
        cfg.track_gradient_stats = true;
        const int steps = static_cast<int>(std::llround(cfg.t_final / cfg.dt));

        const GridFunction xi_n = truncate_initial(xi, cfg.effective_truncation());
        const double m_exp = cfg.nonlinearity.base().m;
        const double den2 = 1.0 + xi_n.l2_norm() * xi_n.l2_norm();
        const double denm = 1.0 + xi_n.cell_volume() * xi_n.values().abs().pow(m_exp + 1.0).sum();

        std::vector<double> x2(ensemble.count), xm(ensemble.count);
        parallel_for_index(ensemble.count, ensemble.jobs, [&](int s) {
            const auto path = NoisePath::sample(ensemble.seed_base + s, cfg.coeffs.modes(), cfg.dt,
                                                std::max(steps, 1));
            const auto traj = run(xi, cfg, path);
            x2[s] = traj.sup_l2_sq + traj.grad_bracket_l2_sq_qt;
            xm[s] = traj.sup_lmp1_pow;
        });
        const auto s2 = reduce_scalar(x2);
        const auto sm = reduce_scalar(xm);

        MomentCell cell;
        cell.n = mc.n;
        cell.M = mc.M;
        cell.ratio_l2 = s2.mean / den2;
        cell.half_l2 = s2.half_width / den2;
        cell.ratio_lmp1 = sm.mean / denm;
        cell.half_lmp1 = sm.half_width / denm;
        rep.cells.push_back(cell);
    }

    auto spread = [](const std::vector<MomentCell>& cells, auto field) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& c : cells) {
            lo = std::min(lo, field(c));
            hi = std::max(hi, field(c));
        }
        return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    };
    rep.spread_l2 = spread(rep.cells, [](const MomentCell& c) { return c.ratio_l2; });
    rep.spread_lmp1 = spread(rep.cells, [](const MomentCell& c) { return c.ratio_lmp1; });
    rep.pass = rep.spread_l2 <= spread_limit && rep.spread_lmp1 <= spread_limit;
    return rep;
}

// ---------------------------------------------------------------------------
// entropy residual
// ---------------------------------------------------------------------------

namespace {

/// integral_0^r g on [-R, R], cumulative Simpson with cubic lookup
class TwoSidedAntiderivative {
public:
    TwoSidedAntiderivative() = default;
    TwoSidedAntiderivative(const std::function<double(double)>& g, double R, double step) {
        pos_ = build(g, R, step);
        neg_ = build([&g](double s) { return g(-s); }, R, step);
    }
    double operator()(double r) const { return r >= 0.0 ? pos_(r) : -neg_(-r); }

private:
    static HalfLineTable build(const std::function<double(double)>& g, double R, double step) {
        const Eigen::Index n = static_cast<Eigen::Index>(std::ceil(R / step)) + 1;
        ArrayXd v(n);
        v[0] = 0.0;
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            const double a = step * static_cast<double>(i);
            v[i + 1] = v[i] + step / 6.0 * (g(a) + 4.0 * g(a + 0.5 * step) + g(a + step));
        }
        return HalfLineTable(Parity::Odd, step, v, g(step * static_cast<double>(n - 1)));
    }
    HalfLineTable pos_, neg_;
};

struct EntropyGrids {
    int dim = 1, M = 0;
    double h = 0.0, vol = 0.0;
    ArrayXd sp, lap_sp;
    std::vector<ArrayXd> dsp;           // centered first differences per axis
    std::vector<ArrayXd> ddsp;          // second-derivative stencils [l*dim+m]
    std::vector<ArrayXd> gram, gram_x;  // gram[i*dim+j]; gram_x[i] = sum_j d_j gram_ij
    std::vector<ArrayXd> drift;
    ArrayXd drift_div;  // sum_i d_i drift_i
    ArrayXd div_sq;     // sum_k (div H_k)^2
    std::vector<ArrayXd> Hik;
    std::vector<ArrayXd> divHk;
    std::vector<std::vector<ArrayXd>> flux_w, flux_wx;
};

EntropyGrids build_entropy_grids(const CoefficientSet& cs, const TestFunction& tf, int dim, int M) {
    EntropyGrids g;
    g.dim = dim;
    g.M = M;
    g.h = 1.0 / M;
    g.vol = dim == 1 ? g.h : g.h * g.h;
    const Eigen::Index cells = dim == 1 ? M : static_cast<Eigen::Index>(M) * M;

    auto node = [&](Eigen::Index c) {
        if (dim == 1) return Vec2(c * g.h, 0.0);
        return Vec2(static_cast<double>(c % M) * g.h, static_cast<double>(c / M) * g.h);
    };
    auto wrap = [&](int i) { return (i % M + M) % M; };
    auto idx = [&](int ix, int iy) {
        return dim == 1 ? static_cast<Eigen::Index>(wrap(ix))
                        : static_cast<Eigen::Index>(wrap(iy)) * M + wrap(ix);
    };

    g.sp.resize(cells);
    for (Eigen::Index c = 0; c < cells; ++c) g.sp[c] = tf.space(node(c));

    // space-factor derivatives with the scheme's own stencils
    g.lap_sp.resize(cells);
    g.dsp.assign(dim, ArrayXd::Zero(cells));
    g.ddsp.assign(static_cast<size_t>(dim) * dim, ArrayXd::Zero(cells));
    const double inv_h2 = 1.0 / (g.h * g.h);
    const double inv_2h = 0.5 / g.h;
    for (Eigen::Index c = 0; c < cells; ++c) {
        const int ix = dim == 1 ? static_cast<int>(c) : static_cast<int>(c % M);
        const int iy = dim == 1 ? 0 : static_cast<int>(c / M);
        const double cc = g.sp[c];
        const double xp = g.sp[idx(ix + 1, iy)], xm = g.sp[idx(ix - 1, iy)];
        g.dsp[0][c] = (xp - xm) * inv_2h;
        g.ddsp[0][c] = (xp - 2.0 * cc + xm) * inv_h2;
        if (dim == 2) {
            const double yp = g.sp[idx(ix, iy + 1)], ym = g.sp[idx(ix, iy - 1)];
            g.dsp[1][c] = (yp - ym) * inv_2h;
            g.ddsp[3][c] = (yp - 2.0 * cc + ym) * inv_h2;
            const double pp = g.sp[idx(ix + 1, iy + 1)], pm = g.sp[idx(ix + 1, iy - 1)];
            const double mp = g.sp[idx(ix - 1, iy + 1)], mm = g.sp[idx(ix - 1, iy - 1)];
            const double cross = (pp - pm - mp + mm) * inv_2h * inv_2h;
            g.ddsp[1][c] = cross;
            g.ddsp[2][c] = cross;
            g.lap_sp[c] = g.ddsp[0][c] + g.ddsp[3][c];
        } else {
            g.lap_sp[c] = g.ddsp[0][c];
        }
    }

    g.gram.assign(static_cast<size_t>(dim) * dim, ArrayXd::Zero(cells));
    g.gram_x.assign(dim, ArrayXd::Zero(cells));
    g.drift.assign(dim, ArrayXd::Zero(cells));
    g.drift_div.resize(cells);
    g.div_sq.resize(cells);
    g.Hik.assign(static_cast<size_t>(cs.modes()) * dim, ArrayXd::Zero(cells));
    g.divHk.assign(cs.modes(), ArrayXd::Zero(cells));
    for (Eigen::Index c = 0; c < cells; ++c) {
        const Vec2 x = node(c);
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j)
                g.gram[static_cast<size_t>(i) * dim + j][c] = cs.gram_spatial(i, j, x);
            double sx = 0.0;
            for (int j = 0; j < dim; ++j) sx += cs.gram_spatial_x(i, j, x, j);
            g.gram_x[i][c] = sx;
            g.drift[i][c] = cs.drift_spatial(i, x);
        }
        double dd = 0.0;
        for (int i = 0; i < dim; ++i) dd += cs.drift_spatial_x(i, x, i);
        g.drift_div[c] = dd;
        g.div_sq[c] = cs.div_sq_spatial(x);
        for (int k = 0; k < cs.modes(); ++k) {
            for (int i = 0; i < dim; ++i)
                g.Hik[static_cast<size_t>(k) * dim + i][c] = cs.H(i, k, x);
            g.divHk[k][c] = cs.divH(k, x);
        }
    }

    g.flux_w.assign(dim, {});
    g.flux_wx.assign(dim, {});
    for (int i = 0; i < dim; ++i)
        for (const auto& term : cs.flux_terms()[i]) {
            ArrayXd w(cells), wx(cells);
            for (Eigen::Index c = 0; c < cells; ++c) {
                w[c] = term.w.value(node(c));
                wx[c] = term.w.deriv(node(c), i);
            }
            g.flux_w[i].push_back(std::move(w));
            g.flux_wx[i].push_back(std::move(wx));
        }
    return g;
}

}  // namespace

double entropy_residual(const Trajectory& traj, const EntropyPair& pair, const TestFunction& tf,
                        const NoisePath& path, const GridFunction& xi) {
    if (!traj.config) throw std::invalid_argument("entropy_residual: trajectory lacks its config");
    const SolverConfig& cfg = *traj.config;
    const int J = static_cast<int>(std::llround(traj.times.back() / traj.step_dt));
    if (static_cast<int>(traj.dense.size()) != J + 1)
        throw std::invalid_argument(
            "entropy_residual: needs a densely recorded trajectory (every step)");
    const GridFunction& u0 = traj.dense.front();
    if (!xi.same_grid(u0) || (xi.values() - u0.values()).abs().maxCoeff() > 1e-12)
        throw std::invalid_argument(
            "entropy_residual: xi must be the (truncated) initial state of the run");

    const CoefficientSet& cs = cfg.coeffs;
    const RegularizedNonlinearity& nl = cfg.nonlinearity;
    const int dim = u0.dim();
    const int M = u0.cells_per_axis();
    const Eigen::Index cells = u0.size();
    const double dt = traj.step_dt;
    const double h = u0.spacing();

    const EntropyGrids gg = build_entropy_grids(cs, tf, dim, M);
    const double vol = gg.vol;

    double u_max = 0.0;
    for (const auto& snap : traj.dense) u_max = std::max(u_max, snap.max_abs());
    const double Rr = u_max + 1.0;
    const double step = std::min(1e-3, pair.delta() / 16.0);

    auto etap = [&pair](double s) { return pair.eta_prime(s); };
    const RadialProfile& rad = cs.radial();
    const bool noisy = cs.modes() > 0;
    bool any_flux = false;
    for (int i = 0; i < dim; ++i) any_flux = any_flux || !gg.flux_w[i].empty();

    TwoSidedAntiderivative P_phi2(
        [&](double s) {
            const double a = nl.a_n(s);
            return a * a * etap(s);
        },
        Rr, step);
    TwoSidedAntiderivative P_a, P_br, P_gp;
    if (noisy) {
        P_a = TwoSidedAntiderivative(
            [&](double s) {
                const double gp = rad.deriv(s);
                return gp * gp * etap(s);
            },
            Rr, step);
        P_br = TwoSidedAntiderivative(
            [&](double s) {
                const double gp = rad.deriv(s);
                return (rad.deriv2(s) * rad.value(s) + gp * gp) * etap(s);
            },
            Rr, step);
        P_gp =
            TwoSidedAntiderivative([&](double s) { return rad.deriv(s) * etap(s); }, Rr, step);
    }
    std::vector<std::vector<TwoSidedAntiderivative>> P_flux(dim);
    for (int i = 0; i < dim; ++i)
        for (const auto& term : cs.flux_terms()[i])
            P_flux[i].emplace_back(
                [&term, &etap](double s) { return term.q.deriv(s) * etap(s); }, Rr, step);

    std::vector<double> time_phi(J + 1);
    for (int j = 0; j <= J; ++j) time_phi[j] = tf.time(j * dt);

    auto wrap = [&](int i) { return (i % M + M) % M; };
    auto idx = [&](int ix, int iy) {
        return dim == 1 ? static_cast<Eigen::Index>(wrap(ix))
                        : static_cast<Eigen::Index>(wrap(iy)) * M + wrap(ix);
    };

    double lhs = 0.0;
    double rhs = 0.0;

    {
        double s = 0.0;
        for (Eigen::Index c = 0; c < cells; ++c) s += pair.eta(u0[c]) * gg.sp[c];
        rhs += s * time_phi[0] * vol;
    }

    for (int j = 0; j < J; ++j) {
        const ArrayXd& u = traj.dense[j].values();
        const double tp0 = time_phi[j];
        const double tp1 = time_phi[j + 1];
        if (tp0 == 0.0 && tp1 == 0.0) continue;

        double acc_lhs = 0.0, acc_lap = 0.0, acc_aij = 0.0;
        double acc_first = 0.0, acc_zero = 0.0, acc_noise_sq = 0.0;

        for (Eigen::Index c = 0; c < cells; ++c) {
            const double uc = u[c];
            acc_lhs += pair.eta(uc) * gg.sp[c];
            acc_lap += P_phi2(uc) * gg.lap_sp[c];
            if (noisy) {
                const double pa = P_a(uc);
                for (int i = 0; i < dim; ++i)
                    for (int jj = 0; jj < dim; ++jj)
                        acc_aij += gg.gram[static_cast<size_t>(i) * dim + jj][c] * pa *
                                   gg.ddsp[static_cast<size_t>(i) * dim + jj][c];
                const double ep = pair.eta_prime(uc);
                const double gv = rad.value(uc);
                const double gp = rad.deriv(uc);
                const double pbr = P_br(uc);
                for (int i = 0; i < dim; ++i) {
                    double first = gg.gram_x[i][c] * pa + 0.5 * gg.drift[i][c] * pbr -
                                   ep * gg.drift[i][c] * gp * gv;
                    for (size_t t = 0; t < gg.flux_w[i].size(); ++t)
                        first -= gg.flux_w[i][t][c] * P_flux[i][t](uc);
                    acc_first += first * gg.dsp[i][c];
                }
                double zero = -0.5 * gg.drift_div[c] * (ep * gp * gv - pbr);
                for (int i = 0; i < dim; ++i)
                    for (size_t t = 0; t < gg.flux_w[i].size(); ++t)
                        zero += gg.flux_wx[i][t][c] *
                                (ep * cs.flux_terms()[i][t].q.value(uc) - P_flux[i][t](uc));
                acc_zero += zero * gg.sp[c];
                acc_noise_sq +=
                    0.5 * pair.eta_dprime(uc) * gg.div_sq[c] * gv * gv * gg.sp[c];
            } else if (any_flux) {
                const double ep = pair.eta_prime(uc);
                for (int i = 0; i < dim; ++i) {
                    double first = 0.0;
                    for (size_t t = 0; t < gg.flux_w[i].size(); ++t)
                        first -= gg.flux_w[i][t][c] * P_flux[i][t](uc);
                    acc_first += first * gg.dsp[i][c];
                    double zero = 0.0;
                    for (size_t t = 0; t < gg.flux_w[i].size(); ++t)
                        zero += gg.flux_wx[i][t][c] *
                                (ep * cs.flux_terms()[i][t].q.value(uc) - P_flux[i][t](uc));
                    acc_zero += zero * gg.sp[c];
                }
            }
        }

        // dissipation eta''(u) |grad [a_n](u)|^2 phi in its edge-pair form
        // (D eta'(u))(D Phi_n(u)) / h^2, the discrete chain-rule product the
        // scheme actually generates; both factors increase in u so every
        // edge contribution is nonnegative
        double acc_diss = 0.0;
        if (dim == 1) {
            for (int c = 0; c < M; ++c) {
                const Eigen::Index cp = idx(c + 1, 0);
                const double dP = (pair.eta_prime(u[cp]) - pair.eta_prime(u[c])) *
                                  (nl.phi_n(u[cp]) - nl.phi_n(u[c]));
                acc_diss += 0.5 * (gg.sp[c] + gg.sp[cp]) * dP;
            }
        } else {
            for (int iy = 0; iy < M; ++iy)
                for (int ix = 0; ix < M; ++ix) {
                    const Eigen::Index c = idx(ix, iy);
                    const Eigen::Index cx = idx(ix + 1, iy);
                    const Eigen::Index cy = idx(ix, iy + 1);
                    const double dPx = (pair.eta_prime(u[cx]) - pair.eta_prime(u[c])) *
                                       (nl.phi_n(u[cx]) - nl.phi_n(u[c]));
                    const double dPy = (pair.eta_prime(u[cy]) - pair.eta_prime(u[c])) *
                                       (nl.phi_n(u[cy]) - nl.phi_n(u[c]));
                    acc_diss += 0.5 * (gg.sp[c] + gg.sp[cx]) * dPx +
                                0.5 * (gg.sp[c] + gg.sp[cy]) * dPy;
                }
        }
        acc_diss /= h * h;

        lhs += -acc_lhs * (tp1 - tp0) * vol;
        rhs += (acc_lap + acc_aij + acc_first + acc_zero + acc_noise_sq - acc_diss) * tp1 * dt *
               vol;

        if (noisy) {
            for (int k = 0; k < cs.modes(); ++k) {
                double s = 0.0;
                for (Eigen::Index c = 0; c < cells; ++c) {
                    const double uc = u[c];
                    const double pgp = P_gp(uc);
                    double v = (pair.eta_prime(uc) * rad.value(uc) - pgp) * gg.divHk[k][c] *
                               gg.sp[c];
                    for (int i = 0; i < dim; ++i)
                        v -= gg.Hik[static_cast<size_t>(k) * dim + i][c] * pgp * gg.dsp[i][c];
                    s += v;
                }
                rhs += s * tp1 * vol * path.increment(j, k);
            }
        }
    }

    return lhs - rhs;
}

EntropyCaseResult entropy_ensemble(const SolverConfig& cfg, const GridFunction& xi,
                                   const EntropyPair& pair, const TestFunction& tf,
                                   const std::vector<NoisePath>& paths, int jobs) {
    EntropyCaseResult out;
    out.h = xi.spacing();
    out.dt = cfg.dt;
    out.delta = pair.delta();
    std::vector<double> residuals(paths.size());
    const GridFunction xi_n = truncate_initial(xi, cfg.effective_truncation());
    parallel_for_index(static_cast<int>(paths.size()), jobs, [&](int s) {
        SolverConfig local = cfg;
        local.record_dense = true;
        const auto traj = run(xi, local, paths[s]);
        residuals[s] = entropy_residual(traj, pair, tf, paths[s], xi_n);
    });
    const auto st = reduce_scalar(residuals);
    out.mean_residual = st.mean;
    out.half_width = st.half_width;
    out.count = st.count;
    return out;
}

// ---------------------------------------------------------------------------
// fractional regularity
// ---------------------------------------------------------------------------

namespace {

double box_modulus(const GridFunction& u, double eps) {
    const int M = u.cells_per_axis();
    const double h = u.spacing();
    const int dim = u.dim();
    const double half = dim == 1 ? eps : eps / std::sqrt(2.0);
    const int w = static_cast<int>(std::floor(half / h));
    if (w < 1) throw std::invalid_argument("frac_regularity_check: kernel unresolved");

    double acc = 0.0;
    if (dim == 1) {
        for (int c = 0; c < M; ++c)
            for (int o = -w; o <= w; ++o) acc += std::abs(u[c] - u.at_wrapped(c + o));
        return acc / (2 * w + 1) * u.cell_volume();
    }
    for (int iy = 0; iy < M; ++iy)
        for (int ix = 0; ix < M; ++ix)
            for (int ox = -w; ox <= w; ++ox)
                for (int oy = -w; oy <= w; ++oy)
                    acc += std::abs(u[u.index(ix, iy)] - u.at_wrapped(ix + ox, iy + oy));
    const double count = static_cast<double>(2 * w + 1) * (2 * w + 1);
    return acc / count * u.cell_volume();
}

double snapshot_time_integral(const Trajectory& traj,
                              const std::function<double(const GridFunction&)>& f) {
    double acc = 0.0;
    for (size_t i = 0; i + 1 < traj.snapshots.size(); ++i) {
        const double dti = traj.times[i + 1] - traj.times[i];
        acc += 0.5 * dti * (f(traj.snapshots[i]) + f(traj.snapshots[i + 1]));
    }
    return acc;
}

}  // namespace

FracRegReport frac_regularity_check(const std::vector<Trajectory>& ensemble,
                                    const NonlinearityFamily& fam,
                                    const std::vector<double>& epsilons) {
    FracRegReport rep;
    rep.epsilons = epsilons;
    rep.slope_bound = 2.0 / (fam.m + 1.0) - 0.15;
    if (ensemble.empty()) return rep;
    const double h = ensemble.front().snapshots.front().spacing();

    double grad_l1 = 0.0;
    for (const auto& traj : ensemble) grad_l1 += traj.grad_bracket_l1_qt;
    grad_l1 /= static_cast<double>(ensemble.size());

    for (double eps : epsilons) {
        if (eps < 2.0 * h)
            throw std::invalid_argument("frac_regularity_check: eps below 2h is unresolved");
        std::vector<double> vals;
        vals.reserve(ensemble.size());
        for (const auto& traj : ensemble)
            vals.push_back(snapshot_time_integral(
                traj, [eps](const GridFunction& u) { return box_modulus(u, eps); }));
        const auto st = reduce_scalar(vals);
        rep.lhs_mean.push_back(st.mean);
        rep.lhs_half.push_back(st.half_width);
        rep.bound_factor.push_back(
            st.mean / (std::pow(eps, 2.0 / (fam.m + 1.0)) * (1.0 + grad_l1)));
    }

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (size_t i = 0; i < epsilons.size(); ++i) {
        if (rep.lhs_mean[i] <= 0.0) continue;
        const double lx = std::log(epsilons[i]);
        const double ly = std::log(rep.lhs_mean[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n >= 2) rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    rep.pass = n >= 2 && rep.slope >= rep.slope_bound;
    return rep;
}

// ---------------------------------------------------------------------------
// stability in Phi
// ---------------------------------------------------------------------------

PhiStabilityReport phi_stability_experiment(
    const NonlinearityFamily& fam, const std::vector<int>& ns,
    const std::function<SolverConfig(const RegularizedNonlinearity&)>& make_cfg,
    const GridFunction& xi, const EnsembleConfig& ensemble) {
    PhiStabilityReport rep;

    for (int n : ns) {
        const auto reg_a = regularize(fam, n);
        const auto reg_b = regularize(fam, 2 * n);
        SolverConfig cfg_a = make_cfg(reg_a);
        SolverConfig cfg_b = make_cfg(reg_b);
        const double dt = std::min(cfg_a.dt, cfg_b.dt);
        cfg_a.dt = cfg_b.dt = dt;
        const int steps = static_cast<int>(std::llround(cfg_a.t_final / dt));

        std::vector<double> dist(ensemble.count);
        parallel_for_index(ensemble.count, ensemble.jobs, [&](int s) {
            const auto path = NoisePath::sample(ensemble.seed_base + s, cfg_a.coeffs.modes(), dt,
                                                std::max(steps, 1));
            const auto ta = run(xi, cfg_a, path);
            const auto tb = run(xi, cfg_b, path);
            double acc = 0.0;
            for (size_t i = 0; i + 1 < ta.snapshots.size(); ++i) {
                const double dti = ta.times[i + 1] - ta.times[i];
                acc += 0.5 * dti *
                       (l1_distance(ta.snapshots[i], tb.snapshots[i]) +
                        l1_distance(ta.snapshots[i + 1], tb.snapshots[i + 1]));
            }
            dist[s] = acc;
        });
        const auto st = reduce_scalar(dist);

        PhiStabilityRow row;
        row.n = n;
        row.n_prime = 2 * n;
        row.dist_mean = st.mean;
        row.dist_half = st.half_width;
        row.lambda = 8.0 / n;
        row.r_lambda = compute_r_lambda(reg_a, reg_b, row.lambda, 4.0 * n + 10.0);
        row.r_ok = row.r_lambda >= static_cast<double>(n);
        rep.rows.push_back(row);
    }

    rep.decreasing = !rep.rows.empty();
    for (size_t i = 0; i + 1 < rep.rows.size(); ++i)
        rep.decreasing = rep.decreasing && rep.rows[i + 1].dist_mean < rep.rows[i].dist_mean;
    bool r_all = true;
    for (const auto& r : rep.rows) r_all = r_all && r.r_ok;
    rep.pass = rep.decreasing && r_all && !rep.rows.empty();
    return rep;
}

// ---------------------------------------------------------------------------
// initial-time continuity
// ---------------------------------------------------------------------------

InitContReport initial_time_continuity(const std::vector<Trajectory>& ensemble,
                                       const GridFunction& xi, const std::vector<double>& hs) {
    InitContReport rep;
    rep.hs = hs;
    for (double hwin : hs) {
        std::vector<double> vals;
        for (const auto& traj : ensemble) {
            auto sq = [&](const GridFunction& u) {
                GridFunction diff = u;
                diff.values() -= xi.values();
                const double nrm = diff.l2_norm();
                return nrm * nrm;
            };
            double acc = 0.0;
            int pts = 0;
            for (size_t i = 0; i + 1 < traj.snapshots.size() && traj.times[i] < hwin; ++i) {
                const double t1 = std::min(traj.times[i + 1], hwin);
                const double dti = t1 - traj.times[i];
                acc += 0.5 * dti * (sq(traj.snapshots[i]) + sq(traj.snapshots[i + 1]));
                ++pts;
            }
            if (pts < 3)
                throw std::invalid_argument(
                    "initial_time_continuity: snapshots too sparse on the early window");
            vals.push_back(acc / hwin);
        }
        const auto st = reduce_scalar(vals);
        rep.g_mean.push_back(st.mean);
        rep.g_half.push_back(st.half_width);
    }
    bool monotone = true;
    for (size_t i = 0; i + 1 < rep.g_mean.size(); ++i)
        monotone = monotone && rep.g_mean[i + 1] <= rep.g_mean[i] * (1.0 + 1e-9);
    rep.pass = monotone && !rep.g_mean.empty() && rep.g_mean.back() <= 0.5 * rep.g_mean.front();
    return rep;
}

}  // namespace entroflow
