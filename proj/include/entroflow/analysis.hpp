#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "entroflow/solver.hpp"

namespace entroflow {

// ---------------------------------------------------------------------------
// mollifier and entropy pair
// ---------------------------------------------------------------------------

/// Fixed smooth bump on (0,1): bounded by 2, integrates to one.
double mollifier_rho(double t);

/// Regularized absolute value: eta(0) = eta'(0) = 0 and eta'' = rho_delta(|r|),
/// so |eta(r) - |r|| <= delta, eta'' is supported in [-delta, delta] and
/// integrates to 2.
class EntropyPair {
public:
    explicit EntropyPair(double delta);

    double delta() const { return delta_; }
    double eta(double r) const;
    double eta_prime(double r) const;
    double eta_dprime(double r) const;

private:
    double delta_ = 1.0;
};

/// Periodic mollification of grid data with the bump above at width theta
/// (per axis). Used to smooth rough test data.
GridFunction mollify_periodic(const GridFunction& u, double theta);

// ---------------------------------------------------------------------------
// test functions phi(t,x) = time(t) * space(x)
// ---------------------------------------------------------------------------

/// Nonnegative product test function: a smooth time bump supported in
/// [0, support_frac*T) with value 1 at t=0, times the periodic factor
/// 1 + space_amp * cos(2 pi k x) (and the analogous y factor in 2D).
class TestFunction {
public:
    TestFunction(double T, double support_frac, double space_amp, double space_freq, int dim = 1);

    double time(double t) const;
    double time_deriv(double t) const;
    double space(const Vec2& x) const;
    double space_grad(const Vec2& x, int l) const;
    double space_hess(const Vec2& x, int l, int m) const;
    double operator()(double t, const Vec2& x) const { return time(t) * space(x); }
    int dim() const { return dim_; }

private:
    double T_ = 1.0, tau_ = 0.9, amp_ = 0.5, freq_ = 1.0;
    int dim_ = 1;
};

// ---------------------------------------------------------------------------
// ensemble statistics
// ---------------------------------------------------------------------------

struct ScalarStats {
    double mean = 0.0;
    double half_width = 0.0;  // 95% normal CI half width
    int count = 0;
};
ScalarStats reduce_scalar(const std::vector<double>& xs);

struct SeriesStats {
    std::vector<double> t;
    std::vector<double> mean;
    std::vector<double> half_width;
};
/// per_seed[s][i] is seed s sampled at t[i]; reduction is done in seed order.
SeriesStats reduce_series(const std::vector<double>& t,
                          const std::vector<std::vector<double>>& per_seed);

/// Runs body(seed_index) over a fixed-size pool; results must be written to
/// per-index slots so the output is independent of scheduling.
void parallel_for_index(int count, int jobs, const std::function<void(int)>& body);

struct EnsembleConfig {
    std::uint64_t seed_base = 42;
    int count = 64;
    int jobs = 1;
};

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

/// h^d sum |u - v|; throws on grid mismatch.
double l1_distance(const GridFunction& u, const GridFunction& v);

/// Largest radius R such that |a_n - a_n'| <= lambda on (-R, R), scanned on
/// a uniform grid; returns r_max when the gap never exceeds lambda.
double compute_r_lambda(const RegularizedNonlinearity& a, const RegularizedNonlinearity& b,
                        double lambda, double r_max, double step = 1e-3);

// ---------------------------------------------------------------------------
// experiments
// ---------------------------------------------------------------------------

struct ContractionSetup {
    GridFunction xi_a, xi_b;
    SolverConfig cfg;  // snapshot_times define the ratio curve samples
    EnsembleConfig ensemble;
    double c_hat_limit = 5.0;
    double max_excluded_frac = 0.05;
};

struct ContractionReport {
    std::vector<double> times;
    SeriesStats ratio;          // E|u - u~|_L1 / E|xi - xi~|_L1 with CI
    double denom = 0.0;         // |xi - xi~|_L1 (deterministic data)
    double c_hat_lsq = 0.0;     // least-squares slope of log ratio vs t
    double c_hat_envelope = 0.0;  // max_t log(upper CI ratio)/t
    double sup_ratio_upper = 0.0;
    double bound = 1.0;         // exp(c_hat_envelope * T)
    int excluded = 0;
    int count = 0;
    bool degenerate_zero = false;  // xi_a == xi_b case
    bool pass = false;
    std::string note;
};

ContractionReport contraction_experiment(const ContractionSetup& setup);

struct MomentCase {
    int n = 2;
    int M = 64;
};

struct MomentCell {
    int n = 0, M = 0;
    double ratio_l2 = 0.0;    // E[sup|u|_L2^2 + |grad [a_n](u)|_L2(Q)^2] / (1 + E|xi_n|_L2^2)
    double ratio_lmp1 = 0.0;  // E[sup|u|_{m+1}^{m+1}] / (1 + E|xi_n|_{m+1}^{m+1})
    double half_l2 = 0.0, half_lmp1 = 0.0;
};

struct MomentReport {
    std::vector<MomentCell> cells;
    double spread_l2 = 0.0;  // max ratio / min ratio across the matrix
    double spread_lmp1 = 0.0;
    double spread_limit = 2.0;
    bool pass = false;
};

/// make_case(n, M) builds the solver config (with track_gradient_stats set)
/// and initial state for one matrix cell.
MomentReport moment_check(
    const std::function<std::pair<SolverConfig, GridFunction>(int, int)>& make_case,
    const std::vector<MomentCase>& matrix, const EnsembleConfig& ensemble,
    double spread_limit = 2.0);

/// Discrete defect of the entropy inequality for one densely recorded
/// trajectory: LHS - RHS with summation-by-parts-compatible operators, the
/// left-point (Ito) rule on the stochastic term and cached brackets.
/// Negative or small positive means the inequality holds up to
/// discretization. Requires cfg.record_dense; throws otherwise.
double entropy_residual(const Trajectory& traj, const EntropyPair& pair, const TestFunction& tf,
                        const NoisePath& path, const GridFunction& xi);

struct EntropyCaseResult {
    double mean_residual = 0.0;
    double half_width = 0.0;
    int count = 0;
    double h = 0.0, dt = 0.0, delta = 0.0;
};

/// Ensemble-mean entropy residual for one (h, dt, delta) level; paths[i]
/// drives seed i.
EntropyCaseResult entropy_ensemble(const SolverConfig& cfg, const GridFunction& xi,
                                   const EntropyPair& pair, const TestFunction& tf,
                                   const std::vector<NoisePath>& paths, int jobs);

struct FracRegReport {
    std::vector<double> epsilons;
    std::vector<double> lhs_mean;
    std::vector<double> lhs_half;
    std::vector<double> bound_factor;  // LHS / (eps^{2/(m+1)} (1 + E|grad [a](u)|_L1))
    double slope = 0.0;
    double slope_bound = 0.0;  // 2/(m+1) - 0.15
    bool pass = false;
};

/// Fractional-regularity diagnostic: averaged modulus of continuity against
/// a box kernel of radius eps, fitted log-log slope in eps. Trajectories
/// must carry snapshots for the time integral and gradient stats.
FracRegReport frac_regularity_check(const std::vector<Trajectory>& ensemble,
                                    const NonlinearityFamily& fam,
                                    const std::vector<double>& epsilons);

struct PhiStabilityRow {
    int n = 0, n_prime = 0;
    double dist_mean = 0.0;  // E |u_n - u_n'|_{L1(Q_T)}
    double dist_half = 0.0;
    double lambda = 0.0;
    double r_lambda = 0.0;
    bool r_ok = false;  // r_lambda >= n
};

struct PhiStabilityReport {
    std::vector<PhiStabilityRow> rows;
    bool decreasing = false;
    bool pass = false;
};

/// Couples runs with identical data and noise but nonlinearities Phi_n vs
/// Phi_{2n}; reports the L1(Q_T) distance trend over n and R_{8/n}.
PhiStabilityReport phi_stability_experiment(
    const NonlinearityFamily& fam, const std::vector<int>& ns,
    const std::function<SolverConfig(const RegularizedNonlinearity&)>& make_cfg,
    const GridFunction& xi, const EnsembleConfig& ensemble);

struct InitContReport {
    std::vector<double> hs;        // decreasing windows
    std::vector<double> g_mean;    // (1/h) E int_0^h |u(t)-xi|_L2^2 dt
    std::vector<double> g_half;
    bool pass = false;
};

/// Initial-time continuity: g(h) must trend down with the window, final
/// value at most half of the first.
InitContReport initial_time_continuity(const std::vector<Trajectory>& ensemble,
                                       const GridFunction& xi, const std::vector<double>& hs);

}  // namespace entroflow
