#pragma once

#include <memory>
#include <vector>

#include "entroflow/coefficients.hpp"
#include "entroflow/grid.hpp"
#include "entroflow/noise.hpp"
#include "entroflow/nonlinearity.hpp"

namespace entroflow {

class CflError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BlowUpError : public std::runtime_error {
public:
    BlowUpError(const std::string& msg, int step, double max_abs)
        : std::runtime_error(msg), step(step), max_abs(max_abs) {}
    int step;
    double max_abs;
};

struct SolverConfig {
    RegularizedNonlinearity nonlinearity;
    CoefficientSet coeffs;
    double dt = 1e-6;
    double t_final = 0.1;
    double cfl_safety = 0.4;
    double truncation_level = 0.0;  // 0 -> regularization index of the nonlinearity
    double blowup_guard = 1e6;
    bool track_gradient_stats = false;
    bool record_dense = false;
    std::vector<double> snapshot_times;  // empty -> initial and final state only

    double effective_truncation() const {
        return truncation_level > 0.0 ? truncation_level : static_cast<double>(nonlinearity.index());
    }
};

/// Explicit-step time budget cfl_safety * h^2 / (2d sup|Phi_n'| + d^2 sup|a|),
/// with sup|a| taken over the grid and |r| <= u_range.
double cfl_budget(const SolverConfig& cfg, int cells_per_axis, int dim, double u_range);

struct Trajectory {
    std::vector<double> times;
    std::vector<GridFunction> snapshots;

    // per-step scalars, sampled at step boundaries (index 0 = initial state)
    std::vector<double> diag_times;
    std::vector<double> mass_series;
    std::vector<double> l2_series;
    std::vector<double> lmp1_series;

    double sup_l2_sq = 0.0;
    double sup_lmp1_pow = 0.0;          // sup_t |u|_{m+1}^{m+1}
    double grad_bracket_l2_sq_qt = 0.0;  // int_0^T |grad [a_n](u)|_{L2}^2 dt
    double grad_bracket_l1_qt = 0.0;     // int_0^T |grad [a](u)|_{L1} dt (base family)

    std::vector<GridFunction> dense;  // every step when record_dense
    double step_dt = 0.0;

    std::shared_ptr<const SolverConfig> config;

    const GridFunction& final_state() const { return snapshots.back(); }
    double final_time() const { return times.back(); }
};

/// One Euler-Maruyama update. Checks the CFL budget against the current
/// sup|u| and the blow-up guard; dW holds one increment per mode.
GridFunction step(const GridFunction& u, const SolverConfig& cfg, const Eigen::ArrayXd& dW);

/// Time-steps the regularized problem from truncate_initial(xi, n) to
/// t_final, driven by the given path. Deterministic given (xi, cfg, path).
Trajectory run(const GridFunction& xi, const SolverConfig& cfg, const NoisePath& path);

/// Two trajectories driven by the identical path (coupling by construction).
std::pair<Trajectory, Trajectory> run_coupled(const GridFunction& xi_a, const GridFunction& xi_b,
                                              const SolverConfig& cfg, const NoisePath& path);

}  // namespace entroflow
