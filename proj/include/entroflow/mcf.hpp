#pragma once

#include <vector>

#include "entroflow/analysis.hpp"
#include "entroflow/solver.hpp"

namespace entroflow {

/// One-dimensional stochastic mean curvature flow in graph form: the slope
/// u = v_x solves the divergence-form equation with Phi_infty = arctan and
/// sigma^k(x,r) = h^k(x) sqrt(1+r^2); the curve v is recovered by
/// antidifferentiation.
struct McfConfig {
    std::vector<SpatialProfile> h_modes;  // h^k(x), C^3 periodic
    int n = 16;                           // truncation index of the nonlinearity
    int M = 256;
    double dt = 0.0;  // 0 -> snapped to the CFL budget
    double t_final = 0.1;
    double cfl_safety = 0.4;
    std::vector<double> snapshot_times;
    double N0 = 2.0;  // declared C^3(T; l2) bound for h
    double N1 = 0.0;  // 0 -> derived from N0
};

/// sigma^{1k}(x,r) = h^k(x) sqrt(1+r^2) with analytic derivatives, G = 0.
CoefficientSet mcf_coefficients(const McfConfig& mc);

/// Sampled l2-across-modes bounds on h, h', h'', h''' against the declared N0.
AssumptionReport check_mcf_h_regularity(const McfConfig& mc, int x_samples = 257);

/// Solver configuration for the slope equation (truncated arctan nonlinearity).
SolverConfig make_mcf_solver_config(const McfConfig& mc);

/// Runs the slope equation for u = v_x.
Trajectory run_mcf_u(const McfConfig& mc, const GridFunction& xi_u, const NoisePath& path);

struct CurveReconstruction {
    Trajectory curve;  // v sampled at the staggered nodes x_{i+1/2}
    std::vector<double> periodicity_defect;  // |integral of u| per snapshot
    bool periodic = true;  // false once a defect exceeds 1e-8 (v then drifts)
};

/// Cumulative midpoint antiderivative of each snapshot, anchored so that
/// mean(v) = v0_mean. Sampling v at cell faces makes curve_slope an exact
/// inverse. Valid as a periodic graph only when integral of u vanishes.
CurveReconstruction reconstruct_curve(const Trajectory& traj_u, double v0_mean);

/// Exact discrete inverse of reconstruct_curve: u_i = (v_{i+1/2} - v_{i-1/2})/h.
GridFunction curve_slope(const GridFunction& v);

struct CurvatureReport {
    double max_residual = 0.0;
    double h = 0.0;
    double dt_gap = 0.0;   // time gap between the states compared
    double fitted_c = 0.0;  // max_residual / (h^2 + dt_gap)
    int pairs = 0;
};

/// Deterministic consistency of the slope equation with d_t u = d_xx arctan(u):
/// time differences of consecutive recorded states against a fourth-order
/// discrete second derivative of arctan(u).
CurvatureReport curvature_consistency(const Trajectory& traj_u);

}  // namespace entroflow
