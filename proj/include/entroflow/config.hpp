#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "entroflow/coefficients.hpp"
#include "entroflow/grid.hpp"
#include "entroflow/nonlinearity.hpp"
#include "entroflow/solver.hpp"

namespace entroflow {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, int line = 0, int col = 0)
        : std::runtime_error(line > 0 ? msg + " (line " + std::to_string(line) + ", column " +
                                            std::to_string(col) + ")"
                                      : msg),
          line(line),
          col(col) {}
    int line = 0;
    int col = 0;
};

struct InitialSpec {
    std::string kind = "cosine";  // cosine | bump | constant
    double amplitude = 0.5;
    double offset = 0.0;
    double freq = 1.0;
    double width = 0.2;   // bump half width
    double center = 0.5;  // bump center
};

/// Parsed and validated run configuration (TOML-style sections; unknown
/// keys are rejected).
struct RunConfig {
    // [run]
    std::string equation = "pme";  // pme | mcf | custom
    std::string out_dir = "out";
    int jobs = 1;
    bool write_csv = false;
    bool write_svg = true;

    // [nonlinearity]
    std::string family = "power_law";
    double m = 2.0;
    double K = 2.0;
    int n = 4;

    // [grid]
    int dim = 1;
    int M = 128;

    // [time]
    double dt = 0.0;  // 0 -> snapped to the CFL budget
    double T = 0.1;
    double cfl_safety = 0.4;
    int snapshots = 16;

    // [noise]
    std::uint64_t seed = 42;
    std::string radial = "sqrt1pr2";
    double amplitude = 0.2;
    std::vector<std::string> modes;  // "const" | "cos:k" | "sin:k" (x-waves)

    // [flux]  G^1 terms, "radial:amp" with radial in {one,r,r2,sqrt1pr2}
    std::vector<std::string> flux_terms;

    // [bounds]
    double N0 = 2.0;
    double N1 = 4.0;
    double kappa_bar = 1.0;
    double beta = 1.0;
    double beta_tilde = 0.5;

    // [initial], [initial_b]
    InitialSpec initial;
    InitialSpec initial_b;
    bool has_initial_b = false;

    // [ensemble]
    int count = 64;

    // [experiments]
    std::vector<std::string> experiments;  // contraction | moments | entropy |
                                           // fracreg | phistab | mcf-consistency

    // [mcf]
    int mcf_n = 16;
    std::vector<std::string> mcf_modes = {"cos:1"};

    // [experiment.contraction]
    double c_hat_limit = 5.0;

    // [experiment.moments]
    std::vector<int> moment_n = {2, 4, 8};
    std::vector<int> moment_M = {64, 128};
    int moment_count = 32;

    // [experiment.entropy]
    std::vector<int> entropy_M = {32, 64, 128};
    double entropy_delta0 = 0.4;
    int entropy_count = 128;
    double entropy_T = 0.1;

    // [experiment.fracreg]
    std::vector<double> fracreg_eps_over_h = {4, 8, 16, 32};
    int fracreg_count = 32;

    // [experiment.phistab]
    std::vector<int> phistab_n = {2, 4, 8};
    int phistab_count = 16;
};

/// Parses the TOML-style text; throws ConfigError with line/column on
/// malformed input and on unknown sections or keys.
RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);

// --- builders shared by the CLI and the test drivers ---

GridFunction build_initial(const InitialSpec& spec, int dim, int M);
NoiseMode parse_mode_spec(const std::string& spec, double amp, int dim);
CoefficientSet build_coefficients(const RunConfig& cfg);
NonlinearityFamily build_family(const RunConfig& cfg);

/// Full solver configuration; validates dt against the CFL budget (a
/// configured dt above the budget is rejected with the budget quoted) and
/// snaps dt = 0 to the budget. Overrides for n and M serve the experiment
/// matrices.
SolverConfig build_solver_config(const RunConfig& cfg, int n_override = 0, int M_override = 0,
                                 double T_override = 0.0);

/// Largest T / 2^k that fits under the budget.
double snap_time_step(double t_final, double budget);

}  // namespace entroflow
