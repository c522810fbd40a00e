#pragma once

#include <iosfwd>

#include "entroflow/config.hpp"
#include "entroflow/report.hpp"

namespace entroflow {

/// Executes the experiments requested by the config, writing JSON reports,
/// optional CSV trajectories and SVG plots plus a hashed manifest into
/// cfg.out_dir. Prints one line per experiment; returns 0 iff every pass
/// flag is true (failing experiment names go to err).
int run_experiments(const RunConfig& cfg, std::ostream& log, std::ostream& err);

/// Chart rendering for a report that carries a "series" block.
std::string svg_from_report(const json& report, const std::string& title);

// standard setups shared with the acceptance drivers
ContractionSetup make_contraction_setup(const RunConfig& cfg);
EntropyReport run_entropy_levels(const RunConfig& cfg);
PhiStabilityReport run_phistab(const RunConfig& cfg);
FracRegReport run_fracreg(const RunConfig& cfg);
MomentReport run_moments(const RunConfig& cfg);

}  // namespace entroflow
