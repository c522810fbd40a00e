#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "entroflow/analysis.hpp"
#include "entroflow/checks.hpp"
#include "entroflow/mcf.hpp"

namespace entroflow {

using json = nlohmann::json;

json to_json(const AssumptionReport& rep);
json to_json(const ContractionReport& rep);
json to_json(const MomentReport& rep);
json to_json(const FracRegReport& rep);
json to_json(const PhiStabilityReport& rep);
json to_json(const InitContReport& rep);
json to_json(const CurvatureReport& rep);

struct EntropyReport {
    std::vector<EntropyCaseResult> levels;  // coarse to fine
    double det_residual = 0.0;              // deterministic smooth-run residual
    double det_tolerance = 1e-6;
    double calibrated_c = 0.0;  // envelope constant from the coarsest level
    double shrink_factor = 2.0;
    bool envelope_ok = false;
    bool shrink_ok = false;
    bool pass = false;
};
json to_json(const EntropyReport& rep);

std::string sha256_hex(std::string_view data);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

/// Canonical JSON serialization used for every report (2-space indent,
/// sorted keys by construction, trailing newline) so identical runs give
/// byte-identical files.
void write_json_file(const std::filesystem::path& path, const json& j);

/// Collects written files and emits manifest.json with a content hash per file.
class Manifest {
public:
    explicit Manifest(std::filesystem::path root) : root_(std::move(root)) {}
    void record(const std::string& relative, const std::string& content);
    void write_file(const std::string& relative, const std::string& content);
    void write_report(const std::string& relative, const json& j);
    void finalize() const;  // writes manifest.json (itself not listed)

private:
    std::filesystem::path root_;
    json entries_ = json::object();
};

/// One row per cell per snapshot: t,x[,y],u. x_offset shifts the reported
/// coordinates (used for face-sampled curve data).
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path,
                          double x_offset = 0.0);

/// Compact dump: u32 dims, u32 M, u32 count, then per snapshot the time
/// followed by M^dims values, all little-endian doubles.
void write_trajectory_binary(const Trajectory& traj, const std::filesystem::path& path);
Trajectory read_trajectory_binary(const std::filesystem::path& path);

}  // namespace entroflow
