#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "entroflow/experiments.hpp"
#include "entroflow/mcf.hpp"
#include "entroflow/report.hpp"

using namespace entroflow;

namespace {

int cmd_run(const std::string& config_path, int jobs, const std::string& out_dir) {
    RunConfig cfg = load_config_file(config_path);
    if (jobs > 0) cfg.jobs = jobs;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (const char* env = std::getenv("ENTROFLOW_OUT"); env && *env && out_dir.empty())
        cfg.out_dir = env;
    return run_experiments(cfg, std::cout, std::cerr);
}

int cmd_check(const std::string& config_path, double range, int grid) {
    RunConfig cfg = load_config_file(config_path);
    if (const char* env = std::getenv("ENTROFLOW_OUT"); env && *env) cfg.out_dir = env;

    McfConfig mc;
    if (cfg.equation == "mcf") {
        for (const auto& s : cfg.mcf_modes) mc.h_modes.push_back(parse_mode_spec(s, 1.0, 1).h[0]);
        mc.n = cfg.mcf_n;
        mc.N0 = cfg.N0;
    }
    const auto coeffs = cfg.equation == "mcf" ? mcf_coefficients(mc) : build_coefficients(cfg);
    const auto sigma_rep = check_assumption_sigma(coeffs, {range, grid, 2 * grid + 1});

    const auto structure_rep = cfg.equation == "mcf"
                                   ? check_mcf_h_regularity(mc, grid)
                                   : check_assumption_A(build_family(cfg), range, grid);

    auto print = [](const char* title, const AssumptionReport& rep) {
        std::cout << title << (rep.all_ok ? " [ok]" : " [violations]") << "\n";
        for (const auto& it : rep.items)
            std::cout << "  " << (it.ok ? "ok   " : "FAIL ") << it.name
                      << "  observed=" << it.observed << "  allowed=" << it.allowed << "\n";
    };
    print("noise/drift coefficient bounds", sigma_rep);
    print(cfg.equation == "mcf" ? "h-mode regularity" : "nonlinearity structure", structure_rep);

    Manifest manifest(cfg.out_dir);
    json j;
    j["coefficient_bounds"] = to_json(sigma_rep);
    j["structure"] = to_json(structure_rep);
    j["range"] = range;
    j["grid"] = grid;
    manifest.write_report("assumptions.json", j);
    manifest.finalize();
    return sigma_rep.all_ok && structure_rep.all_ok ? 0 : 2;
}

int cmd_plot(const std::string& report_path, const std::string& out_path) {
    const json rep = json::parse(read_text_file(report_path));
    const std::string title = rep.value("experiment", "report");
    write_text_file(out_path, svg_from_report(rep, title));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nonlinear diffusion with conservative gradient noise on the torus"};
    app.require_subcommand(1);

    std::string config_path, out_dir, report_path, out_path;
    int jobs = 0;
    double range = 5.0;
    int grid = 129;

    auto* run_cmd = app.add_subcommand("run", "run the configured experiments");
    run_cmd->add_option("--config", config_path, "config file")->required();
    run_cmd->add_option("--jobs", jobs, "worker count (default: from config)");
    run_cmd->add_option("--out", out_dir, "output directory override");

    auto* check_cmd = app.add_subcommand("check-assumptions", "evaluate the declared bounds");
    check_cmd->add_option("--config", config_path, "config file")->required();
    check_cmd->add_option("--range", range, "r sampled on [-range, range]");
    check_cmd->add_option("--grid", grid, "sample points per axis");

    auto* plot_cmd = app.add_subcommand("plot", "render a report as an SVG chart");
    plot_cmd->add_option("--report", report_path, "report JSON")->required();
    plot_cmd->add_option("--out", out_path, "output SVG")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(config_path, jobs, out_dir);
        if (check_cmd->parsed()) return cmd_check(config_path, range, grid);
        if (plot_cmd->parsed()) return cmd_plot(report_path, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
