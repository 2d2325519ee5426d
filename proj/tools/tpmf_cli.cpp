// Command-line front end of the benchmark harness.

#include "tpmf/bench.hpp"
#include "tpmf/errors.hpp"
#include "tpmf/seed.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

std::vector<std::string> split_names(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

struct RunArgs {
    std::string config;
    std::string out;
    std::string filters;
    std::size_t mc = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool paper_scale = false;
};

int run_command(const RunArgs& args) {
    tpmf::ScenarioConfig cfg;
    try {
        cfg = args.config.empty() ? tpmf::default_scenario() : tpmf::load_scenario(args.config);
        if (!args.filters.empty()) tpmf::select_filters(cfg, split_names(args.filters));
        if (args.mc > 0) cfg.mc_runs = args.mc;
        if (args.seed_set) cfg.seed = args.seed;
        if (args.paper_scale) tpmf::apply_paper_scale(cfg);
        cfg.validate();
    } catch (const tpmf::ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const tpmf::IoError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const tpmf::InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    std::filesystem::path out_dir;
    if (!args.out.empty()) {
        out_dir = args.out;
    } else if (cfg.output_dir) {
        out_dir = *cfg.output_dir;
    } else {
        std::cerr << "config error: no output directory (use --out or output_dir)\n";
        return kExitConfig;
    }

    const tpmf::RunReport report = tpmf::run_benchmark(cfg);
    tpmf::emit_artifacts(report, out_dir);
    for (const tpmf::FilterSummary& s : report.summary) {
        std::cout << tpmf::render_table_row(s.name, s.rmse_pos, s.rmse_vel, s.mean_step_s)
                  << " (divergences: " << s.divergences << '/' << report.runs.size() << ")\n";
    }
    std::cout << "artifacts written to " << out_dir.string() << '\n';
    return report.universal_divergence() ? kExitDiverged : kExitOk;
}

struct SimulateArgs {
    std::string config;
    std::string out;
    std::size_t run = 0;
    std::string dem_out;
};

int simulate_command(const SimulateArgs& args) {
    tpmf::ScenarioConfig cfg;
    try {
        cfg = args.config.empty() ? tpmf::default_scenario() : tpmf::load_scenario(args.config);
    } catch (const tpmf::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    cfg.filters.clear();
    cfg.mc_runs = args.run + 1;
    const tpmf::RunReport report = tpmf::run_benchmark(cfg);
    tpmf::write_trajectory_csv(report.runs.back().truth, args.out);
    if (!args.dem_out.empty()) {
        const tpmf::TerrainMap map = cfg.terrain.dem_path
                                         ? tpmf::load_esri_ascii(*cfg.terrain.dem_path)
                                         : tpmf::synth_terrain(cfg.terrain.seed, cfg.terrain.extent, cfg.terrain.cell,
                                                               cfg.terrain.roughness);
        tpmf::write_esri_ascii(map, args.dem_out);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Terrain-aided navigation grid filter benchmark"};
    app.require_subcommand(1);

    RunArgs run;
    CLI::App* run_cmd = app.add_subcommand("run", "Monte-Carlo comparison of the configured filters");
    run_cmd->add_option("--config", run.config, "Scenario JSON (built-in default when omitted)");
    run_cmd->add_option("--out", run.out, "Output directory for report.json, summary.csv and traces/");
    run_cmd->add_option("--filters", run.filters, "Comma-separated filter names to run (lgbf_cpd,lgbf,pf_bootstrap,ukf)");
    run_cmd->add_option("--mc", run.mc, "Number of Monte-Carlo runs")->check(CLI::PositiveNumber);
    auto* seed_opt = run_cmd->add_option("--seed", run.seed, "Master seed");
    run_cmd->add_flag("--paper-scale", run.paper_scale,
                      "Grids of 101^4 (CP filter) and 51x51x41x41 (full-tensor filter); long-running");

    SimulateArgs sim;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Write one simulated trajectory as CSV");
    sim_cmd->add_option("--config", sim.config, "Scenario JSON (built-in default when omitted)");
    sim_cmd->add_option("--out", sim.out, "Trajectory CSV path")->required();
    sim_cmd->add_option("--run", sim.run, "Monte-Carlo run index whose trajectory is written");
    sim_cmd->add_option("--dem-out", sim.dem_out, "Also write the terrain as an ESRI ASCII grid");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run_cmd->parsed()) {
            run.seed_set = seed_opt->count() > 0;
            return run_command(run);
        }
        return simulate_command(sim);
    } catch (const tpmf::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}
