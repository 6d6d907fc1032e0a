#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "gbflow/run_config.hpp"
#include "gbflow/runner.hpp"

using namespace gbflow;

namespace {

void add_model_flags(CLI::App* app, RunConfig& cfg) {
    app->add_option("--sigma-a", cfg.model_a, "sigma(theta) = a + b*sin^2(c*theta): a");
    app->add_option("--sigma-b", cfg.model_b, "sigma parameter b");
    app->add_option("--sigma-c", cfg.model_c, "sigma parameter c");
    app->add_option("--sigma-spec", cfg.model_spec,
                    "model text, e.g. \"sigma = 1 + 0.25*sin^2(2*theta)\"");
    app->add_option("--out-dir", cfg.out_dir, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planar grain-boundary dynamics with mobile triple junctions"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;

    auto* junction = app.add_subcommand("junction", "integrate a single triple junction");
    junction->add_option("--config", config_path, "key=value config file");
    add_model_flags(junction, cfg);
    junction->add_option("--gamma", cfg.gamma, "misorientation relaxation rate");
    junction->add_option("--eta", cfg.eta, "junction mobility");
    junction->add_option("--t-end", cfg.t_end, "integration horizon");
    junction->add_option("--sample-dt", cfg.sample_dt, "output sampling step (0: auto)");
    junction->add_option("--anchors", cfg.anchors, "x1 y1 x2 y2 x3 y3")->expected(6);
    junction->add_option("--alpha0", cfg.alpha0, "initial orientations")->expected(3);
    junction->add_option("--offset", cfg.start_offset,
                         "initial junction offset from equilibrium")->expected(2);

    auto* network = app.add_subcommand("network", "evolve a grain-boundary network");
    network->add_option("--config", config_path, "key=value config file");
    add_model_flags(network, cfg);
    network->add_option("--gamma", cfg.gamma, "misorientation relaxation rate");
    network->add_option("--eta", cfg.eta, "junction mobility");
    network->add_flag("--herring", cfg.herring, "junction force balance each step");
    network->add_option("--n-grains", cfg.n_grains, "initial grain count");
    network->add_option("--seed", cfg.seed, "random seed");
    network->add_option("--trials", cfg.trials, "independent trials (seed, seed+1, ...)");
    network->add_option("--orientation-std", cfg.orientation_std,
                        "std of initial normal orientations [rad]");
    network->add_option("--t-end", cfg.t_end, "time horizon (0: stop rule only)");
    network->add_option("--stop-fraction", cfg.stop_fraction,
                        "stop once N <= fraction * N0");
    network->add_option("--dt", cfg.dt, "time step (0: scale-based default)");
    network->add_option("--gbcd-bins", cfg.gbcd_bins, "GBCD histogram bins");
    network->add_option("--snapshot-every", cfg.snapshot_every,
                        "snapshot cadence in time units (0: final only)");

    auto* stability = app.add_subcommand("stability", "decay-rate sweep over random triangles");
    stability->add_option("--config", config_path, "key=value config file");
    add_model_flags(stability, cfg);
    stability->add_option("--gamma", cfg.gamma, "misorientation relaxation rate");
    stability->add_option("--eta", cfg.eta, "junction mobility");
    stability->add_option("--triangles", cfg.sweep_triangles, "number of triangles");
    stability->add_option("--seed", cfg.seed, "random seed");

    auto* stats = app.add_subcommand("stats", "recompute statistics from a snapshot");
    stats->add_option("--config", config_path, "key=value config file");
    add_model_flags(stats, cfg);
    stats->add_option("--snapshot", cfg.snapshot_path, "snapshot file")->required();
    stats->add_option("--gbcd-bins", cfg.gbcd_bins, "GBCD histogram bins");

    auto* plot = app.add_subcommand("plot", "render a CSV as an SVG chart");
    plot->add_option("--config", config_path, "key=value config file");
    plot->add_option("--input", cfg.input_csv, "input CSV")->required();
    plot->add_option("--out-dir", cfg.out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        std::string summary;
        if (junction->parsed()) {
            cfg.mode = "junction";
            validate_config(cfg);
            summary = run_junction(cfg);
        } else if (network->parsed()) {
            cfg.mode = "network";
            validate_config(cfg);
            summary = run_network(cfg);
        } else if (stability->parsed()) {
            cfg.mode = "stability";
            validate_config(cfg);
            summary = run_stability(cfg);
        } else if (stats->parsed()) {
            cfg.mode = "stats";
            validate_config(cfg);
            summary = run_stats(cfg);
        } else if (plot->parsed()) {
            cfg.mode = "plot";
            validate_config(cfg);
            summary = run_plot(cfg);
        }
        std::cout << summary << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
