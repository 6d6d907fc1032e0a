#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>

namespace gbflow {

// Batch-run configuration shared by the CLI verbs. Flags mirror these fields;
// a plain-text key=value file with [sections] can preload them.
struct RunConfig {
    std::string mode = "junction";  // junction | network | stability | stats | plot

    // sigma = a + b*sin^2(c*theta)
    double model_a = 1.0, model_b = 0.25, model_c = 2.0;
    // Optional plain-text model spec "sigma = a + b*sin^2(c*theta)";
    // overrides the three numbers when nonempty.
    std::string model_spec;

    double gamma = 1.0;
    double eta = 1.0;
    bool herring = false;  // eta -> infinity (network mode only)

    // junction mode
    std::array<double, 6> anchors{0.0, 0.0, 1.0, 0.0, 0.5, 0.8660254037844386};
    std::array<double, 3> alpha0{0.1, -0.05, -0.05};
    std::array<double, 2> start_offset{0.01, 0.0};  // junction start relative to equilibrium
    double t_end = 10.0;
    double sample_dt = 0.0;

    // network mode
    int n_grains = 500;
    std::uint64_t seed = 1;
    int trials = 1;
    double orientation_std = 0.1;
    double stop_fraction = 0.0;  // stop once N <= stop_fraction * N0 (0 = off)
    double dt = 0.0;             // 0 = scale-based default
    int gbcd_bins = 64;
    double snapshot_every = 0.0;  // 0 = final snapshot only

    // stability mode
    int sweep_triangles = 20;

    // stats/plot modes
    std::string snapshot_path;
    std::string input_csv;

    std::string out_dir = "out";
};

// Parse "[section]\nkey = value" text into section.key -> value.
std::map<std::string, std::string> parse_key_value_file(const std::string& path);

// Apply file values, then validate. Throws std::invalid_argument naming the
// offending field.
void apply_config_file(RunConfig& cfg, const std::string& path);
void validate_config(const RunConfig& cfg);

}  // namespace gbflow
