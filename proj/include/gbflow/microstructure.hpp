#pragma once

#include <cstdint>
#include <vector>

#include "gbflow/network.hpp"

namespace gbflow {

struct GeneratorConfig {
    int n_grains = 10000;
    double orientation_std = 0.1;  // radians
    std::uint64_t seed = 0;
};

// Orientations drawn i.i.d. Normal(0, orientation_std), clamped to
// [-pi/8, pi/8] so every pairwise misorientation stays within [-pi/4, pi/4].
// Deterministic under the seed.
std::vector<double> sample_orientations(const GeneratorConfig& cfg);

// Periodic Voronoi tessellation of [0, 2)^2 from n_grains uniform seed
// points, with orientations from sample_orientations. All vertices are
// degree 3 (degenerate seeds are jittered by 1e-9 and the tessellation is
// rebuilt). Deterministic under the seed; the result passes validation.
GrainNetwork generate_voronoi(const GeneratorConfig& cfg);

}  // namespace gbflow
