#pragma once

#include <string>

#include "gbflow/run_config.hpp"

namespace gbflow {

// Batch pipelines behind the CLI verbs. Each writes its outputs under
// cfg.out_dir and returns a short human-readable summary.
std::string run_junction(const RunConfig& cfg);
std::string run_network(const RunConfig& cfg);
std::string run_stability(const RunConfig& cfg);
std::string run_stats(const RunConfig& cfg);
std::string run_plot(const RunConfig& cfg);

}  // namespace gbflow
