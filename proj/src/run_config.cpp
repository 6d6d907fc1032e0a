#include "gbflow/run_config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gbflow {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

}  // namespace

std::map<std::string, std::string> parse_key_value_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: malformed section at line " +
                                            std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key=value at line " +
                                        std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        kv[section.empty() ? key : section + "." + key] = val;
    }
    return kv;
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    const auto kv = parse_key_value_file(path);
    auto get_d = [&](const std::string& k, double& target) {
        auto it = kv.find(k);
        if (it == kv.end()) return;
        std::istringstream ss(it->second);
        if (!(ss >> target))
            throw std::invalid_argument("config: field '" + k + "' is not a number");
    };
    auto get_i = [&](const std::string& k, auto& target) {
        auto it = kv.find(k);
        if (it == kv.end()) return;
        std::istringstream ss(it->second);
        long long v = 0;
        if (!(ss >> v))
            throw std::invalid_argument("config: field '" + k + "' is not an integer");
        target = static_cast<std::remove_reference_t<decltype(target)>>(v);
    };
    auto get_b = [&](const std::string& k, bool& target) {
        auto it = kv.find(k);
        if (it == kv.end()) return;
        const std::string& v = it->second;
        if (v == "true" || v == "1") target = true;
        else if (v == "false" || v == "0") target = false;
        else throw std::invalid_argument("config: field '" + k + "' is not a boolean");
    };
    auto get_s = [&](const std::string& k, std::string& target) {
        auto it = kv.find(k);
        if (it != kv.end()) target = it->second;
    };

    get_s("run.mode", cfg.mode);
    get_d("model.a", cfg.model_a);
    get_d("model.b", cfg.model_b);
    get_d("model.c", cfg.model_c);
    get_s("model.spec", cfg.model_spec);
    get_d("dynamics.gamma", cfg.gamma);
    get_d("dynamics.eta", cfg.eta);
    get_b("dynamics.herring", cfg.herring);
    for (int i = 0; i < 6; ++i)
        get_d("junction.x" + std::to_string(i / 2 + 1) + (i % 2 ? "y" : "x"), cfg.anchors[i]);
    for (int i = 0; i < 3; ++i) get_d("junction.alpha" + std::to_string(i + 1), cfg.alpha0[i]);
    get_d("junction.offset_x", cfg.start_offset[0]);
    get_d("junction.offset_y", cfg.start_offset[1]);
    get_d("run.t_end", cfg.t_end);
    get_d("run.sample_dt", cfg.sample_dt);
    get_i("network.n_grains", cfg.n_grains);
    get_i("network.seed", cfg.seed);
    get_i("network.trials", cfg.trials);
    get_d("network.orientation_std", cfg.orientation_std);
    get_d("network.stop_fraction", cfg.stop_fraction);
    get_d("network.dt", cfg.dt);
    get_i("network.gbcd_bins", cfg.gbcd_bins);
    get_d("network.snapshot_every", cfg.snapshot_every);
    get_i("stability.triangles", cfg.sweep_triangles);
    get_s("io.snapshot", cfg.snapshot_path);
    get_s("io.input_csv", cfg.input_csv);
    get_s("io.out_dir", cfg.out_dir);
    validate_config(cfg);
}

void validate_config(const RunConfig& cfg) {
    auto fail = [](const std::string& field, const std::string& why) {
        throw std::invalid_argument("config: field '" + field + "' " + why);
    };
    if (cfg.mode != "junction" && cfg.mode != "network" && cfg.mode != "stability" &&
        cfg.mode != "stats" && cfg.mode != "plot")
        fail("mode", "must be one of junction|network|stability|stats|plot");
    if (!(cfg.gamma > 0.0)) fail("gamma", "must be > 0");
    if (!cfg.herring && !(cfg.eta > 0.0)) fail("eta", "must be > 0 (or set herring)");
    if (cfg.herring && cfg.mode == "junction")
        fail("herring", "is not available in junction mode (finite mobility only)");
    if (cfg.mode == "junction" || cfg.mode == "network")
        if (!(cfg.t_end > 0.0) && !(cfg.stop_fraction > 0.0))
            fail("t_end", "must be > 0 (or set stop_fraction)");
    if (cfg.stop_fraction < 0.0 || cfg.stop_fraction >= 1.0)
        fail("stop_fraction", "must lie in [0, 1)");
    if (cfg.mode == "network" && cfg.n_grains < 3) fail("n_grains", "must be >= 3");
    if (cfg.mode == "network" && !(cfg.orientation_std > 0.0))
        fail("orientation_std", "must be > 0");
    if (cfg.trials < 1) fail("trials", "must be >= 1");
    if (cfg.gbcd_bins < 2) fail("gbcd_bins", "must be >= 2");
    if (cfg.mode == "stats" && cfg.snapshot_path.empty())
        fail("snapshot", "is required in stats mode");
}

}  // namespace gbflow
