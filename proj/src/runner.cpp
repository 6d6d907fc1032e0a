#include "gbflow/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gbflow/junction_dynamics.hpp"
#include "gbflow/linear_stability.hpp"
#include "gbflow/microstructure.hpp"
#include "gbflow/network_sim.hpp"
#include "gbflow/statistics.hpp"
#include "gbflow/svg.hpp"

namespace gbflow {

namespace {

namespace fs = std::filesystem;

SurfaceTensionModel model_from(const RunConfig& cfg) {
    if (!cfg.model_spec.empty()) return parse_model_spec(cfg.model_spec);
    return sine_squared_model(cfg.model_a, cfg.model_b, cfg.model_c);
}

double mean_boundary_length(const GrainNetwork& net) {
    double total = 0.0;
    int n = 0;
    for (std::size_t b = 0; b < net.boundaries.size(); ++b)
        if (net.boundaries[b].alive) {
            total += net.boundary_length(static_cast<int>(b));
            ++n;
        }
    return n ? total / n : 0.0;
}

// Append (t, value) keeping the buffer bounded: once full, thin to every
// second sample and record half as often.
struct ThinningSeries {
    TimeSeries ts;
    int stride = 1;
    int countdown = 1;
    std::size_t cap = 4096;

    void push(double t, double v) {
        if (--countdown > 0) return;
        countdown = stride;
        ts.times.push_back(t);
        ts.values.push_back(v);
        if (ts.times.size() >= cap) {
            TimeSeries thin;
            for (std::size_t i = 0; i < ts.times.size(); i += 2) {
                thin.times.push_back(ts.times[i]);
                thin.values.push_back(ts.values[i]);
            }
            ts = std::move(thin);
            stride *= 2;
        }
    }
};

struct TrialOutputs {
    TimeSeries energy, area, count;
    GBCDHistogram hist;
    int events = 0;
    int final_grains = 0;
    double final_time = 0.0;
};

TrialOutputs run_network_trial(const RunConfig& cfg, std::uint64_t seed,
                               const std::string& dir) {
    const SurfaceTensionModel model = model_from(cfg);
    GeneratorConfig gen;
    gen.n_grains = cfg.n_grains;
    gen.orientation_std = cfg.orientation_std;
    gen.seed = seed;
    GrainNetwork net = generate_voronoi(gen);

    const double mean_len = mean_boundary_length(net);
    double sigma_max = 0.0;
    for (int k = 0; k <= 64; ++k)
        sigma_max = std::max(sigma_max, model.value(-kMisorientationWindow +
                                                    2.0 * kMisorientationWindow * k / 64));

    NetworkParams params;
    params.model = model;
    params.gamma = cfg.gamma;
    params.eta = cfg.eta;
    params.herring = cfg.herring;
    EventThresholds thresholds;
    thresholds.min_length = 1e-3 * mean_len;
    thresholds.min_area = thresholds.min_length * thresholds.min_length;

    double dt = cfg.dt;
    if (dt <= 0.0)
        dt = cfg.herring ? 1e-4 / (cfg.gamma * sigma_max)
                         : 1e-4 * mean_len / (cfg.eta * sigma_max);

    const int n0 = net.alive_grains();
    const int stop_n = cfg.stop_fraction > 0.0
                           ? static_cast<int>(std::ceil(cfg.stop_fraction * n0))
                           : 0;
    const double t_end = cfg.t_end > 0.0 ? cfg.t_end : 1e300;

    std::vector<CriticalEvent> events;
    TrialOutputs out;
    ThinningSeries se, sa, sn;
    se.push(0.0, total_energy(net, model));
    sa.push(0.0, average_area(net));
    sn.push(0.0, n0);

    double next_snapshot = cfg.snapshot_every > 0.0 ? cfg.snapshot_every : 1e300;
    const long max_steps = 40000000L;
    for (long k = 0; k < max_steps; ++k) {
        if (net.time >= t_end) break;
        if (stop_n > 0 && net.alive_grains() <= stop_n) break;
        try {
            step(net, dt, params, thresholds, &events);
        } catch (const std::exception& e) {
            // Halt with a diagnostic snapshot of the offending state.
            save_snapshot(net, dir + "/snapshot_diagnostic.txt");
            write_event_csv(dir + "/events.csv", events);
            throw std::runtime_error(std::string(e.what()) + " (diagnostic snapshot in " +
                                     dir + ")");
        }
        se.push(net.time, total_energy(net, model));
        sa.push(net.time, average_area(net));
        sn.push(net.time, net.alive_grains());
        if (net.time >= next_snapshot) {
            std::ostringstream name;
            name << dir << "/snapshot_t" << next_snapshot << ".txt";
            save_snapshot(net, name.str());
            next_snapshot += cfg.snapshot_every;
        }
    }

    save_snapshot(net, dir + "/snapshot_final.txt");
    write_event_csv(dir + "/events.csv", events);
    out.energy = se.ts;
    out.area = sa.ts;
    out.count = sn.ts;
    out.hist = gbcd(net, cfg.gbcd_bins);
    out.events = static_cast<int>(events.size());
    out.final_grains = net.alive_grains();
    out.final_time = net.time;
    write_timeseries_csv(dir + "/energy.csv", "E", "energy", out.energy);
    write_timeseries_csv(dir + "/area.csv", "A", "area", out.area);
    write_timeseries_csv(dir + "/count.csv", "N", "count", out.count);
    return out;
}

void write_fit_report(const std::string& path, const TrialOutputs& t,
                      const SurfaceTensionModel& model, const TemperatureFit& dfit) {
    std::ofstream out(path);
    out << "final_time " << t.final_time << "\n";
    out << "final_grains " << t.final_grains << "\n";
    out << "events " << t.events << "\n";
    try {
        const ExponentialFit ef = fit_exponential(t.energy);
        out << "energy_exponential amplitude " << ef.amplitude << " rate " << ef.rate
            << " rmse " << ef.rmse << "\n";
    } catch (const std::exception& e) {
        out << "energy_exponential error " << e.what() << "\n";
    }
    try {
        PowerLawOptions po;
        po.with_offset = true;
        const PowerLawFit pf = fit_power_law(t.energy, po);
        out << "energy_power_law offset " << pf.offset << " scale " << pf.scale
            << " timescale " << pf.timescale << " exponent " << pf.exponent << " rmse "
            << pf.rmse << "\n";
    } catch (const std::exception& e) {
        out << "energy_power_law error " << e.what() << "\n";
    }
    try {
        const PolynomialFit quad = fit_polynomial(t.area, 2);
        const PolynomialFit lin = fit_polynomial(t.area, 1);
        out << "area_quadratic c0 " << quad.coeffs[0] << " c1 " << quad.coeffs[1] << " c2 "
            << quad.coeffs[2] << " rmse " << quad.rmse << "\n";
        out << "area_linear c0 " << lin.coeffs[0] << " c1 " << lin.coeffs[1] << " rmse "
            << lin.rmse << "\n";
    } catch (const std::exception& e) {
        out << "area_fits error " << e.what() << "\n";
    }
    out << "gbcd_temperature D " << dfit.D << " kl " << dfit.kl
        << (dfit.at_lower ? " at_lower" : "") << (dfit.at_upper ? " at_upper" : "") << "\n";
    (void)model;
}

}  // namespace

std::string run_junction(const RunConfig& cfg) {
    validate_config(cfg);
    fs::create_directories(cfg.out_dir);

    JunctionSystem sys;
    sys.anchors = AnchorTriangle{{cfg.anchors[0], cfg.anchors[1]},
                                 {cfg.anchors[2], cfg.anchors[3]},
                                 {cfg.anchors[4], cfg.anchors[5]}};
    sys.model = model_from(cfg);
    sys.gamma = cfg.gamma;
    sys.eta = cfg.eta;

    const EquilibriumState eq = fermat_point(sys.anchors);
    JunctionState s0;
    s0.alpha = cfg.alpha0;
    s0.pos = eq.junction + Vec2{cfg.start_offset[0], cfg.start_offset[1]};

    IntegrateOptions opts;
    opts.sample_dt = cfg.sample_dt;
    const Trajectory traj = integrate(sys, s0, cfg.t_end, opts);
    write_trajectory_csv(cfg.out_dir + "/trajectory.csv", traj);

    const LinearizedSystem lin = build_linearized(sys, eq);
    const double alpha_mean = (cfg.alpha0[0] + cfg.alpha0[1] + cfg.alpha0[2]) / 3.0;
    const DecayFit fit = measure_decay_rate(traj, alpha_mean, eq.junction);
    const double resid = dissipation_residual(sys, traj);

    StabilityRow row;
    row.lengths = eq.lengths;
    row.lambda1 = lin.lambda1;
    row.lambda2 = lin.lambda2;
    row.rate = lin.rate;
    row.observed_rate = fit.ok ? fit.rate : 0.0;
    row.r_squared = fit.ok ? fit.r_squared : 0.0;
    write_stability_csv(cfg.out_dir + "/stability_report.csv", {row});

    {
        const double barrier = perimeter_barrier_constant(sys.anchors, eq);
        std::ofstream rep(cfg.out_dir + "/junction_report.txt");
        rep << "lambda1 " << lin.lambda1 << "\n";
        rep << "lambda2 " << lin.lambda2 << "\n";
        rep << "rate " << lin.rate << "\n";
        rep << "observed_rate " << (fit.ok ? fit.rate : 0.0) << "\n";
        rep << "r_squared " << (fit.ok ? fit.r_squared : 0.0) << "\n";
        rep << "dissipation_residual " << resid << "\n";
        rep << "energy_condition " << (traj.energy_condition_ok ? "satisfied" : "violated")
            << "\n";
        rep << "energy_condition_margin "
            << energy_condition_margin(sys.anchors, sys.model, cfg.alpha0, s0.pos, barrier)
            << "\n";
        try {
            const ExistenceBound bound = existence_time_lower_bound(sys, s0, eq);
            rep << "existence_horizon " << bound.bound
                << (bound.at_equilibrium ? " (at equilibrium)" : "") << "\n";
        } catch (const std::exception& e) {
            rep << "existence_horizon n/a (" << e.what() << ")\n";
        }
    }

    std::ostringstream msg;
    msg << "junction: samples=" << traj.size() << " E0=" << traj.energies.front()
        << " E_end=" << traj.energies.back() << " dissipation_residual=" << resid
        << " rate=" << lin.rate;
    if (fit.ok) msg << " observed_rate=" << fit.rate << " r2=" << fit.r_squared;
    else msg << " observed_rate=n/a (" << fit.message << ")";
    if (!traj.energy_condition_ok) msg << " [energy condition not satisfied]";
    if (traj.anchor_collision) msg << " [stopped: " << traj.diagnostic << "]";
    msg << "\noutputs in " << cfg.out_dir;
    return msg.str();
}

std::string run_network(const RunConfig& cfg) {
    validate_config(cfg);
    fs::create_directories(cfg.out_dir);
    const SurfaceTensionModel model = model_from(cfg);

    std::vector<GBCDHistogram> parts;
    std::ostringstream msg;
    for (int trial = 0; trial < cfg.trials; ++trial) {
        const std::string dir = cfg.out_dir + "/trial" + std::to_string(trial);
        fs::create_directories(dir);
        const TrialOutputs out = run_network_trial(cfg, cfg.seed + trial, dir);
        const TemperatureFit dfit = fit_temperature(out.hist, model);
        std::vector<double> centers(out.hist.n_bins());
        for (int i = 0; i < out.hist.n_bins(); ++i)
            centers[i] = 0.5 * (out.hist.edges[i] + out.hist.edges[i + 1]);
        write_gbcd_csv(dir + "/gbcd.csv", out.hist,
                       boltzmann_density(model, dfit.D, centers));
        write_fit_report(dir + "/fits.txt", out, model, dfit);
        parts.push_back(out.hist);
        msg << "trial " << trial << ": N " << cfg.n_grains << " -> " << out.final_grains
            << " in t=" << out.final_time << ", events=" << out.events << ", D=" << dfit.D
            << "\n";
    }
    if (parts.size() > 1) {
        const GBCDHistogram merged = merge_histograms(parts);
        const TemperatureFit dfit = fit_temperature(merged, model);
        std::vector<double> centers(merged.n_bins());
        for (int i = 0; i < merged.n_bins(); ++i)
            centers[i] = 0.5 * (merged.edges[i] + merged.edges[i + 1]);
        write_gbcd_csv(cfg.out_dir + "/gbcd_merged.csv", merged,
                       boltzmann_density(model, dfit.D, centers));
        msg << "merged GBCD over " << parts.size() << " trials: D=" << dfit.D << "\n";
    }
    msg << "outputs in " << cfg.out_dir;
    return msg.str();
}

std::string run_stability(const RunConfig& cfg) {
    validate_config(cfg);
    fs::create_directories(cfg.out_dir);
    const SurfaceTensionModel model = model_from(cfg);

    // Deterministic triangle sweep: random arm lengths and rotation around a
    // synthetic equilibrium.
    std::uint64_t state = cfg.seed * 0x2545f4914f6cdd1dULL + 1;
    auto next_unit = [&]() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        return (state >> 11) * 0x1.0p-53;
    };

    std::vector<StabilityRow> rows;
    for (int k = 0; k < cfg.sweep_triangles; ++k) {
        std::array<double, 3> len{};
        for (auto& l : len) l = 0.5 + 1.5 * next_unit();
        const double phi = 2.0 * M_PI * next_unit();
        AnchorTriangle tri;
        for (int j = 0; j < 3; ++j) {
            const double ang = phi + 2.0 * M_PI * j / 3.0;
            tri.x[j] = Vec2{len[j] * std::cos(ang), len[j] * std::sin(ang)};
        }
        JunctionSystem sys{tri, model, cfg.gamma, cfg.eta};
        const EquilibriumState eq = fermat_point(tri);
        const LinearizedSystem lin = build_linearized(sys, eq);

        const double radius = 1e-3 * *std::min_element(eq.lengths.begin(), eq.lengths.end());
        JunctionState s0;
        const double c0 = 0.02 * (next_unit() - 0.5);
        for (int j = 0; j < 3; ++j) s0.alpha[j] = c0 + radius * (next_unit() - 0.5);
        s0.pos = eq.junction + radius * Vec2{next_unit() - 0.5, next_unit() - 0.5};

        const double horizon = 30.0 / lin.rate;
        const Trajectory traj = integrate(sys, s0, horizon);
        const double alpha_mean = (s0.alpha[0] + s0.alpha[1] + s0.alpha[2]) / 3.0;
        const DecayFit fit = measure_decay_rate(traj, alpha_mean, eq.junction);

        StabilityRow row;
        row.lengths = eq.lengths;
        row.lambda1 = lin.lambda1;
        row.lambda2 = lin.lambda2;
        row.rate = lin.rate;
        row.observed_rate = fit.ok ? fit.rate : 0.0;
        row.r_squared = fit.ok ? fit.r_squared : 0.0;
        rows.push_back(row);
    }
    write_stability_csv(cfg.out_dir + "/stability.csv", rows);
    std::ostringstream msg;
    msg << "stability sweep: " << rows.size() << " triangles -> " << cfg.out_dir
        << "/stability.csv";
    return msg.str();
}

std::string run_stats(const RunConfig& cfg) {
    validate_config(cfg);
    fs::create_directories(cfg.out_dir);
    const SurfaceTensionModel model = model_from(cfg);
    const GrainNetwork net = load_snapshot(cfg.snapshot_path);
    const GBCDHistogram hist = gbcd(net, cfg.gbcd_bins);
    const TemperatureFit dfit = fit_temperature(hist, model);
    std::vector<double> centers(hist.n_bins());
    for (int i = 0; i < hist.n_bins(); ++i)
        centers[i] = 0.5 * (hist.edges[i] + hist.edges[i + 1]);
    write_gbcd_csv(cfg.out_dir + "/gbcd.csv", hist, boltzmann_density(model, dfit.D, centers));

    std::ostringstream msg;
    msg << "stats: N=" << net.alive_grains() << " E=" << total_energy(net, model)
        << " A=" << average_area(net) << " D=" << dfit.D << " kl=" << dfit.kl << "\noutputs in "
        << cfg.out_dir;
    return msg.str();
}

std::string run_plot(const RunConfig& cfg) {
    validate_config(cfg);
    fs::create_directories(cfg.out_dir);
    if (cfg.input_csv.empty())
        throw std::invalid_argument("config: field 'input_csv' is required in plot mode");

    // Read a two-or-more column CSV with a units comment and a header line.
    std::ifstream in(cfg.input_csv);
    if (!in) throw std::invalid_argument("plot: cannot open " + cfg.input_csv);
    std::string line;
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols;
    while (std::getline(in, line)) {
        if (line.empty() || line.front() == '#') continue;
        std::stringstream row(line);
        std::string cell;
        if (names.empty()) {
            while (std::getline(row, cell, ',')) names.push_back(cell);
            cols.resize(names.size());
            continue;
        }
        std::size_t c = 0;
        while (std::getline(row, cell, ',') && c < cols.size()) cols[c++].push_back(std::stod(cell));
    }
    if (names.size() < 2 || cols[0].empty())
        throw std::invalid_argument("plot: need at least two data columns");

    std::vector<SvgSeries> series;
    const std::array<const char*, 4> palette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    for (std::size_t c = 1; c < cols.size(); ++c)
        series.push_back({names[c], palette[(c - 1) % palette.size()], cols[0], cols[c]});

    // Overlay a fitted exponential when plotting an energy-like series.
    if (names.size() >= 2 && names[1] == "E") {
        TimeSeries ts{cols[0], cols[1]};
        try {
            const ExponentialFit ef = fit_exponential(ts);
            SvgSeries fit_series;
            fit_series.name = "exp fit";
            fit_series.color = "#ff7f0e";
            fit_series.x = cols[0];
            for (double t : cols[0])
                fit_series.y.push_back(ef.amplitude * std::exp(-ef.rate * t));
            series.push_back(fit_series);
        } catch (const std::exception&) {
        }
    }

    const fs::path stem = fs::path(cfg.input_csv).stem();
    const std::string out_path = cfg.out_dir + "/" + stem.string() + ".svg";
    write_svg_chart(out_path, stem.string(), names[0], names.size() == 2 ? names[1] : "value",
                    series);
    return "plot: wrote " + out_path;
}

}  // namespace gbflow
