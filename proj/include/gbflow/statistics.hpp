#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gbflow/network.hpp"
#include "gbflow/surface_tension.hpp"

namespace gbflow {

// Misorientation window for planar networks.
inline constexpr double kMisorientationWindow = 0.78539816339744830961;  // pi/4

// Length-weighted density of boundary misorientations over
// [-pi/4, pi/4], normalized so that sum(density * bin_width) = 1.
struct GBCDHistogram {
    std::vector<double> edges;    // n_bins + 1 ascending edges
    std::vector<double> density;  // 1/radian
    double total_length = 0.0;

    int n_bins() const { return static_cast<int>(density.size()); }
    double bin_width(int i) const { return edges[i + 1] - edges[i]; }
};

// Histogram from raw (length, misorientation) segments. Misorientations are
// kept signed; values outside the window are clamped into the end bins.
GBCDHistogram gbcd_from_segments(
    const std::vector<std::pair<double, double>>& segments, int n_bins);

GBCDHistogram gbcd(const GrainNetwork& net, int n_bins = 64);

// Length-weighted merge of per-trial histograms (identical binning required).
GBCDHistogram merge_histograms(const std::vector<GBCDHistogram>& parts);

// Partition integral Z_D = int_window exp(-sigma/D), composite Simpson.
double boltzmann_partition(const SurfaceTensionModel& model, double D);

// Thermal density exp(-sigma(theta)/D)/Z_D on the given grid. D > 0 required.
std::vector<double> boltzmann_density(const SurfaceTensionModel& model, double D,
                                      const std::vector<double>& grid);

// Bin-averaged thermal density under the histogram's binning.
std::vector<double> boltzmann_bin_density(const SurfaceTensionModel& model,
                                          double D, const GBCDHistogram& hist);

// KL(histogram || thermal density at D), bins with zero density contribute 0.
double kl_divergence(const GBCDHistogram& hist, const SurfaceTensionModel& model,
                     double D);

struct TemperatureFit {
    double D = 0.0;
    double kl = 0.0;
    bool at_lower = false;  // minimizer pinned at the bracket edge
    bool at_upper = false;
};

// Temperature-like parameter minimizing the relative entropy between the
// histogram and the thermal density; golden-section on log D in [1e-4, 10].
TemperatureFit fit_temperature(const GBCDHistogram& hist,
                               const SurfaceTensionModel& model);

struct TimeSeries {
    std::vector<double> times;
    std::vector<double> values;
};

struct ExponentialFit {
    double amplitude = 0.0;  // y = amplitude * exp(-rate * t)
    double rate = 0.0;
    double rmse = 0.0;
    bool converged = false;
};

// Log-linear initialization refined by Levenberg-Marquardt.
ExponentialFit fit_exponential(const TimeSeries& ts);

struct PowerLawFit {
    double offset = 0.0;     // y = offset + scale * (1 + timescale*t)^(-exponent)
    double scale = 0.0;
    double timescale = 0.0;
    double exponent = 0.0;
    double rmse = 0.0;
    bool converged = false;
};

struct PowerLawOptions {
    bool with_offset = false;
    bool fix_exponent = false;
    double exponent = 1.0;  // used when fix_exponent
};

PowerLawFit fit_power_law(const TimeSeries& ts, const PowerLawOptions& opts = {});

struct PolynomialFit {
    std::vector<double> coeffs;  // ascending powers
    double rmse = 0.0;
};

// Linear least squares via scaled normal equations.
PolynomialFit fit_polynomial(const TimeSeries& ts, int degree);

// Average grain area side^2 / N(t). Throws on an empty network.
double average_area(const GrainNetwork& net);

void write_gbcd_csv(const std::string& path, const GBCDHistogram& hist,
                    const std::vector<double>& model_density = {});
void write_timeseries_csv(const std::string& path, const std::string& name,
                          const std::string& unit, const TimeSeries& ts);

}  // namespace gbflow
