#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "gbflow/statistics.hpp"
#include "gbflow/surface_tension.hpp"

using namespace gbflow;

namespace {

// Histogram whose bin masses follow the thermal density exactly.
GBCDHistogram histogram_from_density(const SurfaceTensionModel& model, double D, int bins) {
    std::vector<std::pair<double, double>> segments;
    const double lo = -kMisorientationWindow, hi = kMisorientationWindow;
    const int per_bin = 8;  // resolve the density within each bin
    for (int i = 0; i < bins * per_bin; ++i) {
        const double t = lo + (hi - lo) * (i + 0.5) / (bins * per_bin);
        segments.emplace_back(std::exp(-model.value(t) / D), t);
    }
    return gbcd_from_segments(segments, bins);
}

}  // namespace

TEST_CASE("histogram normalization: spike and uniform cases") {
    const GBCDHistogram spike = gbcd_from_segments({{2.5, 0.0}}, 64);
    double mass = 0.0;
    int nonzero = 0;
    for (int i = 0; i < spike.n_bins(); ++i) {
        mass += spike.density[i] * spike.bin_width(i);
        if (spike.density[i] > 0.0) ++nonzero;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nonzero == 1);

    // Equal length in every bin: uniform density 2/pi over a pi/2 window.
    std::vector<std::pair<double, double>> segs;
    const int bins = 32;
    for (int i = 0; i < bins; ++i) {
        const double lo = -kMisorientationWindow;
        const double w = 2.0 * kMisorientationWindow / bins;
        segs.emplace_back(1.0, lo + (i + 0.5) * w);
    }
    const GBCDHistogram uniform = gbcd_from_segments(segs, bins);
    for (int i = 0; i < bins; ++i)
        CHECK(uniform.density[i] == doctest::Approx(2.0 / M_PI).epsilon(1e-12));

    CHECK_THROWS_AS(gbcd_from_segments({}, 16), std::invalid_argument);
    CHECK_THROWS_AS(gbcd_from_segments({{1.0, 0.0}}, 1), std::invalid_argument);
}

TEST_CASE("thermal density: uniform limits and quadrature normalization") {
    SurfaceTensionModel flat;
    flat.value = [](double) { return 1.0; };
    flat.slope = [](double) { return 0.0; };
    flat.curvature = [](double) { return 0.0; };
    flat.label = "flat";

    std::vector<double> grid;
    for (int i = 0; i < 11; ++i)
        grid.push_back(-kMisorientationWindow + 2.0 * kMisorientationWindow * i / 10);
    for (double d : {0.01, 0.5, 3.0}) {
        const auto rho = boltzmann_density(flat, d, grid);
        for (double v : rho) CHECK(v == doctest::Approx(2.0 / M_PI).epsilon(1e-10));
    }

    // Large D with the default model also flattens out.
    const auto rho_hot = boltzmann_density(default_model(), 1e6, grid);
    for (double v : rho_hot) CHECK(v == doctest::Approx(2.0 / M_PI).epsilon(1e-5));

    // Normalization for 100 random temperatures.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(1e-3, 1.0);
    const SurfaceTensionModel model = default_model();
    for (int k = 0; k < 100; ++k) {
        const double d = u(rng);
        const double z = boltzmann_partition(model, d);
        // Integrate rho over the window with an independent midpoint rule.
        const int n = 4096;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double t =
                -kMisorientationWindow + 2.0 * kMisorientationWindow * (i + 0.5) / n;
            acc += std::exp(-model.value(t) / d);
        }
        acc *= 2.0 * kMisorientationWindow / n / z;
        CHECK(acc == doctest::Approx(1.0).epsilon(1e-7));
    }
    CHECK_THROWS_AS(boltzmann_partition(model, -0.5), std::invalid_argument);
}

TEST_CASE("cold thermal density peaks at zero and is symmetric") {
    const SurfaceTensionModel model = default_model();
    std::vector<double> grid;
    const int n = 129;
    for (int i = 0; i < n; ++i)
        grid.push_back(-kMisorientationWindow + 2.0 * kMisorientationWindow * i / (n - 1));
    const auto rho = boltzmann_density(model, 0.06, grid);
    // Peak at zero misorientation.
    const int mid = n / 2;
    for (int i = 0; i < n; ++i)
        if (i != mid) CHECK(rho[i] <= rho[mid] + 1e-15);
    // Even in theta.
    for (int i = 0; i < n / 2; ++i)
        CHECK(rho[i] == doctest::Approx(rho[n - 1 - i]).epsilon(1e-12));
    // Spot value against a high-resolution independent quadrature.
    const int big = 1000000;
    double z = 0.0;
    for (int i = 0; i < big; ++i) {
        const double t =
            -kMisorientationWindow + 2.0 * kMisorientationWindow * (i + 0.5) / big;
        z += std::exp(-model.value(t) / 0.06);
    }
    z *= 2.0 * kMisorientationWindow / big;
    CHECK(rho[mid] == doctest::Approx(std::exp(-model.value(0.0) / 0.06) / z).epsilon(1e-7));
}

TEST_CASE("relative entropy: nonnegative, zero on the matching histogram") {
    const SurfaceTensionModel model = default_model();
    const GBCDHistogram h = histogram_from_density(model, 0.06, 64);
    CHECK(kl_divergence(h, model, 0.06) <= 1e-7);
    CHECK(kl_divergence(h, model, 0.06) >= -1e-12);
    CHECK(kl_divergence(h, model, 0.03) > 1e-3);
    CHECK(kl_divergence(h, model, 0.12) > 1e-3);
}

TEST_CASE("temperature fit: exact round trips at several D") {
    const SurfaceTensionModel model = default_model();
    for (double d0 : {0.03, 0.06, 0.1}) {
        const GBCDHistogram h = histogram_from_density(model, d0, 64);
        const TemperatureFit fit = fit_temperature(h, model);
        CHECK(fit.D == doctest::Approx(d0).epsilon(2e-4));
        CHECK_FALSE(fit.at_lower);
        CHECK_FALSE(fit.at_upper);
    }
}

TEST_CASE("temperature fit flags a uniform histogram at the hot bracket") {
    const SurfaceTensionModel model = default_model();
    std::vector<std::pair<double, double>> segs;
    const int bins = 64;
    for (int i = 0; i < bins; ++i)
        segs.emplace_back(1.0, -kMisorientationWindow +
                                   2.0 * kMisorientationWindow * (i + 0.5) / bins);
    const TemperatureFit fit = fit_temperature(gbcd_from_segments(segs, bins), model);
    CHECK(fit.at_upper);
}

TEST_CASE("histogram merge is the length-weighted union") {
    const SurfaceTensionModel model = default_model();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> len(0.1, 2.0);
    std::uniform_real_distribution<double> mis(-0.7, 0.7);
    std::vector<std::pair<double, double>> all;
    std::vector<GBCDHistogram> parts;
    for (int part = 0; part < 3; ++part) {
        std::vector<std::pair<double, double>> segs;
        for (int i = 0; i < 200; ++i) {
            segs.emplace_back(len(rng), mis(rng));
            all.push_back(segs.back());
        }
        parts.push_back(gbcd_from_segments(segs, 32));
    }
    const GBCDHistogram merged = merge_histograms(parts);
    const GBCDHistogram direct = gbcd_from_segments(all, 32);
    for (int i = 0; i < 32; ++i)
        CHECK(merged.density[i] == doctest::Approx(direct.density[i]).epsilon(1e-10));
    CHECK(merged.total_length == doctest::Approx(direct.total_length).epsilon(1e-12));
}

TEST_CASE("exponential fit recovers parameters and handles a constant series") {
    TimeSeries ts;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> noise(-1e-6, 1e-6);
    for (int i = 0; i <= 400; ++i) {
        const double t = i * 0.25e-3;
        ts.times.push_back(t);
        ts.values.push_back(421.0 * std::exp(-22.16 * t) + noise(rng));
    }
    const ExponentialFit fit = fit_exponential(ts);
    CHECK(fit.amplitude == doctest::Approx(421.0).epsilon(1e-3));
    CHECK(fit.rate == doctest::Approx(22.16).epsilon(1e-3));

    TimeSeries flat;
    for (int i = 0; i < 50; ++i) {
        flat.times.push_back(i * 0.1);
        flat.values.push_back(3.5);
    }
    const ExponentialFit ffit = fit_exponential(flat);
    CHECK(ffit.rate == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(ffit.amplitude == doctest::Approx(3.5).epsilon(1e-10));
    CHECK(ffit.rmse < 1e-10);
}

TEST_CASE("power-law fits: free, fixed-exponent and offset variants") {
    TimeSeries ts;
    for (int i = 0; i <= 600; ++i) {
        const double t = i * 1e-5;
        ts.times.push_back(t);
        ts.values.push_back(435.3778 * std::pow(1.0 + 2369.2 * t, -0.5));
    }
    PowerLawOptions fixed;
    fixed.fix_exponent = true;
    fixed.exponent = 0.5;
    const PowerLawFit pf = fit_power_law(ts, fixed);
    CHECK(pf.scale == doctest::Approx(435.3778).epsilon(1e-4));
    CHECK(pf.timescale == doctest::Approx(2369.2).epsilon(1e-3));

    TimeSeries off;
    for (int i = 0; i <= 500; ++i) {
        const double t = i * 2e-4;
        off.times.push_back(t);
        off.values.push_back(-201.4 + 626.67 / (1.0 + 16.53 * t));
    }
    PowerLawOptions with_off;
    with_off.with_offset = true;
    with_off.fix_exponent = true;
    with_off.exponent = 1.0;
    const PowerLawFit of = fit_power_law(off, with_off);
    CHECK(of.offset == doctest::Approx(-201.4).epsilon(1e-3));
    CHECK(of.scale == doctest::Approx(626.67).epsilon(1e-3));
    CHECK(of.timescale == doctest::Approx(16.53).epsilon(1e-3));
}

TEST_CASE("polynomial fit: exact quadratic recovery") {
    TimeSeries ts;
    for (int i = 0; i <= 100; ++i) {
        const double t = i * 0.002;
        ts.times.push_back(t);
        ts.values.push_back(0.6704 * t * t + 0.004265 * t + 0.0003764);
    }
    const PolynomialFit fit = fit_polynomial(ts, 2);
    CHECK(fit.coeffs[0] == doctest::Approx(0.0003764).epsilon(1e-8));
    CHECK(fit.coeffs[1] == doctest::Approx(0.004265).epsilon(1e-8));
    CHECK(fit.coeffs[2] == doctest::Approx(0.6704).epsilon(1e-8));
    CHECK(fit.rmse < 1e-12);
}

TEST_CASE("average area follows the grain count") {
    GrainNetwork net = make_honeycomb(2, 2);
    CHECK(average_area(net) == doctest::Approx(4.0 / 8.0).epsilon(1e-15));
    // Retire all but one grain by hand to probe the tiny-count formula.
    for (std::size_t g = 1; g < net.grains.size(); ++g) net.grains[g].alive = false;
    CHECK(average_area(net) == doctest::Approx(4.0).epsilon(1e-15));
    net.grains[0].alive = false;
    CHECK_THROWS_AS(average_area(net), std::invalid_argument);
}

TEST_CASE("all-mass-in-one-bin histogram pins the fit at the cold bracket") {
    const SurfaceTensionModel model = default_model();
    // Support only at zero misorientation: colder always fits better.
    const GBCDHistogram spike = gbcd_from_segments({{1.0, 0.0}}, 64);
    const TemperatureFit fit = fit_temperature(spike, model);
    CHECK(fit.at_lower);
}

TEST_CASE("exponential fit on exact data reaches float-level rmse") {
    TimeSeries ts;
    for (int i = 0; i <= 200; ++i) {
        const double t = i * 0.002;
        ts.times.push_back(t);
        ts.values.push_back(17.5 * std::exp(-3.25 * t));
    }
    const ExponentialFit fit = fit_exponential(ts);
    CHECK(fit.amplitude == doctest::Approx(17.5).epsilon(1e-12));
    CHECK(fit.rate == doctest::Approx(3.25).epsilon(1e-12));
    CHECK(fit.rmse < 1e-10);
}
