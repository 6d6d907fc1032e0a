#include "gbflow/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>

namespace gbflow {

namespace {

// Dense linear solve with partial pivoting, for the tiny normal systems of
// the fitters (n <= 5).
bool solve_dense(std::vector<std::vector<double>>& a, std::vector<double>& b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int col = n - 1; col >= 0; --col) {
        b[col] /= a[col][col];
        for (int r = 0; r < col; ++r) b[r] -= a[r][col] * b[col];
    }
    return true;
}

// Levenberg-Marquardt on a small parameter vector with a numeric Jacobian.
struct LevMarResult {
    bool converged = false;
    double rmse = 0.0;
};

LevMarResult levenberg_marquardt(
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& residuals,
    std::vector<double>& params, int n_resid, int max_iter = 200) {
    const int np = static_cast<int>(params.size());
    std::vector<double> r(n_resid), r_try(n_resid);
    residuals(params, r);
    double cost = 0.0;
    for (double v : r) cost += v * v;

    double mu = 1e-3;
    LevMarResult out;
    for (int iter = 0; iter < max_iter; ++iter) {
        // Numeric Jacobian by central differences.
        std::vector<std::vector<double>> jac(n_resid, std::vector<double>(np, 0.0));
        for (int p = 0; p < np; ++p) {
            const double h = 1e-7 * std::max(1.0, std::abs(params[p]));
            std::vector<double> pp = params, pm = params;
            pp[p] += h;
            pm[p] -= h;
            std::vector<double> rp(n_resid), rm(n_resid);
            residuals(pp, rp);
            residuals(pm, rm);
            for (int i = 0; i < n_resid; ++i) jac[i][p] = (rp[i] - rm[i]) / (2.0 * h);
        }
        // Normal equations (J^T J + mu diag) d = -J^T r.
        std::vector<std::vector<double>> jtj(np, std::vector<double>(np, 0.0));
        std::vector<double> jtr(np, 0.0);
        for (int i = 0; i < n_resid; ++i)
            for (int p = 0; p < np; ++p) {
                jtr[p] += jac[i][p] * r[i];
                for (int q = 0; q <= p; ++q) jtj[p][q] += jac[i][p] * jac[i][q];
            }
        for (int p = 0; p < np; ++p)
            for (int q = p + 1; q < np; ++q) jtj[p][q] = jtj[q][p];

        double grad_norm = 0.0;
        for (double v : jtr) grad_norm = std::max(grad_norm, std::abs(v));
        if (grad_norm < 1e-14 * std::max(1.0, cost)) {
            out.converged = true;
            break;
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 24; ++attempt) {
            auto lhs = jtj;
            std::vector<double> rhs(np);
            for (int p = 0; p < np; ++p) {
                lhs[p][p] += mu * (jtj[p][p] > 0.0 ? jtj[p][p] : 1.0);
                rhs[p] = -jtr[p];
            }
            if (!solve_dense(lhs, rhs)) {
                mu *= 10.0;
                continue;
            }
            std::vector<double> trial = params;
            for (int p = 0; p < np; ++p) trial[p] += rhs[p];
            residuals(trial, r_try);
            double cost_try = 0.0;
            for (double v : r_try) cost_try += v * v;
            if (cost_try < cost) {
                params = trial;
                r = r_try;
                const double improvement = cost - cost_try;
                cost = cost_try;
                mu = std::max(mu * 0.3, 1e-12);
                stepped = true;
                if (improvement < 1e-16 * (cost + 1e-30)) out.converged = true;
                break;
            }
            mu *= 10.0;
        }
        if (!stepped) {
            out.converged = true;  // stalled at a minimum within float precision
            break;
        }
    }
    out.rmse = std::sqrt(cost / n_resid);
    return out;
}

}  // namespace

GBCDHistogram gbcd_from_segments(const std::vector<std::pair<double, double>>& segments,
                                 int n_bins) {
    if (n_bins < 2) throw std::invalid_argument("gbcd: n_bins must be >= 2");
    if (segments.empty()) throw std::invalid_argument("gbcd: empty network");
    GBCDHistogram h;
    const double lo = -kMisorientationWindow, hi = kMisorientationWindow;
    h.edges.resize(n_bins + 1);
    for (int i = 0; i <= n_bins; ++i) h.edges[i] = lo + (hi - lo) * i / n_bins;
    h.density.assign(n_bins, 0.0);
    for (const auto& [len, dalpha] : segments) {
        int bin = static_cast<int>((dalpha - lo) / (hi - lo) * n_bins);
        bin = std::clamp(bin, 0, n_bins - 1);
        h.density[bin] += len;
        h.total_length += len;
    }
    if (h.total_length <= 0.0) throw std::invalid_argument("gbcd: zero total length");
    for (int i = 0; i < n_bins; ++i) h.density[i] /= h.total_length * h.bin_width(i);
    return h;
}

GBCDHistogram gbcd(const GrainNetwork& net, int n_bins) {
    std::vector<std::pair<double, double>> segments;
    for (std::size_t b = 0; b < net.boundaries.size(); ++b)
        if (net.boundaries[b].alive)
            segments.emplace_back(net.boundary_length(static_cast<int>(b)),
                                  net.misorientation(static_cast<int>(b)));
    return gbcd_from_segments(segments, n_bins);
}

GBCDHistogram merge_histograms(const std::vector<GBCDHistogram>& parts) {
    if (parts.empty()) throw std::invalid_argument("merge_histograms: nothing to merge");
    GBCDHistogram out = parts.front();
    for (double& d : out.density) d *= out.total_length;
    for (std::size_t k = 1; k < parts.size(); ++k) {
        const GBCDHistogram& p = parts[k];
        if (p.edges != out.edges)
            throw std::invalid_argument("merge_histograms: binning differs between parts");
        for (std::size_t i = 0; i < out.density.size(); ++i)
            out.density[i] += p.density[i] * p.total_length;
        out.total_length += p.total_length;
    }
    for (std::size_t i = 0; i < out.density.size(); ++i) out.density[i] /= out.total_length;
    return out;
}

namespace {

// Minimum of sigma over the window; shifting the exponent by it keeps the
// normalized density finite at very small D.
double sigma_floor(const SurfaceTensionModel& model) {
    double lo = model.value(0.0);
    const int n = 512;
    for (int i = 0; i <= n; ++i) {
        const double t = -kMisorientationWindow + 2.0 * kMisorientationWindow * i / n;
        lo = std::min(lo, model.value(t));
    }
    return lo;
}

// Integral of exp(-(sigma - shift)/D) over the window, composite Simpson.
double shifted_partition(const SurfaceTensionModel& model, double D, double shift) {
    const int n = 20000;  // even
    const double lo = -kMisorientationWindow, hi = kMisorientationWindow;
    const double h = (hi - lo) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double theta = lo + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * std::exp(-(model.value(theta) - shift) / D);
    }
    return acc * h / 3.0;
}

}  // namespace

double boltzmann_partition(const SurfaceTensionModel& model, double D) {
    if (!(D > 0.0)) throw std::invalid_argument("boltzmann_partition: D must be > 0");
    const double shift = sigma_floor(model);
    return std::exp(-shift / D) * shifted_partition(model, D, shift);
}

std::vector<double> boltzmann_density(const SurfaceTensionModel& model, double D,
                                      const std::vector<double>& grid) {
    if (!(D > 0.0)) throw std::invalid_argument("boltzmann_density: D must be > 0");
    const double shift = sigma_floor(model);
    const double z = shifted_partition(model, D, shift);
    std::vector<double> rho(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        rho[i] = std::exp(-(model.value(grid[i]) - shift) / D) / z;
    return rho;
}

std::vector<double> boltzmann_bin_density(const SurfaceTensionModel& model, double D,
                                          const GBCDHistogram& hist) {
    if (!(D > 0.0)) throw std::invalid_argument("boltzmann_bin_density: D must be > 0");
    const double shift = sigma_floor(model);
    const double z = shifted_partition(model, D, shift);
    std::vector<double> rho(hist.density.size());
    for (int i = 0; i < hist.n_bins(); ++i) {
        // Composite Simpson within the bin; enough intervals to resolve cold
        // densities narrower than the bin.
        const double a = hist.edges[i], b = hist.edges[i + 1];
        const int n = 16;  // even
        const double h = (b - a) / n;
        double acc = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            acc += w * std::exp(-(model.value(a + k * h) - shift) / D);
        }
        rho[i] = acc * h / 3.0 / (z * (b - a));
    }
    return rho;
}

double kl_divergence(const GBCDHistogram& hist, const SurfaceTensionModel& model, double D) {
    const auto rho = boltzmann_bin_density(model, D, hist);
    double kl = 0.0;
    for (int i = 0; i < hist.n_bins(); ++i) {
        const double p = hist.density[i];
        if (p <= 0.0) continue;
        kl += p * std::log(p / rho[i]) * hist.bin_width(i);
    }
    return kl;
}

TemperatureFit fit_temperature(const GBCDHistogram& hist, const SurfaceTensionModel& model) {
    const double log_lo = std::log(1e-4), log_hi = std::log(10.0);
    const auto f = [&](double logd) { return kl_divergence(hist, model, std::exp(logd)); };

    // Coarse bracket, then golden section.
    const int n_scan = 96;
    int best = 0;
    double best_val = f(log_lo);
    for (int k = 1; k <= n_scan; ++k) {
        const double x = log_lo + (log_hi - log_lo) * k / n_scan;
        const double v = f(x);
        if (v < best_val) {
            best_val = v;
            best = k;
        }
    }
    double lo = log_lo + (log_hi - log_lo) * std::max(0, best - 1) / n_scan;
    double hi = log_lo + (log_hi - log_lo) * std::min(n_scan, best + 1) / n_scan;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = f(c), fd = f(d);
    while (hi - lo > 1e-10) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = f(d);
        }
    }
    TemperatureFit out;
    const double log_best = fc < fd ? c : d;
    out.D = std::exp(log_best);
    out.kl = std::min(fc, fd);
    out.at_lower = log_best < log_lo + 1e-6;
    out.at_upper = log_best > log_hi - 1e-6;
    return out;
}

ExponentialFit fit_exponential(const TimeSeries& ts) {
    const int n = static_cast<int>(ts.times.size());
    if (n < 6) throw std::invalid_argument("fit_exponential: need at least 6 samples");

    // Log-linear initialization over the positive samples.
    double st = 0, sy = 0, stt = 0, sty = 0;
    int m = 0;
    for (int i = 0; i < n; ++i)
        if (ts.values[i] > 0.0) {
            const double ly = std::log(ts.values[i]);
            st += ts.times[i];
            sy += ly;
            stt += ts.times[i] * ts.times[i];
            sty += ts.times[i] * ly;
            ++m;
        }
    double a0 = 1.0, r0 = 0.0;
    if (m >= 2 && m * stt - st * st > 0.0) {
        const double slope = (m * sty - st * sy) / (m * stt - st * st);
        const double icept = (sy - slope * st) / m;
        a0 = std::exp(icept);
        r0 = -slope;
    }

    std::vector<double> p{a0, r0};
    const auto resid = [&](const std::vector<double>& q, std::vector<double>& r) {
        for (int i = 0; i < n; ++i)
            r[i] = q[0] * std::exp(-q[1] * ts.times[i]) - ts.values[i];
    };
    const LevMarResult lm = levenberg_marquardt(resid, p, n);
    return {p[0], p[1], lm.rmse, lm.converged};
}

PowerLawFit fit_power_law(const TimeSeries& ts, const PowerLawOptions& opts) {
    const int n = static_cast<int>(ts.times.size());
    const int np = 2 + (opts.with_offset ? 1 : 0) + (opts.fix_exponent ? 0 : 1);
    if (n < 3 * np) throw std::invalid_argument("fit_power_law: too few samples");

    const double y0 = ts.values.front();
    const double y1 = ts.values.back();
    const double t1 = std::max(ts.times.back(), 1e-12);
    // Heuristic initialization: match the endpoint drop with exponent ~1.
    double b0 = std::max((y0 / std::max(y1, 1e-12) - 1.0) / t1, 1e-3);

    std::vector<double> p;
    p.push_back(y0);  // scale
    p.push_back(b0);  // timescale
    if (!opts.fix_exponent) p.push_back(1.0);
    if (opts.with_offset) p.push_back(0.0);

    const auto resid = [&](const std::vector<double>& q, std::vector<double>& r) {
        const double scale = q[0];
        const double tsc = q[1];
        const double expo = opts.fix_exponent ? opts.exponent : q[2];
        const double off = opts.with_offset ? q.back() : 0.0;
        for (int i = 0; i < n; ++i) {
            const double base = std::max(1.0 + tsc * ts.times[i], 1e-12);
            r[i] = off + scale * std::pow(base, -expo) - ts.values[i];
        }
    };
    const LevMarResult lm = levenberg_marquardt(resid, p, n, 400);

    PowerLawFit out;
    out.scale = p[0];
    out.timescale = p[1];
    out.exponent = opts.fix_exponent ? opts.exponent : p[2];
    out.offset = opts.with_offset ? p.back() : 0.0;
    out.rmse = lm.rmse;
    out.converged = lm.converged;
    return out;
}

PolynomialFit fit_polynomial(const TimeSeries& ts, int degree) {
    const int n = static_cast<int>(ts.times.size());
    const int np = degree + 1;
    if (degree < 0) throw std::invalid_argument("fit_polynomial: negative degree");
    if (n < 3 * np) throw std::invalid_argument("fit_polynomial: too few samples");

    // Scale time to [0, 1] for conditioning, then map coefficients back.
    const double tmax = std::max(*std::max_element(ts.times.begin(), ts.times.end()), 1e-300);
    std::vector<std::vector<double>> ata(np, std::vector<double>(np, 0.0));
    std::vector<double> atb(np, 0.0);
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(np, 1.0);
        const double x = ts.times[i] / tmax;
        for (int p = 1; p < np; ++p) row[p] = row[p - 1] * x;
        for (int p = 0; p < np; ++p) {
            atb[p] += row[p] * ts.values[i];
            for (int q = 0; q < np; ++q) ata[p][q] += row[p] * row[q];
        }
    }
    if (!solve_dense(ata, atb)) throw std::runtime_error("fit_polynomial: singular system");

    PolynomialFit out;
    out.coeffs.resize(np);
    double scale = 1.0;
    for (int p = 0; p < np; ++p) {
        out.coeffs[p] = atb[p] / scale;
        scale *= tmax;
    }
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double y = 0.0, xp = 1.0;
        for (int p = 0; p < np; ++p) {
            y += out.coeffs[p] * xp;
            xp *= ts.times[i];
        }
        sq += (y - ts.values[i]) * (y - ts.values[i]);
    }
    out.rmse = std::sqrt(sq / n);
    return out;
}

double average_area(const GrainNetwork& net) {
    const int n = net.alive_grains();
    if (n < 1) throw std::invalid_argument("average_area: empty network");
    return net.side * net.side / n;
}

void write_gbcd_csv(const std::string& path, const GBCDHistogram& hist,
                    const std::vector<double>& model_density) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_gbcd_csv: cannot open " + path);
    out << "# units: bin_center [rad], density [1/rad]"
        << (model_density.empty() ? "" : ", model_density [1/rad]") << "\n";
    out << "bin_center,density" << (model_density.empty() ? "" : ",model_density") << "\n";
    char buf[160];
    for (int i = 0; i < hist.n_bins(); ++i) {
        const double center = 0.5 * (hist.edges[i] + hist.edges[i + 1]);
        if (model_density.empty())
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", center, hist.density[i]);
        else
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", center, hist.density[i],
                          model_density[i]);
        out << buf;
    }
}

void write_timeseries_csv(const std::string& path, const std::string& name,
                          const std::string& unit, const TimeSeries& ts) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_timeseries_csv: cannot open " + path);
    out << "# units: t [time], " << name << " [" << unit << "]\n";
    out << "t," << name << "\n";
    char buf[96];
    for (std::size_t i = 0; i < ts.times.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", ts.times[i], ts.values[i]);
        out << buf;
    }
}

}  // namespace gbflow
