#include "gbflow/linear_stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace gbflow {

Mat3 cyclic_coupling_matrix(double c1, double c2, double c3) {
    return Mat3{{{c1 + c2, -c2, -c1}, {-c2, c2 + c3, -c3}, {-c1, -c3, c3 + c1}}};
}

std::array<double, 3> eigvals_cyclic(double c1, double c2, double c3) {
    const double s = c1 + c2 + c3;
    const double r = std::sqrt(
        0.5 * ((c1 - c2) * (c1 - c2) + (c2 - c3) * (c2 - c3) + (c3 - c1) * (c3 - c1)));
    return {0.0, s - r, s + r};
}

Mat3 orientation_matrix(const std::array<double, 3>& lengths) {
    for (double l : lengths)
        if (!(l > 0.0)) throw std::invalid_argument("orientation_matrix: lengths must be > 0");
    return cyclic_coupling_matrix(lengths[0], lengths[1], lengths[2]);
}

double lambda1(const std::array<double, 3>& lengths) {
    for (double l : lengths)
        if (!(l > 0.0)) throw std::invalid_argument("lambda1: lengths must be > 0");
    return eigvals_cyclic(lengths[0], lengths[1], lengths[2])[1];
}

Mat2 position_matrix(const EquilibriumState& eq) {
    Mat2 m{{{0.0, 0.0}, {0.0, 0.0}}};
    for (int j = 0; j < 3; ++j) {
        const Vec2 u = eq.arms[j] / eq.lengths[j];
        m[0][0] += (1.0 - u.x * u.x) / eq.lengths[j];
        m[0][1] += (-u.x * u.y) / eq.lengths[j];
        m[1][1] += (1.0 - u.y * u.y) / eq.lengths[j];
    }
    m[1][0] = m[0][1];
    return m;
}

double lambda2(const std::array<double, 3>& lengths) {
    for (double l : lengths)
        if (!(l > 0.0)) throw std::invalid_argument("lambda2: lengths must be > 0");
    const double i1 = 1.0 / lengths[0], i2 = 1.0 / lengths[1], i3 = 1.0 / lengths[2];
    const double r = std::sqrt(
        0.5 * ((i1 - i2) * (i1 - i2) + (i2 - i3) * (i2 - i3) + (i3 - i1) * (i3 - i1)));
    return 0.5 * (i1 + i2 + i3 - r);
}

LinearizedSystem build_linearized(const JunctionSystem& sys, const EquilibriumState& eq) {
    LinearizedSystem lin;
    lin.orientation_matrix = orientation_matrix(eq.lengths);
    lin.position_matrix = position_matrix(eq);
    lin.lambda1 = lambda1(eq.lengths);
    lin.lambda2 = lambda2(eq.lengths);
    lin.rate = combined_rate(sys, lin);
    return lin;
}

double combined_rate(const JunctionSystem& sys, const LinearizedSystem& lin) {
    return std::min(sys.gamma * sys.model.curvature(0.0) * lin.lambda1,
                    sys.eta * sys.model.value(0.0) * lin.lambda2);
}

std::array<double, 2> sym2_eigenvalues(const Mat2& m) {
    const double tr = m[0][0] + m[1][1];
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    return {0.5 * (tr - disc), 0.5 * (tr + disc)};
}

std::array<double, 3> sym3_eigenvalues(const Mat3& m_in) {
    // Cyclic Jacobi sweeps; plenty for 3x3.
    Mat3 m = m_in;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(m[0][1]) + std::abs(m[0][2]) + std::abs(m[1][2]);
        if (off < 1e-15 * (std::abs(m[0][0]) + std::abs(m[1][1]) + std::abs(m[2][2]) + 1e-300))
            break;
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 3; ++q) {
                if (m[p][q] == 0.0) continue;
                const double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                Mat3 r = m;
                for (int k = 0; k < 3; ++k) {
                    r[p][k] = c * m[p][k] - s * m[q][k];
                    r[q][k] = s * m[p][k] + c * m[q][k];
                }
                Mat3 r2 = r;
                for (int k = 0; k < 3; ++k) {
                    r2[k][p] = c * r[k][p] - s * r[k][q];
                    r2[k][q] = s * r[k][p] + c * r[k][q];
                }
                m = r2;
            }
    }
    std::array<double, 3> ev{m[0][0], m[1][1], m[2][2]};
    std::sort(ev.begin(), ev.end());
    return ev;
}

Vec2 sym2_eigenvector(const Mat2& m, double eigenvalue) {
    // (m - lambda I) v = 0; pick the more independent row.
    const double a = m[0][0] - eigenvalue, b = m[0][1];
    const double c = m[1][0], d = m[1][1] - eigenvalue;
    Vec2 v;
    if (std::abs(a) + std::abs(b) >= std::abs(c) + std::abs(d))
        v = {-b, a};
    else
        v = {-d, c};
    const double n = norm(v);
    if (n < 1e-300) return {1.0, 0.0};  // eigenvalue with multiplicity 2
    return v / n;
}

std::array<double, 3> sym3_eigenvector(const Mat3& m, double eigenvalue) {
    // Cross products of rows of (m - lambda I); the largest is the kernel
    // direction.
    std::array<std::array<double, 3>, 3> a = m;
    for (int i = 0; i < 3; ++i) a[i][i] -= eigenvalue;
    auto cross3 = [](const std::array<double, 3>& u, const std::array<double, 3>& v) {
        return std::array<double, 3>{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
                                     u[0] * v[1] - u[1] * v[0]};
    };
    std::array<std::array<double, 3>, 3> cand{cross3(a[0], a[1]), cross3(a[1], a[2]),
                                              cross3(a[2], a[0])};
    int best = 0;
    double best_n = -1.0;
    for (int i = 0; i < 3; ++i) {
        const double n = cand[i][0] * cand[i][0] + cand[i][1] * cand[i][1] +
                         cand[i][2] * cand[i][2];
        if (n > best_n) {
            best_n = n;
            best = i;
        }
    }
    if (best_n < 1e-280) return {1.0, 0.0, 0.0};
    const double n = std::sqrt(best_n);
    return {cand[best][0] / n, cand[best][1] / n, cand[best][2] / n};
}

DecayFit measure_decay_rate(const Trajectory& traj, double alpha_limit, const Vec2& pos_limit,
                            double window_lo, double window_hi) {
    DecayFit fit;
    // Collect the trailing stretch of samples whose deviation sits inside the
    // fit window; stop once the deviation dips below the floor.
    std::vector<double> ts, logs;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double d = traj.deviation(i, alpha_limit, pos_limit);
        if (d < window_lo) break;
        if (d <= window_hi) {
            ts.push_back(traj.times[i]);
            logs.push_back(std::log(d));
        }
    }
    if (ts.size() < 4) {
        fit.message = "deviation never entered the fit window";
        return fit;
    }
    const std::size_t n = ts.size();
    double st = 0.0, sl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        st += ts[i];
        sl += logs[i];
    }
    const double mt = st / n, ml = sl / n;
    double stt = 0.0, stl = 0.0, sll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        stt += (ts[i] - mt) * (ts[i] - mt);
        stl += (ts[i] - mt) * (logs[i] - ml);
        sll += (logs[i] - ml) * (logs[i] - ml);
    }
    if (stt == 0.0) {
        fit.message = "degenerate time window";
        return fit;
    }
    const double slope = stl / stt;
    fit.ok = true;
    fit.rate = -slope;
    fit.r_squared = sll > 0.0 ? (stl * stl) / (stt * sll) : 1.0;
    fit.n_samples = static_cast<int>(n);
    return fit;
}

void write_stability_csv(const std::string& path, const std::vector<StabilityRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_stability_csv: cannot open " + path);
    out << "# units: lengths [length], lambda1 [length], lambda2 [1/length], "
           "rate, observed_rate [1/time], r_squared [-]\n";
    out << "l1,l2,l3,lambda1,lambda2,rate,observed_rate,r_squared\n";
    char line[320];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      r.lengths[0], r.lengths[1], r.lengths[2], r.lambda1, r.lambda2, r.rate,
                      r.observed_rate, r.r_squared);
        out << line;
    }
}

}  // namespace gbflow
