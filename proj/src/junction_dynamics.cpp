#include "gbflow/junction_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace gbflow {

JunctionRate rhs(const JunctionSystem& sys, const JunctionState& s) {
    std::array<Vec2, 3> b;
    std::array<double, 3> len;
    for (int j = 0; j < 3; ++j) {
        b[j] = sys.anchors.x[j] - s.pos;
        len[j] = norm(b[j]);
        if (len[j] < kArmLengthFloor)
            throw std::runtime_error("rhs: junction collided with an anchor");
    }
    const auto d = misorientations(s.alpha);

    JunctionRate r;
    for (int j = 0; j < 3; ++j) {
        const int jp = (j + 1) % 3;
        r.alpha_rate[j] =
            -sys.gamma * (sys.model.slope(d[jp]) * len[jp] - sys.model.slope(d[j]) * len[j]);
    }
    for (int j = 0; j < 3; ++j) r.pos_rate += sys.model.value(d[j]) * (b[j] / len[j]);
    r.pos_rate *= sys.eta;
    return r;
}

double energy(const JunctionSystem& sys, const JunctionState& s) {
    const auto d = misorientations(s.alpha);
    double e = 0.0;
    for (int j = 0; j < 3; ++j) e += sys.model.value(d[j]) * norm(sys.anchors.x[j] - s.pos);
    return e;
}

double Trajectory::deviation(std::size_t i, double alpha_ref, const Vec2& pos_ref) const {
    double da2 = 0.0;
    for (double a : alphas[i]) da2 += (a - alpha_ref) * (a - alpha_ref);
    return std::sqrt(da2) + norm(positions[i] - pos_ref);
}

namespace {

using State5 = std::array<double, 5>;

State5 pack(const JunctionState& s) {
    return {s.alpha[0], s.alpha[1], s.alpha[2], s.pos.x, s.pos.y};
}

JunctionState unpack(const State5& y, double t) {
    return {{y[0], y[1], y[2]}, {y[3], y[4]}, t};
}

State5 eval_rhs(const JunctionSystem& sys, const State5& y) {
    const JunctionRate r = rhs(sys, unpack(y, 0.0));
    return {r.alpha_rate[0], r.alpha_rate[1], r.alpha_rate[2], r.pos_rate.x, r.pos_rate.y};
}

State5 axpy(const State5& y, double h, const State5& k) {
    State5 out;
    for (int i = 0; i < 5; ++i) out[i] = y[i] + h * k[i];
    return out;
}

// Dormand-Prince 5(4) coefficients.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                 B5 = -2187.0 / 6784, B6 = 11.0 / 84;
constexpr double E1 = 35.0 / 384 - 5179.0 / 57600, E3 = 500.0 / 1113 - 7571.0 / 16695,
                 E4 = 125.0 / 192 - 393.0 / 640, E5 = -2187.0 / 6784 + 92097.0 / 339200,
                 E6 = 11.0 / 84 - 187.0 / 2100, E7 = -1.0 / 40;

struct DPState {
    State5 y;
    State5 k1;  // FSAL derivative at y
};

// One embedded step attempt; returns the scaled error norm and the proposed
// solution. k7 becomes the next step's k1 on acceptance.
double dp_step(const JunctionSystem& sys, const DPState& in, double h, State5* y_out,
               State5* k7_out, double rel_tol, double abs_tol) {
    const State5& y = in.y;
    const State5& k1 = in.k1;
    const State5 k2 = eval_rhs(sys, axpy(y, h * A21, k1));
    State5 tmp;
    for (int i = 0; i < 5; ++i) tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    const State5 k3 = eval_rhs(sys, tmp);
    for (int i = 0; i < 5; ++i) tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    const State5 k4 = eval_rhs(sys, tmp);
    for (int i = 0; i < 5; ++i)
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    const State5 k5 = eval_rhs(sys, tmp);
    for (int i = 0; i < 5; ++i)
        tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    const State5 k6 = eval_rhs(sys, tmp);
    State5 y5;
    for (int i = 0; i < 5; ++i)
        y5[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    const State5 k7 = eval_rhs(sys, y5);

    double err2 = 0.0;
    for (int i = 0; i < 5; ++i) {
        const double e =
            h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        const double scale = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
        err2 += (e / scale) * (e / scale);
    }
    *y_out = y5;
    *k7_out = k7;
    return std::sqrt(err2 / 5.0);
}

}  // namespace

Trajectory integrate(const JunctionSystem& sys, const JunctionState& s0, double t_end,
                     const IntegrateOptions& opts) {
    if (!(sys.gamma > 0.0)) throw std::invalid_argument("integrate: gamma must be > 0");
    if (!(sys.eta > 0.0)) throw std::invalid_argument("integrate: eta must be > 0");
    if (!(t_end > 0.0)) throw std::invalid_argument("integrate: t_end must be > 0");

    Trajectory traj;
    traj.gamma = sys.gamma;
    traj.eta = sys.eta;

    // Record whether the confinement guarantee applies to this initial state.
    try {
        const EquilibriumState eq = fermat_point(sys.anchors);
        const double barrier = perimeter_barrier_constant(sys.anchors, eq);
        traj.energy_condition_ok =
            check_energy_condition(sys.anchors, sys.model, s0.alpha, s0.pos, barrier);
    } catch (const std::exception&) {
        traj.energy_condition_ok = false;  // no interior equilibrium
    }

    const double sample_dt = opts.sample_dt > 0.0 ? opts.sample_dt : t_end / 1000.0;
    const double alpha_sum0 = s0.alpha[0] + s0.alpha[1] + s0.alpha[2];

    auto record = [&](double t, const State5& y, const State5& k) {
        traj.times.push_back(t);
        traj.alphas.push_back({y[0], y[1], y[2]});
        traj.positions.push_back({y[3], y[4]});
        traj.alpha_rates.push_back({k[0], k[1], k[2]});
        traj.pos_rates.push_back({k[3], k[4]});
        traj.energies.push_back(energy(sys, unpack(y, t)));
    };

    DPState cur{pack(s0), {}};
    double t = 0.0;
    try {
        cur.k1 = eval_rhs(sys, cur.y);
    } catch (const std::runtime_error& e) {
        traj.anchor_collision = true;
        traj.diagnostic = e.what();
        return traj;
    }
    record(0.0, cur.y, cur.k1);

    double h = opts.fixed_dt > 0.0 ? opts.fixed_dt : sample_dt / 8.0;
    std::size_t next_sample = 1;

    while (t < t_end - 1e-15 * t_end) {
        const double t_target = std::min(t_end, next_sample * sample_dt);
        try {
            if (opts.fixed_dt > 0.0) {
                // Classic RK4 at fixed step, landing exactly on sample times.
                while (t < t_target - 1e-15 * t_end) {
                    const double hh = std::min(opts.fixed_dt, t_target - t);
                    const State5 k1 = eval_rhs(sys, cur.y);
                    const State5 k2 = eval_rhs(sys, axpy(cur.y, hh / 2, k1));
                    const State5 k3 = eval_rhs(sys, axpy(cur.y, hh / 2, k2));
                    const State5 k4 = eval_rhs(sys, axpy(cur.y, hh, k3));
                    for (int i = 0; i < 5; ++i)
                        cur.y[i] += hh / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
                    t += hh;
                }
            } else {
                while (t < t_target - 1e-15 * t_end) {
                    const double hh = std::min(h, t_target - t);
                    State5 y_new, k7;
                    const double err = dp_step(sys, cur, hh, &y_new, &k7, opts.rel_tol,
                                               opts.abs_tol);
                    if (err <= 1.0) {
                        t += hh;
                        cur.y = y_new;
                        cur.k1 = k7;
                    }
                    const double factor =
                        err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
                    h = std::max(hh * factor, opts.min_step);
                    if (hh <= opts.min_step && err > 1.0)
                        throw std::runtime_error("integrate: step size underflow");
                }
            }
        } catch (const std::runtime_error& e) {
            traj.anchor_collision = true;
            traj.diagnostic = e.what();
            return traj;
        }

        if (opts.conserve_orientation_sum) {
            // The flow conserves the orientation sum exactly; remove the
            // integrator's drift along (1,1,1).
            const double drift =
                (cur.y[0] + cur.y[1] + cur.y[2] - alpha_sum0) / 3.0;
            for (int i = 0; i < 3; ++i) cur.y[i] -= drift;
        }
        cur.k1 = eval_rhs(sys, cur.y);
        record(t, cur.y, cur.k1);
        ++next_sample;
    }
    return traj;
}

double dissipation_residual(const JunctionSystem& sys, const Trajectory& traj) {
    if (traj.size() < 2) return 0.0;
    double acc = 0.0;
    auto rate2 = [&](std::size_t i) {
        double a2 = 0.0;
        for (double v : traj.alpha_rates[i]) a2 += v * v;
        return a2 / sys.gamma + norm2(traj.pos_rates[i]) / sys.eta;
    };
    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
        const double dt = traj.times[i + 1] - traj.times[i];
        acc += 0.5 * dt * (rate2(i) + rate2(i + 1));
    }
    return std::abs(traj.energies.back() + acc - traj.energies.front());
}

ExistenceBound existence_time_lower_bound(const JunctionSystem& sys, const JunctionState& s0,
                                          const EquilibriumState& eq) {
    const double dist0 = norm(s0.pos - eq.junction);
    const double min_len = std::min({eq.lengths[0], eq.lengths[1], eq.lengths[2]});
    if (!(dist0 < 0.5 * min_len))
        throw std::invalid_argument(
            "existence_time_lower_bound: initial junction too far from equilibrium");

    double alpha_norm = 0.0;
    for (double a : s0.alpha) alpha_norm += a * a;
    alpha_norm = std::sqrt(alpha_norm);

    // sup|sigma|, sup|slope| and the slope's Lipschitz constant over the
    // window |theta| <= 4|alpha0|, by dense grid scan (lower estimates).
    const double window = 4.0 * alpha_norm;
    const int n = 20001;
    double m0 = std::abs(sys.model.value(0.0));
    double m1 = std::abs(sys.model.slope(0.0));
    double m2 = 0.0;
    if (window > 0.0) {
        double prev_slope = sys.model.slope(-window);
        double prev_theta = -window;
        for (int k = 0; k < n; ++k) {
            const double theta = -window + 2.0 * window * k / (n - 1);
            m0 = std::max(m0, std::abs(sys.model.value(theta)));
            const double sl = sys.model.slope(theta);
            m1 = std::max(m1, std::abs(sl));
            if (k > 0)
                m2 = std::max(m2, std::abs(sl - prev_slope) / (theta - prev_theta));
            prev_slope = sl;
            prev_theta = theta;
        }
    }

    const double arm_sum = eq.lengths[0] + eq.lengths[1] + eq.lengths[2];
    ExistenceBound out;
    out.m0 = m0;
    out.m1 = m1;
    out.m2 = m2;

    out.terms[0] = alpha_norm == 0.0
                       ? 0.0
                       : alpha_norm / (4.0 * sys.gamma * (m1 + 8.0 * m2 * alpha_norm) * arm_sum);
    out.terms[1] = dist0 == 0.0 ? 0.0 : dist0 / (3.0 * sys.eta * m0);
    out.terms[2] = m1 > 0.0 ? 1.0 / (12.0 * sys.gamma * m1)
                            : std::numeric_limits<double>::infinity();
    double inv_sum = 0.0;
    for (double l : eq.lengths) inv_sum += 1.0 / (l - 2.0 * dist0);
    out.terms[3] = 1.0 / (8.0 * sys.eta * m0 * inv_sum);

    out.bound = *std::min_element(out.terms.begin(), out.terms.end());
    out.at_equilibrium = alpha_norm == 0.0 && dist0 == 0.0;
    return out;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
    out << "# units: t [time], alpha1..alpha3 [rad], ax, ay [length], E "
           "[energy], dalpha_dt [rad/time], da_dt [length/time]\n";
    out << "t,alpha1,alpha2,alpha3,ax,ay,E,dalpha_dt,da_dt\n";
    char line[512];
    for (std::size_t i = 0; i < traj.size(); ++i) {
        double ar = 0.0;
        for (double v : traj.alpha_rates[i]) ar += v * v;
        std::snprintf(line, sizeof(line),
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      traj.times[i], traj.alphas[i][0], traj.alphas[i][1], traj.alphas[i][2],
                      traj.positions[i].x, traj.positions[i].y, traj.energies[i],
                      std::sqrt(ar), norm(traj.pos_rates[i]));
        out << line;
    }
}

}  // namespace gbflow
