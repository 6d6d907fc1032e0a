#pragma once

#include <array>
#include <string>
#include <vector>

#include "gbflow/geometry.hpp"
#include "gbflow/orientation.hpp"
#include "gbflow/surface_tension.hpp"
#include "gbflow/vec2.hpp"

namespace gbflow {

// State of the reduced single-junction system: three grain orientations and
// the junction position.
struct JunctionState {
    std::array<double, 3> alpha{0.0, 0.0, 0.0};
    Vec2 pos;
    double t = 0.0;
};

struct JunctionSystem {
    AnchorTriangle anchors;
    SurfaceTensionModel model;
    double gamma = 1.0;  // misorientation relaxation rate (1/time)
    double eta = 1.0;    // junction mobility (1/time)
};

struct JunctionRate {
    std::array<double, 3> alpha_rate{0.0, 0.0, 0.0};
    Vec2 pos_rate;
};

// Arm length floor below which the junction is considered to have collided
// with an anchor and the flow is no longer defined.
inline constexpr double kArmLengthFloor = 1e-12;

// Right-hand side of the gradient flow:
//   d alpha^(j)/dt = -gamma*(slope(d^(j+1))|b^(j+1)| - slope(d^(j))|b^(j)|)
//   d a/dt         =  eta * sum_j sigma(d^(j)) * unit(b^(j))
// with b^(j) = x^(j) - a. Throws std::runtime_error if any |b^(j)| falls
// below the arm length floor.
JunctionRate rhs(const JunctionSystem& sys, const JunctionState& s);

// Total boundary energy E = sum_j sigma(d^(j) alpha) * |b^(j)|.
double energy(const JunctionSystem& sys, const JunctionState& s);

struct IntegrateOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    double sample_dt = 0.0;  // 0: t_end/1000
    double fixed_dt = 0.0;   // >0: classic RK4 with this step, no adaptivity
    double min_step = 1e-14;
    bool conserve_orientation_sum = true;  // project the exact invariant
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::array<double, 3>> alphas;
    std::vector<Vec2> positions;
    std::vector<std::array<double, 3>> alpha_rates;
    std::vector<Vec2> pos_rates;
    std::vector<double> energies;
    double gamma = 0.0;
    double eta = 0.0;
    bool anchor_collision = false;   // stopped early: arm shrank to the floor
    bool energy_condition_ok = true; // confinement guarantee applies
    std::string diagnostic;

    std::size_t size() const { return times.size(); }
    JunctionState state_at(std::size_t i) const {
        return {alphas[i], positions[i], times[i]};
    }
    // |alpha(t_i) - alpha_ref*(1,1,1)| + |a(t_i) - pos_ref|
    double deviation(std::size_t i, double alpha_ref, const Vec2& pos_ref) const;
};

// Integrate the flow from s0 to t_end, sampling on a uniform grid. Adaptive
// embedded Runge-Kutta 5(4) with step rejection unless fixed_dt is set.
// Terminates early with a diagnostic if an arm collapses. The energy
// condition is evaluated up front and recorded in the trajectory flag.
Trajectory integrate(const JunctionSystem& sys, const JunctionState& s0,
                     double t_end, const IntegrateOptions& opts = {});

// Residual of the dissipation identity
//   E(t) + (1/gamma) int |d alpha/dt|^2 + (1/eta) int |d a/dt|^2 = E(0)
// evaluated at the final sample, trapezoidal quadrature on the stored rates.
double dissipation_residual(const JunctionSystem& sys, const Trajectory& traj);

struct ExistenceBound {
    double bound = 0.0;
    std::array<double, 4> terms{};  // the four candidate horizons
    bool at_equilibrium = false;    // alpha0 uniform and a0 at equilibrium
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
};

// Lower bound for the maximal existence time from the initial data:
// min of four explicit horizons built from sup|sigma|, sup|slope| and the
// Lipschitz constant of the slope over |theta| <= 4|alpha0| (dense grid
// scan, an approximation from below). Requires |a0 - a_inf| < min_j|b_inf^(j)|/2;
// throws std::invalid_argument otherwise.
ExistenceBound existence_time_lower_bound(const JunctionSystem& sys,
                                          const JunctionState& s0,
                                          const EquilibriumState& eq);

// CSV export with columns t, alpha1, alpha2, alpha3, ax, ay, E,
// |dalpha/dt|, |da/dt|; units declared in a header comment line.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

}  // namespace gbflow
