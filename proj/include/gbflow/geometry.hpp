#pragma once

#include <array>
#include <vector>

#include "gbflow/surface_tension.hpp"
#include "gbflow/vec2.hpp"

namespace gbflow {

// Three fixed anchor points holding the outer ends of the boundaries.
struct AnchorTriangle {
    std::array<Vec2, 3> x;

    AnchorTriangle() = default;
    AnchorTriangle(Vec2 x1, Vec2 x2, Vec2 x3) : x{x1, x2, x3} {}
};

// Minimizer of the summed distance to the three anchors, together with the
// arm vectors b^(j) = x^(j) - a and their lengths.
struct EquilibriumState {
    Vec2 junction;                  // a_inf
    std::array<Vec2, 3> arms;       // x^(j) - a_inf
    std::array<double, 3> lengths;  // |arms[j]|
    double residual = 0.0;          // |sum_j unit(arms[j])| at convergence
    int iterations = 0;
};

// Per-vertex interior-angle condition: entry i is true iff
// |sum_{j != i} unit(x^(j) - x^(i))| > 1, i.e. the angle at vertex i is
// strictly less than 2*pi/3. All-true also excludes collinear anchors.
// Throws std::invalid_argument on coincident anchor points.
std::array<bool, 3> interior_angle_condition(const AnchorTriangle& tri);

// Summed distance f(a) = sum_j |x^(j) - a|.
double distance_sum(const AnchorTriangle& tri, const Vec2& a);

// Unique minimizer of distance_sum when the interior-angle condition holds at
// every vertex; the three arms meet at mutual angles 2*pi/3. Solved by
// Weiszfeld iteration with a Newton polish. Throws std::invalid_argument when
// the condition fails and std::runtime_error on non-convergence.
EquilibriumState fermat_point(const AnchorTriangle& tri, double tol = 1e-12,
                              int max_iterations = 100000);

// Weighted geometric median: minimizer of sum_k w_k |p_k - a| for w_k > 0.
// Used for local junction relaxation in the network pipeline. Returns the
// iterate after convergence to |gradient| <= tol or after max_iterations.
Vec2 weighted_geometric_median(const std::vector<Vec2>& points,
                               const std::vector<double>& weights, Vec2 start,
                               double tol = 1e-12, int max_iterations = 256);

// Barrier constant: infimum of distance_sum over the set of junction
// positions displaced from equilibrium by at least half the shortest arm.
// By convexity the infimum is attained on the circle
// |a - a_inf| = 0.5*min_j lengths[j]; minimized there by a scan plus
// golden-section refinement. Strictly greater than distance_sum(a_inf).
double perimeter_barrier_constant(const AnchorTriangle& tri,
                                  const EquilibriumState& eq);

// Initial-energy condition guaranteeing confinement and global existence:
//   sum_j sigma(d^(j)alpha_0)*|a_0 - x^(j)|  <  sigma(0) * barrier
double initial_energy(const AnchorTriangle& tri, const SurfaceTensionModel& model,
                      const std::array<double, 3>& alpha0, const Vec2& a0);

bool check_energy_condition(const AnchorTriangle& tri,
                            const SurfaceTensionModel& model,
                            const std::array<double, 3>& alpha0, const Vec2& a0,
                            double barrier);

// Signed margin sigma(0)*barrier - E(0); positive iff the condition holds.
double energy_condition_margin(const AnchorTriangle& tri,
                               const SurfaceTensionModel& model,
                               const std::array<double, 3>& alpha0,
                               const Vec2& a0, double barrier);

}  // namespace gbflow
