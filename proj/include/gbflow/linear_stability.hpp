#pragma once

#include <array>
#include <string>

#include "gbflow/geometry.hpp"
#include "gbflow/junction_dynamics.hpp"

namespace gbflow {

using Mat2 = std::array<std::array<double, 2>, 2>;
using Mat3 = std::array<std::array<double, 3>, 3>;

// Linearization of the junction flow at the equilibrium of a given anchor
// triangle: the orientation block decays like exp(-gamma*curvature(0)*B t)
// and the position block like exp(-eta*sigma(0)*L t).
struct LinearizedSystem {
    Mat3 orientation_matrix{};  // B: couples the three orientations
    Mat2 position_matrix{};     // L: junction stiffness, positive definite
    double lambda1 = 0.0;       // smallest positive eigenvalue of B
    double lambda2 = 0.0;       // smallest eigenvalue of L
    double rate = 0.0;          // min(gamma*curvature(0)*lambda1, eta*sigma(0)*lambda2)
};

// Cyclic coupling matrix
//   [ c1+c2  -c2    -c1  ]
//   [ -c2    c2+c3  -c3  ]
//   [ -c1    -c3    c3+c1]
Mat3 cyclic_coupling_matrix(double c1, double c2, double c3);

// Eigenvalues of the cyclic coupling matrix in closed form:
//   {0, s - r, s + r},  s = c1+c2+c3,  r = sqrt(((c1-c2)^2+(c2-c3)^2+(c3-c1)^2)/2)
std::array<double, 3> eigvals_cyclic(double c1, double c2, double c3);

// Orientation coupling matrix built from the three equilibrium arm lengths.
Mat3 orientation_matrix(const std::array<double, 3>& lengths);

// Smallest positive eigenvalue of the orientation matrix, in closed form.
// Throws std::invalid_argument on nonpositive lengths.
double lambda1(const std::array<double, 3>& lengths);

// Junction stiffness L = sum_j (I - u^(j) x u^(j)) / |b^(j)| at equilibrium.
Mat2 position_matrix(const EquilibriumState& eq);

// Smallest eigenvalue of the junction stiffness, in closed form:
//   (sum_j 1/l_j - sqrt(sum_{j<k}(1/l_j - 1/l_k)^2 / 2)) / 2
double lambda2(const std::array<double, 3>& lengths);

LinearizedSystem build_linearized(const JunctionSystem& sys,
                                  const EquilibriumState& eq);

// Combined linear decay rate min(gamma*curvature(0)*lambda1, eta*sigma(0)*lambda2).
double combined_rate(const JunctionSystem& sys, const LinearizedSystem& lin);

// ---- symmetric eigensolvers (numeric oracles for the closed forms) ----

// Eigenvalues ascending.
std::array<double, 2> sym2_eigenvalues(const Mat2& m);
// Eigenvalues ascending, cyclic Jacobi sweeps.
std::array<double, 3> sym3_eigenvalues(const Mat3& m);
// Unit eigenvector for the given eigenvalue of a symmetric 2x2.
Vec2 sym2_eigenvector(const Mat2& m, double eigenvalue);
// Unit eigenvector for the given eigenvalue of a symmetric 3x3.
std::array<double, 3> sym3_eigenvector(const Mat3& m, double eigenvalue);

struct DecayFit {
    bool ok = false;
    double rate = 0.0;       // fitted exponential decay rate of the deviation
    double r_squared = 0.0;
    int n_samples = 0;
    std::string message;
};

// Least-squares slope of log(deviation) over the trailing window where the
// deviation from the asymptotic profile lies in [window_lo, window_hi].
// profile = (mean orientation, equilibrium junction position).
DecayFit measure_decay_rate(const Trajectory& traj, double alpha_limit,
                            const Vec2& pos_limit, double window_lo = 1e-10,
                            double window_hi = 1e-3);

struct StabilityRow {
    std::array<double, 3> lengths{};
    double lambda1 = 0.0, lambda2 = 0.0, rate = 0.0;
    double observed_rate = 0.0, r_squared = 0.0;
};

// CSV export, one row per triangle.
void write_stability_csv(const std::string& path,
                         const std::vector<StabilityRow>& rows);

}  // namespace gbflow
