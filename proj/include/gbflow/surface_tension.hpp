#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace gbflow {

// Grain-boundary energy density sigma(theta) as a function of lattice
// misorientation, with analytic first and second derivatives. Models are
// immutable after construction and safe to share across threads.
struct SurfaceTensionModel {
    std::function<double(double)> value;      // sigma(theta)
    std::function<double(double)> slope;      // d sigma / d theta
    std::function<double(double)> curvature;  // d^2 sigma / d theta^2
    std::string label;
    bool even = false;  // declared even in theta
};

// sigma(theta) = a + b*sin^2(c*theta), with
//   slope     = b*c*sin(2*c*theta)
//   curvature = 2*b*c^2*cos(2*c*theta)
SurfaceTensionModel sine_squared_model(double a, double b, double c);

// Default density 1 + 0.25*sin^2(2*theta); minimum sigma(0)=1, curvature(0)=2.
SurfaceTensionModel default_model();

// Parse a plain-text model spec of the form "sigma = a + b*sin^2(c*theta)".
// Whitespace is ignored; a, b, c are decimal literals. Throws on malformed input.
SurfaceTensionModel parse_model_spec(const std::string& text);

struct AssumptionCheck {
    std::string name;
    bool passed = true;
    // First grid point at which the assumption fails (NaN if passed).
    double violation_theta = std::numeric_limits<double>::quiet_NaN();
};

struct ValidationReport {
    std::vector<AssumptionCheck> checks;
    double theta_max = 0.0;
    int n_grid = 0;

    bool all_passed() const;
    const AssumptionCheck* find(const std::string& name) const;
};

// Check the structural assumptions on sigma over a uniform grid on
// [-theta_max, theta_max]:
//   "minimum_at_zero":      sigma(theta) >= sigma(0) > 0
//   "monotone_slope":       slope(theta)*theta >= 0 and curvature(0) > 0
//   "unique_critical_point": slope(theta) = 0 only at theta = 0 (tol 1e-12)
//   "even" (only when declared): sigma(theta) == sigma(-theta)
// Throws std::invalid_argument on non-finite sigma values (malformed model)
// or on bad grid parameters.
ValidationReport validate_assumptions(const SurfaceTensionModel& model,
                                      double theta_max, int n_grid);

}  // namespace gbflow
