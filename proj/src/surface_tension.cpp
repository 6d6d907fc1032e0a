#include "gbflow/surface_tension.hpp"

#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gbflow {

SurfaceTensionModel sine_squared_model(double a, double b, double c) {
    SurfaceTensionModel m;
    m.value = [a, b, c](double t) {
        const double s = std::sin(c * t);
        return a + b * s * s;
    };
    m.slope = [b, c](double t) { return b * c * std::sin(2.0 * c * t); };
    m.curvature = [b, c](double t) { return 2.0 * b * c * c * std::cos(2.0 * c * t); };
    std::ostringstream label;
    label << "sigma = " << a << " + " << b << "*sin^2(" << c << "*theta)";
    m.label = label.str();
    m.even = true;
    return m;
}

SurfaceTensionModel default_model() { return sine_squared_model(1.0, 0.25, 2.0); }

namespace {

// Pull the next decimal literal out of s starting at i (skips spaces and an
// optional leading '*'-free context); advances i past the number.
double next_number(const std::string& s, std::size_t& i, const char* what) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t end = i;
    if (end < s.size() && (s[end] == '+' || s[end] == '-')) ++end;
    while (end < s.size() &&
           (std::isdigit(static_cast<unsigned char>(s[end])) || s[end] == '.' ||
            s[end] == 'e' || s[end] == 'E' ||
            ((s[end] == '+' || s[end] == '-') && (s[end - 1] == 'e' || s[end - 1] == 'E'))))
        ++end;
    if (end == i) throw std::invalid_argument(std::string("model spec: expected number for ") + what);
    const double v = std::stod(s.substr(i, end - i));
    i = end;
    return v;
}

void expect(const std::string& s, std::size_t& i, const std::string& token) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (s.compare(i, token.size(), token) != 0)
        throw std::invalid_argument("model spec: expected '" + token + "' near position " +
                                    std::to_string(i));
    i += token.size();
}

}  // namespace

SurfaceTensionModel parse_model_spec(const std::string& text) {
    // Grammar: sigma = <a> + <b> * sin^2( <c> * theta )
    std::size_t i = 0;
    expect(text, i, "sigma");
    expect(text, i, "=");
    const double a = next_number(text, i, "a");
    expect(text, i, "+");
    const double b = next_number(text, i, "b");
    expect(text, i, "*");
    expect(text, i, "sin^2");
    expect(text, i, "(");
    const double c = next_number(text, i, "c");
    expect(text, i, "*");
    expect(text, i, "theta");
    expect(text, i, ")");
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i != text.size())
        throw std::invalid_argument("model spec: trailing characters after ')'");
    return sine_squared_model(a, b, c);
}

bool ValidationReport::all_passed() const {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

const AssumptionCheck* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

ValidationReport validate_assumptions(const SurfaceTensionModel& model,
                                      double theta_max, int n_grid) {
    if (!(theta_max > 0.0)) throw std::invalid_argument("validate_assumptions: theta_max must be > 0");
    if (n_grid < 3) throw std::invalid_argument("validate_assumptions: n_grid must be >= 3");

    const double sigma0 = model.value(0.0);
    if (!std::isfinite(sigma0))
        throw std::invalid_argument("validate_assumptions: sigma(0) is not finite");

    AssumptionCheck minimum{"minimum_at_zero", sigma0 > 0.0, 0.0};
    if (minimum.passed) minimum.violation_theta = std::numeric_limits<double>::quiet_NaN();
    AssumptionCheck convex{"monotone_slope", model.curvature(0.0) > 0.0, 0.0};
    if (convex.passed) convex.violation_theta = std::numeric_limits<double>::quiet_NaN();
    AssumptionCheck critical{"unique_critical_point", true,
                             std::numeric_limits<double>::quiet_NaN()};
    AssumptionCheck even{"even", true, std::numeric_limits<double>::quiet_NaN()};

    // Uniform cell-midpoint grid: probes the open window, so a slope zero
    // sitting exactly on the window edge (periodic densities) is not
    // mistaken for a spurious critical point.
    const double slope_tol = 1e-12;
    for (int k = 0; k < n_grid; ++k) {
        const double theta = -theta_max + 2.0 * theta_max * (k + 0.5) / n_grid;
        const double s = model.value(theta);
        if (!std::isfinite(s))
            throw std::invalid_argument("validate_assumptions: non-finite sigma at theta = " +
                                        std::to_string(theta));
        const double ds = model.slope(theta);

        if (minimum.passed && s < sigma0 - 1e-15 * std::abs(sigma0)) {
            minimum.passed = false;
            minimum.violation_theta = theta;
        }
        if (convex.passed && ds * theta < -slope_tol) {
            convex.passed = false;
            convex.violation_theta = theta;
        }
        if (critical.passed && std::abs(ds) <= slope_tol && std::abs(theta) > slope_tol) {
            critical.passed = false;
            critical.violation_theta = theta;
        }
        if (model.even && even.passed) {
            const double mirror = model.value(-theta);
            if (std::abs(s - mirror) > 1e-12 * std::max(1.0, std::abs(s))) {
                even.passed = false;
                even.violation_theta = theta;
            }
        }
    }

    ValidationReport report;
    report.theta_max = theta_max;
    report.n_grid = n_grid;
    report.checks = {minimum, convex, critical};
    if (model.even) report.checks.push_back(even);
    return report;
}

}  // namespace gbflow
