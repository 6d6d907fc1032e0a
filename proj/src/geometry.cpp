#include "gbflow/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "gbflow/orientation.hpp"

namespace gbflow {

namespace {

constexpr double kCoincidentTol = 1e-30;  // squared distance

// Gradient of the distance sum, -sum_j unit(x^(j) - a).
Vec2 distance_sum_gradient(const AnchorTriangle& tri, const Vec2& a) {
    Vec2 g;
    for (const Vec2& x : tri.x) g -= unit(x - a);
    return g;
}

}  // namespace

std::array<bool, 3> interior_angle_condition(const AnchorTriangle& tri) {
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (norm2(tri.x[i] - tri.x[j]) < kCoincidentTol)
                throw std::invalid_argument("interior_angle_condition: coincident anchor points");

    std::array<bool, 3> ok{};
    for (int i = 0; i < 3; ++i) {
        Vec2 s;
        for (int j = 0; j < 3; ++j)
            if (j != i) s += unit(tri.x[j] - tri.x[i]);
        ok[i] = norm(s) > 1.0;
    }
    return ok;
}

double distance_sum(const AnchorTriangle& tri, const Vec2& a) {
    double f = 0.0;
    for (const Vec2& x : tri.x) f += norm(x - a);
    return f;
}

EquilibriumState fermat_point(const AnchorTriangle& tri, double tol, int max_iterations) {
    const auto cond = interior_angle_condition(tri);
    if (!(cond[0] && cond[1] && cond[2]))
        throw std::invalid_argument(
            "fermat_point: interior-angle condition fails (a vertex angle >= 2*pi/3 "
            "or collinear anchors)");

    // Start at the centroid; the condition keeps the minimizer strictly away
    // from the anchors.
    Vec2 a = (tri.x[0] + tri.x[1] + tri.x[2]) / 3.0;
    double resid = norm(distance_sum_gradient(tri, a));
    int iter = 0;
    for (; iter < max_iterations && resid > tol; ++iter) {
        // Weiszfeld step: weighted average with weights 1/|x - a|.
        Vec2 num;
        double den = 0.0;
        bool near_anchor = false;
        for (const Vec2& x : tri.x) {
            const double d = norm(x - a);
            if (d < 1e-14) {  // sitting on an anchor: nudge off and continue
                near_anchor = true;
                break;
            }
            num += x / d;
            den += 1.0 / d;
        }
        if (near_anchor) {
            a += Vec2{1e-9, 1e-9};
            resid = norm(distance_sum_gradient(tri, a));
            continue;
        }
        const Vec2 a_weiszfeld = num / den;

        // Newton polish once the iterate is in the basin: the Hessian of the
        // distance sum is sum_j (I - u u^T)/|b_j|, positive definite here.
        double hxx = 0.0, hxy = 0.0, hyy = 0.0;
        for (const Vec2& x : tri.x) {
            const Vec2 b = x - a;
            const double d = norm(b);
            const Vec2 u = b / d;
            hxx += (1.0 - u.x * u.x) / d;
            hxy += (-u.x * u.y) / d;
            hyy += (1.0 - u.y * u.y) / d;
        }
        const Vec2 g = distance_sum_gradient(tri, a);
        const double det = hxx * hyy - hxy * hxy;
        Vec2 a_next = a_weiszfeld;
        if (det > 1e-300) {
            const Vec2 step{-(hyy * g.x - hxy * g.y) / det, -(hxx * g.y - hxy * g.x) / det};
            const Vec2 a_newton = a + step;
            // Accept Newton only if it does not increase the objective.
            if (distance_sum(tri, a_newton) <= distance_sum(tri, a_weiszfeld))
                a_next = a_newton;
        }
        a = a_next;
        resid = norm(distance_sum_gradient(tri, a));
    }
    if (resid > tol)
        throw std::runtime_error("fermat_point: no convergence within iteration cap");

    EquilibriumState eq;
    eq.junction = a;
    for (int j = 0; j < 3; ++j) {
        eq.arms[j] = tri.x[j] - a;
        eq.lengths[j] = norm(eq.arms[j]);
    }
    eq.residual = resid;
    eq.iterations = iter;
    return eq;
}

Vec2 weighted_geometric_median(const std::vector<Vec2>& points,
                               const std::vector<double>& weights, Vec2 start,
                               double tol, int max_iterations) {
    Vec2 a = start;
    for (int iter = 0; iter < max_iterations; ++iter) {
        Vec2 grad;
        Vec2 num;
        double den = 0.0;
        for (std::size_t k = 0; k < points.size(); ++k) {
            const Vec2 b = points[k] - a;
            const double d = norm(b);
            if (d < 1e-14) return a;  // landed on a vertex of the cell
            grad -= weights[k] * (b / d);
            num += (weights[k] / d) * points[k];
            den += weights[k] / d;
        }
        if (norm(grad) <= tol) return a;
        a = num / den;
    }
    return a;
}

double perimeter_barrier_constant(const AnchorTriangle& tri, const EquilibriumState& eq) {
    const double r = 0.5 * std::min({eq.lengths[0], eq.lengths[1], eq.lengths[2]});
    const auto f_on_circle = [&](double phi) {
        return distance_sum(tri, eq.junction + r * Vec2{std::cos(phi), std::sin(phi)});
    };

    // Coarse scan to bracket the global minimum on the circle, then
    // golden-section refinement inside the winning bracket.
    const int n_scan = 1024;
    const double two_pi = 2.0 * M_PI;
    int best = 0;
    double best_val = f_on_circle(0.0);
    for (int k = 1; k < n_scan; ++k) {
        const double v = f_on_circle(two_pi * k / n_scan);
        if (v < best_val) {
            best_val = v;
            best = k;
        }
    }
    double lo = two_pi * (best - 1) / n_scan;
    double hi = two_pi * (best + 1) / n_scan;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo);
    double d = lo + gr * (hi - lo);
    double fc = f_on_circle(c), fd = f_on_circle(d);
    while (hi - lo > 1e-13) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = f_on_circle(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = f_on_circle(d);
        }
    }
    return std::min(fc, fd);
}

double initial_energy(const AnchorTriangle& tri, const SurfaceTensionModel& model,
                      const std::array<double, 3>& alpha0, const Vec2& a0) {
    const auto d = misorientations(alpha0);
    double e = 0.0;
    for (int j = 0; j < 3; ++j) e += model.value(d[j]) * norm(a0 - tri.x[j]);
    return e;
}

bool check_energy_condition(const AnchorTriangle& tri, const SurfaceTensionModel& model,
                            const std::array<double, 3>& alpha0, const Vec2& a0,
                            double barrier) {
    return energy_condition_margin(tri, model, alpha0, a0, barrier) > 0.0;
}

double energy_condition_margin(const AnchorTriangle& tri, const SurfaceTensionModel& model,
                               const std::array<double, 3>& alpha0, const Vec2& a0,
                               double barrier) {
    return model.value(0.0) * barrier - initial_energy(tri, model, alpha0, a0);
}

}  // namespace gbflow
