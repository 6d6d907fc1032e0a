#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "gbflow/linear_stability.hpp"
#include "gbflow/surface_tension.hpp"
#include "helpers.hpp"

using namespace gbflow;
using testutil::triangle_from_lengths;

namespace {

std::array<double, 3> apply3(const Mat3& m, const std::array<double, 3>& v) {
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out[i] += m[i][j] * v[j];
    return out;
}

Vec2 apply2(const Mat2& m, const Vec2& v) {
    return {m[0][0] * v.x + m[0][1] * v.y, m[1][0] * v.x + m[1][1] * v.y};
}

}  // namespace

TEST_CASE("cyclic coupling matrix: direct substitution and kernel vector") {
    const Mat3 m = cyclic_coupling_matrix(1.0, 1.0, 1.0);
    CHECK(m[0][0] == 2.0);
    CHECK(m[0][1] == -1.0);
    CHECK(m[0][2] == -1.0);
    CHECK(m[1][1] == 2.0);
    CHECK(m[2][2] == 2.0);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int k = 0; k < 50; ++k) {
        const Mat3 b = orientation_matrix({u(rng), u(rng), u(rng)});
        const auto z = apply3(b, {1.0, 1.0, 1.0});
        for (double v : z) CHECK(std::abs(v) < 1e-14);
    }
}

TEST_CASE("closed-form eigenvalues of the cyclic matrix") {
    const auto sym = eigvals_cyclic(1.0, 1.0, 1.0);
    CHECK(sym[0] == 0.0);
    CHECK(sym[1] == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(sym[2] == doctest::Approx(3.0).epsilon(1e-15));

    const auto mix = eigvals_cyclic(1.0, 2.0, 3.0);
    CHECK(mix[1] == doctest::Approx(6.0 - std::sqrt(3.0)).epsilon(1e-14));
    CHECK(mix[2] == doctest::Approx(6.0 + std::sqrt(3.0)).epsilon(1e-14));

    const auto zero = eigvals_cyclic(0.0, 0.0, 0.0);
    CHECK(zero[0] == 0.0);
    CHECK(zero[1] == 0.0);
    CHECK(zero[2] == 0.0);

    // Numeric eigensolver oracle over mixed-sign coefficients.
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 200; ++k) {
        const double c1 = u(rng), c2 = u(rng), c3 = u(rng);
        auto closed = eigvals_cyclic(c1, c2, c3);
        std::sort(closed.begin(), closed.end());
        const auto numeric = sym3_eigenvalues(cyclic_coupling_matrix(c1, c2, c3));
        for (int i = 0; i < 3; ++i)
            CHECK(closed[i] == doctest::Approx(numeric[i]).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("lambda1: closed form against the numeric eigensolver") {
    CHECK(lambda1({1.0, 1.0, 1.0}) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(lambda1({1.0, 2.0, 3.0}) == doctest::Approx(6.0 - std::sqrt(3.0)).epsilon(1e-14));
    CHECK_THROWS_AS(lambda1({1.0, -1.0, 1.0}), std::invalid_argument);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.05, 5.0);
    for (int k = 0; k < 1000; ++k) {
        const std::array<double, 3> len{u(rng), u(rng), u(rng)};
        const double l1 = lambda1(len);
        CHECK(l1 > 0.0);
        const auto numeric = sym3_eigenvalues(orientation_matrix(len));
        CHECK(l1 == doctest::Approx(numeric[1]).epsilon(1e-10));
    }
}

TEST_CASE("junction stiffness: equilateral case, trace identity, positivity") {
    const EquilibriumState eq_eq =
        fermat_point(triangle_from_lengths({1.0, 1.0, 1.0}), 1e-13);
    const Mat2 l_eq = position_matrix(eq_eq);
    CHECK(l_eq[0][0] == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(l_eq[1][1] == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(l_eq[0][1] == doctest::Approx(0.0).epsilon(1e-10));

    const EquilibriumState eq123 =
        fermat_point(triangle_from_lengths({1.0, 2.0, 3.0}, 0.3), 1e-13);
    const Mat2 l123 = position_matrix(eq123);
    CHECK(l123[0][0] + l123[1][1] ==
          doctest::Approx(1.0 + 0.5 + 1.0 / 3.0).epsilon(1e-10));

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        const Vec2 xi{u(rng), u(rng)};
        CHECK(dot(apply2(l123, xi), xi) >= -1e-14);
    }
}

TEST_CASE("lambda2: closed form equals the smallest stiffness eigenvalue") {
    CHECK(lambda2({1.0, 1.0, 1.0}) == doctest::Approx(1.5).epsilon(1e-14));
    const double i1 = 1.0, i2 = 0.5, i3 = 1.0 / 3.0;
    const double expected =
        0.5 * (i1 + i2 + i3 -
               std::sqrt(0.5 * ((i1 - i2) * (i1 - i2) + (i2 - i3) * (i2 - i3) +
                                (i3 - i1) * (i3 - i1))));
    CHECK(lambda2({1.0, 2.0, 3.0}) == doctest::Approx(expected).epsilon(1e-14));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    for (int k = 0; k < 1000; ++k) {
        const std::array<double, 3> len{u(rng), u(rng), u(rng)};
        const AnchorTriangle tri = triangle_from_lengths(len, ang(rng));
        const EquilibriumState eq = fermat_point(tri, 1e-13);
        const auto evs = sym2_eigenvalues(position_matrix(eq));
        CHECK(lambda2(eq.lengths) == doctest::Approx(evs[0]).epsilon(1e-10));
        CHECK(lambda2(eq.lengths) > 0.0);
    }
}

TEST_CASE("combined decay rate and its limits") {
    const SurfaceTensionModel model = default_model();
    const AnchorTriangle tri = triangle_from_lengths({1.0, 1.0, 1.0});
    const EquilibriumState eq = fermat_point(tri, 1e-13);

    JunctionSystem sys{tri, model, 1.0, 1.0};
    LinearizedSystem lin = build_linearized(sys, eq);
    CHECK(lin.rate == doctest::Approx(1.5).epsilon(1e-10));  // min(2*3, 1*1.5)

    sys.eta = 1e12;  // mobility saturates: orientation rate binds
    CHECK(combined_rate(sys, lin) ==
          doctest::Approx(sys.gamma * model.curvature(0.0) * lin.lambda1).epsilon(1e-12));

    sys.eta = 1.0;
    sys.gamma = 1e-9;
    CHECK(combined_rate(sys, lin) ==
          doctest::Approx(1e-9 * model.curvature(0.0) * lin.lambda1).epsilon(1e-12));
}

TEST_CASE("symmetric eigensolvers recover known spectra and eigenvectors") {
    const Mat2 m2{{{2.0, 1.0}, {1.0, 2.0}}};
    const auto e2 = sym2_eigenvalues(m2);
    CHECK(e2[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e2[1] == doctest::Approx(3.0).epsilon(1e-14));
    const Vec2 v2 = sym2_eigenvector(m2, e2[0]);
    const Vec2 mv = apply2(m2, v2);
    CHECK(norm(mv - e2[0] * v2) < 1e-12);

    const Mat3 m3 = cyclic_coupling_matrix(1.0, 2.0, 3.0);
    const auto e3 = sym3_eigenvalues(m3);
    const auto v3 = sym3_eigenvector(m3, e3[1]);
    const auto mv3 = apply3(m3, v3);
    for (int i = 0; i < 3; ++i) CHECK(mv3[i] == doctest::Approx(e3[1] * v3[i]).epsilon(1e-9));
}

TEST_CASE("linearized orientation flow preserves orthogonality and obeys decay bounds") {
    const SurfaceTensionModel model = default_model();
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.4, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::array<double, 3> len{u(rng), u(rng), u(rng)};
        const AnchorTriangle tri = triangle_from_lengths(len, u(rng));
        const EquilibriumState eq = fermat_point(tri, 1e-13);
        const JunctionSystem sys{tri, model, 0.7, 1.3};
        const LinearizedSystem lin = build_linearized(sys, eq);

        // Orientation block, started orthogonal to (1,1,1).
        std::array<double, 3> a{u(rng), u(rng), 0.0};
        a[2] = -(a[0] + a[1]);
        const double a0_norm = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
        const double ka = sys.gamma * model.curvature(0.0);
        const double dt = 1e-3;
        double t = 0.0;
        for (int step = 0; step < 2000; ++step) {
            // RK4 on da/dt = -ka * B a.
            const auto f = [&](const std::array<double, 3>& x) {
                auto y = apply3(lin.orientation_matrix, x);
                for (double& v : y) v *= -ka;
                return y;
            };
            const auto k1 = f(a);
            std::array<double, 3> tmp{};
            for (int i = 0; i < 3; ++i) tmp[i] = a[i] + 0.5 * dt * k1[i];
            const auto k2 = f(tmp);
            for (int i = 0; i < 3; ++i) tmp[i] = a[i] + 0.5 * dt * k2[i];
            const auto k3 = f(tmp);
            for (int i = 0; i < 3; ++i) tmp[i] = a[i] + dt * k3[i];
            const auto k4 = f(tmp);
            for (int i = 0; i < 3; ++i)
                a[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
            t += dt;
            if (step % 400 == 0) {
                CHECK(std::abs(a[0] + a[1] + a[2]) < 1e-10);
                const double nrm = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
                CHECK(nrm <= std::exp(-ka * lin.lambda1 * t) * a0_norm + 1e-8);
            }
        }

        // Position block bound.
        Vec2 p{u(rng), -u(rng)};
        const double p0_norm = norm(p);
        const double kp = sys.eta * model.value(0.0);
        t = 0.0;
        for (int step = 0; step < 2000; ++step) {
            const auto f = [&](const Vec2& x) { return -kp * apply2(lin.position_matrix, x); };
            const Vec2 k1 = f(p);
            const Vec2 k2 = f(p + 0.5 * dt * k1);
            const Vec2 k3 = f(p + 0.5 * dt * k2);
            const Vec2 k4 = f(p + dt * k3);
            p += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += dt;
            if (step % 400 == 0)
                CHECK(norm(p) <= std::exp(-kp * lin.lambda2 * t) * p0_norm + 1e-8);
        }
    }
}

TEST_CASE("flow Jacobian at equilibrium matches the linearized blocks") {
    const SurfaceTensionModel model = default_model();
    const AnchorTriangle tri = triangle_from_lengths({0.8, 1.1, 1.7}, 0.4);
    const EquilibriumState eq = fermat_point(tri, 1e-13);
    const JunctionSystem sys{tri, model, 0.9, 1.7};
    const LinearizedSystem lin = build_linearized(sys, eq);

    // Central finite differences of the packed right-hand side.
    const double c = 0.13;  // uniform orientation offset: still an equilibrium
    auto eval = [&](const std::array<double, 5>& y) {
        const JunctionState s{{y[0], y[1], y[2]}, {y[3], y[4]}, 0.0};
        const JunctionRate r = rhs(sys, s);
        return std::array<double, 5>{r.alpha_rate[0], r.alpha_rate[1], r.alpha_rate[2],
                                     r.pos_rate.x, r.pos_rate.y};
    };
    const std::array<double, 5> y0{c, c, c, eq.junction.x, eq.junction.y};
    const double h = 1e-6;
    std::array<std::array<double, 5>, 5> jac{};
    for (int col = 0; col < 5; ++col) {
        auto yp = y0, ym = y0;
        yp[col] += h;
        ym[col] -= h;
        const auto fp = eval(yp), fm = eval(ym);
        for (int row = 0; row < 5; ++row) jac[row][col] = (fp[row] - fm[row]) / (2.0 * h);
    }

    const double ka = sys.gamma * model.curvature(0.0);
    const double kp = sys.eta * model.value(0.0);
    double scale_a = 0.0, scale_p = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            scale_a = std::max(scale_a, std::abs(ka * lin.orientation_matrix[i][j]));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            scale_p = std::max(scale_p, std::abs(kp * lin.position_matrix[i][j]));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(jac[i][j] + ka * lin.orientation_matrix[i][j]) <= 1e-5 * scale_a);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(std::abs(jac[3 + i][3 + j] + kp * lin.position_matrix[i][j]) <=
                  1e-5 * scale_p);
    // Cross blocks vanish at the equilibrium.
    for (int i = 0; i < 3; ++i)
        for (int j = 3; j < 5; ++j)
            CHECK(std::abs(jac[i][j]) <= 1e-5 * std::max(scale_a, scale_p));
}

TEST_CASE("decay-rate fit on synthetic exponential data") {
    Trajectory traj;
    traj.gamma = traj.eta = 1.0;
    for (int i = 0; i <= 4000; ++i) {
        const double t = i * 0.01;
        const double dev = std::exp(-2.0 * t);  // all deviation in one alpha slot
        traj.times.push_back(t);
        traj.alphas.push_back({dev, 0.0, 0.0});
        traj.positions.push_back({0.0, 0.0});
        traj.alpha_rates.push_back({0.0, 0.0, 0.0});
        traj.pos_rates.push_back({0.0, 0.0});
        traj.energies.push_back(0.0);
    }
    const DecayFit fit = measure_decay_rate(traj, 0.0, {0.0, 0.0});
    CHECK(fit.ok);
    CHECK(fit.rate == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(fit.r_squared > 0.999999);

    // A constant trajectory has nothing to fit.
    Trajectory flat;
    flat.gamma = flat.eta = 1.0;
    for (int i = 0; i < 100; ++i) {
        flat.times.push_back(i * 0.01);
        flat.alphas.push_back({0.5, 0.5, 0.5});
        flat.positions.push_back({1.0, 1.0});
        flat.alpha_rates.push_back({0.0, 0.0, 0.0});
        flat.pos_rates.push_back({0.0, 0.0});
        flat.energies.push_back(1.0);
    }
    CHECK_FALSE(measure_decay_rate(flat, 0.5, {1.0, 1.0}).ok);
}
