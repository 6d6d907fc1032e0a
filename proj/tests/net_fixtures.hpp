#pragma once

#include <array>
#include <cmath>

#include "gbflow/network.hpp"

namespace gbflow::testutil {

inline int add_junction(GrainNetwork& net, Vec2 pos, bool mobile) {
    NetJunction j;
    j.pos = pos;
    j.mobile = mobile;
    net.junctions.push_back(j);
    return static_cast<int>(net.junctions.size()) - 1;
}

inline int add_grain(GrainNetwork& net, double alpha) {
    NetGrain g;
    g.alpha = alpha;
    net.grains.push_back(g);
    return static_cast<int>(net.grains.size()) - 1;
}

inline int link(GrainNetwork& net, int j1, int j2, int g1, int g2) {
    NetBoundary e;
    e.j1 = j1;
    e.j2 = j2;
    e.g1 = g1;
    e.g2 = g2;
    const Vec2 d = net.min_image(net.junctions[j1].pos, net.junctions[j2].pos);
    const Vec2 raw = net.junctions[j2].pos - net.junctions[j1].pos;
    e.ox = static_cast<int>(std::lround((d.x - raw.x) / net.side));
    e.oy = static_cast<int>(std::lround((d.y - raw.y) / net.side));
    const int id = static_cast<int>(net.boundaries.size());
    net.boundaries.push_back(e);
    net.junctions[j1].edges.push_back(id);
    net.junctions[j2].edges.push_back(id);
    net.grains[g1].edges.push_back(id);
    net.grains[g2].edges.push_back(id);
    return id;
}

// One mobile junction tied to three pinned anchors; grain j sits between
// spokes j and j+1, mirroring the reduced single-junction system.
struct SingleJunctionFixture {
    GrainNetwork net;
    int center = -1;
    std::array<int, 3> anchors{};
    std::array<int, 3> spokes{};
    std::array<int, 3> grains{};
};

inline SingleJunctionFixture single_junction_fixture(const std::array<Vec2, 3>& anchor_pos,
                                                     const std::array<double, 3>& alpha,
                                                     Vec2 center_pos) {
    SingleJunctionFixture f;
    f.net.side = 2.0;
    f.net.closed = false;
    f.center = add_junction(f.net, center_pos, true);
    for (int j = 0; j < 3; ++j) f.anchors[j] = add_junction(f.net, anchor_pos[j], false);
    for (int j = 0; j < 3; ++j) f.grains[j] = add_grain(f.net, alpha[j]);
    // Spoke j separates grains j-1 and j (cyclic), matching the reduced model.
    for (int j = 0; j < 3; ++j)
        f.spokes[j] = link(f.net, f.center, f.anchors[j], f.grains[(j + 2) % 3], f.grains[j]);
    return f;
}

// Four-grain cross with one central boundary, for neighbor-switch tests.
struct CrossFixture {
    GrainNetwork net;
    int u = -1, v = -1;
    int central = -1;
    int top = -1, bottom = -1, left = -1, right = -1;  // grains
};

inline CrossFixture cross_fixture(double half_gap) {
    CrossFixture f;
    f.net.side = 2.0;
    f.net.closed = false;
    f.u = add_junction(f.net, {1.0 - half_gap, 1.0}, true);
    f.v = add_junction(f.net, {1.0 + half_gap, 1.0}, true);
    const int p1 = add_junction(f.net, {0.4, 1.8}, false);
    const int p2 = add_junction(f.net, {1.6, 1.8}, false);
    const int p3 = add_junction(f.net, {0.4, 0.2}, false);
    const int p4 = add_junction(f.net, {1.6, 0.2}, false);
    f.top = add_grain(f.net, 0.02);
    f.bottom = add_grain(f.net, -0.01);
    f.left = add_grain(f.net, 0.05);
    f.right = add_grain(f.net, -0.03);
    f.central = link(f.net, f.u, f.v, f.top, f.bottom);
    link(f.net, f.u, p1, f.top, f.left);
    link(f.net, f.u, p3, f.bottom, f.left);
    link(f.net, f.v, p2, f.top, f.right);
    link(f.net, f.v, p4, f.bottom, f.right);
    return f;
}

// A small triangle grain embedded in three neighbor grains, spokes pinned.
struct TriangleFixture {
    GrainNetwork net;
    int tri_grain = -1;
    std::array<int, 3> corners{};
    std::array<int, 3> sides{};
};

inline TriangleFixture triangle_fixture(double corner_radius) {
    TriangleFixture f;
    f.net.side = 2.0;
    f.net.closed = false;
    const Vec2 c{1.0, 1.0};
    std::array<Vec2, 3> anchor_pos{Vec2{1.0, 1.8}, Vec2{0.3, 0.6}, Vec2{1.7, 0.6}};
    std::array<int, 3> anchors{};
    for (int j = 0; j < 3; ++j) {
        const double ang = M_PI / 2.0 + 2.0 * M_PI * j / 3.0;
        f.corners[j] =
            add_junction(f.net, c + corner_radius * Vec2{std::cos(ang), std::sin(ang)}, true);
        anchors[j] = add_junction(f.net, anchor_pos[j], false);
    }
    f.tri_grain = add_grain(f.net, 0.1);
    const int n01 = add_grain(f.net, -0.02);  // between spokes 0 and 1
    const int n12 = add_grain(f.net, 0.03);
    const int n20 = add_grain(f.net, -0.05);
    f.sides[0] = link(f.net, f.corners[0], f.corners[1], f.tri_grain, n01);
    f.sides[1] = link(f.net, f.corners[1], f.corners[2], f.tri_grain, n12);
    f.sides[2] = link(f.net, f.corners[2], f.corners[0], f.tri_grain, n20);
    link(f.net, f.corners[0], anchors[0], n20, n01);
    link(f.net, f.corners[1], anchors[1], n01, n12);
    link(f.net, f.corners[2], anchors[2], n12, n20);
    return f;
}

// Two-sided grain (lens) between u and v, hanging off pinned far junctions.
struct LensFixture {
    GrainNetwork net;
    int lens = -1;
    int e1 = -1, e2 = -1;
    int fu = -1, fv = -1;
};

inline LensFixture lens_fixture(double gap, double bulge) {
    LensFixture f;
    f.net.side = 2.0;
    f.net.closed = false;
    const int u = add_junction(f.net, {1.0 - gap / 2.0, 1.0}, true);
    const int v = add_junction(f.net, {1.0 + gap / 2.0, 1.0}, true);
    const int wu = add_junction(f.net, {0.3, 1.0}, false);
    const int wv = add_junction(f.net, {1.7, 1.0}, false);
    f.lens = add_grain(f.net, 0.08);
    const int above = add_grain(f.net, 0.01);
    const int below = add_grain(f.net, -0.04);
    // Straight-segment network: the lens carries zero area but two distinct
    // boundaries; `bulge` only separates the stored misorientations.
    (void)bulge;
    f.e1 = link(f.net, u, v, f.lens, above);
    f.e2 = link(f.net, u, v, f.lens, below);
    f.fu = link(f.net, wu, u, above, below);
    f.fv = link(f.net, v, wv, above, below);
    return f;
}

// Steiner-tree fixture: four pinned corners of a rectangle and two mobile
// junctions joined by a bridge. `vertical` selects the competing topology.
struct BridgeFixture {
    GrainNetwork net;
    int p1 = -1, p2 = -1;
};

inline BridgeFixture bridge_fixture(double width, double height, bool vertical) {
    BridgeFixture f;
    f.net.side = 2.0;
    f.net.closed = false;
    const Vec2 c{1.0, 1.0};
    const int tl = add_junction(f.net, c + Vec2{-width / 2, height / 2}, false);
    const int tr = add_junction(f.net, c + Vec2{width / 2, height / 2}, false);
    const int bl = add_junction(f.net, c + Vec2{-width / 2, -height / 2}, false);
    const int br = add_junction(f.net, c + Vec2{width / 2, -height / 2}, false);
    const int north = add_grain(f.net, 0.0);
    const int south = add_grain(f.net, 0.0);
    const int west = add_grain(f.net, 0.0);
    const int east = add_grain(f.net, 0.0);
    if (!vertical) {
        const double x = height / (2.0 * std::sqrt(3.0));
        f.p1 = add_junction(f.net, c + Vec2{-width / 2 + x, 0.0}, true);
        f.p2 = add_junction(f.net, c + Vec2{width / 2 - x, 0.0}, true);
        link(f.net, f.p1, tl, north, west);
        link(f.net, f.p1, bl, south, west);
        link(f.net, f.p2, tr, north, east);
        link(f.net, f.p2, br, south, east);
        link(f.net, f.p1, f.p2, north, south);
    } else {
        const double y = width / (2.0 * std::sqrt(3.0));
        f.p1 = add_junction(f.net, c + Vec2{0.0, -height / 2 + y}, true);
        f.p2 = add_junction(f.net, c + Vec2{0.0, height / 2 - y}, true);
        link(f.net, f.p1, bl, west, south);
        link(f.net, f.p1, br, south, east);
        link(f.net, f.p2, tl, north, west);
        link(f.net, f.p2, tr, east, north);
        link(f.net, f.p1, f.p2, west, east);
    }
    return f;
}

}  // namespace gbflow::testutil
