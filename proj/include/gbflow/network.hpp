#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gbflow/vec2.hpp"

namespace gbflow {

// Planar grain-boundary network of straight segments on a flat torus.
// Entities are stored in index-stable arrays with alive flags; critical
// events retire entries instead of erasing them.

struct NetJunction {
    Vec2 pos;
    std::vector<int> edges;  // incident boundary ids; exactly 3 when interior
    bool mobile = true;      // pinned junctions absorb force (test fixtures)
    bool alive = true;
};

struct NetBoundary {
    int j1 = -1, j2 = -1;  // endpoint junction ids
    int ox = 0, oy = 0;    // periodic image shift: segment j1 -> pos(j2) + side*(ox,oy)
    int g1 = -1, g2 = -1;  // the two adjacent grains (distinct)
    bool alive = true;
};

struct NetGrain {
    double alpha = 0.0;      // lattice orientation (radians)
    std::vector<int> edges;  // boundary ids forming this grain's interface
    bool alive = true;
};

struct GrainNetwork {
    double side = 2.0;  // periodic square [0, side)^2, total area side^2
    double time = 0.0;
    // True for fully periodic cellular networks (Euler characteristic 0);
    // false for pinned open fixtures used in tests.
    bool closed = true;
    std::vector<NetJunction> junctions;
    std::vector<NetBoundary> boundaries;
    std::vector<NetGrain> grains;

    int alive_junctions() const;
    int alive_boundaries() const;
    int alive_grains() const;

    // Wrap a coordinate into [0, side).
    double wrap(double c) const;
    // Shortest periodic displacement from p to q.
    Vec2 min_image(const Vec2& p, const Vec2& q) const;
    // Segment vector of boundary b, from j1 toward j2 (image-shift aware).
    Vec2 boundary_vector(int b) const;
    double boundary_length(int b) const;
    // Segment vector pointing away from junction j along boundary b.
    Vec2 boundary_vector_from(int b, int j) const;
    // The endpoint of b that is not j.
    int other_junction(int b, int j) const;
    // The grain adjacent to b that is not g.
    int other_grain(int b, int g) const;
    // Signed misorientation across boundary b: alpha(g1) - alpha(g2).
    double misorientation(int b) const;

    // Move a junction, wrapping into the fundamental cell and keeping the
    // image shifts of incident boundaries consistent.
    void move_junction(int j, const Vec2& new_pos);

    // Directed interface cycle of grain g: boundary ids in walk order.
    // Throws std::runtime_error if the interface is not a single closed walk
    // (only meaningful for closed networks or interior grains).
    std::vector<int> grain_cycle(int g) const;
    // Polygon area of grain g from its unwrapped cycle.
    double grain_area(int g) const;
};

// Structural validation. Returns human-readable violations; empty = valid.
// Checks: degree 3 at every mobile junction (and >= 1 edge otherwise),
// distinct adjacent grains per boundary, endpoint/edge cross-references,
// positive lengths above min_length, and V - E + F = 0 for closed networks.
std::vector<std::string> validate_network(const GrainNetwork& net,
                                          double min_length = 0.0);

// Torus honeycomb with p columns and q rows of hexagon pairs (2*p*q cells,
// 4*p*q junctions, 6*p*q boundaries). All junction angles are 2*pi/3, so the
// uniform-orientation network is a force-balanced equilibrium. Hexagons are
// equilateral only when the side ratio allows; vertical edges have length h
// and oblique edges length d with p*sqrt(3)*d = side and q*(2*h + d) = side.
GrainNetwork make_honeycomb(int p, int q, double side = 2.0);

// Versioned plain-text snapshot with sections [meta], [junctions], [grains],
// [boundaries]. Full double precision; save -> load -> save is byte-identical.
void save_snapshot(const GrainNetwork& net, const std::string& path);
GrainNetwork load_snapshot(const std::string& path);

}  // namespace gbflow
