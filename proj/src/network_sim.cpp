#include "gbflow/network_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <cstdlib>
#include <stdexcept>

#include "gbflow/geometry.hpp"

namespace gbflow {

namespace {

constexpr double kLengthFloor = 1e-12;

void erase_value(std::vector<int>& v, int x) {
    auto it = std::find(v.begin(), v.end(), x);
    if (it != v.end()) v.erase(it);
}

// Replace endpoint old_j of boundary b by new_j. delta is the unwrapped
// displacement of the attachment point (new minus old, in any local frame);
// the image shift is recomputed from the target segment vector.
void set_endpoint(GrainNetwork& net, int b, int old_j, int new_j, const Vec2& delta) {
    NetBoundary& e = net.boundaries[b];
    const Vec2 v = net.boundary_vector(b);
    if (e.j1 == old_j) {
        const Vec2 target = v - delta;  // start moved by delta
        e.j1 = new_j;
        e.ox = static_cast<int>(std::lround(
            (target.x - net.junctions[e.j2].pos.x + net.junctions[new_j].pos.x) / net.side));
        e.oy = static_cast<int>(std::lround(
            (target.y - net.junctions[e.j2].pos.y + net.junctions[new_j].pos.y) / net.side));
    } else {
        const Vec2 target = v + delta;  // end moved by delta
        e.j2 = new_j;
        e.ox = static_cast<int>(std::lround(
            (target.x - net.junctions[new_j].pos.x + net.junctions[e.j1].pos.x) / net.side));
        e.oy = static_cast<int>(std::lround(
            (target.y - net.junctions[new_j].pos.y + net.junctions[e.j1].pos.y) / net.side));
    }
    erase_value(net.junctions[old_j].edges, b);
    net.junctions[new_j].edges.push_back(b);
}

int add_boundary(GrainNetwork& net, int j1, int j2, const Vec2& unwrapped_vec, int g1, int g2) {
    NetBoundary e;
    e.j1 = j1;
    e.j2 = j2;
    e.g1 = g1;
    e.g2 = g2;
    e.ox = static_cast<int>(std::lround(
        (unwrapped_vec.x - net.junctions[j2].pos.x + net.junctions[j1].pos.x) / net.side));
    e.oy = static_cast<int>(std::lround(
        (unwrapped_vec.y - net.junctions[j2].pos.y + net.junctions[j1].pos.y) / net.side));
    const int id = static_cast<int>(net.boundaries.size());
    net.boundaries.push_back(e);
    net.junctions[j1].edges.push_back(id);
    net.junctions[j2].edges.push_back(id);
    net.grains[g1].edges.push_back(id);
    net.grains[g2].edges.push_back(id);
    return id;
}

void kill_boundary(GrainNetwork& net, int b) {
    NetBoundary& e = net.boundaries[b];
    erase_value(net.junctions[e.j1].edges, b);
    erase_value(net.junctions[e.j2].edges, b);
    erase_value(net.grains[e.g1].edges, b);
    erase_value(net.grains[e.g2].edges, b);
    e.alive = false;
}

// Incident edges sorted counterclockwise by outgoing direction.
std::vector<int> edges_by_angle(const GrainNetwork& net, int j) {
    std::vector<std::pair<double, int>> order;
    for (int b : net.junctions[j].edges) {
        const Vec2 d = net.boundary_vector_from(b, j);
        order.emplace_back(std::atan2(d.y, d.x), b);
    }
    std::sort(order.begin(), order.end());
    std::vector<int> out;
    for (auto& [a, b] : order) out.push_back(b);
    return out;
}

// Cyclic order of the incident edges derived from the face structure: around
// a junction, consecutive edges share exactly one face, so following faces
// walks the fan combinatorially. Robust against squeezed angles; falls back
// to the geometric sort when the chain is ambiguous.
std::vector<int> edges_by_face_chain(const GrainNetwork& net, int j) {
    const auto& es = net.junctions[j].edges;
    const int n = static_cast<int>(es.size());
    auto faces_of = [&](int b) {
        return std::array<int, 2>{net.boundaries[b].g1, net.boundaries[b].g2};
    };
    auto other_edge_with_face = [&](int face, int not_edge) {
        int found = -1;
        for (int cand : es) {
            if (cand == not_edge) continue;
            const auto f = faces_of(cand);
            if (f[0] == face || f[1] == face) {
                if (found >= 0) return -1;  // face borders more than two edges here
                found = cand;
            }
        }
        return found;
    };

    std::vector<int> chain;
    int cur = es[0];
    int arrive_face = -1;
    for (int k = 0; k < n; ++k) {
        chain.push_back(cur);
        const auto f = faces_of(cur);
        const int leave_face = f[0] == arrive_face ? f[1] : f[0];
        const int next = other_edge_with_face(leave_face, cur);
        if (next < 0) return edges_by_angle(net, j);
        arrive_face = leave_face;
        cur = next;
    }
    if (cur != es[0]) return edges_by_angle(net, j);
    std::vector<int> seen = chain;
    std::sort(seen.begin(), seen.end());
    std::vector<int> all(es.begin(), es.end());
    std::sort(all.begin(), all.end());
    if (seen != all) return edges_by_angle(net, j);
    return chain;
}

// Face shared by two boundaries (for cyclically adjacent edges at a junction
// this is the face between them).
int common_face(const GrainNetwork& net, int e1, int e2) {
    const NetBoundary& a = net.boundaries[e1];
    const NetBoundary& b = net.boundaries[e2];
    if (a.g1 == b.g1 || a.g1 == b.g2) return a.g1;
    if (a.g2 == b.g1 || a.g2 == b.g2) return a.g2;
    return -1;
}

double local_energy_of(const GrainNetwork& net, const SurfaceTensionModel& model,
                       const std::vector<int>& edges) {
    double e = 0.0;
    for (int b : edges)
        if (net.boundaries[b].alive)
            e += model.value(net.misorientation(b)) * net.boundary_length(b);
    return e;
}

// Coordinate descent on the junctions adjacent to a surgery site: each visit
// moves one junction toward the sigma-weighted geometric median of its
// neighbors, which never increases the energy. Stops once the energy drops
// to the target.
void relax_after_event(GrainNetwork& net, const SurfaceTensionModel& model,
                       std::vector<int> seeds, double energy_target, int max_sweeps) {
    // Expand to the one-ring.
    std::vector<int> zone = seeds;
    for (int j : seeds) {
        if (!net.junctions[j].alive) continue;
        for (int b : net.junctions[j].edges) {
            const int other = net.other_junction(b, j);
            if (std::find(zone.begin(), zone.end(), other) == zone.end()) zone.push_back(other);
        }
    }
    std::vector<int> touched;
    for (int j : zone)
        if (net.junctions[j].alive)
            for (int b : net.junctions[j].edges)
                if (std::find(touched.begin(), touched.end(), b) == touched.end())
                    touched.push_back(b);

    double local = local_energy_of(net, model, touched);
    const double local_target = local - std::max(0.0, total_energy(net, model) - energy_target);
    for (int sweep = 0; sweep < max_sweeps && local > local_target; ++sweep) {
        for (int j : zone) {
            const NetJunction& jn = net.junctions[j];
            if (!jn.alive || !jn.mobile) continue;
            std::vector<Vec2> pts;
            std::vector<double> w;
            double min_len = 1e300;
            for (int b : jn.edges) {
                const Vec2 v = net.boundary_vector_from(b, j);
                pts.push_back(jn.pos + v);
                w.push_back(model.value(net.misorientation(b)));
                min_len = std::min(min_len, norm(v));
            }
            Vec2 target = weighted_geometric_median(pts, w, jn.pos, 1e-12, 24);
            Vec2 step_v = target - jn.pos;
            const double cap = 0.45 * min_len;
            const double sn = norm(step_v);
            if (sn > cap && sn > 0.0) step_v *= cap / sn;
            net.move_junction(j, jn.pos + step_v);
        }
        local = local_energy_of(net, model, touched);
    }
}

}  // namespace

namespace {
bool paranoid_checks() {
    static const bool on = std::getenv("GBFLOW_PARANOID") != nullptr;
    return on;
}
void paranoid_validate(const GrainNetwork& net, const char* where) {
    if (!paranoid_checks()) return;
    const auto issues = validate_network(net);
    if (!issues.empty())
        throw std::runtime_error(std::string("paranoid: after ") + where + ": " + issues.front());
}
}  // namespace

const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::GrainRemoval: return "grain-removal";
        case EventKind::NeighborSwitch: return "neighbor-switch";
        case EventKind::JunctionSplit: return "junction-split";
    }
    return "unknown";
}

std::vector<double> orientation_rates(const GrainNetwork& net,
                                      const SurfaceTensionModel& model, double gamma) {
    std::vector<double> rates(net.grains.size(), 0.0);
    for (std::size_t b = 0; b < net.boundaries.size(); ++b) {
        const NetBoundary& e = net.boundaries[b];
        if (!e.alive) continue;
        const double len = net.boundary_length(static_cast<int>(b));
        const double d = net.misorientation(static_cast<int>(b));
        // d(alpha_g1 - alpha_g2) enters with opposite signs on the two grains.
        rates[e.g1] -= gamma * len * model.slope(d);
        rates[e.g2] -= gamma * len * model.slope(-d);
    }
    return rates;
}

std::vector<Vec2> junction_rates(const GrainNetwork& net, const SurfaceTensionModel& model,
                                 double eta) {
    std::vector<Vec2> rates(net.junctions.size());
    for (std::size_t j = 0; j < net.junctions.size(); ++j) {
        const NetJunction& jn = net.junctions[j];
        if (!jn.alive || !jn.mobile) continue;
        Vec2 f;
        for (int b : jn.edges) {
            const Vec2 v = net.boundary_vector_from(b, static_cast<int>(j));
            const double len = norm(v);
            if (len < kLengthFloor)
                throw std::runtime_error("junction_rates: boundary below length floor");
            f += model.value(net.misorientation(b)) * (v / len);
        }
        rates[j] = eta * f;
    }
    return rates;
}

double total_energy(const GrainNetwork& net, const SurfaceTensionModel& model) {
    double e = 0.0;
    for (std::size_t b = 0; b < net.boundaries.size(); ++b)
        if (net.boundaries[b].alive)
            e += model.value(net.misorientation(static_cast<int>(b))) *
                 net.boundary_length(static_cast<int>(b));
    return e;
}

double equilibrium_residual(const GrainNetwork& net, const SurfaceTensionModel& model) {
    double max_force = 0.0;
    const auto forces = junction_rates(net, model, 1.0);
    for (std::size_t j = 0; j < forces.size(); ++j)
        if (net.junctions[j].alive && net.junctions[j].mobile)
            max_force = std::max(max_force, norm(forces[j]));
    double max_rot = 0.0;
    const auto rot = orientation_rates(net, model, 1.0);
    for (std::size_t g = 0; g < rot.size(); ++g)
        if (net.grains[g].alive) max_rot = std::max(max_rot, std::abs(rot[g]));
    return max_force + max_rot;
}

namespace {

// Split a junction of degree >= 4 into two degree-3 junctions joined by a new
// boundary of length sep. Legal pairings keep cyclically adjacent edges
// together; exclude_first/exclude_second suppress the pairing that would
// recreate a just-contracted boundary. Returns the id of the new boundary.
int split_junction(GrainNetwork& net, const SurfaceTensionModel& model, int j, double sep,
                   const std::vector<int>* forbidden_group) {
    const std::vector<int> cyc = edges_by_face_chain(net, j);
    const int n = static_cast<int>(cyc.size());
    if (n < 4) throw std::runtime_error("split_junction: degree < 4");

    // Candidate partitions: a contiguous pair (cyc[k], cyc[k+1]) splits off
    // onto one junction, the rest stay. For degree 4 this enumerates both
    // legal pairings (k and k+2 describe the same partition with the roles of
    // the two junctions swapped).
    struct Candidate {
        int k = -1;
        double energy = 0.0;
        Vec2 dir1, dir2;
        int face_left = -1, face_right = -1;
    };
    std::vector<Candidate> cands;
    for (int k = 0; k < n; ++k) {
        std::vector<int> group{cyc[k], cyc[(k + 1) % n]};
        if (forbidden_group) {
            // The new pairing must mix the two original groups, otherwise it
            // recreates the boundary that was just contracted.
            int in_forbidden = 0;
            for (int b : group)
                if (std::find(forbidden_group->begin(), forbidden_group->end(), b) !=
                    forbidden_group->end())
                    ++in_forbidden;
            if (in_forbidden != 1) continue;
        }
        Candidate c;
        c.k = k;
        c.face_left = common_face(net, cyc[(k + 1) % n], cyc[(k + 2) % n]);
        c.face_right = common_face(net, cyc[(k - 1 + n) % n], cyc[k]);
        if (c.face_left < 0 || c.face_right < 0 || c.face_left == c.face_right) continue;
        Vec2 d1, d2;
        for (int i = 0; i < n; ++i) {
            const Vec2 v = net.boundary_vector_from(cyc[i], j);
            const Vec2 u = v / norm(v);
            const bool in_group = (i == k) || (i == (k + 1) % n);
            (in_group ? d1 : d2) += u;
        }
        if (norm(d1) < 1e-9) d1 = -d2;
        if (norm(d1) < 1e-9) d1 = {1.0, 0.0};
        c.dir1 = unit(d1);
        c.dir2 = norm(d2) > 1e-9 ? unit(d2) : -c.dir1;
        const Vec2 p1 = 0.5 * sep * c.dir1;
        const Vec2 p2 = 0.5 * sep * c.dir2;
        double e_after = 0.0;
        for (int i = 0; i < n; ++i) {
            const Vec2 v = net.boundary_vector_from(cyc[i], j);
            const bool in_group = (i == k) || (i == (k + 1) % n);
            const Vec2 moved = v - (in_group ? p1 : p2);
            e_after += model.value(net.misorientation(cyc[i])) * norm(moved);
        }
        e_after += model.value(net.grains[c.face_left].alpha - net.grains[c.face_right].alpha) *
                   norm(p1 - p2);
        c.energy = e_after;
        cands.push_back(c);
    }
    if (cands.empty()) throw std::runtime_error("split_junction: no legal pairing");

    // Pick the lowest post-split energy (exhaustive over legal pairings).
    const Candidate* best = &cands[0];
    for (const auto& c : cands)
        if (c.energy < best->energy) best = &c;

    const int k = best->k;
    const int e_a = cyc[k], e_b = cyc[(k + 1) % n];
    const int face_left = best->face_left;
    const int face_right = best->face_right;

    // New junction takes the contiguous pair; j keeps the rest.
    NetJunction nj;
    nj.pos = net.junctions[j].pos;  // adjusted below
    nj.mobile = true;
    const int new_j = static_cast<int>(net.junctions.size());
    net.junctions.push_back(nj);

    const Vec2 p1 = 0.5 * sep * best->dir1;
    const Vec2 p2 = 0.5 * sep * best->dir2;
    for (int b : std::vector<int>{e_a, e_b}) set_endpoint(net, b, j, new_j, p1);
    net.move_junction(new_j, net.junctions[new_j].pos + p1);
    net.move_junction(j, net.junctions[j].pos + p2);

    return add_boundary(net, new_j, j, p2 - p1, face_left, face_right);
}

struct EventOutcome {
    bool did_something = false;
    bool fatal = false;
    bool pinched = false;   // the switch would pinch a face into itself
    int new_boundary = -1;  // boundary created by a successful switch
    std::string diagnostic;
};

// Neighbor switch: contract boundary b to its midpoint, then split the
// resulting degree-4 junction with the original grouping forbidden.
EventOutcome neighbor_switch(GrainNetwork& net, const SurfaceTensionModel& model, int b,
                             double reinsert_len, std::vector<CriticalEvent>* events) {
    EventOutcome out;
    NetBoundary& e = net.boundaries[b];
    const int u = e.j1, v = e.j2;
    if (u == v) {
        out.fatal = true;
        out.diagnostic = "neighbor_switch: self-loop boundary";
        return out;
    }
    if (!net.junctions[u].mobile || !net.junctions[v].mobile) return out;  // deferred

    // Legality precheck: the switched boundary must separate the two outer
    // faces, which therefore have to be distinct. A shared outer face means
    // the boundary is the throat of a surrounding grain and a switch would
    // pinch that grain into itself.
    {
        std::array<int, 2> outer_u{-1, -1}, outer_v{-1, -1};
        int cu = 0, cv = 0;
        for (int f : net.junctions[u].edges)
            if (f != b) outer_u[cu++] = f;
        for (int f : net.junctions[v].edges)
            if (f != b) outer_v[cv++] = f;
        if (cu != 2 || cv != 2) {
            out.fatal = true;
            out.diagnostic = "neighbor_switch: endpoint degree is not 3";
            return out;
        }
        const int c_face = common_face(net, outer_u[0], outer_u[1]);
        const int d_face = common_face(net, outer_v[0], outer_v[1]);
        if (c_face < 0 || d_face < 0 || c_face == d_face) {
            out.pinched = true;
            return out;
        }
    }

    const double e_before = total_energy(net, model);
    const Vec2 vec_e = net.boundary_vector(b);
    const int g_a = e.g1, g_b = e.g2;

    // Contract: move v to the midpoint, transfer u's other edges onto v.
    std::vector<int> transferred;
    for (int f : net.junctions[u].edges)
        if (f != b) transferred.push_back(f);
    std::vector<int> kept;
    for (int f : net.junctions[v].edges)
        if (f != b) kept.push_back(f);

    net.move_junction(v, net.junctions[v].pos - 0.5 * vec_e);
    for (int f : transferred) set_endpoint(net, f, u, v, 0.5 * vec_e);
    kill_boundary(net, b);
    net.junctions[u].alive = false;
    net.junctions[u].edges.clear();

    int new_b = -1;
    try {
        // Forbid regrouping the edges that came from u: that would recreate
        // the collapsed boundary between the same faces.
        new_b = split_junction(net, model, v, reinsert_len, &transferred);
    } catch (const std::exception& ex) {
        out.fatal = true;
        out.diagnostic = ex.what();
        return out;
    }
    if (events)
        events->push_back({net.time, EventKind::NeighborSwitch,
                           {b, new_b, u, v, g_a, g_b}});
    relax_after_event(net, model, {net.boundaries[new_b].j1, net.boundaries[new_b].j2},
                      e_before, 64);
    out.did_something = true;
    out.new_boundary = new_b;
    return out;
}

// Remove a three-sided grain by collapsing it to the centroid of its corners.
EventOutcome remove_triangle(GrainNetwork& net, const SurfaceTensionModel& model, int g,
                             std::vector<CriticalEvent>* events) {
    EventOutcome out;
    const double e_before = total_energy(net, model);
    const std::vector<int> cyc = net.grain_cycle(g);  // 3 sides in walk order
    // Corners in walk order starting from side[0].j1 side.
    int c0 = net.boundaries[cyc[0]].j1;
    // Ensure walk order: corner after side i.
    std::array<int, 3> corner{};
    corner[0] = c0;
    corner[1] = net.other_junction(cyc[0], corner[0]);
    corner[2] = net.other_junction(cyc[1], corner[1]);
    for (int j : corner)
        if (!net.junctions[j].mobile) return out;  // pinned corner: defer

    // Unwrapped corner chain and centroid in the frame of corner 0.
    const Vec2 p0 = net.junctions[corner[0]].pos;
    const Vec2 p1 = p0 + net.boundary_vector_from(cyc[0], corner[0]);
    const Vec2 p2 = p1 + net.boundary_vector_from(cyc[1], corner[1]);
    const Vec2 centroid = (p0 + p1 + p2) / 3.0;

    // External edge at each corner.
    std::array<int, 3> external{-1, -1, -1};
    for (int i = 0; i < 3; ++i) {
        for (int f : net.junctions[corner[i]].edges)
            if (std::find(cyc.begin(), cyc.end(), f) == cyc.end()) external[i] = f;
        if (external[i] < 0) {
            out.fatal = true;
            out.diagnostic = "remove_triangle: corner without external edge";
            return out;
        }
    }

    // Merge all corners into corner[0] at the centroid.
    const std::array<Vec2, 3> unwrapped{p0, p1, p2};
    net.move_junction(corner[0], p0 + (centroid - p0));
    for (int i = 1; i < 3; ++i)
        set_endpoint(net, external[i], corner[i], corner[0], centroid - unwrapped[i]);
    for (int s : cyc) kill_boundary(net, s);
    for (int i = 1; i < 3; ++i) {
        net.junctions[corner[i]].alive = false;
        net.junctions[corner[i]].edges.clear();
    }
    net.grains[g].alive = false;
    net.grains[g].edges.clear();

    if (events) events->push_back({net.time, EventKind::GrainRemoval, {g}});
    relax_after_event(net, model, {corner[0]}, e_before, 64);
    out.did_something = true;
    return out;
}

// Remove a two-sided grain (lens) and fuse the hanging edges.
EventOutcome remove_lens(GrainNetwork& net, const SurfaceTensionModel& model, int g,
                         std::vector<CriticalEvent>* events) {
    EventOutcome out;
    const double e_before = total_energy(net, model);
    const int e1 = net.grains[g].edges[0];
    const int e2 = net.grains[g].edges[1];
    const int u = net.boundaries[e1].j1;
    const int v = net.boundaries[e1].j2;
    if (u == v) {
        out.fatal = true;
        out.diagnostic = "remove_lens: degenerate loop lens";
        return out;
    }
    if (!net.junctions[u].mobile || !net.junctions[v].mobile) return out;

    int fu = -1, fv = -1;
    for (int f : net.junctions[u].edges)
        if (f != e1 && f != e2) fu = f;
    for (int f : net.junctions[v].edges)
        if (f != e1 && f != e2) fv = f;
    if (fu < 0 || fv < 0 || fu == fv) {
        out.fatal = true;
        out.diagnostic = "remove_lens: theta configuration cannot be fused";
        return out;
    }

    // Unwrapped displacement of fu's attachment moving from u to the far end
    // of fv: follow the chain u -> v -> w_v with exact segment vectors.
    const Vec2 chain = net.boundary_vector_from(e1, u) + net.boundary_vector_from(fv, v);
    const int w_v = net.other_junction(fv, v);
    const int w_u = net.other_junction(fu, u);
    if (w_v == u || w_u == v || w_u == w_v) {
        out.fatal = true;
        out.diagnostic = "remove_lens: fusing would create a loop";
        return out;
    }

    kill_boundary(net, e1);
    kill_boundary(net, e2);
    kill_boundary(net, fv);
    set_endpoint(net, fu, u, w_v, chain);
    net.junctions[u].alive = false;
    net.junctions[u].edges.clear();
    net.junctions[v].alive = false;
    net.junctions[v].edges.clear();
    net.grains[g].alive = false;
    net.grains[g].edges.clear();

    if (events) events->push_back({net.time, EventKind::GrainRemoval, {g}});
    relax_after_event(net, model, {net.boundaries[fu].j1, net.boundaries[fu].j2}, e_before, 64);
    out.did_something = true;
    return out;
}

}  // namespace

int handle_critical_events(GrainNetwork& net, const EventThresholds& thresholds,
                           const SurfaceTensionModel& model,
                           std::vector<CriticalEvent>* events) {
    int count = 0;
    std::vector<char> deferred(net.boundaries.size() + 1, 0);
    const int cap = 16 * static_cast<int>(net.grains.size()) + 64;
    for (int guard = 0; guard < cap; ++guard) {
        bool changed = false;
        deferred.resize(net.boundaries.size() + 64, 0);

        // Degree > 3 junctions first (should only arise transiently).
        for (std::size_t j = 0; j < net.junctions.size() && !changed; ++j) {
            const auto& jn = net.junctions[j];
            if (jn.alive && jn.mobile && jn.edges.size() > 3) {
                const double e_before = total_energy(net, model);
                const int nb = split_junction(net, model, static_cast<int>(j),
                                              1.1 * std::max(thresholds.min_length, kLengthFloor),
                                              nullptr);
                relax_after_event(net, model,
                                  {net.boundaries[nb].j1, net.boundaries[nb].j2}, e_before, 64);
                if (events) {
                    CriticalEvent ev{net.time, EventKind::JunctionSplit,
                                     {static_cast<int>(j), nb}};
                    ev.energy_before = e_before;
                    ev.energy_after = total_energy(net, model);
                    events->push_back(ev);
                }
                paranoid_validate(net, "junction-split");
                ++count;
                changed = true;
            }
        }
        if (changed) continue;

        // Small grains: lenses below threshold and all-short triangles.
        for (std::size_t g = 0; g < net.grains.size() && !changed; ++g) {
            const auto& grain = net.grains[g];
            if (!grain.alive) continue;
            if (grain.edges.size() == 2) {
                double min_side = 1e300;
                for (int b : grain.edges) min_side = std::min(min_side, net.boundary_length(b));
                bool small = min_side < thresholds.min_length;
                if (!small && thresholds.min_area > 0.0) {
                    try {
                        small = net.grain_area(static_cast<int>(g)) < thresholds.min_area;
                    } catch (const std::exception&) {
                        small = true;
                    }
                }
                if (small) {
                    const std::size_t mark = events ? events->size() : 0;
                    const double e_before = total_energy(net, model);
                    const EventOutcome o = remove_lens(net, model, static_cast<int>(g), events);
                    if (o.fatal) throw std::runtime_error(o.diagnostic);
                    if (o.did_something) {
                        if (events)
                            for (std::size_t i = mark; i < events->size(); ++i) {
                                (*events)[i].energy_before = e_before;
                                (*events)[i].energy_after = total_energy(net, model);
                            }
                        paranoid_validate(net, "lens-removal");
                        ++count;
                        changed = true;
                    }
                }
            } else if (grain.edges.size() == 3) {
                bool all_short = true;
                for (int b : grain.edges)
                    all_short = all_short && net.boundary_length(b) < thresholds.min_length;
                if (all_short) {
                    const std::size_t mark = events ? events->size() : 0;
                    const double e_before = total_energy(net, model);
                    const EventOutcome o =
                        remove_triangle(net, model, static_cast<int>(g), events);
                    if (o.fatal) throw std::runtime_error(o.diagnostic);
                    if (o.did_something) {
                        if (events)
                            for (std::size_t i = mark; i < events->size(); ++i) {
                                (*events)[i].energy_before = e_before;
                                (*events)[i].energy_after = total_energy(net, model);
                            }
                        paranoid_validate(net, "triangle-removal");
                        ++count;
                        changed = true;
                    }
                }
            }
        }
        if (changed) continue;

        // Shortest boundary below threshold: neighbor switch. Boundaries
        // deferred this round (pinned or pinched without a removable
        // neighbor) are skipped so the scan can reach the others.
        while (!changed) {
            int shortest = -1;
            double shortest_len = thresholds.min_length;
            for (std::size_t b = 0; b < net.boundaries.size(); ++b)
                if (net.boundaries[b].alive && !deferred[b]) {
                    const double len = net.boundary_length(static_cast<int>(b));
                    if (len < shortest_len) {
                        shortest_len = len;
                        shortest = static_cast<int>(b);
                    }
                }
            if (shortest < 0) break;
            const double e_before_switch = total_energy(net, model);
            const std::size_t mark_switch = events ? events->size() : 0;
            EventOutcome o =
                neighbor_switch(net, model, shortest, 1.1 * thresholds.min_length, events);
            if (o.fatal) throw std::runtime_error(o.diagnostic);
            if (o.did_something) {
                if (events)
                    for (std::size_t i = mark_switch; i < events->size(); ++i) {
                        (*events)[i].energy_before = e_before_switch;
                        (*events)[i].energy_after = total_energy(net, model);
                    }
                // Block the freshly inserted boundary from switching straight
                // back within this invocation.
                if (o.new_boundary >= 0) {
                    if (static_cast<std::size_t>(o.new_boundary) >= deferred.size())
                        deferred.resize(o.new_boundary + 64, 0);
                    deferred[o.new_boundary] = 1;
                }
                paranoid_validate(net, "neighbor-switch");
                ++count;
                changed = true;
                break;
            }
            if (o.pinched) {
                // Pinched throat: the switch has no legal pairing. Retire an
                // adjacent grain with few sides instead; otherwise defer.
                const auto& eb = net.boundaries[shortest];
                int victim = -1;
                for (int g : {eb.g1, eb.g2}) {
                    const std::size_t sides = net.grains[g].edges.size();
                    if (sides == 2 || sides == 3)
                        if (victim < 0 ||
                            net.grains[g].edges.size() < net.grains[victim].edges.size())
                            victim = g;
                }
                if (victim >= 0) {
                    const std::size_t mark = events ? events->size() : 0;
                    const double e_before = total_energy(net, model);
                    const EventOutcome r =
                        net.grains[victim].edges.size() == 2
                            ? remove_lens(net, model, victim, events)
                            : remove_triangle(net, model, victim, events);
                    if (r.fatal) throw std::runtime_error(r.diagnostic);
                    if (r.did_something) {
                        if (events)
                            for (std::size_t i = mark; i < events->size(); ++i) {
                                (*events)[i].energy_before = e_before;
                                (*events)[i].energy_after = total_energy(net, model);
                            }
                        paranoid_validate(net, "pinch-removal");
                        ++count;
                        changed = true;
                        break;
                    }
                }
            }
            deferred[shortest] = 1;  // pinned endpoints or unresolvable pinch
        }

        if (!changed) return count;
    }
    throw std::runtime_error("handle_critical_events: unresolvable topology (event cascade)");
}

double relax_junctions(GrainNetwork& net, const SurfaceTensionModel& model, double tol,
                       int max_sweeps, double stop_length) {
    double residual = 0.0;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        for (std::size_t j = 0; j < net.junctions.size(); ++j) {
            NetJunction& jn = net.junctions[j];
            if (!jn.alive || !jn.mobile) continue;
            std::vector<Vec2> pts;
            std::vector<double> w;
            double min_len = 1e300;
            for (int b : jn.edges) {
                const Vec2 v = net.boundary_vector_from(b, static_cast<int>(j));
                pts.push_back(jn.pos + v);
                w.push_back(model.value(net.misorientation(b)));
                min_len = std::min(min_len, norm(v));
            }
            const Vec2 target = weighted_geometric_median(pts, w, jn.pos, 0.1 * tol, 12);
            Vec2 step_v = target - jn.pos;
            const double cap = 0.45 * min_len;
            const double sn = norm(step_v);
            if (sn > cap && sn > 0.0) step_v *= cap / sn;
            net.move_junction(static_cast<int>(j), jn.pos + step_v);
        }

        residual = 0.0;
        double min_len = 1e300;
        const auto forces = junction_rates(net, model, 1.0);
        for (std::size_t j = 0; j < net.junctions.size(); ++j)
            if (net.junctions[j].alive && net.junctions[j].mobile)
                residual = std::max(residual, norm(forces[j]));
        for (std::size_t b = 0; b < net.boundaries.size(); ++b)
            if (net.boundaries[b].alive)
                min_len = std::min(min_len, net.boundary_length(static_cast<int>(b)));
        if (residual <= tol) break;
        if (stop_length > 0.0 && min_len < stop_length) break;  // let events run
    }
    return residual;
}

StepResult step(GrainNetwork& net, double dt, const NetworkParams& params,
                const EventThresholds& thresholds, std::vector<CriticalEvent>* events) {
    StepResult res;
    res.energy_before = total_energy(net, params.model);

    // Save the continuous degrees of freedom for step rejection.
    std::vector<Vec2> pos0(net.junctions.size());
    std::vector<std::array<int, 2>> off0(net.boundaries.size());
    std::vector<double> alpha0(net.grains.size());
    for (std::size_t j = 0; j < net.junctions.size(); ++j) pos0[j] = net.junctions[j].pos;
    for (std::size_t b = 0; b < net.boundaries.size(); ++b)
        off0[b] = {net.boundaries[b].ox, net.boundaries[b].oy};
    for (std::size_t g = 0; g < net.grains.size(); ++g) alpha0[g] = net.grains[g].alpha;

    auto restore = [&]() {
        for (std::size_t j = 0; j < net.junctions.size(); ++j) net.junctions[j].pos = pos0[j];
        for (std::size_t b = 0; b < net.boundaries.size(); ++b) {
            net.boundaries[b].ox = off0[b][0];
            net.boundaries[b].oy = off0[b][1];
        }
        for (std::size_t g = 0; g < net.grains.size(); ++g) net.grains[g].alpha = alpha0[g];
    };

    double h = dt;
    for (int attempt = 0; attempt < 48; ++attempt) {
        try {
            const auto arate = orientation_rates(net, params.model, params.gamma);
            std::vector<Vec2> jrate;
            if (!params.herring) jrate = junction_rates(net, params.model, params.eta);

            if (params.order == 2) {
                // Heun: predictor to the midpoint-averaged corrector.
                for (std::size_t g = 0; g < net.grains.size(); ++g)
                    if (net.grains[g].alive) net.grains[g].alpha += h * arate[g];
                if (!params.herring)
                    for (std::size_t j = 0; j < net.junctions.size(); ++j)
                        if (net.junctions[j].alive && net.junctions[j].mobile)
                            net.move_junction(static_cast<int>(j),
                                              net.junctions[j].pos + h * jrate[j]);
                const auto arate2 = orientation_rates(net, params.model, params.gamma);
                std::vector<Vec2> jrate2;
                if (!params.herring) jrate2 = junction_rates(net, params.model, params.eta);
                for (std::size_t g = 0; g < net.grains.size(); ++g)
                    if (net.grains[g].alive)
                        net.grains[g].alpha =
                            alpha0[g] + 0.5 * h * (arate[g] + arate2[g]);
                if (!params.herring)
                    for (std::size_t j = 0; j < net.junctions.size(); ++j)
                        if (net.junctions[j].alive && net.junctions[j].mobile) {
                            const Vec2 delta = 0.5 * h * (jrate[j] + jrate2[j]) - h * jrate[j];
                            net.move_junction(static_cast<int>(j),
                                              net.junctions[j].pos + delta);
                        }
            } else {
                for (std::size_t g = 0; g < net.grains.size(); ++g)
                    if (net.grains[g].alive) net.grains[g].alpha += h * arate[g];
                if (!params.herring)
                    for (std::size_t j = 0; j < net.junctions.size(); ++j)
                        if (net.junctions[j].alive && net.junctions[j].mobile)
                            net.move_junction(static_cast<int>(j),
                                              net.junctions[j].pos + h * jrate[j]);
            }
        } catch (const std::runtime_error&) {
            restore();
            h *= 0.5;
            ++res.halvings;
            continue;
        }

        const double e_now = total_energy(net, params.model);
        if (e_now <= res.energy_before * (1.0 + params.energy_slack) ||
            e_now <= res.energy_before + 1e-300) {
            res.accepted = true;
            res.dt_used = h;
            net.time += h;
            break;
        }
        restore();
        h *= 0.5;
        ++res.halvings;
        if (h < 1e-300) break;
    }
    if (!res.accepted) throw std::runtime_error("step: step size underflow");

    if (params.herring) {
        // Project onto the quasi-static manifold: alternate junction
        // relaxation with event handling until the force residual meets the
        // tolerance with no collapse pending. Every piece is a descent.
        for (int cycle = 0; cycle < params.herring_max_sweeps; ++cycle) {
            const double resid =
                relax_junctions(net, params.model, params.herring_tol, 8,
                                thresholds.min_length);
            const int fired = handle_critical_events(net, thresholds, params.model, events);
            res.n_events += fired;
            if (fired == 0 && resid <= params.herring_tol) break;
        }
    } else {
        res.n_events = handle_critical_events(net, thresholds, params.model, events);
    }
    res.energy_after = total_energy(net, params.model);
    return res;
}

void write_event_csv(const std::string& path, const std::vector<CriticalEvent>& events) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_event_csv: cannot open " + path);
    out << "# units: time [time], kind [-], ids [entity ids]\n";
    out << "time,kind,ids\n";
    char buf[64];
    for (const auto& ev : events) {
        std::snprintf(buf, sizeof(buf), "%.17g", ev.time);
        out << buf << "," << event_kind_name(ev.kind) << ",";
        for (std::size_t i = 0; i < ev.ids.size(); ++i)
            out << (i ? " " : "") << ev.ids[i];
        out << "\n";
    }
}

}  // namespace gbflow
