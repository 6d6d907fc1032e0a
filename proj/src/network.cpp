#include "gbflow/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gbflow {

int GrainNetwork::alive_junctions() const {
    int n = 0;
    for (const auto& j : junctions) n += j.alive ? 1 : 0;
    return n;
}

int GrainNetwork::alive_boundaries() const {
    int n = 0;
    for (const auto& b : boundaries) n += b.alive ? 1 : 0;
    return n;
}

int GrainNetwork::alive_grains() const {
    int n = 0;
    for (const auto& g : grains) n += g.alive ? 1 : 0;
    return n;
}

double GrainNetwork::wrap(double c) const {
    double w = std::fmod(c, side);
    if (w < 0.0) w += side;
    return w == side ? 0.0 : w;
}

Vec2 GrainNetwork::min_image(const Vec2& p, const Vec2& q) const {
    Vec2 d = q - p;
    d.x -= side * std::round(d.x / side);
    d.y -= side * std::round(d.y / side);
    return d;
}

Vec2 GrainNetwork::boundary_vector(int b) const {
    const NetBoundary& e = boundaries[b];
    const Vec2 from = junctions[e.j1].pos;
    const Vec2 to = junctions[e.j2].pos;
    return Vec2{to.x + side * e.ox - from.x, to.y + side * e.oy - from.y};
}

double GrainNetwork::boundary_length(int b) const { return norm(boundary_vector(b)); }

Vec2 GrainNetwork::boundary_vector_from(int b, int j) const {
    const Vec2 v = boundary_vector(b);
    return boundaries[b].j1 == j ? v : -v;
}

int GrainNetwork::other_junction(int b, int j) const {
    const NetBoundary& e = boundaries[b];
    return e.j1 == j ? e.j2 : e.j1;
}

int GrainNetwork::other_grain(int b, int g) const {
    const NetBoundary& e = boundaries[b];
    return e.g1 == g ? e.g2 : e.g1;
}

double GrainNetwork::misorientation(int b) const {
    const NetBoundary& e = boundaries[b];
    return grains[e.g1].alpha - grains[e.g2].alpha;
}

void GrainNetwork::move_junction(int j, const Vec2& new_pos) {
    const Vec2 wrapped{wrap(new_pos.x), wrap(new_pos.y)};
    const int kx = static_cast<int>(std::lround((new_pos.x - wrapped.x) / side));
    const int ky = static_cast<int>(std::lround((new_pos.y - wrapped.y) / side));
    junctions[j].pos = wrapped;
    if (kx == 0 && ky == 0) return;
    for (int b : junctions[j].edges) {
        NetBoundary& e = boundaries[b];
        if (e.j1 == j && e.j2 == j) continue;  // self-loop: shifts cancel
        if (e.j1 == j) {
            e.ox -= kx;
            e.oy -= ky;
        } else if (e.j2 == j) {
            e.ox += kx;
            e.oy += ky;
        }
    }
}

std::vector<int> GrainNetwork::grain_cycle(int g) const {
    const NetGrain& grain = grains[g];
    std::vector<int> cycle;
    if (grain.edges.size() == 1) return {grain.edges[0]};  // self-loop cell

    const int start = grain.edges.front();
    int edge = start;
    // Walk forward from j1 of the starting edge.
    int at = boundaries[edge].j2;
    cycle.push_back(edge);
    while (true) {
        int next = -1;
        int hits = 0;
        for (int cand : junctions[at].edges) {
            if (cand == edge) continue;
            const NetBoundary& e = boundaries[cand];
            if (e.g1 == g || e.g2 == g) {
                next = cand;
                ++hits;
            }
        }
        if (hits != 1)
            throw std::runtime_error("grain_cycle: interface of grain " + std::to_string(g) +
                                     " is not a single closed walk");
        edge = next;
        at = other_junction(edge, at);
        if (edge == start) break;
        cycle.push_back(edge);
        if (cycle.size() > grain.edges.size() + 1)
            throw std::runtime_error("grain_cycle: walk exceeded the grain's edge count");
    }
    return cycle;
}

double GrainNetwork::grain_area(int g) const {
    const auto cycle = grain_cycle(g);
    if (cycle.size() < 3) {
        // Lens and loop cells: area from the unwrapped polygon of the walk
        // still applies; a two-edge lens has the area between the segments,
        // which is zero for straight boundaries.
        if (cycle.size() == 1) return 0.0;
    }
    // Unwrap the vertex chain along the walk and apply the shoelace formula.
    int at = boundaries[cycle[0]].j1;
    Vec2 p{0.0, 0.0};
    double area2 = 0.0;
    for (int b : cycle) {
        const Vec2 v = boundary_vector_from(b, at);
        const Vec2 q = p + v;
        area2 += cross(p, q);
        p = q;
        at = other_junction(b, at);
    }
    return 0.5 * std::abs(area2);
}

std::vector<std::string> validate_network(const GrainNetwork& net, double min_length) {
    std::vector<std::string> issues;
    auto complain = [&](std::string msg) {
        if (issues.size() < 50) issues.push_back(std::move(msg));
    };

    for (std::size_t j = 0; j < net.junctions.size(); ++j) {
        const auto& jn = net.junctions[j];
        if (!jn.alive) continue;
        if (jn.mobile && jn.edges.size() != 3)
            complain("junction " + std::to_string(j) + " has degree " +
                     std::to_string(jn.edges.size()));
        if (!jn.mobile && jn.edges.empty())
            complain("pinned junction " + std::to_string(j) + " has no edges");
        for (int b : jn.edges) {
            if (b < 0 || b >= static_cast<int>(net.boundaries.size()) || !net.boundaries[b].alive) {
                complain("junction " + std::to_string(j) + " references dead boundary");
                continue;
            }
            const auto& e = net.boundaries[b];
            if (e.j1 != static_cast<int>(j) && e.j2 != static_cast<int>(j))
                complain("junction " + std::to_string(j) + " lists boundary " +
                         std::to_string(b) + " that does not end there");
        }
    }

    for (std::size_t b = 0; b < net.boundaries.size(); ++b) {
        const auto& e = net.boundaries[b];
        if (!e.alive) continue;
        if (!net.junctions[e.j1].alive || !net.junctions[e.j2].alive)
            complain("boundary " + std::to_string(b) + " has a dead endpoint");
        if (e.g1 == e.g2)
            complain("boundary " + std::to_string(b) + " separates a grain from itself");
        if (!net.grains[e.g1].alive || !net.grains[e.g2].alive)
            complain("boundary " + std::to_string(b) + " touches a dead grain");
        for (int j : {e.j1, e.j2}) {
            const auto& edges = net.junctions[j].edges;
            if (std::count(edges.begin(), edges.end(), static_cast<int>(b)) !=
                (e.j1 == e.j2 ? 2 : 1))
                complain("boundary " + std::to_string(b) + " missing from junction " +
                         std::to_string(j) + " edge list");
        }
        for (int g : {e.g1, e.g2}) {
            const auto& edges = net.grains[g].edges;
            if (std::count(edges.begin(), edges.end(), static_cast<int>(b)) != 1)
                complain("boundary " + std::to_string(b) + " missing from grain " +
                         std::to_string(g) + " edge list");
        }
        if (min_length > 0.0 && net.boundary_length(static_cast<int>(b)) <= min_length)
            complain("boundary " + std::to_string(b) + " shorter than the collapse threshold");
    }

    for (std::size_t g = 0; g < net.grains.size(); ++g) {
        const auto& grain = net.grains[g];
        if (!grain.alive) continue;
        if (grain.edges.empty()) complain("grain " + std::to_string(g) + " has no boundary");
        for (int b : grain.edges) {
            if (b < 0 || b >= static_cast<int>(net.boundaries.size()) || !net.boundaries[b].alive) {
                complain("grain " + std::to_string(g) + " references dead boundary");
                continue;
            }
            const auto& e = net.boundaries[b];
            if (e.g1 != static_cast<int>(g) && e.g2 != static_cast<int>(g))
                complain("grain " + std::to_string(g) + " lists unrelated boundary " +
                         std::to_string(b));
        }
        if (net.closed && issues.empty()) {
            try {
                (void)net.grain_cycle(static_cast<int>(g));
            } catch (const std::exception& ex) {
                complain(ex.what());
            }
        }
    }

    if (net.closed) {
        const int euler = net.alive_junctions() - net.alive_boundaries() + net.alive_grains();
        if (euler != 0)
            complain("Euler characteristic V-E+F = " + std::to_string(euler) + ", expected 0");
    }
    return issues;
}

namespace {

// Left-face tracing on directed edges; returns, for each boundary, the face
// id left of j1->j2 (slot 0) and left of j2->j1 (slot 1), plus face count.
struct FaceTrace {
    std::vector<std::array<int, 2>> face_of;
    int n_faces = 0;
};

FaceTrace trace_faces(const GrainNetwork& net) {
    const int nb = static_cast<int>(net.boundaries.size());
    FaceTrace ft;
    ft.face_of.assign(nb, {-1, -1});

    auto next_directed = [&](int b, int dir) {
        // Directed edge arrives at this junction; continue along the face on
        // the left: take the incident edge most clockwise from the reversed
        // incoming direction.
        const int head = dir == 0 ? net.boundaries[b].j2 : net.boundaries[b].j1;
        const Vec2 incoming = dir == 0 ? net.boundary_vector(b) : -net.boundary_vector(b);
        const double back = std::atan2(-incoming.y, -incoming.x);
        int best_edge = -1, best_dir = 0;
        double best_turn = 7.0;  // > 2*pi
        for (int cand : net.junctions[head].edges) {
            for (int d = 0; d < 2; ++d) {
                const int tail = d == 0 ? net.boundaries[cand].j1 : net.boundaries[cand].j2;
                if (tail != head) continue;
                if (cand == b && ((dir == 0 && d == 1) || (dir == 1 && d == 0)) &&
                    net.boundaries[cand].j1 != net.boundaries[cand].j2)
                    continue;  // do not immediately double back (except loops)
                const Vec2 out =
                    d == 0 ? net.boundary_vector(cand) : -net.boundary_vector(cand);
                const double ang = std::atan2(out.y, out.x);
                double turn = back - ang;  // clockwise offset from the reverse
                while (turn <= 1e-12) turn += 2.0 * M_PI;
                while (turn > 2.0 * M_PI + 1e-12) turn -= 2.0 * M_PI;
                if (turn < best_turn) {
                    best_turn = turn;
                    best_edge = cand;
                    best_dir = d;
                }
            }
        }
        if (best_edge < 0) throw std::runtime_error("trace_faces: dead-end junction");
        return std::pair<int, int>{best_edge, best_dir};
    };

    for (int b = 0; b < nb; ++b) {
        if (!net.boundaries[b].alive) continue;
        for (int dir = 0; dir < 2; ++dir) {
            if (ft.face_of[b][dir] >= 0) continue;
            const int face = ft.n_faces++;
            int e = b, d = dir;
            int guard = 0;
            do {
                ft.face_of[e][d] = face;
                auto [ne, nd] = next_directed(e, d);
                e = ne;
                d = nd;
                if (++guard > 4 * nb) throw std::runtime_error("trace_faces: walk did not close");
            } while (!(e == b && d == dir));
        }
    }
    return ft;
}

}  // namespace

GrainNetwork make_honeycomb(int p, int q, double side) {
    if (p < 1 || q < 1) throw std::invalid_argument("make_honeycomb: p, q must be >= 1");
    const double d = side / (p * std::sqrt(3.0));
    const double h = (side / q - d) / 2.0;
    if (!(h > 0.0))
        throw std::invalid_argument("make_honeycomb: too many rows for the domain side");
    if (!(d < side / 2.0))
        throw std::invalid_argument("make_honeycomb: need p >= 2 on a periodic domain");

    GrainNetwork net;
    net.side = side;
    net.closed = true;

    // Four junctions per rectangular cell: lower/upper pair of each column.
    auto jid = [&](int i, int j, int k) { return ((j % q + q) % q * p + (i % p + p) % p) * 4 + k; };
    net.junctions.resize(static_cast<std::size_t>(4 * p * q));
    for (int j = 0; j < q; ++j)
        for (int i = 0; i < p; ++i) {
            const double x0 = i * std::sqrt(3.0) * d;
            const double y0 = j * (2.0 * h + d);
            net.junctions[jid(i, j, 0)].pos = {net.wrap(x0), net.wrap(y0)};
            net.junctions[jid(i, j, 1)].pos = {net.wrap(x0), net.wrap(y0 + h)};
            net.junctions[jid(i, j, 2)].pos = {net.wrap(x0 + std::sqrt(3.0) * d / 2.0),
                                               net.wrap(y0 + h + d / 2.0)};
            net.junctions[jid(i, j, 3)].pos = {net.wrap(x0 + std::sqrt(3.0) * d / 2.0),
                                               net.wrap(y0 + 2.0 * h + d / 2.0)};
        }

    auto add_edge = [&](int a, int b) {
        NetBoundary e;
        e.j1 = a;
        e.j2 = b;
        // Image shift from the shortest periodic representative; valid while
        // every edge is shorter than half the domain.
        const Vec2 dvec = net.min_image(net.junctions[a].pos, net.junctions[b].pos);
        const Vec2 raw = net.junctions[b].pos - net.junctions[a].pos;
        e.ox = static_cast<int>(std::lround((dvec.x - raw.x) / side));
        e.oy = static_cast<int>(std::lround((dvec.y - raw.y) / side));
        const int id = static_cast<int>(net.boundaries.size());
        net.boundaries.push_back(e);
        net.junctions[a].edges.push_back(id);
        net.junctions[b].edges.push_back(id);
    };

    for (int j = 0; j < q; ++j)
        for (int i = 0; i < p; ++i) {
            add_edge(jid(i, j, 0), jid(i, j, 1));          // vertical, length h
            add_edge(jid(i, j, 2), jid(i, j, 3));          // vertical, length h
            add_edge(jid(i, j, 1), jid(i, j, 2));          // oblique up-right
            add_edge(jid(i, j, 1), jid(i - 1, j, 2));      // oblique up-left
            add_edge(jid(i, j, 3), jid(i + 1, j + 1, 0));  // oblique up-right
            add_edge(jid(i, j, 3), jid(i, j + 1, 0));      // oblique up-left
        }

    const FaceTrace ft = trace_faces(net);
    net.grains.resize(static_cast<std::size_t>(ft.n_faces));
    for (std::size_t b = 0; b < net.boundaries.size(); ++b) {
        net.boundaries[b].g1 = ft.face_of[b][0];
        net.boundaries[b].g2 = ft.face_of[b][1];
        net.grains[ft.face_of[b][0]].edges.push_back(static_cast<int>(b));
        net.grains[ft.face_of[b][1]].edges.push_back(static_cast<int>(b));
    }
    return net;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_snapshot(const GrainNetwork& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_snapshot: cannot open " + path);

    // Dense ids for alive entities only.
    std::vector<int> jmap(net.junctions.size(), -1), bmap(net.boundaries.size(), -1),
        gmap(net.grains.size(), -1);
    int nj = 0, nb = 0, ng = 0;
    for (std::size_t i = 0; i < net.junctions.size(); ++i)
        if (net.junctions[i].alive) jmap[i] = nj++;
    for (std::size_t i = 0; i < net.boundaries.size(); ++i)
        if (net.boundaries[i].alive) bmap[i] = nb++;
    for (std::size_t i = 0; i < net.grains.size(); ++i)
        if (net.grains[i].alive) gmap[i] = ng++;

    out << "gbflow-network-snapshot 1\n";
    out << "[meta]\n";
    out << "side = " << fmt_double(net.side) << "\n";
    out << "time = " << fmt_double(net.time) << "\n";
    out << "closed = " << (net.closed ? 1 : 0) << "\n";
    out << "junctions = " << nj << "\n";
    out << "boundaries = " << nb << "\n";
    out << "grains = " << ng << "\n";
    out << "[junctions]\n";
    for (std::size_t i = 0; i < net.junctions.size(); ++i) {
        const auto& j = net.junctions[i];
        if (!j.alive) continue;
        out << jmap[i] << " " << fmt_double(j.pos.x) << " " << fmt_double(j.pos.y) << " "
            << (j.mobile ? 1 : 0) << "\n";
    }
    out << "[grains]\n";
    for (std::size_t i = 0; i < net.grains.size(); ++i) {
        if (!net.grains[i].alive) continue;
        out << gmap[i] << " " << fmt_double(net.grains[i].alpha) << "\n";
    }
    out << "[boundaries]\n";
    for (std::size_t i = 0; i < net.boundaries.size(); ++i) {
        const auto& b = net.boundaries[i];
        if (!b.alive) continue;
        out << bmap[i] << " " << jmap[b.j1] << " " << jmap[b.j2] << " " << b.ox << " " << b.oy
            << " " << gmap[b.g1] << " " << gmap[b.g2] << "\n";
    }
}

GrainNetwork load_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_snapshot: cannot open " + path);
    std::string header;
    int version = 0;
    in >> header >> version;
    if (header != "gbflow-network-snapshot" || version != 1)
        throw std::runtime_error("load_snapshot: unrecognized snapshot header in " + path);

    GrainNetwork net;
    int nj = 0, nb = 0, ng = 0, closed = 1;
    std::string line;
    std::getline(in, line);
    std::string section;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '[') {
            section = line;
            continue;
        }
        std::istringstream row(line);
        if (section == "[meta]") {
            std::string key, eq;
            row >> key >> eq;
            if (key == "side") row >> net.side;
            else if (key == "time") row >> net.time;
            else if (key == "closed") row >> closed;
            else if (key == "junctions") row >> nj;
            else if (key == "boundaries") row >> nb;
            else if (key == "grains") row >> ng;
        } else if (section == "[junctions]") {
            int id, mobile;
            NetJunction j;
            row >> id >> j.pos.x >> j.pos.y >> mobile;
            j.mobile = mobile != 0;
            if (id != static_cast<int>(net.junctions.size()))
                throw std::runtime_error("load_snapshot: junction ids not dense");
            net.junctions.push_back(j);
        } else if (section == "[grains]") {
            int id;
            NetGrain g;
            row >> id >> g.alpha;
            if (id != static_cast<int>(net.grains.size()))
                throw std::runtime_error("load_snapshot: grain ids not dense");
            net.grains.push_back(g);
        } else if (section == "[boundaries]") {
            int id;
            NetBoundary b;
            row >> id >> b.j1 >> b.j2 >> b.ox >> b.oy >> b.g1 >> b.g2;
            if (id != static_cast<int>(net.boundaries.size()))
                throw std::runtime_error("load_snapshot: boundary ids not dense");
            net.boundaries.push_back(b);
        }
        if (row.fail()) throw std::runtime_error("load_snapshot: malformed row: " + line);
    }
    net.closed = closed != 0;
    if (static_cast<int>(net.junctions.size()) != nj ||
        static_cast<int>(net.boundaries.size()) != nb ||
        static_cast<int>(net.grains.size()) != ng)
        throw std::runtime_error("load_snapshot: entity counts disagree with [meta]");

    for (std::size_t b = 0; b < net.boundaries.size(); ++b) {
        const auto& e = net.boundaries[b];
        // A self-loop occupies two slots at its junction.
        net.junctions[e.j1].edges.push_back(static_cast<int>(b));
        net.junctions[e.j2].edges.push_back(static_cast<int>(b));
        net.grains[e.g1].edges.push_back(static_cast<int>(b));
        net.grains[e.g2].edges.push_back(static_cast<int>(b));
    }
    return net;
}

}  // namespace gbflow
