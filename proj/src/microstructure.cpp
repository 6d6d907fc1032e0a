#include "gbflow/microstructure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <tuple>

namespace gbflow {

namespace {

// Deterministic uniform double in [0, 1) from a 64-bit generator state,
// independent of library distribution internals.
struct SplitMix {
    std::uint64_t state;
    explicit SplitMix(std::uint64_t seed) : state(seed) {}
    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double next_unit() { return (next_u64() >> 11) * 0x1.0p-53; }
};

struct DelPoint {
    Vec2 p;
    int base = -1;  // seed index; -1 for super-triangle vertices
    int tx = 0, ty = 0;
};

struct DelTri {
    std::array<int, 3> v{};  // CCW
    std::array<int, 3> n{};  // neighbor across edge (v[i], v[i+1]); -1 none
    bool alive = true;
};

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// p strictly inside the circumcircle of CCW triangle (a, b, c).
bool in_circle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
    const double ax = a.x - p.x, ay = a.y - p.y;
    const double bx = b.x - p.x, by = b.y - p.y;
    const double cx = c.x - p.x, cy = c.y - p.y;
    const double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
                       (bx * bx + by * by) * (ax * cy - cx * ay) +
                       (cx * cx + cy * cy) * (ax * by - bx * ay);
    return det > 0.0;
}

Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    const double a2 = norm2(a), b2 = norm2(b), c2 = norm2(c);
    return {(a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d,
            (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d};
}

class Delaunay {
  public:
    std::vector<DelPoint> pts;
    std::vector<DelTri> tris;

    explicit Delaunay(std::vector<DelPoint> points) : pts(std::move(points)) {
        // Super-triangle far outside the tiled cloud.
        const int s0 = static_cast<int>(pts.size());
        pts.push_back({{-900.0, -900.0}, -1, 0, 0});
        pts.push_back({{900.0, -900.0}, -1, 0, 0});
        pts.push_back({{0.0, 900.0}, -1, 0, 0});
        tris.push_back({{s0, s0 + 1, s0 + 2}, {-1, -1, -1}, true});

        // Morton-ish insertion order for short location walks.
        std::vector<int> order(static_cast<std::size_t>(s0));
        for (int i = 0; i < s0; ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const auto key = [&](int i) {
                const std::uint32_t xi =
                    static_cast<std::uint32_t>((pts[i].p.x + 10.0) * 1e4);
                const std::uint32_t yi =
                    static_cast<std::uint32_t>((pts[i].p.y + 10.0) * 1e4);
                std::uint64_t m = 0;
                for (int bit = 0; bit < 21; ++bit) {
                    m |= static_cast<std::uint64_t>((xi >> bit) & 1u) << (2 * bit);
                    m |= static_cast<std::uint64_t>((yi >> bit) & 1u) << (2 * bit + 1);
                }
                return m;
            };
            return key(a) < key(b);
        });
        for (int i : order) insert(i);
    }

  private:
    int last_tri = 0;

    int locate(const Vec2& p) const {
        int t = last_tri;
        if (t < 0 || t >= static_cast<int>(tris.size()) || !tris[t].alive)
            t = static_cast<int>(tris.size()) - 1;
        for (int steps = 0; steps < 4 * static_cast<int>(tris.size()) + 16; ++steps) {
            const DelTri& tri = tris[t];
            int next = -1;
            for (int i = 0; i < 3; ++i) {
                if (orient(pts[tri.v[i]].p, pts[tri.v[(i + 1) % 3]].p, p) < 0.0) {
                    next = tri.n[i];
                    break;
                }
            }
            if (next < 0) return t;
            t = next;
        }
        // Fallback: exhaustive scan (degenerate walk).
        for (int i = static_cast<int>(tris.size()) - 1; i >= 0; --i) {
            if (!tris[i].alive) continue;
            const DelTri& tri = tris[i];
            bool inside = true;
            for (int k = 0; k < 3; ++k)
                inside = inside &&
                         orient(pts[tri.v[k]].p, pts[tri.v[(k + 1) % 3]].p, p) >= 0.0;
            if (inside) return i;
        }
        throw std::runtime_error("delaunay: point location failed");
    }

    void insert(int pi) {
        const Vec2 p = pts[pi].p;
        const int t0 = locate(p);

        // Grow the cavity of circumcircle-violating triangles.
        std::vector<int> cavity{t0};
        std::vector<int> stack{t0};
        std::vector<char> in_cavity(tris.size(), 0);
        in_cavity[t0] = 1;
        struct Rim {
            int a, b, outer;
        };
        std::vector<Rim> rim;
        while (!stack.empty()) {
            const int t = stack.back();
            stack.pop_back();
            for (int i = 0; i < 3; ++i) {
                const int nb = tris[t].n[i];
                const int a = tris[t].v[i], b = tris[t].v[(i + 1) % 3];
                if (nb < 0) {
                    rim.push_back({a, b, -1});
                    continue;
                }
                if (in_cavity[nb]) continue;
                const DelTri& nt = tris[nb];
                if (in_circle(pts[nt.v[0]].p, pts[nt.v[1]].p, pts[nt.v[2]].p, p)) {
                    in_cavity[nb] = 1;
                    cavity.push_back(nb);
                    stack.push_back(nb);
                } else {
                    rim.push_back({a, b, nb});
                }
            }
        }
        for (int t : cavity) tris[t].alive = false;

        // Fan the rim around the new point; stitch neighbors via vertex maps.
        std::map<int, int> tri_starting_at, tri_ending_at;
        std::vector<int> created;
        for (const Rim& r : rim) {
            DelTri nt;
            nt.v = {r.a, r.b, pi};
            nt.n = {r.outer, -1, -1};
            const int id = static_cast<int>(tris.size());
            tris.push_back(nt);
            created.push_back(id);
            tri_starting_at[r.a] = id;
            tri_ending_at[r.b] = id;
            if (r.outer >= 0) {
                DelTri& ot = tris[r.outer];
                for (int i = 0; i < 3; ++i)
                    if (ot.v[i] == r.b && ot.v[(i + 1) % 3] == r.a) ot.n[i] = id;
            }
        }
        for (int id : created) {
            DelTri& t = tris[id];
            t.n[1] = tri_starting_at.at(t.v[1]);  // edge (b, p)
            t.n[2] = tri_ending_at.at(t.v[0]);    // edge (p, a)
        }
        last_tri = created.empty() ? last_tri : created.back();
    }
};

struct BuildResult {
    bool ok = false;
    std::string reason;
    GrainNetwork net;
};

BuildResult build_periodic_voronoi(const std::vector<Vec2>& seeds, double side) {
    const int n = static_cast<int>(seeds.size());
    const int reach = n < 32 ? 2 : 1;  // tiling radius in cells

    std::vector<DelPoint> pts;
    for (int ty = -reach; ty <= reach; ++ty)
        for (int tx = -reach; tx <= reach; ++tx)
            for (int i = 0; i < n; ++i)
                pts.push_back({{seeds[i].x + side * tx, seeds[i].y + side * ty}, i, tx, ty});

    Delaunay dt(std::move(pts));

    BuildResult res;
    GrainNetwork& net = res.net;
    net.side = side;
    net.closed = true;
    net.grains.resize(static_cast<std::size_t>(n));

    // Canonical key of a triangle class: sorted (base, tile) triple after
    // shifting so the circumcenter lies in the fundamental cell.
    using Key = std::array<std::array<int, 3>, 3>;
    struct TriInfo {
        int junction = -1;
        int sx = 0, sy = 0;
    };
    std::map<Key, int> junction_of;
    std::vector<TriInfo> info(dt.tris.size());

    auto classify = [&](int t) -> std::tuple<Key, Vec2, int, int> {
        const DelTri& tri = dt.tris[t];
        const Vec2 cc = circumcenter(dt.pts[tri.v[0]].p, dt.pts[tri.v[1]].p,
                                     dt.pts[tri.v[2]].p);
        const int sx = static_cast<int>(std::floor(cc.x / side));
        const int sy = static_cast<int>(std::floor(cc.y / side));
        Key key;
        for (int i = 0; i < 3; ++i) {
            const DelPoint& dp = dt.pts[tri.v[i]];
            key[i] = {dp.base, dp.tx - sx, dp.ty - sy};
        }
        std::sort(key.begin(), key.end());
        return {key, Vec2{cc.x - side * sx, cc.y - side * sy}, sx, sy};
    };

    // Junctions come only from canonical triangles (circumcenter in the
    // fundamental cell); hull-adjacent triangle classes of the tiled cloud
    // are not periodic and must not seed junctions.
    for (std::size_t t = 0; t < dt.tris.size(); ++t) {
        const DelTri& tri = dt.tris[t];
        if (!tri.alive) continue;
        if (dt.pts[tri.v[0]].base < 0 || dt.pts[tri.v[1]].base < 0 || dt.pts[tri.v[2]].base < 0)
            continue;  // touches the super-triangle
        auto [key, pos, sx, sy] = classify(static_cast<int>(t));
        info[t].sx = sx;
        info[t].sy = sy;
        if (sx != 0 || sy != 0) continue;
        if (junction_of.count(key)) {
            res.reason = "voronoi: duplicate canonical triangle class";
            return res;
        }
        NetJunction j;
        j.pos = {net.wrap(pos.x), net.wrap(pos.y)};
        junction_of[key] = static_cast<int>(net.junctions.size());
        info[t].junction = static_cast<int>(net.junctions.size());
        net.junctions.push_back(j);
    }

    // Boundaries from adjacencies of canonical (central-cell) triangles.
    for (std::size_t t = 0; t < dt.tris.size(); ++t) {
        const DelTri& tri = dt.tris[t];
        if (!tri.alive || info[t].junction < 0) continue;
        if (info[t].sx != 0 || info[t].sy != 0) continue;  // not the canonical copy
        for (int i = 0; i < 3; ++i) {
            const int nb = tri.n[i];
            if (nb < 0 || !dt.tris[nb].alive) {
                res.reason = "voronoi: open adjacency near the tiling edge";
                return res;
            }
            const DelTri& ntri = dt.tris[nb];
            if (dt.pts[ntri.v[0]].base < 0 || dt.pts[ntri.v[1]].base < 0 ||
                dt.pts[ntri.v[2]].base < 0) {
                res.reason = "voronoi: neighbor touches the hull";
                return res;
            }
            auto [nkey, npos, nsx, nsy] = classify(nb);
            const auto found = junction_of.find(nkey);
            if (found == junction_of.end()) {
                res.reason = "voronoi: neighbor class has no canonical copy";
                return res;
            }
            const int j1 = info[t].junction;
            const int j2 = found->second;
            const int ox = nsx, oy = nsy;

            // Grains flanking the shared Delaunay edge.
            const int a = tri.v[i], b = tri.v[(i + 1) % 3];
            const int g1 = dt.pts[a].base, g2 = dt.pts[b].base;
            if (g1 == g2) {
                res.reason = "voronoi: a grain neighbors its own periodic image";
                return res;
            }

            // Each torus edge is sighted from both sides (or, for an edge
            // joining a junction to its own periodic image, with both image
            // shifts); keep exactly one sighting.
            if (j1 > j2 || (j1 == j2 && std::make_pair(ox, oy) <= std::make_pair(0, 0)))
                continue;

            NetBoundary e;
            e.j1 = j1;
            e.j2 = j2;
            e.ox = ox;
            e.oy = oy;
            e.g1 = g1;
            e.g2 = g2;
            const int id = static_cast<int>(net.boundaries.size());
            net.boundaries.push_back(e);
            net.junctions[j1].edges.push_back(id);
            net.junctions[j2].edges.push_back(id);
            net.grains[g1].edges.push_back(id);
            net.grains[g2].edges.push_back(id);
        }
    }

    for (const auto& j : net.junctions)
        if (j.edges.size() != 3) {
            res.reason = "voronoi: vertex degree != 3 (cocircular degeneracy)";
            return res;
        }
    for (std::size_t b = 0; b < net.boundaries.size(); ++b)
        if (net.boundary_length(static_cast<int>(b)) < 1e-9) {
            res.reason = "voronoi: near-degenerate short edge";
            return res;
        }
    for (const auto& g : net.grains)
        if (g.edges.size() < 2) {
            res.reason = "voronoi: grain with fewer than two boundaries";
            return res;
        }
    res.ok = true;
    return res;
}

}  // namespace

std::vector<double> sample_orientations(const GeneratorConfig& cfg) {
    if (cfg.n_grains < 3) throw std::invalid_argument("sample_orientations: n_grains must be >= 3");
    if (!(cfg.orientation_std > 0.0))
        throw std::invalid_argument("sample_orientations: orientation_std must be > 0");
    SplitMix rng(cfg.seed * 0x51ab5f1dULL + 0xa5e1u);
    std::vector<double> alpha(static_cast<std::size_t>(cfg.n_grains));
    const double clamp = M_PI / 8.0;  // keeps every misorientation within pi/4
    for (auto& a : alpha) {
        const double u1 = std::max(rng.next_unit(), 1e-300);
        const double u2 = rng.next_unit();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        a = std::clamp(cfg.orientation_std * z, -clamp, clamp);
    }
    return alpha;
}

GrainNetwork generate_voronoi(const GeneratorConfig& cfg) {
    if (cfg.n_grains < 3) throw std::invalid_argument("generate_voronoi: n_grains must be >= 3");
    const double side = 2.0;

    for (int attempt = 0; attempt < 24; ++attempt) {
        SplitMix rng(cfg.seed * 0x9e3779b9ULL + 0x1000 + static_cast<std::uint64_t>(attempt));
        std::vector<Vec2> seeds(static_cast<std::size_t>(cfg.n_grains));
        for (auto& s : seeds) {
            s.x = side * rng.next_unit();
            s.y = side * rng.next_unit();
        }
        // Deterministic jitter breaks cocircular ties from the start.
        for (auto& s : seeds) {
            s.x += 1e-9 * (rng.next_unit() - 0.5);
            s.y += 1e-9 * (rng.next_unit() - 0.5);
        }
        // Coincident seeds: redraw.
        bool coincident = false;
        for (std::size_t i = 0; i < seeds.size() && !coincident; ++i)
            for (std::size_t k = i + 1; k < seeds.size(); ++k) {
                Vec2 d = seeds[k] - seeds[i];
                d.x -= side * std::round(d.x / side);
                d.y -= side * std::round(d.y / side);
                if (norm2(d) < 1e-24) {
                    coincident = true;
                    break;
                }
            }
        if (coincident) continue;

        BuildResult res = build_periodic_voronoi(seeds, side);
        if (!res.ok) continue;  // degenerate draw: retry with the next derived seed

        const auto alpha = sample_orientations(cfg);
        for (int g = 0; g < cfg.n_grains; ++g) res.net.grains[g].alpha = alpha[g];
        return res.net;
    }
    throw std::runtime_error(
        "generate_voronoi: could not build a valid periodic tessellation for this "
        "configuration (too few grains for the domain?)");
}

}  // namespace gbflow
