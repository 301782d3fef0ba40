#pragma once

#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "calderon/geometry.hpp"
#include "calderon/mesh.hpp"

namespace calderon {

struct Violation {
    std::string clause;
    std::string message;
};

inline std::string to_string(const std::vector<Violation>& vs) {
    std::string s;
    for (const auto& v : vs) s += "[" + v.clause + "] " + v.message + "\n";
    return s;
}

namespace detail {

/// Triangulation of the region arrangement (no refinement) with triangle
/// adjacency, used to decide topological clauses.
struct Arrangement {
    Mesh mesh;
    std::vector<std::array<int, 3>> edge_neighbors;        // across edge (i, i+1)
    std::vector<std::vector<int>> vertex_triangles;

    Arrangement(const Domain& domain, const RegionSet& regions) {
        MeshOptions opt;
        opt.refine = false;
        mesh = triangulate(domain, regions, 1.0, opt);
        const std::size_t nt = mesh.num_triangles();
        edge_neighbors.assign(nt, {-1, -1, -1});
        vertex_triangles.assign(mesh.num_vertices(), {});
        std::map<std::pair<int, int>, std::pair<int, int>> owner;
        for (std::size_t t = 0; t < nt; ++t)
            for (int i = 0; i < 3; ++i) {
                const int a = mesh.triangles[t][i], b = mesh.triangles[t][(i + 1) % 3];
                vertex_triangles[a].push_back(static_cast<int>(t));
                const auto k = std::make_pair(std::min(a, b), std::max(a, b));
                auto it = owner.find(k);
                if (it == owner.end()) {
                    owner[k] = {static_cast<int>(t), i};
                } else {
                    edge_neighbors[t][i] = it->second.first;
                    edge_neighbors[it->second.first][it->second.second] = static_cast<int>(t);
                }
            }
    }

    /// Components of the triangle set selected by `in`, connecting triangles
    /// through shared edges (open sets) or also shared vertices (closed sets).
    int components(const std::function<bool(std::size_t)>& in, bool through_vertices) const {
        const std::size_t nt = mesh.num_triangles();
        std::vector<int> comp(nt, -1);
        int count = 0;
        for (std::size_t s = 0; s < nt; ++s) {
            if (!in(s) || comp[s] >= 0) continue;
            std::vector<int> stack{static_cast<int>(s)};
            comp[s] = count;
            while (!stack.empty()) {
                const int t = stack.back();
                stack.pop_back();
                auto visit = [&](int n) {
                    if (n >= 0 && comp[n] < 0 && in(static_cast<std::size_t>(n))) {
                        comp[n] = count;
                        stack.push_back(n);
                    }
                };
                if (through_vertices) {
                    for (int v : mesh.triangles[t])
                        for (int n : vertex_triangles[v]) visit(n);
                } else {
                    for (int n : edge_neighbors[t]) visit(n);
                }
            }
            ++count;
        }
        return count;
    }

    bool has_label(std::size_t t, std::initializer_list<RegionLabel> labels) const {
        for (auto l : labels)
            if (mesh.triangle_region[t] == l) return true;
        return false;
    }
};

inline bool polygons_overlap(const Polygon& A, const Polygon& B) {
    bool crossing = false;
    for_each_edge(A, [&](Point a, Point b) {
        if (crossing) return;
        for_each_edge(B, [&](Point c, Point d) {
            if (!crossing && segments_cross(a, b, c, d)) crossing = true;
        });
    });
    if (crossing) return true;
    // interior sample points just inside each edge of one polygon
    auto probe = [](const Polygon& P, const Polygon& Q) {
        bool hit = false;
        for_each_edge(P, [&](Point a, Point b) {
            if (hit) return;
            const Point d = b - a;
            const double len = norm(d);
            const Point inward{-d.y / len, d.x / len};
            const Point s = 0.5 * (a + b) + (1e-7 * len) * inward;
            if (contains(Q, s, 0.0)) hit = true;
            if (locate(Q, a, 1e-12) == Containment::inside) hit = true;
        });
        return hit;
    };
    return probe(A, B) || probe(B, A);
}

}  // namespace detail

/// Checks the decidable region clauses: simple polygons inside the domain,
/// pairwise disjoint labels, connected complements of D0 and of
/// D0 ∪ Ddeg ∪ Dsing, and Ddeg ∪ Dsing compactly contained in the interior
/// of D. Returns one violation per failed clause instance.
/// Throws ConfigError for self-intersecting input polygons.
inline std::vector<Violation> validate_regions(const Domain& domain, const RegionSet& regions) {
    std::vector<Violation> out;
    if (regions.empty()) return out;
    for (const auto& r : regions.regions) {
        if (r.polygon.outer.size() < 3 || !polygon_is_simple(r.polygon))
            throw ConfigError("region '" + r.name + "' is not a simple polygon");
        if (r.label == RegionLabel::background)
            out.push_back({"label", "region '" + r.name + "' has the background label"});
    }
    for (const auto& r : regions.regions) {
        bool inside = true;
        for (auto p : r.polygon.outer)
            if (!domain.contains(p) || domain.distance_to_boundary(p) <= 1e-9) inside = false;
        if (!inside)
            out.push_back({"inside_domain", "region '" + r.name + "' is not compactly contained in the domain"});
    }
    for (std::size_t i = 0; i < regions.regions.size(); ++i)
        for (std::size_t j = i + 1; j < regions.regions.size(); ++j)
            if (detail::polygons_overlap(regions.regions[i].polygon, regions.regions[j].polygon))
                out.push_back({"disjoint", "regions '" + regions.regions[i].name + "' and '" +
                                               regions.regions[j].name + "' overlap"});
    for (const auto& v : out)
        if (v.clause == "inside_domain") return out;

    const detail::Arrangement arr(domain, regions);
    const auto& m = arr.mesh;
    using L = RegionLabel;
    auto complement_components = [&](std::initializer_list<L> labels) {
        return arr.components([&](std::size_t t) { return !arr.has_label(t, labels); }, false);
    };
    if (regions.has(L::D0) && complement_components({L::D0}) > 1)
        out.push_back({"complement_D0", "complement of D0 not connected"});
    if ((regions.has(L::D0) || regions.has(L::Ddeg) || regions.has(L::Dsing)) &&
        complement_components({L::D0, L::Ddeg, L::Dsing}) > 1)
        out.push_back({"complement_D0_A2", "complement of D0 ∪ Ddeg ∪ Dsing not connected"});

    const auto on_boundary = m.boundary_vertex_mask();
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
        if (!arr.has_label(t, {L::Ddeg, L::Dsing})) continue;
        bool touches = false;
        for (int v : m.triangles[t]) {
            if (on_boundary[v]) touches = true;
            for (int n : arr.vertex_triangles[v])
                if (m.triangle_region[n] == L::background) touches = true;
        }
        if (touches) {
            const int r = m.triangle_polygon[t];
            out.push_back({"compactly_contained", "region '" + regions.regions[r].name +
                                                      "' is not compactly contained in the interior of D"});
            break;
        }
    }
    return out;
}

/// Number of connected components (closed-set sense) of the union of the
/// given labels.
inline int count_components(const Domain& domain, const RegionSet& regions,
                            std::initializer_list<RegionLabel> labels) {
    if (regions.empty()) return 0;
    const detail::Arrangement arr(domain, regions);
    return arr.components([&](std::size_t t) { return arr.has_label(t, labels); }, true);
}

/// True if some region with a label in `a` shares a boundary point with a
/// region whose label is in `b` (or with ∂Ω when `b` is empty).
inline bool labels_touch(const Domain& domain, const RegionSet& regions,
                         std::initializer_list<RegionLabel> a, std::initializer_list<RegionLabel> b,
                         double tol = 1e-9) {
    auto in = [](RegionLabel l, std::initializer_list<RegionLabel> set) {
        return std::find(set.begin(), set.end(), l) != set.end();
    };
    for (const auto& ra : regions.regions) {
        if (!in(ra.label, a)) continue;
        if (b.size() == 0) {
            for (auto p : ra.polygon.outer)
                if (domain.distance_to_boundary(p) <= tol) return true;
            continue;
        }
        for (const auto& rb : regions.regions) {
            if (&ra == &rb || !in(rb.label, b)) continue;
            bool touch = false;
            for_each_edge(ra.polygon, [&](Point p, Point q) {
                if (touch) return;
                for_each_edge(rb.polygon, [&](Point s, Point t) {
                    if (!touch && detail::segments_touch(p, q, s, t, tol)) touch = true;
                });
            });
            if (touch) return true;
        }
    }
    return false;
}

}  // namespace calderon
