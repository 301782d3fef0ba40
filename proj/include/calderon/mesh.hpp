#pragma once

#include <array>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "calderon/geometry.hpp"
#include "calderon/triangulation.hpp"

namespace calderon {

struct BoundaryEdge {
    int a = 0;
    int b = 0;
    bool on_gamma = false;
};

/// Conforming triangulation of the domain. Region boundaries, singular sets
/// and any extra constraint segments are unions of mesh edges.
struct Mesh {
    std::vector<Point> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<RegionLabel> triangle_region;
    std::vector<int> triangle_polygon;  ///< index into RegionSet::regions, -1 for background
    std::vector<BoundaryEdge> boundary_edges;
    double h = 0.0;                     ///< max triangle diameter
    std::uint64_t region_geometry = 0;  ///< RegionSet::geometry_hash() of the meshed regions

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_triangles() const { return triangles.size(); }

    std::array<Point, 3> corners(std::size_t t) const {
        const auto& v = triangles[t];
        return {vertices[v[0]], vertices[v[1]], vertices[v[2]]};
    }
    double triangle_area(std::size_t t) const {
        const auto c = corners(t);
        return 0.5 * orient(c[0], c[1], c[2]);
    }
    Point centroid(std::size_t t) const {
        const auto c = corners(t);
        return (1.0 / 3.0) * (c[0] + c[1] + c[2]);
    }
    double diameter(std::size_t t) const {
        const auto c = corners(t);
        return std::max({distance(c[0], c[1]), distance(c[1], c[2]), distance(c[2], c[0])});
    }

    double min_angle_deg() const {
        double m = 180.0;
        for (std::size_t t = 0; t < triangles.size(); ++t) {
            const auto c = corners(t);
            for (int i = 0; i < 3; ++i) {
                const Point u = c[(i + 1) % 3] - c[i], w = c[(i + 2) % 3] - c[i];
                const double ang = std::atan2(std::abs(cross(u, w)), dot(u, w));
                m = std::min(m, ang * 180.0 / std::numbers::pi);
            }
        }
        return m;
    }

    double total_area() const {
        double a = 0.0;
        for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
        return a;
    }

    double region_area(std::size_t region) const {
        double a = 0.0;
        for (std::size_t t = 0; t < triangles.size(); ++t)
            if (triangle_polygon[t] == static_cast<int>(region)) a += triangle_area(t);
        return a;
    }

    std::vector<bool> boundary_vertex_mask() const {
        std::vector<bool> m(vertices.size(), false);
        for (const auto& e : boundary_edges) m[e.a] = m[e.b] = true;
        return m;
    }

    std::uint64_t hash() const {
        Fnv1a h;
        h.value(vertices.size());
        for (auto p : vertices) h.value(p);
        h.value(triangles.size());
        for (const auto& t : triangles) h.value(t);
        for (const auto& e : boundary_edges) {
            h.value(e.a);
            h.value(e.b);
            h.value(e.on_gamma);
        }
        return h.digest();
    }
};

struct MeshOptions {
    double min_angle_deg = 20.0;    ///< Ruppert quality target
    double angle_floor_deg = 0.5;   ///< meshes with a smaller angle are rejected
    bool refine = true;             ///< false: triangulate the input arrangement only
    std::vector<std::array<Point, 2>> extra_segments;  ///< e.g. scan-grid lines
};

namespace detail {

inline std::vector<BoundaryEdge> find_boundary_edges(const Mesh& m, const Domain& domain) {
    std::map<std::pair<int, int>, int> count;
    std::map<std::pair<int, int>, std::pair<int, int>> oriented;
    for (const auto& t : m.triangles)
        for (int i = 0; i < 3; ++i) {
            const int a = t[i], b = t[(i + 1) % 3];
            const auto k = std::make_pair(std::min(a, b), std::max(a, b));
            ++count[k];
            oriented[k] = {a, b};
        }
    std::vector<BoundaryEdge> out;
    for (const auto& [k, c] : count) {
        if (c != 1) continue;
        const auto [a, b] = oriented[k];
        const Point mid = 0.5 * (m.vertices[a] + m.vertices[b]);
        const auto s = domain.arclength_of(mid, 1e-7);
        if (!s) throw Error("mesh has an internal boundary edge (a region or hole is not covered)");
        out.push_back({a, b, domain.on_gamma(*s)});
    }
    return out;
}

inline double region_diameter(const Polygon& p) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.outer.size(); ++i)
        for (std::size_t j = i + 1; j < p.outer.size(); ++j) d = std::max(d, distance(p.outer[i], p.outer[j]));
    return d;
}

}  // namespace detail

/// Builds a conforming mesh of the domain that resolves every region polygon,
/// singular point/polyline and extra segment; all triangles have diameter at
/// most target_h (when refinement is on).
inline Mesh triangulate(const Domain& domain, const RegionSet& regions, double target_h,
                        const MeshOptions& opt = {}) {
    if (!(target_h > 0.0)) throw ConfigError("target_h must be positive");
    if (opt.refine)
        for (const auto& r : regions.regions)
            if (detail::region_diameter(r.polygon) < target_h)
                throw ConfigError("target_h = " + std::to_string(target_h) +
                                  " is too coarse to resolve region '" + r.name + "'");

    detail::PslgBuilder builder;
    builder.add_ring(domain.boundary);
    for (auto p : domain.gamma_endpoints()) builder.add_point(p);
    for (const auto& r : regions.regions) builder.add_polygon(r.polygon);
    for (auto p : regions.singular_points) builder.add_point(p);
    for (const auto& pl : regions.singular_polylines) builder.add_polyline(pl);
    for (const auto& s : opt.extra_segments) builder.add_segment(s[0], s[1]);
    for (auto p : builder.points())
        if (!domain.contains(p) && !domain.arclength_of(p, 1e-9))
            throw ConfigError("geometry extends outside the domain");

    const double max_len = opt.refine ? target_h : std::numeric_limits<double>::infinity();
    const auto pslg = builder.build(max_len);
    detail::RefineOptions ro;
    ro.max_edge = max_len;
    ro.min_angle_deg = opt.min_angle_deg;
    ro.quality = opt.refine;
    const auto raw = detail::triangulate_pslg(pslg, ro);

    Mesh m;
    m.vertices = raw.vertices;
    m.triangles = raw.triangles;
    m.region_geometry = regions.geometry_hash();
    m.triangle_region.assign(m.triangles.size(), RegionLabel::background);
    m.triangle_polygon.assign(m.triangles.size(), -1);

    struct Box {
        double x0, y0, x1, y1;
    };
    std::vector<Box> boxes;
    for (const auto& r : regions.regions) {
        Box b{1e300, 1e300, -1e300, -1e300};
        for (auto p : r.polygon.outer) b = {std::min(b.x0, p.x), std::min(b.y0, p.y), std::max(b.x1, p.x), std::max(b.y1, p.y)};
        boxes.push_back(b);
    }
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        if (m.triangle_area(t) <= 0.0) throw Error("mesh contains a degenerate or inverted triangle");
        const Point c = m.centroid(t);
        for (std::size_t r = 0; r < regions.regions.size(); ++r) {
            const Box& b = boxes[r];
            if (c.x < b.x0 || c.x > b.x1 || c.y < b.y0 || c.y > b.y1) continue;
            if (contains(regions.regions[r].polygon, c, 0.0)) {
                m.triangle_region[t] = regions.regions[r].label;
                m.triangle_polygon[t] = static_cast<int>(r);
                break;
            }
        }
        m.h = std::max(m.h, m.diameter(t));
    }
    m.boundary_edges = detail::find_boundary_edges(m, domain);
    if (opt.refine && m.min_angle_deg() < opt.angle_floor_deg)
        throw Error("mesh minimum angle " + std::to_string(m.min_angle_deg()) +
                    " deg is below the configured floor");
    return m;
}

/// Plain-text mesh format: header `nv nt ne`, then `x y` per vertex,
/// `i j k region_label` per triangle and `i j on_gamma` per boundary edge.
inline void write_mesh(std::ostream& os, const Mesh& m) {
    std::ostringstream buf;
    buf.precision(17);
    buf << m.vertices.size() << ' ' << m.triangles.size() << ' ' << m.boundary_edges.size() << '\n';
    for (auto p : m.vertices) buf << p.x << ' ' << p.y << '\n';
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& v = m.triangles[t];
        buf << v[0] << ' ' << v[1] << ' ' << v[2] << ' ' << to_string(m.triangle_region[t]) << '\n';
    }
    for (const auto& e : m.boundary_edges) buf << e.a << ' ' << e.b << ' ' << (e.on_gamma ? 1 : 0) << '\n';
    os << buf.str();
}

/// Reads the format written by write_mesh. Region polygon indices are not
/// part of the format; they are left at -1.
inline Mesh read_mesh(std::istream& is) {
    Mesh m;
    std::size_t nv = 0, nt = 0, ne = 0;
    if (!(is >> nv >> nt >> ne)) throw Error("mesh file: bad header");
    m.vertices.resize(nv);
    for (auto& p : m.vertices)
        if (!(is >> p.x >> p.y)) throw Error("mesh file: truncated vertex list");
    m.triangles.resize(nt);
    m.triangle_region.resize(nt);
    m.triangle_polygon.assign(nt, -1);
    for (std::size_t t = 0; t < nt; ++t) {
        std::string label;
        auto& v = m.triangles[t];
        if (!(is >> v[0] >> v[1] >> v[2] >> label)) throw Error("mesh file: truncated triangle list");
        m.triangle_region[t] = parse_label(label);
        m.h = std::max(m.h, m.diameter(t));
    }
    m.boundary_edges.resize(ne);
    for (auto& e : m.boundary_edges) {
        int g = 0;
        if (!(is >> e.a >> e.b >> g)) throw Error("mesh file: truncated boundary edge list");
        e.on_gamma = g != 0;
    }
    return m;
}

/// Companion file for nodal potentials: `nv` then one value per vertex.
inline void write_potential(std::ostream& os, const std::vector<double>& values) {
    std::ostringstream buf;
    buf.precision(17);
    buf << values.size() << '\n';
    for (double v : values) buf << v << '\n';
    os << buf.str();
}

}  // namespace calderon
