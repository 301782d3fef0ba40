#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "calderon/core.hpp"

namespace calderon {

using Ring = std::vector<Point>;

/// Simple polygon with optional holes. After normalize(): outer ring
/// counter-clockwise, holes clockwise, no repeated closing vertex.
struct Polygon {
    Ring outer;
    std::vector<Ring> holes;
};

inline double signed_area(const Ring& ring) {
    double a = 0.0;
    for (std::size_t i = 0, n = ring.size(); i < n; ++i)
        a += cross(ring[i], ring[(i + 1) % n]);
    return 0.5 * a;
}

inline double area(const Polygon& poly) {
    double a = std::abs(signed_area(poly.outer));
    for (const auto& h : poly.holes) a -= std::abs(signed_area(h));
    return a;
}

inline void normalize(Polygon& poly) {
    auto strip = [](Ring& r) {
        if (r.size() > 1 && r.front() == r.back()) r.pop_back();
    };
    strip(poly.outer);
    if (signed_area(poly.outer) < 0) std::reverse(poly.outer.begin(), poly.outer.end());
    for (auto& h : poly.holes) {
        strip(h);
        if (signed_area(h) > 0) std::reverse(h.begin(), h.end());
    }
}

/// Visits every edge (a, b) of the polygon, outer ring first.
template <class F>
void for_each_edge(const Polygon& poly, F&& f) {
    auto ring_edges = [&](const Ring& r) {
        for (std::size_t i = 0, n = r.size(); i < n; ++i) f(r[i], r[(i + 1) % n]);
    };
    ring_edges(poly.outer);
    for (const auto& h : poly.holes) ring_edges(h);
}

namespace detail {

/// True if closed segments [a,b] and [c,d] share a point.
inline bool segments_touch(Point a, Point b, Point c, Point d, double tol) {
    const double d1 = orient(a, b, c), d2 = orient(a, b, d);
    const double d3 = orient(c, d, a), d4 = orient(c, d, b);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    return distance_to_segment(c, a, b) <= tol || distance_to_segment(d, a, b) <= tol ||
           distance_to_segment(a, c, d) <= tol || distance_to_segment(b, c, d) <= tol;
}

/// True if the open segments cross at a single interior point.
inline bool segments_cross(Point a, Point b, Point c, Point d) {
    const double d1 = orient(a, b, c), d2 = orient(a, b, d);
    const double d3 = orient(c, d, a), d4 = orient(c, d, b);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
           ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace detail

/// A ring is simple if no two non-adjacent edges touch and no edge is
/// degenerate.
inline bool ring_is_simple(const Ring& ring, double tol = 1e-12) {
    const std::size_t n = ring.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i)
        if (distance(ring[i], ring[(i + 1) % n]) <= tol) return false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            const Point a = ring[i], b = ring[(i + 1) % n];
            const Point c = ring[j], d = ring[(j + 1) % n];
            if (adjacent) {
                // adjacent edges may only share their common vertex
                if (n == 3) continue;
                const Point shared = (j == i + 1) ? b : a;
                const Point other_ab = (j == i + 1) ? a : b;
                const Point other_cd = (j == i + 1) ? d : c;
                if (std::abs(orient(other_ab, shared, other_cd)) <= tol * distance(other_ab, shared) &&
                    dot(other_ab - shared, other_cd - shared) > 0)
                    return false;  // folds back onto itself
                continue;
            }
            if (detail::segments_touch(a, b, c, d, tol)) return false;
        }
    }
    return true;
}

inline bool polygon_is_simple(const Polygon& poly, double tol = 1e-12) {
    if (!ring_is_simple(poly.outer, tol)) return false;
    for (const auto& h : poly.holes)
        if (!ring_is_simple(h, tol)) return false;
    std::vector<const Ring*> rings{&poly.outer};
    for (const auto& h : poly.holes) rings.push_back(&h);
    for (std::size_t r = 0; r < rings.size(); ++r)
        for (std::size_t s = r + 1; s < rings.size(); ++s) {
            const Ring& A = *rings[r];
            const Ring& B = *rings[s];
            for (std::size_t i = 0; i < A.size(); ++i)
                for (std::size_t j = 0; j < B.size(); ++j)
                    if (detail::segments_touch(A[i], A[(i + 1) % A.size()], B[j],
                                               B[(j + 1) % B.size()], tol))
                        return false;
        }
    return true;
}

enum class Containment { outside, boundary, inside };

inline Containment locate_in_ring(const Ring& ring, Point p, double tol = 1e-10) {
    bool inside = false;
    for (std::size_t i = 0, n = ring.size(), j = n - 1; i < n; j = i++) {
        const Point a = ring[j], b = ring[i];
        if (distance_to_segment(p, a, b) <= tol) return Containment::boundary;
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x) inside = !inside;
        }
    }
    return inside ? Containment::inside : Containment::outside;
}

inline Containment locate(const Polygon& poly, Point p, double tol = 1e-10) {
    const Containment c = locate_in_ring(poly.outer, p, tol);
    if (c != Containment::inside) return c;
    for (const auto& h : poly.holes) {
        const Containment ch = locate_in_ring(h, p, tol);
        if (ch == Containment::inside) return Containment::outside;
        if (ch == Containment::boundary) return Containment::boundary;
    }
    return Containment::inside;
}

inline bool contains(const Polygon& poly, Point p, double tol = 1e-10) {
    return locate(poly, p, tol) == Containment::inside;
}

inline Ring circle_ring(Point center, double radius, int segments, double phase = 0.0) {
    Ring r;
    r.reserve(static_cast<std::size_t>(segments));
    for (int k = 0; k < segments; ++k) {
        const double t = phase + 2.0 * std::numbers::pi * k / segments;
        r.push_back({center.x + radius * std::cos(t), center.y + radius * std::sin(t)});
    }
    return r;
}

inline Polygon make_disk(Point center, double radius, int segments = 64) {
    Polygon p{circle_ring(center, radius, segments), {}};
    normalize(p);
    return p;
}

inline Polygon make_annulus(Point center, double r_inner, double r_outer, int segments = 64) {
    Polygon p{circle_ring(center, r_outer, segments), {circle_ring(center, r_inner, segments)}};
    normalize(p);
    return p;
}

inline Polygon make_rect(Point lo, Point hi) {
    Polygon p{{lo, {hi.x, lo.y}, hi, {lo.x, hi.y}}, {}};
    normalize(p);
    return p;
}

// ---------------------------------------------------------------------------
// Domain

enum class DomainShape { disk, square };

/// Boundary arc Γ. For the disk, `start`/`end` are polar angles in radians;
/// for the unit square they are arclength positions measured
/// counter-clockwise from the corner (0, 0).
struct GammaArc {
    double start = 0.0;
    double end = 2.0 * std::numbers::pi;
};

/// Polygonal computational domain (unit disk as a regular N-gon, or the unit
/// square) together with the measurement arc Γ, stored as an arclength
/// interval [gamma_start, gamma_start + gamma_length) along the boundary.
struct Domain {
    DomainShape shape = DomainShape::disk;
    int boundary_segments = 256;
    Ring boundary;
    double gamma_start = 0.0;
    double gamma_length = 0.0;

    double perimeter() const {
        double p = 0.0;
        for (std::size_t i = 0; i < boundary.size(); ++i)
            p += distance(boundary[i], boundary[(i + 1) % boundary.size()]);
        return p;
    }
    double area() const { return signed_area(boundary); }
    bool gamma_is_full() const { return gamma_length >= perimeter() * (1.0 - 1e-12); }

    /// Point at arclength s along the boundary (periodic).
    Point boundary_point(double s) const {
        const double P = perimeter();
        s = std::fmod(s, P);
        if (s < 0) s += P;
        for (std::size_t i = 0; i < boundary.size(); ++i) {
            const Point a = boundary[i], b = boundary[(i + 1) % boundary.size()];
            const double len = distance(a, b);
            if (s <= len || i + 1 == boundary.size()) return a + std::min(1.0, s / len) * (b - a);
            s -= len;
        }
        return boundary.front();
    }

    /// Arclength of a point lying on the boundary; nullopt if it is not.
    std::optional<double> arclength_of(Point p, double tol = 1e-9) const {
        double s = 0.0;
        for (std::size_t i = 0; i < boundary.size(); ++i) {
            const Point a = boundary[i], b = boundary[(i + 1) % boundary.size()];
            const double len = distance(a, b);
            if (distance_to_segment(p, a, b) <= tol)
                return s + std::clamp(dot(p - a, b - a) / len, 0.0, len);
            s += len;
        }
        return std::nullopt;
    }

    /// Position along Γ in [0, gamma_length) for boundary arclength s.
    double gamma_param(double s) const {
        const double P = perimeter();
        double t = std::fmod(s - gamma_start, P);
        if (t < 0) t += P;
        return t;
    }

    bool on_gamma(double s) const {
        if (gamma_is_full()) return true;
        const double t = gamma_param(s);
        return t > 0.0 && t < gamma_length;
    }

    /// Boundary points at the two ends of Γ (empty when Γ is the whole boundary).
    std::vector<Point> gamma_endpoints() const {
        if (gamma_is_full()) return {};
        return {boundary_point(gamma_start), boundary_point(gamma_start + gamma_length)};
    }

    bool contains(Point p, double tol = 1e-12) const {
        return locate_in_ring(boundary, p, tol) == Containment::inside;
    }

    /// Smallest distance from p to the boundary polygon.
    double distance_to_boundary(Point p) const {
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < boundary.size(); ++i)
            d = std::min(d, distance_to_segment(p, boundary[i], boundary[(i + 1) % boundary.size()]));
        return d;
    }
};

inline Domain build_domain(DomainShape shape, GammaArc arc, int disk_segments = 256) {
    Domain d;
    d.shape = shape;
    if (shape == DomainShape::disk) {
        if (disk_segments < 8) throw ConfigError("disk boundary needs at least 8 segments");
        d.boundary_segments = disk_segments;
        d.boundary = circle_ring({0.0, 0.0}, 1.0, disk_segments);
        const double P = d.perimeter();
        const double sweep = arc.end - arc.start;
        if (!(sweep > 0.0) || sweep > 2.0 * std::numbers::pi * (1.0 + 1e-12))
            throw ConfigError("boundary arc must have length in (0, 2*pi]");
        d.gamma_start = P * std::fmod(arc.start / (2.0 * std::numbers::pi) + 1.0, 1.0);
        d.gamma_length = std::min(P, P * sweep / (2.0 * std::numbers::pi));
    } else {
        d.boundary_segments = 4;
        d.boundary = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
        const double sweep = arc.end - arc.start;
        if (!(sweep > 0.0) || sweep > 4.0 * (1.0 + 1e-12))
            throw ConfigError("boundary arc must have length in (0, 4]");
        d.gamma_start = std::fmod(std::fmod(arc.start, 4.0) + 4.0, 4.0);
        d.gamma_length = std::min(4.0, sweep);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Regions

enum class RegionLabel : std::uint8_t { background, D0, Dinf, Ddeg, Dsing, DFminus, DFplus };

inline constexpr std::array<RegionLabel, 6> kInclusionLabels{
    RegionLabel::D0,   RegionLabel::Dinf,    RegionLabel::Ddeg,
    RegionLabel::Dsing, RegionLabel::DFminus, RegionLabel::DFplus};

inline std::string_view to_string(RegionLabel l) {
    switch (l) {
        case RegionLabel::background: return "background";
        case RegionLabel::D0: return "D0";
        case RegionLabel::Dinf: return "Dinf";
        case RegionLabel::Ddeg: return "Ddeg";
        case RegionLabel::Dsing: return "Dsing";
        case RegionLabel::DFminus: return "DFminus";
        case RegionLabel::DFplus: return "DFplus";
    }
    return "?";
}

inline RegionLabel parse_label(std::string_view s) {
    for (auto l : kInclusionLabels)
        if (to_string(l) == s) return l;
    if (s == "background") return RegionLabel::background;
    throw ConfigError("unknown region label '" + std::string(s) + "'");
}

/// Labels making up D⁻ (coefficient below the background).
inline bool is_negative(RegionLabel l) {
    return l == RegionLabel::D0 || l == RegionLabel::Ddeg || l == RegionLabel::DFminus;
}
inline bool is_positive(RegionLabel l) {
    return l == RegionLabel::Dinf || l == RegionLabel::Dsing || l == RegionLabel::DFplus;
}

struct Region {
    std::string name;
    RegionLabel label = RegionLabel::DFminus;
    Polygon polygon;
};

/// Labeled inclusion polygons plus the singular sets of any weights living on
/// them. Singular points and polylines are pinned to mesh vertices/edges.
struct RegionSet {
    std::vector<Region> regions;
    std::vector<Point> singular_points;
    std::vector<std::vector<Point>> singular_polylines;

    bool empty() const { return regions.empty(); }

    std::vector<std::size_t> indices(RegionLabel l) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < regions.size(); ++i)
            if (regions[i].label == l) out.push_back(i);
        return out;
    }

    bool has(RegionLabel l) const { return !indices(l).empty(); }

    /// Index of the region whose interior contains p.
    std::optional<std::size_t> find(Point p) const {
        for (std::size_t i = 0; i < regions.size(); ++i)
            if (contains(regions[i].polygon, p)) return i;
        return std::nullopt;
    }

    std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < regions.size(); ++i)
            if (regions[i].name == name) return i;
        return std::nullopt;
    }

    /// Hash of the polygon geometry and singular sets, ignoring labels: two
    /// region sets that differ only in labels share a mesh.
    std::uint64_t geometry_hash() const {
        Fnv1a h;
        auto ring = [&](const Ring& r) {
            h.value(r.size());
            for (auto p : r) h.value(p);
        };
        h.value(regions.size());
        for (const auto& r : regions) {
            ring(r.polygon.outer);
            h.value(r.polygon.holes.size());
            for (const auto& hole : r.polygon.holes) ring(hole);
        }
        ring(singular_points);
        for (const auto& pl : singular_polylines) ring(pl);
        return h.digest();
    }
};

}  // namespace calderon
