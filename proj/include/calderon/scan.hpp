#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "calderon/geometry.hpp"

namespace calderon {

/// Axis-aligned square grid of n x n cells inside the domain. Row 0 is the
/// top row (largest y); cell (r, c) has flat index r * n + c.
struct ScanGrid {
    Point lo;
    double cell = 0.0;
    int n = 0;

    std::size_t size() const { return static_cast<std::size_t>(n) * n; }
    int index(int r, int c) const { return r * n + c; }
    Point hi() const { return {lo.x + n * cell, lo.y + n * cell}; }
    Point cell_lo(int r, int c) const { return {lo.x + c * cell, lo.y + (n - 1 - r) * cell}; }
    Point cell_center(int r, int c) const { return cell_lo(r, c) + Point{0.5 * cell, 0.5 * cell}; }
    Polygon cell_polygon(int r, int c) const {
        const Point a = cell_lo(r, c);
        return make_rect(a, a + Point{cell, cell});
    }
    Polygon box() const { return make_rect(lo, hi()); }

    /// Cell containing p, or nullopt outside the grid.
    std::optional<std::pair<int, int>> cell_of(Point p) const {
        const int c = static_cast<int>(std::floor((p.x - lo.x) / cell));
        const int r = n - 1 - static_cast<int>(std::floor((p.y - lo.y) / cell));
        if (c < 0 || c >= n || r < 0 || r >= n) return std::nullopt;
        return std::make_pair(r, c);
    }

    /// All grid lines, for passing to the mesher as constraint segments.
    std::vector<std::array<Point, 2>> segments() const {
        std::vector<std::array<Point, 2>> s;
        const Point h = hi();
        for (int k = 0; k <= n; ++k) {
            const double x = lo.x + k * cell, y = lo.y + k * cell;
            s.push_back({Point{x, lo.y}, Point{x, h.y}});
            s.push_back({Point{lo.x, y}, Point{h.x, y}});
        }
        return s;
    }
};

/// Default scan grid: [-0.68, 0.68]^2 in the unit disk, [0.05, 0.95]^2 in
/// the unit square.
inline ScanGrid scan_grid(const Domain& domain, int grid_n) {
    if (grid_n < 2) throw ConfigError("grid_n must be at least 2");
    ScanGrid g;
    g.n = grid_n;
    if (domain.shape == DomainShape::disk) {
        g.lo = {-0.68, -0.68};
        g.cell = 1.36 / grid_n;
    } else {
        g.lo = {0.05, 0.05};
        g.cell = 0.9 / grid_n;
    }
    return g;
}

/// Test set C: a union of disjoint simple polygons with connected
/// complement. Grid-based sets also carry their cell mask.
struct TestInclusion {
    std::string id;
    std::vector<Polygon> polygons;
    std::vector<char> cells;  ///< grid mask, row-major; empty if not grid-based

    bool empty() const { return polygons.empty(); }
    bool contains(Point p, double tol = 0.0) const {
        for (const auto& poly : polygons)
            if (calderon::contains(poly, p, tol)) return true;
        return false;
    }
};

enum class ScanDirection { left, right, up, down };

inline std::string_view to_string(ScanDirection d) {
    switch (d) {
        case ScanDirection::left: return "left";
        case ScanDirection::right: return "right";
        case ScanDirection::up: return "up";
        case ScanDirection::down: return "down";
    }
    return "?";
}

inline constexpr std::array<ScanDirection, 4> kScanDirections{ScanDirection::left, ScanDirection::right,
                                                              ScanDirection::up, ScanDirection::down};

/// Boundary of a union of grid cells as polygons, one per connected piece.
/// Returns nullopt when the union has a hole or a pinch vertex (two cells
/// meeting only at a corner): such unions are not in the admissible family.
/// Every returned union has a connected complement in the domain.
inline std::optional<std::vector<Polygon>> trace_cells(const ScanGrid& g, const std::vector<char>& mask) {
    using V = std::pair<int, int>;
    std::set<std::pair<V, V>> edges;
    auto add = [&](V a, V b) {
        auto rev = edges.find({b, a});
        if (rev != edges.end())
            edges.erase(rev);
        else
            edges.insert({a, b});
    };
    for (int r = 0; r < g.n; ++r)
        for (int c = 0; c < g.n; ++c) {
            if (!mask[g.index(r, c)]) continue;
            const int y0 = g.n - 1 - r, y1 = g.n - r;
            add({c, y0}, {c + 1, y0});
            add({c + 1, y0}, {c + 1, y1});
            add({c + 1, y1}, {c, y1});
            add({c, y1}, {c, y0});
        }
    if (edges.empty()) return std::nullopt;
    std::map<V, V> next;
    for (const auto& [a, b] : edges)
        if (!next.emplace(a, b).second) return std::nullopt;  // pinch vertex

    std::vector<Polygon> out;
    std::set<V> used;
    for (const auto& [start, unused] : next) {
        if (used.count(start)) continue;
        std::vector<V> loop;
        V cur = start;
        do {
            loop.push_back(cur);
            used.insert(cur);
            cur = next.at(cur);
        } while (cur != start);
        Polygon p;
        const std::size_t k = loop.size();
        for (std::size_t i = 0; i < k; ++i) {
            const V a = loop[(i + k - 1) % k], b = loop[i], c = loop[(i + 1) % k];
            const long turn = static_cast<long>(b.first - a.first) * (c.second - b.second) -
                              static_cast<long>(b.second - a.second) * (c.first - b.first);
            if (turn == 0) continue;
            p.outer.push_back({g.lo.x + b.first * g.cell, g.lo.y + b.second * g.cell});
        }
        if (signed_area(p.outer) < 0.0) return std::nullopt;  // hole
        out.push_back(std::move(p));
    }
    return out;
}

/// Cells removed for the scan of cell (r, c): the cell and the straight
/// channel from it to the grid edge in direction d.
inline std::vector<char> channel_mask(const ScanGrid& g, int r, int c, ScanDirection d) {
    std::vector<char> m(g.size(), 0);
    switch (d) {
        case ScanDirection::left:
            for (int k = 0; k <= c; ++k) m[g.index(r, k)] = 1;
            break;
        case ScanDirection::right:
            for (int k = c; k < g.n; ++k) m[g.index(r, k)] = 1;
            break;
        case ScanDirection::up:
            for (int k = 0; k <= r; ++k) m[g.index(k, c)] = 1;
            break;
        case ScanDirection::down:
            for (int k = r; k < g.n; ++k) m[g.index(k, c)] = 1;
            break;
    }
    return m;
}

/// Cells as a test set if the union is admissible. No cells gives C = ∅.
inline std::optional<TestInclusion> mask_inclusion(const ScanGrid& g, std::vector<char> mask, std::string id) {
    if (std::none_of(mask.begin(), mask.end(), [](char c) { return c != 0; }))
        return TestInclusion{std::move(id), {}, std::move(mask)};
    auto polys = trace_cells(g, mask);
    if (!polys) return std::nullopt;
    return TestInclusion{std::move(id), std::move(*polys), std::move(mask)};
}

/// Test set excluding cell (r, c): the grid minus the cell and its channel to
/// the grid edge in direction d. nullopt if that set is not admissible.
inline std::optional<TestInclusion> cell_complement(const ScanGrid& g, int r, int c, ScanDirection d) {
    auto removed = channel_mask(g, r, c, d);
    std::vector<char> mask(g.size());
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = !removed[i];
    return mask_inclusion(g, std::move(mask),
                          "cell_" + std::to_string(r) + "_" + std::to_string(c) + "_" + std::string(to_string(d)));
}

inline TestInclusion full_grid(const ScanGrid& g) {
    return *mask_inclusion(g, std::vector<char>(g.size(), 1), "grid");
}

/// Scanning family on the default grid: the full grid followed by every
/// admissible per-cell complement (duplicates removed).
inline std::vector<TestInclusion> pixel_family(const ScanGrid& g) {
    std::vector<TestInclusion> out{full_grid(g)};
    std::set<std::vector<char>> seen{out.front().cells};
    for (int r = 0; r < g.n; ++r)
        for (int c = 0; c < g.n; ++c)
            for (auto d : kScanDirections)
                if (auto t = cell_complement(g, r, c, d); t && seen.insert(t->cells).second)
                    out.push_back(std::move(*t));
    return out;
}

inline std::vector<TestInclusion> pixel_family(const Domain& domain, int grid_n) {
    return pixel_family(scan_grid(domain, grid_n));
}

}  // namespace calderon
