#pragma once

#include <array>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <numbers>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "calderon/core.hpp"
#include "calderon/geometry.hpp"

namespace calderon::detail {

/// Planar straight-line graph: points plus non-crossing segments between them.
struct Pslg {
    std::vector<Point> points;
    std::vector<std::array<int, 2>> segments;
};

/// Collects points and segments, merges near-coincident points, and splits
/// segments at every crossing and at every point lying on them so that the
/// result is a valid PSLG.
class PslgBuilder {
public:
    explicit PslgBuilder(double tol = 1e-9) : tol_(tol), cell_(std::max(tol * 16.0, 1e-7)) {}

    int add_point(Point p) {
        const auto [cx, cy] = cell_of(p);
        for (long dx = -1; dx <= 1; ++dx)
            for (long dy = -1; dy <= 1; ++dy) {
                auto it = grid_.find(key(cx + dx, cy + dy));
                if (it == grid_.end()) continue;
                for (int id : it->second)
                    if (distance(points_[id], p) <= tol_) return id;
            }
        const int id = static_cast<int>(points_.size());
        points_.push_back(p);
        grid_[key(cx, cy)].push_back(id);
        return id;
    }

    void add_segment(Point a, Point b) {
        const int ia = add_point(a), ib = add_point(b);
        if (ia != ib) segments_.push_back({ia, ib});
    }

    void add_ring(const Ring& r) {
        for (std::size_t i = 0; i < r.size(); ++i) add_segment(r[i], r[(i + 1) % r.size()]);
    }

    void add_polygon(const Polygon& p) {
        add_ring(p.outer);
        for (const auto& h : p.holes) add_ring(h);
    }

    void add_polyline(const std::vector<Point>& pl) {
        for (std::size_t i = 0; i + 1 < pl.size(); ++i) add_segment(pl[i], pl[i + 1]);
        if (pl.size() == 1) add_point(pl.front());
    }

    /// Resolve crossings, then split every segment to length <= max_len.
    Pslg build(double max_len) {
        const std::size_t n = segments_.size();
        struct Box {
            double x0, y0, x1, y1;
        };
        std::vector<Box> boxes(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Point a = points_[segments_[i][0]], b = points_[segments_[i][1]];
            boxes[i] = {std::min(a.x, b.x) - tol_, std::min(a.y, b.y) - tol_,
                        std::max(a.x, b.x) + tol_, std::max(a.y, b.y) + tol_};
        }
        auto overlap = [&](std::size_t i, std::size_t j) {
            return boxes[i].x0 <= boxes[j].x1 && boxes[j].x0 <= boxes[i].x1 &&
                   boxes[i].y0 <= boxes[j].y1 && boxes[j].y0 <= boxes[i].y1;
        };
        // proper crossings create new points
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!overlap(i, j)) continue;
                const Point a = points_[segments_[i][0]], b = points_[segments_[i][1]];
                const Point c = points_[segments_[j][0]], d = points_[segments_[j][1]];
                if (!segments_cross(a, b, c, d)) continue;
                const double t = cross(c - a, d - c) / cross(b - a, d - c);
                add_point(a + t * (b - a));
            }
        // split every segment at all points on it
        std::vector<std::array<int, 2>> pieces;
        for (std::size_t i = 0; i < n; ++i) {
            const int ia = segments_[i][0], ib = segments_[i][1];
            const Point a = points_[ia], b = points_[ib];
            const double len = distance(a, b);
            std::vector<std::pair<double, int>> cuts{{0.0, ia}, {len, ib}};
            for (std::size_t k = 0; k < points_.size(); ++k) {
                const Point p = points_[k];
                if (p.x < boxes[i].x0 || p.x > boxes[i].x1 || p.y < boxes[i].y0 || p.y > boxes[i].y1)
                    continue;
                if (static_cast<int>(k) == ia || static_cast<int>(k) == ib) continue;
                if (distance_to_segment(p, a, b) <= tol_)
                    cuts.emplace_back(dot(p - a, b - a) / len, static_cast<int>(k));
            }
            std::sort(cuts.begin(), cuts.end());
            for (std::size_t k = 0; k + 1 < cuts.size(); ++k)
                if (cuts[k].second != cuts[k + 1].second)
                    pieces.push_back({cuts[k].second, cuts[k + 1].second});
        }
        std::set<std::pair<int, int>> seen;
        Pslg out;
        for (auto [u, v] : pieces) {
            if (!seen.insert({std::min(u, v), std::max(u, v)}).second) continue;
            const Point a = points_[u], b = points_[v];
            const int k = std::max(1, static_cast<int>(std::ceil(distance(a, b) / max_len - 1e-9)));
            int prev = u;
            for (int s = 1; s <= k; ++s) {
                const int next = (s == k) ? v : add_point(a + (static_cast<double>(s) / k) * (b - a));
                out.segments.push_back({prev, next});
                prev = next;
            }
        }
        out.points = points_;
        return out;
    }

    const std::vector<Point>& points() const { return points_; }

private:
    std::pair<long, long> cell_of(Point p) const {
        return {static_cast<long>(std::floor(p.x / cell_)), static_cast<long>(std::floor(p.y / cell_))};
    }
    static std::uint64_t key(long x, long y) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) |
               static_cast<std::uint32_t>(y);
    }

    double tol_;
    double cell_;
    std::vector<Point> points_;
    std::vector<std::array<int, 2>> segments_;
    std::unordered_map<std::uint64_t, std::vector<int>> grid_;
};

struct RefineOptions {
    double max_edge = std::numeric_limits<double>::infinity();
    double min_angle_deg = 20.0;
    bool quality = true;
    std::size_t max_vertices = 4'000'000;
};

/// Incremental constrained Delaunay triangulation (Bowyer-Watson with cavity
/// growth blocked at constrained edges) and Ruppert-style refinement.
/// Triangles are counter-clockwise; nb[i] is the neighbour across the edge
/// opposite v[i].
class Triangulator {
public:
    struct Tri {
        std::array<int, 3> v;
        std::array<int, 3> nb;
        bool alive = true;
    };

    Triangulator(Point lo, Point hi) {
        const Point c = 0.5 * (lo + hi);
        const double r = std::max({hi.x - lo.x, hi.y - lo.y, 1e-3}) * 50.0;
        points_ = {{c.x - 2 * r, c.y - r}, {c.x + 2 * r, c.y - r}, {c.x, c.y + 2 * r}};
        scale_ = std::max(hi.x - lo.x, hi.y - lo.y);
        tris_.push_back({{0, 1, 2}, {-1, -1, -1}, true});
        register_edges(0);
    }

    static constexpr int kSuper = 3;

    const std::vector<Point>& points() const { return points_; }
    const std::vector<Tri>& tris() const { return tris_; }

    bool touches_super(int t) const {
        for (int v : tris_[t].v)
            if (v < kSuper) return true;
        return false;
    }

    bool has_edge(int a, int b) const { return find_edge(a, b) >= 0 || find_edge(b, a) >= 0; }
    bool is_constrained(int a, int b) const { return constrained_.count(ukey(a, b)) != 0; }

    void constrain(int a, int b) {
        if (constrained_.insert(ukey(a, b)).second) seg_index_add(a, b);
    }

    /// Inserts p; returns the vertex id (an existing one for duplicates) and
    /// appends created triangles to `created` if non-null.
    int insert(Point p, std::vector<int>* created = nullptr) {
        if (points_.size() >= max_vertices_) throw Error("mesh generation exceeded the vertex limit");
        const int t0 = locate(p);
        for (int v : tris_[t0].v)
            if (distance(points_[v], p) <= dup_tol()) return v;
        // point on an edge of t0?
        int on_edge = -1;
        for (int i = 0; i < 3; ++i) {
            const int a = tris_[t0].v[(i + 1) % 3], b = tris_[t0].v[(i + 2) % 3];
            const double len = distance(points_[a], points_[b]);
            if (std::abs(orient(points_[a], points_[b], p)) <= 1e-11 * len * scale_ &&
                dot(p - points_[a], points_[b] - points_[a]) > 0 &&
                dot(p - points_[b], points_[a] - points_[b]) > 0) {
                on_edge = i;
                break;
            }
        }
        int split_a = -1, split_b = -1;
        std::vector<int> cavity{t0};
        std::unordered_set<int> in_cavity{t0};
        if (on_edge >= 0) {
            split_a = tris_[t0].v[(on_edge + 1) % 3];
            split_b = tris_[t0].v[(on_edge + 2) % 3];
            const int n = tris_[t0].nb[on_edge];
            if (n >= 0) {
                cavity.push_back(n);
                in_cavity.insert(n);
            }
        }
        for (std::size_t k = 0; k < cavity.size(); ++k) {
            const Tri& c = tris_[cavity[k]];
            for (int i = 0; i < 3; ++i) {
                const int n = c.nb[i];
                if (n < 0 || in_cavity.count(n)) continue;
                const int a = c.v[(i + 1) % 3], b = c.v[(i + 2) % 3];
                if (is_constrained(a, b)) continue;
                if (incircle(n, p)) {
                    cavity.push_back(n);
                    in_cavity.insert(n);
                }
            }
        }
        // boundary of the cavity; repair star-shapedness if round-off bites
        struct BoundaryEdge {
            int a, b, outer;
        };
        std::vector<BoundaryEdge> boundary;
        for (int guard = 0;; ++guard) {
            boundary.clear();
            bool repaired = false;
            for (int ct : cavity) {
                const Tri& c = tris_[ct];
                for (int i = 0; i < 3; ++i) {
                    const int n = c.nb[i];
                    if (n >= 0 && in_cavity.count(n)) continue;
                    const int a = c.v[(i + 1) % 3], b = c.v[(i + 2) % 3];
                    if (orient(points_[a], points_[b], p) <= 0.0) {
                        if (n < 0 || is_constrained(a, b) || guard > 64)
                            throw Error("triangulation: cavity is not star-shaped");
                        cavity.push_back(n);
                        in_cavity.insert(n);
                        repaired = true;
                        break;
                    }
                    boundary.push_back({a, b, n});
                }
                if (repaired) break;
            }
            if (!repaired) break;
        }
        const int pid = static_cast<int>(points_.size());
        points_.push_back(p);
        // outer neighbour slots that must be re-pointed
        std::vector<int> outer_slot(boundary.size(), -1);
        for (std::size_t k = 0; k < boundary.size(); ++k) {
            const auto& e = boundary[k];
            if (e.outer < 0) continue;
            const Tri& o = tris_[e.outer];
            for (int j = 0; j < 3; ++j)
                if (o.v[(j + 1) % 3] == e.b && o.v[(j + 2) % 3] == e.a) outer_slot[k] = j;
        }
        for (int ct : cavity) tris_[ct].alive = false;
        std::vector<int> slots(cavity.begin(), cavity.end());
        std::vector<int> fresh(boundary.size());
        for (std::size_t k = 0; k < boundary.size(); ++k) {
            int idx;
            if (k < slots.size()) {
                idx = slots[k];
            } else {
                idx = static_cast<int>(tris_.size());
                tris_.push_back({});
            }
            fresh[k] = idx;
            tris_[idx] = Tri{{boundary[k].a, boundary[k].b, pid}, {-1, -1, boundary[k].outer}, true};
        }
        std::unordered_map<int, int> by_first, by_second;
        for (std::size_t k = 0; k < boundary.size(); ++k) {
            by_first[boundary[k].a] = fresh[k];
            by_second[boundary[k].b] = fresh[k];
        }
        for (std::size_t k = 0; k < boundary.size(); ++k) {
            Tri& t = tris_[fresh[k]];
            t.nb[0] = by_first.at(boundary[k].b);
            t.nb[1] = by_second.at(boundary[k].a);
            if (boundary[k].outer >= 0) tris_[boundary[k].outer].nb[outer_slot[k]] = fresh[k];
            register_edges(fresh[k]);
            if (created) created->push_back(fresh[k]);
        }
        if (split_a >= 0 && is_constrained(split_a, split_b)) {
            constrained_.erase(ukey(split_a, split_b));
            constrain(split_a, pid);
            constrain(pid, split_b);
        }
        last_ = fresh.front();
        return pid;
    }

    /// Recovers all segments by midpoint splitting; afterwards every segment
    /// (or its pieces) is a constrained edge.
    void insert_segments(const std::vector<std::array<int, 2>>& segments, const std::vector<int>& ids) {
        std::deque<std::array<int, 2>> queue;
        for (auto s : segments) queue.push_back({ids[s[0]], ids[s[1]]});
        std::size_t guard = 0;
        while (!queue.empty()) {
            auto [a, b] = queue.front();
            queue.pop_front();
            if (a == b) continue;
            if (has_edge(a, b)) {
                constrain(a, b);
                continue;
            }
            if (++guard > 4'000'000) throw Error("triangulation: segment recovery did not terminate");
            const int m = insert(0.5 * (points_[a] + points_[b]));
            if (m == a || m == b) throw Error("triangulation: degenerate segment during recovery");
            queue.push_back({a, m});
            queue.push_back({m, b});
        }
    }

    void refine(const RefineOptions& opt) {
        max_vertices_ = opt.max_vertices;
        const bool size_bound = std::isfinite(opt.max_edge);
        if (!size_bound && !opt.quality) return;
        const double sin_min = std::sin(opt.min_angle_deg * std::numbers::pi / 180.0);
        const double quality_floor = size_bound ? 0.01 * opt.max_edge : 1e-3 * scale_;
        const double split_floor = size_bound ? 1e-3 * opt.max_edge : 1e-5 * scale_;
        std::deque<int> work;
        for (int t = 0; t < static_cast<int>(tris_.size()); ++t)
            if (tris_[t].alive) work.push_back(t);
        std::vector<int> created;
        while (!work.empty()) {
            const int t = work.front();
            work.pop_front();
            if (!tris_[t].alive || touches_super(t)) continue;
            const auto& v = tris_[t].v;
            const Point A = points_[v[0]], B = points_[v[1]], C = points_[v[2]];
            const double la = distance(B, C), lb = distance(C, A), lc = distance(A, B);
            const double lmax = std::max({la, lb, lc}), lmin = std::min({la, lb, lc});
            const double area2 = std::abs(orient(A, B, C));
            // smallest angle is opposite the shortest edge: sin = 2*area / (product of the other two)
            double sin_small;
            if (lmin == la) sin_small = area2 / (lb * lc);
            else if (lmin == lb) sin_small = area2 / (la * lc);
            else sin_small = area2 / (la * lb);
            const bool bad_size = size_bound && lmax > opt.max_edge * (1.0 + 1e-9);
            const bool bad_shape = opt.quality && sin_small < sin_min && lmin > quality_floor;
            if (!bad_size && !bad_shape) continue;

            created.clear();
            const Point cc = circumcenter(A, B, C);
            auto encroached = encroached_segments(cc, split_floor);
            if (!encroached.empty()) {
                for (auto [a, b] : encroached)
                    if (is_constrained(a, b)) insert(0.5 * (points_[a] + points_[b]), &created);
            } else {
                const int loc = locate(cc);
                if (!touches_super(loc)) insert(cc, &created);
                if (tris_[t].alive) split_longest_edge(t, &created);
            }
            for (int c : created) work.push_back(c);
            if (tris_[t].alive) work.push_back(t);
        }
    }

    /// Ids of non-super triangles that are alive.
    std::vector<int> interior_triangles() const {
        std::vector<int> out;
        for (int t = 0; t < static_cast<int>(tris_.size()); ++t)
            if (tris_[t].alive && !touches_super(t)) out.push_back(t);
        return out;
    }

    const std::unordered_set<std::uint64_t>& constrained_edges() const { return constrained_; }

    static std::pair<int, int> unpack(std::uint64_t k) {
        return {static_cast<int>(k >> 32), static_cast<int>(k & 0xffffffffu)};
    }

private:
    static std::uint64_t dkey(int a, int b) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
    }
    static std::uint64_t ukey(int a, int b) { return dkey(std::min(a, b), std::max(a, b)); }

    double dup_tol() const { return 1e-12 * scale_; }

    void register_edges(int t) {
        const auto& v = tris_[t].v;
        for (int i = 0; i < 3; ++i) dir_edge_[dkey(v[i], v[(i + 1) % 3])] = t;
    }

    int find_edge(int a, int b) const {
        auto it = dir_edge_.find(dkey(a, b));
        if (it == dir_edge_.end()) return -1;
        const Tri& t = tris_[it->second];
        if (!t.alive) return -1;
        for (int i = 0; i < 3; ++i)
            if (t.v[i] == a && t.v[(i + 1) % 3] == b) return it->second;
        return -1;
    }

    bool incircle(int t, Point p) const {
        const auto& v = tris_[t].v;
        const long double ax = points_[v[0]].x - p.x, ay = points_[v[0]].y - p.y;
        const long double bx = points_[v[1]].x - p.x, by = points_[v[1]].y - p.y;
        const long double cx = points_[v[2]].x - p.x, cy = points_[v[2]].y - p.y;
        const long double det = (ax * ax + ay * ay) * (bx * cy - cx * by) -
                                (bx * bx + by * by) * (ax * cy - cx * ay) +
                                (cx * cx + cy * cy) * (ax * by - bx * ay);
        return det > 0;
    }

    static Point circumcenter(Point a, Point b, Point c) {
        const Point ab = b - a, ac = c - a;
        const double d = 2.0 * cross(ab, ac);
        const double ab2 = dot(ab, ab), ac2 = dot(ac, ac);
        return {a.x + (ac.y * ab2 - ab.y * ac2) / d, a.y + (ab.x * ac2 - ac.x * ab2) / d};
    }

    int locate(Point p) {
        int t = (last_ >= 0 && last_ < static_cast<int>(tris_.size()) && tris_[last_].alive) ? last_ : -1;
        if (t < 0)
            for (int k = static_cast<int>(tris_.size()) - 1; k >= 0; --k)
                if (tris_[k].alive) {
                    t = k;
                    break;
                }
        unsigned rot = 0;
        for (std::size_t steps = 0; steps < 4 * tris_.size() + 64; ++steps) {
            bool moved = false;
            for (int k = 0; k < 3; ++k) {
                const int i = static_cast<int>((k + rot) % 3);
                const int a = tris_[t].v[(i + 1) % 3], b = tris_[t].v[(i + 2) % 3];
                if (orient(points_[a], points_[b], p) < 0.0 && tris_[t].nb[i] >= 0) {
                    t = tris_[t].nb[i];
                    moved = true;
                    break;
                }
            }
            ++rot;
            if (!moved) return t;
        }
        // brute force fallback
        int best = -1;
        double best_val = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < static_cast<int>(tris_.size()); ++k) {
            if (!tris_[k].alive) continue;
            const auto& v = tris_[k].v;
            const double m = std::min({orient(points_[v[0]], points_[v[1]], p),
                                       orient(points_[v[1]], points_[v[2]], p),
                                       orient(points_[v[2]], points_[v[0]], p)});
            if (m > best_val) {
                best_val = m;
                best = k;
            }
        }
        return best;
    }

    void split_longest_edge(int t, std::vector<int>* created) {
        const auto v = tris_[t].v;
        int best = 0;
        double best_len = -1.0;
        for (int i = 0; i < 3; ++i) {
            const double len = distance(points_[v[(i + 1) % 3]], points_[v[(i + 2) % 3]]);
            if (len > best_len) {
                best_len = len;
                best = i;
            }
        }
        const int a = v[(best + 1) % 3], b = v[(best + 2) % 3];
        last_ = t;
        insert(0.5 * (points_[a] + points_[b]), created);
    }

    // --- spatial index of constrained segments for encroachment queries
    void seg_index_add(int a, int b) {
        if (seg_cell_ <= 0.0) return;
        const Point m = 0.5 * (points_[a] + points_[b]);
        seg_grid_[cell_key(m)].push_back(ukey(a, b));
    }

    std::uint64_t cell_key(Point p) const {
        const long x = static_cast<long>(std::floor(p.x / seg_cell_));
        const long y = static_cast<long>(std::floor(p.y / seg_cell_));
        return dkey(static_cast<int>(x), static_cast<int>(y));
    }

public:
    /// Builds the encroachment index; call after segment recovery.
    void index_segments() {
        double longest = 0.0;
        for (auto k : constrained_) {
            auto [a, b] = unpack(k);
            longest = std::max(longest, distance(points_[a], points_[b]));
        }
        seg_cell_ = std::max(longest, 1e-9);
        seg_grid_.clear();
        for (auto k : constrained_) {
            auto [a, b] = unpack(k);
            seg_index_add(a, b);
        }
    }

private:
    std::vector<std::pair<int, int>> encroached_segments(Point c, double split_floor) const {
        std::vector<std::pair<int, int>> out;
        if (seg_cell_ <= 0.0) return out;
        const long cx = static_cast<long>(std::floor(c.x / seg_cell_));
        const long cy = static_cast<long>(std::floor(c.y / seg_cell_));
        for (long dx = -1; dx <= 1; ++dx)
            for (long dy = -1; dy <= 1; ++dy) {
                auto it = seg_grid_.find(dkey(static_cast<int>(cx + dx), static_cast<int>(cy + dy)));
                if (it == seg_grid_.end()) continue;
                for (auto k : it->second) {
                    if (!constrained_.count(k)) continue;
                    auto [a, b] = unpack(k);
                    const Point pa = points_[a], pb = points_[b];
                    const double len = distance(pa, pb);
                    if (len <= split_floor) continue;
                    if (distance(c, 0.5 * (pa + pb)) < 0.5 * len * (1.0 - 1e-9)) out.emplace_back(a, b);
                }
            }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::vector<Point> points_;
    std::vector<Tri> tris_;
    std::unordered_map<std::uint64_t, int> dir_edge_;
    std::unordered_set<std::uint64_t> constrained_;
    std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> seg_grid_;
    double seg_cell_ = 0.0;
    double scale_ = 1.0;
    int last_ = 0;
    std::size_t max_vertices_ = 4'000'000;
};

/// Output of triangulate_pslg: vertices without the super triangle and CCW
/// triangles covering the convex hull of the PSLG.
struct RawMesh {
    std::vector<Point> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 2>> constrained_edges;
};

inline RawMesh triangulate_pslg(const Pslg& pslg, const RefineOptions& opt) {
    Point lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    Point hi{-lo.x, -lo.y};
    for (auto p : pslg.points) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    Triangulator tr(lo, hi);
    std::vector<int> ids(pslg.points.size());
    for (std::size_t i = 0; i < pslg.points.size(); ++i) ids[i] = tr.insert(pslg.points[i]);
    tr.insert_segments(pslg.segments, ids);
    tr.index_segments();
    tr.refine(opt);

    RawMesh out;
    const auto& pts = tr.points();
    std::vector<int> remap(pts.size(), -1);
    for (int t : tr.interior_triangles()) {
        std::array<int, 3> tri{};
        for (int i = 0; i < 3; ++i) {
            const int v = tr.tris()[t].v[i];
            if (remap[v] < 0) {
                remap[v] = static_cast<int>(out.vertices.size());
                out.vertices.push_back(pts[v]);
            }
            tri[i] = remap[v];
        }
        out.triangles.push_back(tri);
    }
    for (auto k : tr.constrained_edges()) {
        auto [a, b] = Triangulator::unpack(k);
        if (remap[a] >= 0 && remap[b] >= 0) out.constrained_edges.push_back({remap[a], remap[b]});
    }
    std::sort(out.constrained_edges.begin(), out.constrained_edges.end());
    return out;
}

}  // namespace calderon::detail
