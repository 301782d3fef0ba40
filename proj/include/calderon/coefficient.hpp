#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "calderon/geometry.hpp"
#include "calderon/mesh.hpp"
#include "calderon/quadrature.hpp"
#include "calderon/validation.hpp"

namespace calderon {

// ---------------------------------------------------------------------------
// Weights

/// One factor of a weight: dist(x, center)^s or dist(x, polyline)^s.
struct WeightFactor {
    enum class Kind { radial, surface };
    Kind kind = Kind::radial;
    Point center;
    std::vector<Point> polyline;
    double exponent = 0.0;

    double distance_to(Point p) const {
        if (kind == Kind::radial) return distance(p, center);
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < polyline.size(); ++i)
            d = std::min(d, distance_to_segment(p, polyline[i], polyline[i + 1]));
        return d;
    }
};

/// w(x) = scale * prod_k dist_k(x)^s_k, optionally clipped to [lo, hi].
/// No factors means a constant weight.
struct WeightSpec {
    double scale = 1.0;
    std::vector<WeightFactor> factors;
    std::optional<std::array<double, 2>> clip;

    static WeightSpec constant(double c) { return WeightSpec{c, {}, std::nullopt}; }
    static WeightSpec radial_power(double c, Point x0, double s) {
        WeightSpec w{c, {}, std::nullopt};
        w.factors.push_back({WeightFactor::Kind::radial, x0, {}, s});
        return w;
    }
    static WeightSpec surface_power(double c, std::vector<Point> polyline, double s) {
        WeightSpec w{c, {}, std::nullopt};
        w.factors.push_back({WeightFactor::Kind::surface, {}, std::move(polyline), s});
        return w;
    }
    static WeightSpec product(const WeightSpec& a, const WeightSpec& b) {
        WeightSpec w{a.scale * b.scale, a.factors, std::nullopt};
        w.factors.insert(w.factors.end(), b.factors.begin(), b.factors.end());
        return w;
    }

    bool is_constant() const { return factors.empty() || std::all_of(factors.begin(), factors.end(), [](const auto& f) {
                                           return f.exponent == 0.0;
                                       }); }

    /// Throws ConfigError on a non-integrable or nonpositive specification.
    void validate() const {
        if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("weight scale must be positive and finite");
        for (const auto& f : factors) {
            if (f.kind == WeightFactor::Kind::radial && !(std::abs(f.exponent) < 2.0))
                throw ConfigError("radial_power exponent must lie in (-2, 2)");
            if (f.kind == WeightFactor::Kind::surface) {
                if (!(std::abs(f.exponent) < 1.0)) throw ConfigError("surface_power exponent must lie in (-1, 1)");
                if (f.polyline.size() < 2) throw ConfigError("surface_power needs a polyline of at least 2 points");
            }
        }
        if (clip && !(0.0 < (*clip)[0] && (*clip)[0] <= (*clip)[1] && std::isfinite((*clip)[1])))
            throw ConfigError("weight clip must satisfy 0 < min <= max < inf");
    }

    /// Unclipped value. Throws at a node where a negative-exponent factor
    /// is singular.
    double raw(Point p) const {
        double v = scale;
        for (const auto& f : factors) {
            if (f.exponent == 0.0) continue;
            const double d = f.distance_to(p);
            if (d == 0.0 && f.exponent < 0.0) throw Error("weight evaluated at a singular node");
            v *= std::pow(d, f.exponent);
        }
        return v;
    }

    double operator()(Point p, bool apply_clip = true) const {
        const double v = raw(p);
        return apply_clip && clip ? std::clamp(v, (*clip)[0], (*clip)[1]) : v;
    }

    /// Singular features of the unclipped weight, for graded quadrature.
    SingularSet singular_set() const {
        SingularSet s;
        for (const auto& f : factors) {
            if (f.exponent == 0.0) continue;
            if (f.kind == WeightFactor::Kind::radial)
                s.points.push_back({f.center, f.exponent});
            else
                for (std::size_t i = 0; i + 1 < f.polyline.size(); ++i)
                    s.segments.push_back({f.polyline[i], f.polyline[i + 1], f.exponent});
        }
        return s;
    }

    void hash_into(Fnv1a& h) const {
        h.value(scale);
        h.value(factors.size());
        for (const auto& f : factors) {
            h.value(f.kind);
            h.value(f.center);
            h.value(f.exponent);
            h.value(f.polyline.size());
            for (auto p : f.polyline) h.value(p);
        }
        h.value(clip.has_value());
        if (clip) h.value(*clip);
    }
};

// ---------------------------------------------------------------------------
// Extended reals and the coefficient field

/// Nonnegative extended real: 0 and infinity are symbolic.
struct ExtendedReal {
    enum class Kind { zero, finite, infinite };
    Kind kind = Kind::finite;
    double value = 0.0;

    static ExtendedReal zero() { return {Kind::zero, 0.0}; }
    static ExtendedReal infinity() { return {Kind::infinite, std::numeric_limits<double>::infinity()}; }
    static ExtendedReal finite(double v) { return {Kind::finite, v}; }

    bool is_zero() const { return kind == Kind::zero; }
    bool is_infinite() const { return kind == Kind::infinite; }
    double as_double() const { return value; }
};

inline bool operator<=(ExtendedReal a, ExtendedReal b) {
    if (a.is_zero() || b.is_infinite()) return true;
    if (b.is_zero() || a.is_infinite()) return false;
    return a.value <= b.value;
}

/// Conductivity gamma: background weight outside the regions and, per
/// region, either a symbolic extreme (D0 -> 0, Dinf -> inf) or a weight.
struct CoefficientField {
    RegionSet regions;
    WeightSpec background = WeightSpec::constant(1.0);
    std::vector<WeightSpec> region_weights;  ///< parallel to regions.regions; unused for D0/Dinf
    bool conductor_meets_insulator = false;  ///< set on gamma_U, where Ddeg may border D0

    const WeightSpec& weight_of(std::size_t region) const {
        if (region >= region_weights.size()) throw ConfigError("missing weight for region " + std::to_string(region));
        return region_weights[region];
    }

    /// Value in region `region` (-1 for the background). Clipping applies
    /// outside Ddeg/Dsing only.
    ExtendedReal value(Point p, int region) const {
        if (region < 0) return ExtendedReal::finite(background(p));
        const auto label = regions.regions.at(region).label;
        switch (label) {
            case RegionLabel::D0: return ExtendedReal::zero();
            case RegionLabel::Dinf: return ExtendedReal::infinity();
            case RegionLabel::Ddeg:
            case RegionLabel::Dsing: return ExtendedReal::finite(weight_of(region)(p, false));
            default: return ExtendedReal::finite(weight_of(region)(p, true));
        }
    }

    std::uint64_t hash() const {
        Fnv1a h;
        h.value(regions.geometry_hash());
        for (const auto& r : regions.regions) h.value(r.label);
        background.hash_into(h);
        h.value(region_weights.size());
        for (const auto& w : region_weights) w.hash_into(h);
        return h.digest();
    }
};

/// Homogeneous field gamma = c.
inline CoefficientField constant_field(double c) {
    CoefficientField f;
    f.background = WeightSpec::constant(c);
    return f;
}

/// Adds a region with its weight (ignored for D0/Dinf) and pins the weight's
/// singular features to the mesh.
inline void add_region(CoefficientField& f, std::string name, RegionLabel label, Polygon poly,
                       WeightSpec w = WeightSpec::constant(1.0)) {
    normalize(poly);
    f.regions.regions.push_back({std::move(name), label, std::move(poly)});
    if (label == RegionLabel::Ddeg || label == RegionLabel::Dsing)
        for (const auto& fac : w.factors) {
            if (fac.exponent == 0.0) continue;
            if (fac.kind == WeightFactor::Kind::radial)
                f.regions.singular_points.push_back(fac.center);
            else
                f.regions.singular_polylines.push_back(fac.polyline);
        }
    f.region_weights.push_back(std::move(w));
}

/// Value of gamma at p for a point lying in a triangle labeled `label`.
inline ExtendedReal eval_coefficient(const CoefficientField& f, Point p, RegionLabel label) {
    if (label == RegionLabel::background) return f.value(p, -1);
    for (std::size_t i = 0; i < f.regions.regions.size(); ++i)
        if (f.regions.regions[i].label == label && contains(f.regions.regions[i].polygon, p, 1e-12))
            return f.value(p, static_cast<int>(i));
    throw ConfigError("point does not lie in a region labeled " + std::string(to_string(label)));
}

// ---------------------------------------------------------------------------
// Discretization

enum class CellKind : std::uint8_t { finite, zero, infinite };

/// Per-triangle data needed by assembly: the kind of the coefficient and,
/// for finite triangles, the integral of sigma over the triangle.
struct DiscreteField {
    std::vector<CellKind> kind;
    std::vector<double> integral;
    std::uint64_t field_hash = 0;
    std::uint64_t mesh_hash = 0;
    bool conductor_meets_insulator = false;
};

namespace detail {

/// Quadrature nodes used for pointwise checks: interior conical Gauss nodes
/// of every triangle.
template <class F>
void for_each_node(const std::array<Point, 3>& t, int n, const F& f) {
    const Rule1D ru = gauss_jacobi(n, 0.0, 1.0);
    const Rule1D rt = gauss_legendre(n);
    for (double u : ru.x)
        for (double s : rt.x) f(t[0] + u * ((t[1] - t[0]) + s * (t[2] - t[1])));
}

inline void check_conforms(const Mesh& mesh, const CoefficientField& f) {
    if (mesh.region_geometry != f.regions.geometry_hash())
        throw ConfigError("mesh does not conform to the coefficient field's regions");
}

}  // namespace detail

/// Per-triangle integrals of sigma. Weighted triangles use graded
/// quadrature toward the weight's singular features.
inline DiscreteField discretize(const Mesh& mesh, const CoefficientField& f, const QuadratureSpec& q = {},
                                unsigned threads = default_thread_count()) {
    detail::check_conforms(mesh, f);
    const std::size_t nt = mesh.num_triangles();
    DiscreteField d;
    d.kind.assign(nt, CellKind::finite);
    d.integral.assign(nt, 0.0);
    d.field_hash = f.hash();
    d.mesh_hash = mesh.hash();
    d.conductor_meets_insulator = f.conductor_meets_insulator;
    std::vector<SingularSet> singular(f.regions.regions.size());
    for (std::size_t r = 0; r < singular.size(); ++r) {
        const auto l = f.regions.regions[r].label;
        if (l == RegionLabel::Ddeg || l == RegionLabel::Dsing) singular[r] = f.weight_of(r).singular_set();
    }
    parallel_for(nt, threads, [&](std::size_t t) {
        const int r = mesh.triangle_polygon[t];
        const auto label = r < 0 ? RegionLabel::background : f.regions.regions[r].label;
        if (label == RegionLabel::D0) {
            d.kind[t] = CellKind::zero;
            return;
        }
        if (label == RegionLabel::Dinf) {
            d.kind[t] = CellKind::infinite;
            return;
        }
        const WeightSpec& w = r < 0 ? f.background : f.weight_of(r);
        const double area = mesh.triangle_area(t);
        if (w.is_constant()) {
            d.integral[t] = w(mesh.centroid(t), !(label == RegionLabel::Ddeg || label == RegionLabel::Dsing)) * area;
            return;
        }
        static const SingularSet none;
        const SingularSet& s = r < 0 ? none : singular[r];
        const bool clip = !(label == RegionLabel::Ddeg || label == RegionLabel::Dsing);
        const double v = integrate_triangle([&](Point p) { return w(p, clip); }, mesh.corners(t), s, q);
        if (!std::isfinite(v)) throw Error("nonfinite element integral in triangle " + std::to_string(t));
        d.integral[t] = v;
    });
    return d;
}

/// Field gamma0 on every triangle of the mesh, ignoring its regions.
inline DiscreteField discretize_background(const Mesh& mesh, const WeightSpec& gamma0, const QuadratureSpec& q = {},
                                           unsigned threads = default_thread_count()) {
    gamma0.validate();
    DiscreteField d;
    d.kind.assign(mesh.num_triangles(), CellKind::finite);
    d.integral.assign(mesh.num_triangles(), 0.0);
    Fnv1a h;
    h.text("background");
    gamma0.hash_into(h);
    d.field_hash = h.digest();
    d.mesh_hash = mesh.hash();
    const SingularSet none;
    parallel_for(mesh.num_triangles(), threads, [&](std::size_t t) {
        d.integral[t] = gamma0.is_constant() ? gamma0(mesh.centroid(t)) * mesh.triangle_area(t)
                                             : integrate_triangle([&](Point p) { return gamma0(p); },
                                                                  mesh.corners(t), none, q);
    });
    return d;
}

/// gamma0 outside the test set, 0 (insulating) or inf (conducting) on the
/// triangles whose centroid lies in one of the polygons of `test`.
inline DiscreteField with_extreme(const Mesh& mesh, const DiscreteField& background, const std::vector<Polygon>& test,
                                  CellKind extreme) {
    DiscreteField d = background;
    Fnv1a h;
    h.value(background.field_hash);
    h.value(extreme);
    for (const auto& poly : test) {
        h.value(poly.outer.size());
        for (auto p : poly.outer) h.value(p);
    }
    d.field_hash = h.digest();
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const Point c = mesh.centroid(t);
        for (const auto& poly : test)
            if (contains(poly, c, 0.0)) {
                d.kind[t] = extreme;
                break;
            }
    }
    return d;
}

/// Checks the pointwise sign conditions at quadrature nodes: gamma <= gamma0
/// on D-, gamma >= gamma0 on D+, finite positive values on DF+-.
inline std::vector<Violation> validate_field(const Mesh& mesh, const CoefficientField& f, int nodes = 3) {
    detail::check_conforms(mesh, f);
    f.background.validate();
    if (f.region_weights.size() != f.regions.regions.size())
        throw ConfigError("coefficient field needs one weight per region");
    for (const auto& w : f.region_weights) w.validate();
    std::vector<Violation> out;
    std::vector<char> reported(f.regions.regions.size(), 0);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const int r = mesh.triangle_polygon[t];
        if (r < 0 || reported[r]) continue;
        const auto label = f.regions.regions[r].label;
        if (label == RegionLabel::D0 || label == RegionLabel::Dinf) continue;
        const auto& name = f.regions.regions[r].name;
        detail::for_each_node(mesh.corners(t), nodes, [&](Point p) {
            if (reported[r]) return;
            const double g0 = f.background(p);
            const double v = f.value(p, r).value;
            std::string bad;
            if (!(v > 0.0) || !std::isfinite(v))
                bad = "has a nonpositive or nonfinite value";
            else if (is_negative(label) && v > g0 * (1.0 + 1e-12))
                bad = "exceeds gamma0 (must be <= gamma0)";
            else if (is_positive(label) && v < g0 * (1.0 - 1e-12))
                bad = "is below gamma0 (must be >= gamma0)";
            if (!bad.empty()) {
                out.push_back({"sign", "weight of region '" + name + "' " + bad + " at (" + std::to_string(p.x) +
                                           ", " + std::to_string(p.y) + ")"});
                reported[r] = 1;
            }
        });
    }
    return out;
}

/// gamma_L (Ddeg and Dsing replaced by D0) and gamma_U (replaced by Dinf).
/// Throws ConfigError when a merged extreme set violates the region clauses.
/// A conducting set of gamma_U may border D0 but not the boundary.
inline std::pair<CoefficientField, CoefficientField> bracket_coefficients(const Domain& domain,
                                                                         const CoefficientField& f) {
    CoefficientField lo = f, hi = f;
    hi.conductor_meets_insulator = true;
    for (std::size_t i = 0; i < f.regions.regions.size(); ++i) {
        const auto l = f.regions.regions[i].label;
        if (l == RegionLabel::Ddeg || l == RegionLabel::Dsing) {
            lo.regions.regions[i].label = RegionLabel::D0;
            hi.regions.regions[i].label = RegionLabel::Dinf;
        }
    }
    auto fail = [](const std::string& which, const std::string& why) {
        throw ConfigError("bracketing coefficient " + which + ": " + why);
    };
    if (auto v = validate_regions(domain, lo.regions); !v.empty()) fail("gamma_L", to_string(v));
    if (auto v = validate_regions(domain, hi.regions); !v.empty()) fail("gamma_U", to_string(v));
    using L = RegionLabel;
    if (labels_touch(domain, hi.regions, {L::Dinf}, {})) fail("gamma_U", "a conducting region touches the boundary");
    return {std::move(lo), std::move(hi)};
}

}  // namespace calderon
