#pragma once

#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "calderon/coefficient.hpp"
#include "calderon/fem.hpp"
#include "calderon/monotonicity.hpp"
#include "calderon/reconstruction.hpp"

namespace calderon {

/// Run configuration read from JSON. See configs/ for complete examples.
struct Config {
    nlohmann::json source;

    Domain domain;
    double h = 0.04;
    CoefficientField field;

    QuadratureSpec quadrature;
    SolverOptions solver;
    int m = 16;

    double tau = 1e-4;
    Side side = Side::both;
    int grid_n = 8;
    ScanMode scan = ScanMode::peel;
    bool fill = true;
    std::optional<std::vector<Polygon>> chain_set;  ///< default: the scan grid

    std::vector<double> calibrate_h;
    std::vector<int> calibrate_m;
    std::vector<double> calibrate_tau;

    int a2_balls = 512;
    int a2_quad = 8;
};

namespace detail {

using nlohmann::json;

[[noreturn]] inline void config_fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

inline const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) config_fail(path, "missing key '" + key + "'");
    return j.at(key);
}

inline double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) config_fail(path, "expected a number");
    return j.get<double>();
}

inline int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) config_fail(path, "expected an integer");
    return j.get<int>();
}

inline std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) config_fail(path, "expected a string");
    return j.get<std::string>();
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    const auto& v = j.at(key);
    const std::string p = path + "." + key;
    if constexpr (std::is_same_v<T, double>)
        return as_number(v, p);
    else if constexpr (std::is_same_v<T, int>)
        return as_int(v, p);
    else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) config_fail(p, "expected true or false");
        return v.get<bool>();
    } else
        return as_string(v, p);
}

inline Point as_point(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) config_fail(path, "expected [x, y]");
    return {as_number(j[0], path + "[0]"), as_number(j[1], path + "[1]")};
}

inline std::vector<Point> as_points(const json& j, const std::string& path) {
    if (!j.is_array()) config_fail(path, "expected a list of [x, y] points");
    std::vector<Point> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_point(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

/// {"disk": {...}}, {"annulus": {...}}, {"rect": {...}} or {"polygon": {...}}.
inline Polygon parse_shape(const json& j, const std::string& path) {
    if (!j.is_object() || j.size() != 1) config_fail(path, "expected one of disk, annulus, rect, polygon");
    const std::string kind = j.begin().key();
    const json& s = j.begin().value();
    const std::string p = path + "." + kind;
    if (kind == "disk")
        return make_disk(as_point(require(s, "center", p), p + ".center"), as_number(require(s, "radius", p), p + ".radius"),
                         get_or(s, "segments", 64, p));
    if (kind == "annulus")
        return make_annulus(as_point(require(s, "center", p), p + ".center"),
                            as_number(require(s, "inner", p), p + ".inner"),
                            as_number(require(s, "outer", p), p + ".outer"), get_or(s, "segments", 64, p));
    if (kind == "rect")
        return make_rect(as_point(require(s, "lo", p), p + ".lo"), as_point(require(s, "hi", p), p + ".hi"));
    if (kind == "polygon") {
        Polygon poly{as_points(require(s, "outer", p), p + ".outer"), {}};
        if (s.contains("holes")) {
            const auto& holes = s.at("holes");
            if (!holes.is_array()) config_fail(p + ".holes", "expected a list of rings");
            for (std::size_t i = 0; i < holes.size(); ++i)
                poly.holes.push_back(as_points(holes[i], p + ".holes[" + std::to_string(i) + "]"));
        }
        normalize(poly);
        return poly;
    }
    config_fail(path, "unknown shape '" + kind + "'");
}

/// A number, or {"kind": constant | radial_power | surface_power | product, ...}.
inline WeightSpec parse_weight(const json& j, const std::string& path) {
    if (j.is_number()) return WeightSpec::constant(j.get<double>());
    if (!j.is_object()) config_fail(path, "expected a number or a weight object");
    const std::string kind = as_string(require(j, "kind", path), path + ".kind");
    WeightSpec w;
    if (kind == "constant") {
        w = WeightSpec::constant(as_number(require(j, "value", path), path + ".value"));
    } else if (kind == "radial_power") {
        w = WeightSpec::radial_power(get_or(j, "scale", 1.0, path), as_point(require(j, "center", path), path + ".center"),
                                     as_number(require(j, "exponent", path), path + ".exponent"));
    } else if (kind == "surface_power") {
        w = WeightSpec::surface_power(get_or(j, "scale", 1.0, path),
                                      as_points(require(j, "polyline", path), path + ".polyline"),
                                      as_number(require(j, "exponent", path), path + ".exponent"));
    } else if (kind == "product") {
        const auto& fs = require(j, "factors", path);
        if (!fs.is_array() || fs.empty()) config_fail(path + ".factors", "expected a nonempty list of weights");
        w = WeightSpec::constant(get_or(j, "scale", 1.0, path));
        for (std::size_t i = 0; i < fs.size(); ++i)
            w = WeightSpec::product(w, parse_weight(fs[i], path + ".factors[" + std::to_string(i) + "]"));
    } else {
        config_fail(path + ".kind", "unknown weight kind '" + kind + "'");
    }
    if (j.contains("clip")) {
        const Point c = as_point(j.at("clip"), path + ".clip");
        w.clip = std::array<double, 2>{c.x, c.y};
    }
    try {
        w.validate();
    } catch (const ConfigError& e) {
        config_fail(path, e.what());
    }
    return w;
}

}  // namespace detail

inline Config parse_config(const nlohmann::json& j) {
    using namespace detail;
    Config c;
    c.source = j;
    if (!j.is_object()) config_fail("config", "expected a JSON object");

    const auto& g = require(j, "geometry", "config");
    const std::string shape = get_or(g, "shape", std::string("disk"), "geometry");
    DomainShape ds;
    if (shape == "disk")
        ds = DomainShape::disk;
    else if (shape == "square")
        ds = DomainShape::square;
    else
        config_fail("geometry.shape", "expected disk or square");
    GammaArc arc;
    if (ds == DomainShape::square) arc.end = 4.0;
    if (g.contains("gamma")) {
        arc.start = get_or(g.at("gamma"), "start", arc.start, "geometry.gamma");
        arc.end = get_or(g.at("gamma"), "end", arc.end, "geometry.gamma");
    }
    try {
        c.domain = build_domain(ds, arc, get_or(g, "boundary_segments", 256, "geometry"));
    } catch (const ConfigError& e) {
        config_fail("geometry", e.what());
    }
    c.h = get_or(g, "h", c.h, "geometry");
    if (!(c.h > 0.0)) config_fail("geometry.h", "must be positive");

    const json empty = json::object();
    const auto& co = j.contains("coefficient") ? j.at("coefficient") : empty;
    c.field.background =
        co.contains("background") ? parse_weight(co.at("background"), "coefficient.background") : WeightSpec::constant(1.0);
    const auto& weights = co.contains("regions") ? co.at("regions") : empty;
    if (!weights.is_object()) config_fail("coefficient.regions", "expected an object keyed by region name");

    if (g.contains("regions")) {
        const auto& rs = g.at("regions");
        if (!rs.is_array()) config_fail("geometry.regions", "expected a list");
        for (std::size_t i = 0; i < rs.size(); ++i) {
            const std::string p = "geometry.regions[" + std::to_string(i) + "]";
            const std::string name = as_string(require(rs[i], "name", p), p + ".name");
            RegionLabel label;
            try {
                label = parse_label(as_string(require(rs[i], "label", p), p + ".label"));
            } catch (const ConfigError& e) {
                config_fail(p + ".label", e.what());
            }
            if (label == RegionLabel::background) config_fail(p + ".label", "regions cannot use the background label");
            const Polygon poly = parse_shape(require(rs[i], "shape", p), p + ".shape");
            WeightSpec w = WeightSpec::constant(1.0);
            const bool needs_weight = label != RegionLabel::D0 && label != RegionLabel::Dinf;
            if (weights.contains(name))
                w = parse_weight(weights.at(name), "coefficient.regions." + name);
            else if (needs_weight)
                config_fail("coefficient.regions", "no weight given for region '" + name + "' (" +
                                                       std::string(to_string(label)) + ")");
            add_region(c.field, name, label, poly, w);
        }
    }
    for (const auto& [name, unused] : weights.items())
        if (!c.field.regions.find(name)) config_fail("coefficient.regions." + name, "no region with this name");

    const auto& so = j.contains("solver") ? j.at("solver") : empty;
    c.quadrature.depth = get_or(so, "quadrature_depth", c.quadrature.depth, "solver");
    c.quadrature.order = get_or(so, "quadrature_order", c.quadrature.order, "solver");
    c.quadrature.singular_order = get_or(so, "singular_order", c.quadrature.singular_order, "solver");
    c.solver.rtol = get_or(so, "rtol", c.solver.rtol, "solver");
    if (get_or(so, "grounding", std::string("multiplier"), "solver") != "multiplier")
        config_fail("solver.grounding", "only 'multiplier' is supported");
    if (c.quadrature.depth < 0 || c.quadrature.order < 1 || c.quadrature.singular_order < 1)
        config_fail("solver", "quadrature depth must be >= 0 and orders >= 1");
    if (!(c.solver.rtol > 0.0)) config_fail("solver.rtol", "must be positive");

    const auto& me = j.contains("measurement") ? j.at("measurement") : empty;
    c.m = get_or(me, "m", c.m, "measurement");
    if (c.m < 1) config_fail("measurement.m", "must be at least 1");

    const auto& te = j.contains("test") ? j.at("test") : empty;
    c.tau = get_or(te, "tau", c.tau, "test");
    if (!(c.tau >= 0.0)) config_fail("test.tau", "must be nonnegative");
    try {
        c.side = parse_side(get_or(te, "side", std::string("both"), "test"));
        c.scan = parse_scan_mode(get_or(te, "scan", std::string("peel"), "test"));
    } catch (const ConfigError& e) {
        config_fail("test", e.what());
    }
    c.grid_n = get_or(te, "grid_n", c.grid_n, "test");
    if (c.grid_n < 2) config_fail("test.grid_n", "must be at least 2");
    c.fill = get_or(te, "fill", c.fill, "test");
    if (te.contains("chain_set")) {
        const auto& cs = te.at("chain_set");
        if (!cs.is_array()) config_fail("test.chain_set", "expected a list of shapes");
        std::vector<Polygon> polys;
        for (std::size_t i = 0; i < cs.size(); ++i)
            polys.push_back(parse_shape(cs[i], "test.chain_set[" + std::to_string(i) + "]"));
        c.chain_set = std::move(polys);
    }

    const auto& ca = j.contains("calibrate") ? j.at("calibrate") : empty;
    auto list = [&](const char* key, auto fallback, auto parse) {
        decltype(fallback) out;
        if (!ca.contains(key)) return fallback;
        const auto& a = ca.at(key);
        const std::string p = std::string("calibrate.") + key;
        if (!a.is_array() || a.empty()) config_fail(p, "expected a nonempty list");
        for (std::size_t i = 0; i < a.size(); ++i) out.push_back(parse(a[i], p + "[" + std::to_string(i) + "]"));
        return out;
    };
    c.calibrate_h = list("h", std::vector<double>{c.h}, as_number);
    c.calibrate_m = list("m", std::vector<int>{c.m}, as_int);
    c.calibrate_tau = list("tau", std::vector<double>{c.tau}, as_number);

    const auto& a2 = j.contains("a2") ? j.at("a2") : empty;
    c.a2_balls = get_or(a2, "n_balls", c.a2_balls, "a2");
    c.a2_quad = get_or(a2, "n_quad", c.a2_quad, "a2");
    if (c.a2_balls < 1 || c.a2_quad < 1) config_fail("a2", "n_balls and n_quad must be at least 1");
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

/// Region or coefficient clauses that failed; one entry per clause.
class ValidationFailure : public ConfigError {
public:
    explicit ValidationFailure(std::vector<Violation> v)
        : ConfigError("configuration violates " + std::to_string(v.size()) + " clause(s):\n" + to_string(v)),
          violations_(std::move(v)) {}
    const std::vector<Violation>& violations() const { return violations_; }

private:
    std::vector<Violation> violations_;
};

/// Validated geometry, mesh and current basis for one config. The mesh
/// resolves the scan grid and the chain test set.
struct Setup {
    Config config;
    Mesh mesh;
    CurrentBasis basis;
    ScanGrid grid;

    std::vector<Polygon> chain_set() const {
        return config.chain_set ? *config.chain_set : std::vector<Polygon>{grid.box()};
    }
};

inline Setup prepare(Config config, std::optional<double> h = std::nullopt, std::optional<int> m = std::nullopt) {
    if (auto v = validate_regions(config.domain, config.field.regions); !v.empty()) throw ValidationFailure(v);
    Setup s;
    s.grid = scan_grid(config.domain, config.grid_n);
    MeshOptions mo;
    mo.extra_segments = s.grid.segments();
    if (config.chain_set)
        for (const auto& poly : *config.chain_set)
            for_each_edge(poly, [&](Point a, Point b) { mo.extra_segments.push_back({a, b}); });
    s.mesh = triangulate(config.domain, config.field.regions, h.value_or(config.h), mo);
    if (auto v = validate_field(s.mesh, config.field); !v.empty()) throw ValidationFailure(v);
    s.basis = build_basis(config.domain, s.mesh, m.value_or(config.m));
    s.config = std::move(config);
    return s;
}

/// Truth polygons for scoring: every inclusion region.
inline std::vector<Polygon> inclusion_polygons(const CoefficientField& f) {
    std::vector<Polygon> out;
    for (const auto& r : f.regions.regions) out.push_back(r.polygon);
    return out;
}

}  // namespace calderon
