#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "calderon/geometry.hpp"

namespace calderon {

/// One-dimensional rule on [0, 1].
struct Rule1D {
    std::vector<double> x;
    std::vector<double> w;
};

/// Gauss-Jacobi rule on [0, 1] for the weight (1 - x)^alpha * x^beta,
/// computed with the Golub-Welsch algorithm. Exact for polynomials of degree
/// 2n - 1 against that weight.
inline Rule1D gauss_jacobi(int n, double alpha, double beta) {
    if (n < 1) throw std::invalid_argument("gauss_jacobi: n must be positive");
    if (alpha <= -1.0 || beta <= -1.0) throw std::invalid_argument("gauss_jacobi: exponents must exceed -1");
    const double a = alpha, b = beta, ab = a + b;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    J(0, 0) = (b - a) / (ab + 2.0);
    for (int k = 1; k < n; ++k) {
        const double c = 2.0 * k + ab;
        J(k, k) = (b * b - a * a) / (c * (c + 2.0));
        double beta_k;
        if (k == 1)
            beta_k = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
        else
            beta_k = 4.0 * k * (k + a) * (k + b) * (k + ab) / (c * c * (c + 1.0) * (c - 1.0));
        J(k, k - 1) = J(k - 1, k) = std::sqrt(beta_k);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    const double log_mu0 = (ab + 1.0) * std::log(2.0) + std::lgamma(a + 1.0) + std::lgamma(b + 1.0) -
                           std::lgamma(ab + 2.0);
    const double mu0 = std::exp(log_mu0);
    const double to_unit = std::pow(2.0, -(ab + 1.0));
    Rule1D r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < n; ++i) {
        r.x[i] = 0.5 * (1.0 + es.eigenvalues()(i));
        const double v0 = es.eigenvectors()(0, i);
        r.w[i] = mu0 * v0 * v0 * to_unit;
    }
    return r;
}

inline Rule1D gauss_legendre(int n) { return gauss_jacobi(n, 0.0, 0.0); }

// ---------------------------------------------------------------------------
// Singular features of a weight and graded triangle quadrature

/// Point where the integrand behaves like dist(., p)^exponent.
struct SingularPoint {
    Point p;
    double exponent = 0.0;
};

/// Straight segment where the integrand behaves like dist(., [a, b])^exponent.
struct SingularSegment {
    Point a, b;
    double exponent = 0.0;
};

struct SingularSet {
    std::vector<SingularPoint> points;
    std::vector<SingularSegment> segments;
    bool empty() const { return points.empty() && segments.empty(); }
};

struct QuadratureSpec {
    int depth = 12;          ///< dyadic grading depth toward singular vertices
    int order = 6;           ///< points per direction in regular cells
    int singular_order = 8;  ///< points per direction in terminal singular cells
};

namespace detail {

struct CellContact {
    std::array<bool, 3> vertex{false, false, false};
    std::array<double, 3> vertex_exponent{0.0, 0.0, 0.0};
    int edge = -1;  ///< edge (i, i+1) lying on a singular segment
    double edge_exponent = 0.0;
    bool interior = false;      ///< a feature meets the cell away from vertices/edges
    bool edge_endpoint = false; ///< a singular segment ends at a cell vertex
    std::optional<Point> split;  ///< singular point inside the cell or on an edge, away from vertices
};

inline bool point_in_closed_triangle(Point p, const std::array<Point, 3>& t, double tol) {
    for (int i = 0; i < 3; ++i)
        if (orient(t[i], t[(i + 1) % 3], p) < -tol * distance(t[i], t[(i + 1) % 3])) return false;
    return true;
}

inline CellContact classify(const std::array<Point, 3>& t, const SingularSet& s) {
    CellContact c;
    const double diam = std::max({distance(t[0], t[1]), distance(t[1], t[2]), distance(t[2], t[0])});
    const double tol = 1e-8 * diam + 1e-14;
    for (const auto& sp : s.points) {
        bool at_vertex = false;
        for (int i = 0; i < 3; ++i)
            if (distance(sp.p, t[i]) <= tol) {
                c.vertex[i] = true;
                c.vertex_exponent[i] += sp.exponent;
                at_vertex = true;
            }
        if (!at_vertex && point_in_closed_triangle(sp.p, t, tol)) {
            c.interior = true;
            if (!c.split) c.split = sp.p;
        }
    }
    for (const auto& seg : s.segments) {
        std::array<bool, 3> on{};
        for (int i = 0; i < 3; ++i) on[i] = distance_to_segment(t[i], seg.a, seg.b) <= tol;
        int edge = -1;
        for (int i = 0; i < 3; ++i)
            if (on[i] && on[(i + 1) % 3]) edge = i;
        if (edge >= 0) {
            c.edge = edge;
            c.edge_exponent = seg.exponent;
            for (int i : {edge, (edge + 1) % 3})
                if (distance(t[i], seg.a) <= tol || distance(t[i], seg.b) <= tol) {
                    c.vertex[i] = true;
                    c.vertex_exponent[i] += seg.exponent;
                    c.edge_endpoint = true;
                }
            continue;
        }
        bool any = false;
        for (int i = 0; i < 3; ++i)
            if (on[i]) {
                c.vertex[i] = true;
                c.vertex_exponent[i] += seg.exponent;
                any = true;
            }
        if (any) continue;
        if (point_in_closed_triangle(seg.a, t, tol) || point_in_closed_triangle(seg.b, t, tol)) {
            c.interior = true;
            continue;
        }
        for (int i = 0; i < 3; ++i)
            if (segments_cross(seg.a, seg.b, t[i], t[(i + 1) % 3])) c.interior = true;
    }
    return c;
}

/// Collapsed-coordinate rule with the collapsed vertex at t[k]: the radial
/// coordinate u carries the weight u^(1 + s) so that |x - t[k]|^s
/// singularities are integrated exactly up to a smooth factor.
template <class F>
double vertex_rule(const F& f, const std::array<Point, 3>& t, int k, double s, int n) {
    const Point v = t[k], b = t[(k + 1) % 3], c = t[(k + 2) % 3];
    const double area2 = std::abs(orient(v, b, c));
    const Rule1D ru = gauss_jacobi(n, 0.0, 1.0 + s);
    const Rule1D rt = gauss_legendre(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = ru.x[i];
        const double scale = std::pow(u, -s);
        for (int j = 0; j < n; ++j) {
            const Point x = v + u * ((b - v) + rt.x[j] * (c - b));
            sum += ru.w[i] * rt.w[j] * f(x) * scale;
        }
    }
    return area2 * sum;
}

/// Rule for a triangle whose edge (t[k], t[k+1]) lies on a singular segment:
/// the normal coordinate eta carries the weight (1 - eta) eta^s.
template <class F>
double edge_rule(const F& f, const std::array<Point, 3>& t, int k, double s, int n) {
    const Point a = t[k], b = t[(k + 1) % 3], c = t[(k + 2) % 3];
    const double area2 = std::abs(orient(a, b, c));
    const Rule1D re = gauss_jacobi(n, 1.0, s);
    const Rule1D rt = gauss_legendre(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double eta = re.x[i];
        const double scale = std::pow(eta, -s);
        for (int j = 0; j < n; ++j) {
            const Point x = a + ((1.0 - eta) * rt.x[j]) * (b - a) + eta * (c - a);
            sum += re.w[i] * rt.w[j] * f(x) * scale;
        }
    }
    return area2 * sum;
}

template <class F>
double graded(const F& f, const std::array<Point, 3>& t, const SingularSet& s, const QuadratureSpec& q,
              int level) {
    const CellContact c = classify(t, s);
    if (c.split) {
        // Make the point a vertex of every piece.
        const Point p = *c.split;
        const double diam = std::max({distance(t[0], t[1]), distance(t[1], t[2]), distance(t[2], t[0])});
        for (int i = 0; i < 3; ++i)
            if (distance_to_segment(p, t[i], t[(i + 1) % 3]) <= 1e-8 * diam + 1e-14)
                return graded(f, {t[i], p, t[(i + 2) % 3]}, s, q, level) +
                       graded(f, {p, t[(i + 1) % 3], t[(i + 2) % 3]}, s, q, level);
        return graded(f, {t[0], t[1], p}, s, q, level) + graded(f, {t[1], t[2], p}, s, q, level) +
               graded(f, {t[2], t[0], p}, s, q, level);
    }
    const bool any_vertex = c.vertex[0] || c.vertex[1] || c.vertex[2];
    if (!any_vertex && c.edge < 0 && !c.interior) return vertex_rule(f, t, 0, 0.0, q.order);
    const bool edge_only = c.edge >= 0 && !c.interior && !c.edge_endpoint &&
                           !c.vertex[(c.edge + 2) % 3] &&
                           c.vertex_exponent[c.edge] == 0.0 && c.vertex_exponent[(c.edge + 1) % 3] == 0.0;
    if (edge_only) return edge_rule(f, t, c.edge, c.edge_exponent, q.singular_order);
    if (level >= q.depth) {
        if (c.edge >= 0) return edge_rule(f, t, c.edge, c.edge_exponent, q.singular_order);
        int k = -1;
        for (int i = 0; i < 3; ++i)
            if (c.vertex[i] && (k < 0 || c.vertex_exponent[i] < c.vertex_exponent[k])) k = i;
        if (k >= 0) {
            const double e = std::clamp(c.vertex_exponent[k], -1.95, 4.0);
            return vertex_rule(f, t, k, e, q.singular_order);
        }
        return vertex_rule(f, t, 0, 0.0, q.order);
    }
    const Point m01 = 0.5 * (t[0] + t[1]), m12 = 0.5 * (t[1] + t[2]), m20 = 0.5 * (t[2] + t[0]);
    return graded(f, {t[0], m01, m20}, s, q, level + 1) + graded(f, {m01, t[1], m12}, s, q, level + 1) +
           graded(f, {m20, m12, t[2]}, s, q, level + 1) + graded(f, {m12, m20, m01}, s, q, level + 1);
}

}  // namespace detail

/// Integral of f over the triangle. Cells touching a feature of `singular`
/// are subdivided dyadically up to `spec.depth` levels; terminal cells use
/// collapsed Gauss-Jacobi rules matched to the feature's exponent, all other
/// cells a conical product Gauss rule of `spec.order` points per direction.
template <class F>
double integrate_triangle(const F& f, const std::array<Point, 3>& tri, const SingularSet& singular,
                          const QuadratureSpec& spec = {}) {
    return detail::graded(f, tri, singular, spec, 0);
}

}  // namespace calderon
