#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "calderon/coefficient.hpp"

namespace calderon {

struct Ball {
    Point c;
    double r = 0.0;
};

/// Lower bound for the A2 constant sup_B avg_B(w) avg_B(1/w), taken over a
/// finite ball family.
struct A2Estimate {
    double constant_estimate = 1.0;
    std::vector<Ball> balls;
    std::vector<double> products;
};

namespace detail {

inline double radical_inverse(std::size_t i, std::size_t base) {
    double f = 1.0, r = 0.0;
    for (; i > 0; i /= base) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(i % base);
    }
    return r;
}

/// Ball family: Halton balls inside the domain interleaved with balls
/// centered on the weight's singular points and polylines. The first k
/// balls do not depend on the requested family size.
inline std::vector<Ball> a2_balls(const WeightSpec& w, const Domain& domain, int n_balls) {
    std::vector<Point> anchors;
    for (const auto& f : w.factors) {
        if (f.exponent == 0.0) continue;
        if (f.kind == WeightFactor::Kind::radial) {
            anchors.push_back(f.center);
        } else {
            for (std::size_t i = 0; i + 1 < f.polyline.size(); ++i) {
                anchors.push_back(f.polyline[i]);
                anchors.push_back(0.5 * (f.polyline[i] + f.polyline[i + 1]));
            }
            anchors.push_back(f.polyline.back());
        }
    }
    std::erase_if(anchors, [&](Point p) { return !domain.contains(p) || domain.distance_to_boundary(p) <= 0.0; });

    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    for (auto p : domain.boundary) {
        x0 = std::min(x0, p.x);
        y0 = std::min(y0, p.y);
        x1 = std::max(x1, p.x);
        y1 = std::max(y1, p.y);
    }
    std::vector<Ball> out;
    std::size_t halton = 0, anchored = 0;
    while (static_cast<int>(out.size()) < n_balls) {
        if (!anchors.empty() && out.size() % 2 == 1) {
            const Point c = anchors[anchored % anchors.size()];
            const std::size_t level = anchored / anchors.size();
            ++anchored;
            out.push_back({c, 0.9 * domain.distance_to_boundary(c) * std::pow(0.5, static_cast<double>(level % 10))});
            continue;
        }
        for (;;) {
            ++halton;
            const Point c{x0 + (x1 - x0) * radical_inverse(halton, 2), y0 + (y1 - y0) * radical_inverse(halton, 3)};
            if (!domain.contains(c)) continue;
            const double d = domain.distance_to_boundary(c);
            if (d <= 1e-9) continue;
            out.push_back({c, d * (0.05 + 0.9 * radical_inverse(halton, 5))});
            break;
        }
    }
    return out;
}

/// Ball B(c, r) as a fan of triangles (inscribed regular polygon).
inline std::vector<std::array<Point, 3>> ball_fan(const Ball& b, int sides) {
    std::vector<std::array<Point, 3>> fan;
    for (int k = 0; k < sides; ++k) {
        const double a0 = 2.0 * std::numbers::pi * k / sides, a1 = 2.0 * std::numbers::pi * (k + 1) / sides;
        fan.push_back({b.c, b.c + Point{b.r * std::cos(a0), b.r * std::sin(a0)},
                       b.c + Point{b.r * std::cos(a1), b.r * std::sin(a1)}});
    }
    return fan;
}

}  // namespace detail

inline constexpr int kA2BallSides = 32;

/// avg_B(w) * avg_B(1/w) over the inscribed polygon of the ball, with graded
/// quadrature toward the singular features of w (and of 1/w).
inline double a2_product(const WeightSpec& w, const Ball& b, int n_quad, int depth = 12) {
    const SingularSet sw = w.singular_set();
    SingularSet sinv = sw;
    for (auto& p : sinv.points) p.exponent = -p.exponent;
    for (auto& s : sinv.segments) s.exponent = -s.exponent;
    QuadratureSpec q;
    q.depth = depth;
    q.order = n_quad;
    q.singular_order = std::max(n_quad, 8);
    double area = 0.0, iw = 0.0, iinv = 0.0;
    for (const auto& t : detail::ball_fan(b, kA2BallSides)) {
        area += 0.5 * std::abs(cross(t[1] - t[0], t[2] - t[0]));
        iw += integrate_triangle([&](Point p) { return w.raw(p); }, t, sw, q);
        iinv += integrate_triangle([&](Point p) { return 1.0 / w.raw(p); }, t, sinv, q);
    }
    return (iw / area) * (iinv / area);
}

inline A2Estimate estimate_a2_constant(const WeightSpec& w, const Domain& domain, int n_balls = 512, int n_quad = 8,
                                       unsigned threads = default_thread_count()) {
    if (n_balls < 1) throw ConfigError("n_balls must be at least 1");
    if (n_quad < 1) throw ConfigError("n_quad must be at least 1");
    w.validate();
    A2Estimate est;
    est.balls = detail::a2_balls(w, domain, n_balls);
    est.products.assign(est.balls.size(), 1.0);
    if (!w.is_constant())
        parallel_for(est.balls.size(), threads,
                     [&](std::size_t i) { est.products[i] = a2_product(w, est.balls[i], n_quad); });
    est.constant_estimate = *std::max_element(est.products.begin(), est.products.end());
    return est;
}

}  // namespace calderon
