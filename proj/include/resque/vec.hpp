#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace resque {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return dot(a, a); }

inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

inline double dist2(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double dist(const Vec& a, const Vec& b) { return std::sqrt(dist2(a, b)); }

inline Vec zeros(std::size_t d) { return Vec(d, 0.0); }

/// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vec& x, double alpha) {
    for (double& v : x) v *= alpha;
}

inline Vec scaled(const Vec& x, double alpha) {
    Vec y = x;
    scale(y, alpha);
    return y;
}

inline Vec add(const Vec& a, const Vec& b) {
    Vec y = a;
    axpy(1.0, b, y);
    return y;
}

inline Vec sub(const Vec& a, const Vec& b) {
    Vec y = a;
    axpy(-1.0, b, y);
    return y;
}

/// a*x + b*y
inline Vec lincomb(double a, const Vec& x, double b, const Vec& y) {
    assert(x.size() == y.size());
    Vec z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = a * x[i] + b * y[i];
    return z;
}

/// Euclidean projection of x onto the ball of radius r around center.
inline Vec project_ball(const Vec& x, const Vec& center, double r) {
    const double d = dist(x, center);
    if (d <= r) return x;
    Vec y = center;
    axpy(r / d, sub(x, center), y);
    return y;
}

/// Projection onto the origin-centered ball of radius r.
inline Vec project_ball0(const Vec& x, double r) {
    const double d = norm(x);
    if (d <= r) return x;
    return scaled(x, r / d);
}

inline bool all_finite(const Vec& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace resque
