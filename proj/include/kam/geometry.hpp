#ifndef KAM_GEOMETRY_HPP
#define KAM_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "kam/errors.hpp"

namespace kam {

using Vec2 = std::array<double, 2>;
using IVec2 = std::array<int, 2>;

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Vec2& a) { return std::hypot(a[0], a[1]); }
inline double norm(const IVec2& a) { return std::hypot(double(a[0]), double(a[1])); }
inline int norm2(const IVec2& a) { return a[0] * a[0] + a[1] * a[1]; }
inline Vec2 operator-(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec2 operator+(const Vec2& a, const Vec2& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Vec2 operator*(double s, const Vec2& a) { return {s * a[0], s * a[1]}; }
inline IVec2 operator-(const IVec2& a, const IVec2& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline IVec2 operator+(const IVec2& a, const IVec2& b) { return {a[0] + b[0], a[1] + b[1]}; }

// Closed axis-aligned rectangle [lo1,hi1] x [lo2,hi2] in action space.
struct ActionRect {
    Vec2 lo{0, 0};
    Vec2 hi{1, 1};

    bool contains(const Vec2& p) const {
        return p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1];
    }
    double width() const { return hi[0] - lo[0]; }
    double height() const { return hi[1] - lo[1]; }
    double area() const { return width() * height(); }
    void validate() const {
        if (!(hi[0] > lo[0]) || !(hi[1] > lo[1]))
            throw ConfigError("ActionRect: empty rectangle");
    }
    // Distance from an interior point to the rectangle boundary (negative outside).
    double inner_distance(const Vec2& p) const {
        double d = p[0] - lo[0];
        d = std::min(d, hi[0] - p[0]);
        d = std::min(d, p[1] - lo[1]);
        d = std::min(d, hi[1] - p[1]);
        return d;
    }
};

// Action domain D: a rectangle, optionally restricted to the open half
// {I2 < I1} below the coordinate-swap diagonal.  The swap symmetry of the
// flat-torus model makes the eta map two-to-one across the diagonal, so the
// default model domain keeps one side only.
struct ActionDomain {
    ActionRect box;
    bool below_diagonal = false;

    bool contains(const Vec2& p) const {
        return box.contains(p) && (!below_diagonal || p[1] < p[0]);
    }
    double measure() const {
        if (!below_diagonal) return box.area();
        // area of {I2 < I1} inside the box
        double lo1 = box.lo[0], hi1 = box.hi[0], lo2 = box.lo[1], hi2 = box.hi[1];
        // integrate over I1: length of [lo2, min(I1,hi2)]
        auto f = [&](double x) { return std::max(0.0, std::min(x, hi2) - lo2); };
        // f is piecewise linear in x; exact integral
        double a = std::clamp(lo2, lo1, hi1), b = std::clamp(hi2, lo1, hi1);
        double s = 0.0;
        s += 0.5 * (f(a) + f(std::max(a, lo1))) * std::max(0.0, a - lo1);
        s += 0.5 * (f(a) + f(b)) * std::max(0.0, b - a);
        s += 0.5 * (f(b) + f(hi1)) * std::max(0.0, hi1 - b);
        return s;
    }
};

// Node-centered uniform grid over an ActionRect.
struct Grid2 {
    double x0 = 0, y0 = 0;
    double delta = 1;
    int nx = 0, ny = 0;

    double x(int i) const { return x0 + delta * i; }
    double y(int j) const { return y0 + delta * j; }
    std::size_t size() const { return std::size_t(nx) * std::size_t(ny); }
    std::size_t idx(int i, int j) const { return std::size_t(i) * ny + j; }

    static Grid2 over(const ActionRect& r, double delta) {
        Grid2 g;
        g.x0 = r.lo[0];
        g.y0 = r.lo[1];
        g.delta = delta;
        g.nx = int(std::floor((r.hi[0] - r.lo[0]) / delta + 1e-9)) + 1;
        g.ny = int(std::floor((r.hi[1] - r.lo[1]) / delta + 1e-9)) + 1;
        return g;
    }

    // Bilinear interpolation of a field stored row-major (i*ny+j), clamped.
    double bilinear(const std::vector<double>& f, double px, double py) const {
        double fx = (px - x0) / delta, fy = (py - y0) / delta;
        fx = std::clamp(fx, 0.0, double(nx - 1));
        fy = std::clamp(fy, 0.0, double(ny - 1));
        int i = std::min(int(fx), nx - 2);
        int j = std::min(int(fy), ny - 2);
        if (nx == 1) i = 0;
        if (ny == 1) j = 0;
        double ax = fx - i, ay = fy - j;
        double f00 = f[idx(i, j)], f10 = f[idx(std::min(i + 1, nx - 1), j)];
        double f01 = f[idx(i, std::min(j + 1, ny - 1))];
        double f11 = f[idx(std::min(i + 1, nx - 1), std::min(j + 1, ny - 1))];
        return f00 * (1 - ax) * (1 - ay) + f10 * ax * (1 - ay) + f01 * (1 - ax) * ay +
               f11 * ax * ay;
    }
};

// Exact Euclidean distance transform (squared-parabola envelope, two passes).
// On input, `dist` holds 0 on source cells and +inf elsewhere; on output the
// Euclidean distance to the nearest source, in grid-cell units.
void distance_transform(std::vector<double>& dist, int nx, int ny);

}  // namespace kam

#endif
