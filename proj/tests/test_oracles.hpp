#ifndef KAM_TEST_ORACLES_HPP
#define KAM_TEST_ORACLES_HPP

// Test-only oracles, independent of the library's computation paths:
// quadrature, finite differences, brute-force lattice scans, and a
// discrete-torus Weyl quantization.

#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <vector>

#include "kam/hamiltonian.hpp"

namespace kam::testing {

// 2-D trapezoid rule over the angle torus (exact for trig polynomials once n
// exceeds the bandwidth).
inline double angle_average(const std::function<double(double, double)>& f, int n = 256) {
    double s = 0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) s += f(2 * M_PI * a / n, 2 * M_PI * b / n);
    return s / double(n) / double(n);
}

// central finite difference d/dx at step e
inline double fd_central(const std::function<double(double)>& f, double x, double e) {
    return (f(x + e) - f(x - e)) / (2 * e);
}

inline double fd_second(const std::function<double(double)>& f, double x, double e) {
    return (f(x + e) - 2 * f(x) + f(x - e)) / (e * e);
}

// brute-force Diophantine scan over the full lattice ball (not just
// primitives): ground truth for diophantine_check
struct BruteDioph {
    bool pass = true;
    IVec2 witness{0, 0};
};
inline BruteDioph brute_force_dioph(const Vec2& w, double kappa, double tau, int kmax) {
    BruteDioph res;
    long best = 0;
    for (int a = -kmax; a <= kmax; ++a)
        for (int b = -kmax; b <= kmax; ++b) {
            if (a == 0 && b == 0) continue;
            long n2 = long(a) * a + long(b) * b;
            if (n2 > long(kmax) * kmax) continue;
            double lhs = std::abs(a * w[0] + b * w[1]);
            double rhs = kappa / std::pow(std::sqrt(double(n2)), tau);
            if (lhs < rhs && (res.pass || n2 < best)) {
                res.pass = false;
                best = n2;
                res.witness = {a, b};
            }
        }
    return res;
}

// Continued-fraction cross-check for ratio-of-coordinates frequencies
// w = (1, x), x > 0: the minimizers of |k1 + x k2| at bounded |k2| are the
// convergents p/q of x, so a pass up to k_max is certified by checking all
// convergent denominators q <= k_max.
inline bool cf_ratio_pass(double x, double kappa, double tau, int kmax) {
    double a = x;
    long p0 = 1, q0 = 0, p1 = long(std::floor(a)), q1 = 1;
    a = a - std::floor(a);
    for (int it = 0; it < 64 && q1 <= kmax; ++it) {
        // test k = (-p1, q1) and nearby semiconvergent-style candidates
        for (long q = std::max<long>(1, q1 - 1); q <= q1 + 1 && q <= kmax; ++q) {
            long p = long(std::lround(q * x));
            double lhs = std::abs(-double(p) + x * double(q));
            double n = std::hypot(double(p), double(q));
            if (n <= kmax && lhs < kappa / std::pow(n, tau)) return false;
        }
        if (a < 1e-15) break;
        a = 1.0 / a;
        long ai = long(std::floor(a));
        a -= std::floor(a);
        long p2 = ai * p1 + p0, q2 = ai * q1 + q0;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
    }
    return true;
}

// Discrete-torus Weyl quantization oracle (odd N, even coupling k): matrix
// element of Op(e^{ik.theta} p(I)) between Fourier modes, with the symbol
// I-sampled on a finite index window.  Exact for even k once N exceeds the
// aliasing bound.
inline cplx discrete_weyl_element(const std::function<cplx(Vec2)>& pI, const IVec2& k,
                                  const IVec2& m, const IVec2& mp, double h, int N,
                                  int window) {
    // kernel K(x,y) = e^{i k.theta_w} sum_{l in window} p(h l) e^{i theta_{x-y}.l},
    // w = (x+y)/2 via the mod-N inverse of 2 (N odd)
    const int inv2 = (N + 1) / 2;
    auto wrap = [&](int a) { return ((a % N) + N) % N; };
    cplx acc(0.0);
    for (int x1 = 0; x1 < N; ++x1)
        for (int x2 = 0; x2 < N; ++x2)
            for (int y1 = 0; y1 < N; ++y1)
                for (int y2 = 0; y2 < N; ++y2) {
                    int w1 = wrap((x1 + y1) * inv2), w2 = wrap((x2 + y2) * inv2);
                    double thw1 = 2 * M_PI * w1 / N, thw2 = 2 * M_PI * w2 / N;
                    double thd1 = 2 * M_PI * (x1 - y1) / N, thd2 = 2 * M_PI * (x2 - y2) / N;
                    cplx ker(0.0);
                    for (int l1 = m[0] - window; l1 <= m[0] + window; ++l1)
                        for (int l2 = m[1] - window; l2 <= m[1] + window; ++l2)
                            ker += pI({h * l1, h * l2}) *
                                   std::polar(1.0, thd1 * l1 + thd2 * l2);
                    ker *= std::polar(1.0, k[0] * thw1 + k[1] * thw2);
                    double thx1 = 2 * M_PI * x1 / N, thx2 = 2 * M_PI * x2 / N;
                    double thy1 = 2 * M_PI * y1 / N, thy2 = 2 * M_PI * y2 / N;
                    acc += std::polar(1.0, -(mp[0] * thx1 + mp[1] * thx2)) * ker *
                           std::polar(1.0, m[0] * thy1 + m[1] * thy2);
                }
    return acc / double(N) / double(N) / double(N) / double(N);
}

}  // namespace kam::testing

#endif
