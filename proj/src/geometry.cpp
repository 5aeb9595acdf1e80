#include "kam/geometry.hpp"

#include <limits>

namespace kam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform (lower envelope of parabolas).
void dt1d(const double* f, double* d, int n, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (f[v[0]] == kInf) {
            v[0] = q;
            continue;
        }
        double s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
        while (k > 0 && s <= z[k]) {
            --k;
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (f[v[0]] == kInf) {
        for (int q = 0; q < n; ++q) d[q] = kInf;
        return;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

}  // namespace

void distance_transform(std::vector<double>& dist, int nx, int ny) {
    const int n = std::max(nx, ny);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);
    // pass along columns (j direction)
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) f[j] = dist[std::size_t(i) * ny + j];
        dt1d(f.data(), d.data(), ny, v.data(), z.data());
        for (int j = 0; j < ny; ++j) dist[std::size_t(i) * ny + j] = d[j];
    }
    // pass along rows (i direction)
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) f[i] = dist[std::size_t(i) * ny + j];
        dt1d(f.data(), d.data(), nx, v.data(), z.data());
        for (int i = 0; i < nx; ++i) dist[std::size_t(i) * ny + j] = d[i];
    }
    for (auto& x : dist) x = (x == kInf) ? kInf : std::sqrt(x);
}

}  // namespace kam
