#include "kam/diophantine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

#include "kam/io_util.hpp"

namespace kam {

namespace {

int gcd_int(int a, int b) { return std::gcd(std::abs(a), std::abs(b)); }

}  // namespace

const PrimitiveLattice& PrimitiveLattice::get(int k_max, double kappa, double tau) {
    struct Key {
        int k;
        double kap, tau;
        bool operator<(const Key& o) const {
            return std::tie(k, kap, tau) < std::tie(o.k, o.kap, o.tau);
        }
    };
    static std::map<Key, PrimitiveLattice> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    Key key{k_max, kappa, tau};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    struct Entry {
        int n2, k1, k2;
    };
    std::vector<Entry> entries;
    for (int a = 0; a <= k_max; ++a) {
        for (int b = -k_max; b <= k_max; ++b) {
            if (a == 0 && b != 1) continue;  // only (0,1) on the axis
            if (a > 0 && gcd_int(a, b) != 1) continue;
            int n2 = a * a + b * b;
            if (n2 == 0 || n2 > k_max * k_max) continue;
            entries.push_back({n2, a, b});
        }
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
        return std::tie(x.n2, x.k1, x.k2) < std::tie(y.n2, y.k1, y.k2);
    });
    PrimitiveLattice lat;
    lat.k_max = k_max;
    lat.k1.reserve(entries.size());
    lat.k2.reserve(entries.size());
    lat.thr2.reserve(entries.size());
    for (const auto& e : entries) {
        lat.k1.push_back(e.k1);
        lat.k2.push_back(e.k2);
        lat.k1d.push_back(double(e.k1));
        lat.k2d.push_back(double(e.k2));
        double thr = kappa / std::pow(std::sqrt(double(e.n2)), tau);
        lat.thr2.push_back(thr * thr);
    }
    return cache.emplace(key, std::move(lat)).first->second;
}

DiophantineResult diophantine_check(const Vec2& omega, const DiophantineParams& p) {
    p.validate();
    DiophantineResult res;
    res.tail_bound = p.kappa / std::pow(double(p.k_max), p.tau);
    if (!std::isfinite(omega[0]) || !std::isfinite(omega[1]))
        throw ConfigError("diophantine_check: omega not finite");
    if (p.boundary_margin > 0 && p.omega_domain) {
        if (p.omega_domain->inner_distance(omega) < p.boundary_margin) {
            res.pass = false;
            res.boundary_fail = true;
            return res;
        }
    }
    const auto& lat = PrimitiveLattice::get(p.k_max, p.kappa, p.tau);
    double min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lat.k1.size(); ++i) {
        double d = lat.k1[i] * omega[0] + lat.k2[i] * omega[1];
        double d2 = d * d;
        if (d2 < lat.thr2[i]) {
            res.pass = false;
            res.witness = {lat.k1[i], lat.k2[i]};
            res.min_margin = std::sqrt(d2 / lat.thr2[i]);
            return res;
        }
        min_margin = std::min(min_margin, std::sqrt(d2 / lat.thr2[i]));
    }
    res.pass = true;
    res.min_margin = min_margin;
    return res;
}

ActionLattice ActionLattice::build(double h, const ActionDomain& domain, Vec2 theta_over_4) {
    if (!(h > 0)) throw ConfigError("ActionLattice: h must be > 0");
    ActionLattice lat;
    lat.h = h;
    lat.theta_over_4 = theta_over_4;
    lat.domain = domain;
    const auto& b = domain.box;
    int m1_lo = int(std::floor(b.lo[0] / h)) - 1, m1_hi = int(std::ceil(b.hi[0] / h)) + 1;
    int m2_lo = int(std::floor(b.lo[1] / h)) - 1, m2_hi = int(std::ceil(b.hi[1] / h)) + 1;
    for (int m1 = m1_lo; m1 <= m1_hi; ++m1)
        for (int m2 = m2_lo; m2 <= m2_hi; ++m2) {
            Vec2 I{h * (m1 + theta_over_4[0]), h * (m2 + theta_over_4[1])};
            if (domain.contains(I)) lat.points.push_back({m1, m2});
        }
    return lat;
}

std::size_t NonresonantActionSet::masked_count() const {
    std::size_t c = 0;
    for (auto v : mask) c += v;
    return c;
}

void NonresonantActionSet::save_csv(const std::string& path) const {
    CsvWriter w(path);
    w.header("I1,I2,mask,dist");
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j) {
            w.row_begin();
            w.col(grid.x(i)).col(grid.y(j)).col(int(mask[grid.idx(i, j)])).col(dist[grid.idx(i, j)]);
            w.row_end();
        }
}

void NonresonantActionSet::save_binary(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    // 16-byte header: u16 nx, u16 ny, f32 spacing, f32 origin x, f32 origin y
    std::uint16_t dims[2] = {std::uint16_t(grid.nx), std::uint16_t(grid.ny)};
    float head[3] = {float(grid.delta), float(grid.x0), float(grid.y0)};
    out.write(reinterpret_cast<const char*>(dims), 4);
    out.write(reinterpret_cast<const char*>(head), 12);
    out.write(reinterpret_cast<const char*>(mask.data()), std::streamsize(mask.size()));
    std::vector<float> df(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) df[i] = float(dist[i]);
    out.write(reinterpret_cast<const char*>(df.data()), std::streamsize(df.size() * 4));
}

NonresonantActionSet nonresonant_action_set(const FourierPolyHamiltonian& H, double t,
                                            const DiophantineParams& p, double delta_grid) {
    p.validate();
    if (!(delta_grid > 0)) throw ConfigError("nonresonant_action_set: delta_grid must be > 0");
    NonresonantActionSet E;
    E.t = t;
    E.domain = H.domain();
    E.params = p;
    E.grid = Grid2::over(H.domain().box, delta_grid);
    const Grid2& g = E.grid;
    E.mask.assign(g.size(), 0);

    // Frequency field is affine in t: omega_t = grad H0 + t grad Qbar.
    std::vector<double> W1(g.size()), W2(g.size());
    std::vector<std::uint8_t> in_dom(g.size(), 0);
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 0; j < g.ny; ++j) {
            Vec2 I{g.x(i), g.y(j)};
            std::size_t id = g.idx(i, j);
            in_dom[id] = E.domain.contains(I) ? 1 : 0;
            if (!in_dom[id]) continue;
            auto hk = H.hess_k0(I, t);
            double det = hk[0] * hk[2] - hk[1] * hk[1];
            if (std::abs(det) < 1e-12)
                throw DegenerateFrequencyMap("frequency map degenerate at I=(" + fmt_g(I[0]) +
                                             "," + fmt_g(I[1]) + ")");
            Vec2 w = H.frequency_map(I, t);
            W1[id] = w[0];
            W2[id] = w[1];
        }
    }

    std::optional<ActionRect> omega_dom = p.omega_domain;
    if (p.boundary_margin > 0 && !omega_dom) {
        // default Omega: bounding box of the frequency image of the grid
        ActionRect r;
        r.lo = {1e300, 1e300};
        r.hi = {-1e300, -1e300};
        for (std::size_t id = 0; id < g.size(); ++id) {
            if (!in_dom[id]) continue;
            r.lo[0] = std::min(r.lo[0], W1[id]);
            r.lo[1] = std::min(r.lo[1], W2[id]);
            r.hi[0] = std::max(r.hi[0], W1[id]);
            r.hi[1] = std::max(r.hi[1], W2[id]);
        }
        omega_dom = r;
    }

    const auto& lat = PrimitiveLattice::get(p.k_max, p.kappa, p.tau);
    const std::size_t nk = lat.k1.size();
    // Per-cell scan in norm order, blocked so the inner loop stays branchless
    // (vectorizable) while resonant cells still exit after their first block.
    const std::size_t kBlock = 2048;
    const double* k1 = lat.k1d.data();
    const double* k2 = lat.k2d.data();
    const double* thr2 = lat.thr2.data();
    std::vector<std::uint8_t> viol(g.size(), 0);
    for (std::size_t id = 0; id < g.size(); ++id) {
        if (!in_dom[id]) continue;
        const double w1 = W1[id], w2 = W2[id];
        bool bad = false;
        for (std::size_t base = 0; base < nk && !bad; base += kBlock) {
            const std::size_t end = std::min(nk, base + kBlock);
            int acc = 0;
            for (std::size_t ki = base; ki < end; ++ki) {
                double d = k1[ki] * w1 + k2[ki] * w2;
                acc += (d * d < thr2[ki]);
            }
            bad = acc != 0;
        }
        if (bad) viol[id] = 1;
    }
    for (std::size_t id = 0; id < g.size(); ++id) {
        if (!in_dom[id] || viol[id]) continue;
        if (p.boundary_margin > 0 && omega_dom &&
            omega_dom->inner_distance({W1[id], W2[id]}) < p.boundary_margin)
            continue;
        E.mask[id] = 1;
    }

    E.dist.assign(g.size(), std::numeric_limits<double>::infinity());
    for (std::size_t id = 0; id < g.size(); ++id)
        if (E.mask[id]) E.dist[id] = 0.0;
    distance_transform(E.dist, g.nx, g.ny);
    for (auto& d : E.dist) d = std::isfinite(d) ? d * g.delta : 1e300;
    return E;
}

std::vector<IVec2> index_set_Mh(const ActionLattice& lattice, const NonresonantActionSet& E,
                                double L) {
    if (!(L > 0)) throw ConfigError("index_set_Mh: L must be > 0");
    if (E.grid.delta > L * lattice.h / 4 + 1e-15)
        throw ResolutionError("index_set_Mh: grid spacing " + fmt_g(E.grid.delta) +
                              " exceeds L*h/4 = " + fmt_g(L * lattice.h / 4));
    std::vector<IVec2> out;
    for (const auto& m : lattice.points) {
        Vec2 I = lattice.action(m);
        if (E.distance_at(I) < L * lattice.h) out.push_back(m);
    }
    return out;
}

MeasureEstimate measure_estimate(const NonresonantActionSet& E, long mc_samples,
                                 std::uint64_t seed) {
    MeasureEstimate est;
    double cell = E.grid.delta * E.grid.delta;
    est.measure = double(E.masked_count()) * cell;
    if (mc_samples > 0) {
        // Monte Carlo over the grid box with nearest-node classification.
        Rng rng(seed);
        const Grid2& g = E.grid;
        double w = g.delta * (g.nx - 1), h = g.delta * (g.ny - 1);
        long hits = 0;
        for (long s = 0; s < mc_samples; ++s) {
            double x = g.x0 + w * rng.uniform();
            double y = g.y0 + h * rng.uniform();
            int i = int(std::lround((x - g.x0) / g.delta));
            int j = int(std::lround((y - g.y0) / g.delta));
            i = std::clamp(i, 0, g.nx - 1);
            j = std::clamp(j, 0, g.ny - 1);
            hits += E.mask[g.idx(i, j)];
        }
        double p = double(hits) / double(mc_samples);
        est.measure = p * w * h;
        est.std_error = w * h * std::sqrt(std::max(p * (1 - p), 0.0) / double(mc_samples));
    }
    return est;
}

void WeylDensityReport::save_csv(const std::string& path) const {
    CsvWriter w(path);
    w.header("h,count,measure_E,tube_volume,tube_se,ratio_asymptotic,ratio_tube");
    for (const auto& r : rows) {
        w.row_begin();
        w.col(r.h).col(r.count).col(r.measure_E).col(r.tube_volume).col(r.tube_se)
            .col(r.ratio_asymptotic).col(r.ratio_tube);
        w.row_end();
    }
}

WeylDensityReport weyl_density_report(const FourierPolyHamiltonian& H,
                                      const DiophantineParams& p, double L,
                                      const std::vector<double>& h_list, double t,
                                      Vec2 theta_over_4, long mc_samples,
                                      std::uint64_t seed) {
    if (h_list.size() < 3) throw InsufficientData("weyl_density_report: need >= 3 values of h");
    WeylDensityReport rep;
    rep.L = L;
    rep.t = t;
    Rng rng(seed);
    for (double h : h_list) {
        auto E = nonresonant_action_set(H, t, p, h / 8);
        auto lat = ActionLattice::build(h, H.domain(), theta_over_4);
        auto Mh = index_set_Mh(lat, E, L);
        WeylDensityRow row;
        row.h = h;
        row.count = Mh.size();
        row.measure_E = measure_estimate(E).measure;
        // Monte Carlo Lh-tube volume within the domain.
        const auto& b = H.domain().box;
        long hits = 0;
        long n = std::max<long>(mc_samples, 1);
        for (long s = 0; s < n; ++s) {
            Vec2 I{rng.uniform(b.lo[0], b.hi[0]), rng.uniform(b.lo[1], b.hi[1])};
            if (!H.domain().contains(I)) continue;
            if (E.distance_at(I) < L * h) ++hits;
        }
        double frac = double(hits) / double(n);
        row.tube_volume = frac * b.area();
        row.tube_se = b.area() * std::sqrt(std::max(frac * (1 - frac), 0.0) / double(n));
        row.ratio_asymptotic = row.measure_E > 0 ? row.count * h * h / row.measure_E : 0.0;
        row.ratio_tube = row.tube_volume > 0 ? row.count * h * h / row.tube_volume : 0.0;
        rep.rows.push_back(row);
    }
    rep.monotone_toward_one = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        if (rep.rows[i - 1].h > rep.rows[i].h &&
            std::abs(rep.rows[i].ratio_asymptotic - 1.0) >
                std::abs(rep.rows[i - 1].ratio_asymptotic - 1.0) + 1e-12)
            rep.monotone_toward_one = false;
    }
    return rep;
}

}  // namespace kam
