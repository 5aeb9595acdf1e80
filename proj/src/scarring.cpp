#include "kam/scarring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "kam/io_util.hpp"

namespace kam {

std::vector<std::pair<IVec2, std::size_t>> window_counts(const EigenWindowResult& eigs,
                                                         const QuasiSpectrum& quasi,
                                                         const ScarConfig& cfg) {
    cfg.validate();
    const double hg = std::pow(quasi.h, cfg.gamma);
    if (eigs.a > cfg.band_a - hg / 3 + 1e-15 || eigs.b < cfg.band_b + hg / 3 - 1e-15)
        throw CoverageError("window_counts: eigen result does not cover the band with margin");
    std::vector<std::pair<IVec2, std::size_t>> out;
    for (const auto& q : quasi.rows) {
        if (q.mu < cfg.band_a || q.mu > cfg.band_b) continue;
        out.emplace_back(q.m, eigs.count_in(q.mu - hg / 3, q.mu + hg / 3));
    }
    return out;
}

RRatio r_ratio(const FourierPolyHamiltonian& H, double t, const ScarConfig& cfg,
               const NonresonantActionSet& E, long n_mc, std::uint64_t seed) {
    cfg.validate();
    RRatio r;
    double measI = measure_estimate(E).measure;
    if (measI <= 0) throw EmptyNonresonantSet("r_ratio: meas(E_kappa) = 0");
    r.measure_E = 4 * M_PI * M_PI * measI;

    // I-box containing p^{-1}((-inf, b]): grow until the symbol exceeds b on
    // the box boundary for all sampled angles.
    double rad = 1.0;
    auto min_on_boundary = [&](double rr) {
        double mn = 1e300;
        const int ns = 64;
        for (int s = 0; s < ns; ++s) {
            double th = 2 * M_PI * s / ns;
            for (int e = 0; e < 4 * ns; ++e) {
                double u = -rr + 2 * rr * (e % ns) / (ns - 1.0);
                Vec2 I = (e / ns == 0)   ? Vec2{u, -rr}
                         : (e / ns == 1) ? Vec2{u, rr}
                         : (e / ns == 2) ? Vec2{-rr, u}
                                         : Vec2{rr, u};
                mn = std::min(mn, H.eval_symbol({th, th * 0.7}, I, t));
            }
        }
        return mn;
    };
    int guard = 0;
    while (min_on_boundary(rad) <= cfg.band_b && guard++ < 60) rad *= 1.3;
    if (guard >= 60) throw NumericalError("r_ratio: symbol does not confine the band");

    Rng rng(seed);
    long hits = 0;
    for (long s = 0; s < n_mc; ++s) {
        Vec2 th{rng.uniform(0, 2 * M_PI), rng.uniform(0, 2 * M_PI)};
        Vec2 I{rng.uniform(-rad, rad), rng.uniform(-rad, rad)};
        double p = H.eval_symbol(th, I, t);
        if (p >= cfg.band_a && p <= cfg.band_b) ++hits;
    }
    double boxvol = 4 * M_PI * M_PI * (2 * rad) * (2 * rad);
    double frac = double(hits) / double(n_mc);
    r.band_volume = frac * boxvol;
    r.band_se = boxvol * std::sqrt(std::max(frac * (1 - frac), 0.0) / double(n_mc));
    r.value = r.band_volume / r.measure_E;
    return r;
}

BTildeSelection btilde_select(const std::vector<std::pair<IVec2, std::size_t>>& counts,
                              const std::vector<IVec2>& b_h, double R, const ScarConfig& cfg) {
    cfg.validate();
    BTildeSelection sel;
    sel.lambda_R = cfg.lambda * R;
    std::map<IVec2, std::size_t> cmap(counts.begin(), counts.end());
    std::size_t considered = 0;
    for (const auto& m : b_h) {
        auto it = cmap.find(m);
        if (it == cmap.end()) continue;  // outside the band
        ++considered;
        if (double(it->second) < sel.lambda_R) sel.members.push_back(m);
    }
    sel.proportion = considered ? double(sel.members.size()) / double(considered) : 1.0;
    return sel;
}

OverlapAudit max_overlap_audit(const QuasiEigenvalue& qm, const EigenWindowResult& eigs,
                               const QuasimodeVector& vm, const ScarConfig& cfg, double R) {
    cfg.validate();
    const double hg = std::pow(qm.h, cfg.gamma);
    if (eigs.a > qm.mu - hg || eigs.b < qm.mu + hg)
        throw CoverageError("max_overlap_audit: eigen result does not cover [mu-h^g, mu+h^g]");
    OverlapAudit audit;
    audit.threshold = 1.0 / (2.0 * cfg.lambda * R);
    auto lo = std::lower_bound(eigs.pairs.begin(), eigs.pairs.end(), qm.mu - hg,
                               [](const EigPair& p, double v) { return p.value < v; });
    for (auto it = lo; it != eigs.pairs.end() && it->value <= qm.mu + hg; ++it) {
        double ov = std::abs(overlap(it->vec, vm.v));
        audit.projector_sum += ov * ov;
        if (ov > audit.max_overlap) {
            audit.max_overlap = ov;
            audit.argmax = std::size_t(it - eigs.pairs.begin());
            audit.found = true;
        }
    }
    audit.pass = audit.found && audit.max_overlap >= audit.threshold;
    return audit;
}

double torus_mass(const SparseVec& u, const BasisTruncation& trunc, const Vec2& I_omega,
                  double delta) {
    if (u.trunc_digest != trunc.digest())
        throw DimensionMismatch("torus_mass: vector on a different truncation");
    double mass = 0;
    for (const auto& [r, amp] : u.entries) {
        Vec2 I = trunc.action(r);
        if (norm(I - I_omega) < delta) mass += std::norm(amp);
    }
    return mass;
}

double symbol_expectation(const SparseVec& u, const FourierPolyHamiltonian& a,
                          const BasisTruncation& trunc, double h, double t,
                          Vec2 theta_over_4) {
    if (u.trunc_digest != trunc.digest())
        throw DimensionMismatch("symbol_expectation: vector on a different truncation");
    // Hermitian symmetry of a is enforced by its own invariants at
    // construction; a direct conjugate check guards hand-built symbols.
    for (const auto& [k, p] : a.terms()) {
        const TriPoly* opp = a.term({-k[0], -k[1]});
        if (!opp || (p.conjugate() - *opp).max_abs_coeff() > 1e-12 * (1 + p.max_abs_coeff()))
            throw SymmetryViolation("symbol_expectation: non-Hermitian symbol");
    }
    cplx acc(0.0);
    std::map<int, cplx> uval(u.entries.begin(), u.entries.end());
    for (const auto& [r, amp] : u.entries) {
        const IVec2 mr = trunc.state(r);
        for (const auto& [k, p] : a.terms()) {
            IVec2 mp{mr[0] + k[0], mr[1] + k[1]};
            int rp = trunc.row_of(mp);
            if (rp < 0) continue;
            auto it = uval.find(rp);
            if (it == uval.end()) continue;
            acc += std::conj(it->second) * matrix_element(a, mr, mp, h, t, theta_over_4) * amp;
        }
    }
    if (std::abs(acc.imag()) > 1e-10 * (1 + std::abs(acc.real())))
        throw SymmetryViolation("symbol_expectation: nonreal expectation " + fmt_g(acc.imag()));
    return acc.real();
}

ScarAssert scar_assert(const SparseVec& u, const BasisTruncation& trunc, const Vec2& I_omega,
                       const ScarConfig& cfg, double R, double h) {
    cfg.validate();
    ScarAssert sa;
    sa.mass = torus_mass(u, trunc, I_omega, cfg.delta(h));
    sa.threshold = 1.0 / (5.0 * cfg.lambda * cfg.lambda * R * R);
    sa.margin = sa.mass * 5.0 * cfg.lambda * cfg.lambda * R * R;
    sa.pass = sa.mass >= sa.threshold;
    return sa;
}

void ScarReport::save_csv(const std::string& path) const {
    CsvWriter w(path);
    w.header("m1,m2,I1,I2,mu,N_m,in_btilde,max_overlap,torus_mass,pass_overlap,pass_scar");
    for (const auto& r : rows) {
        w.row_begin();
        w.col(r.m[0]).col(r.m[1]).col(r.I[0]).col(r.I[1]).col(r.mu).col(r.N_m)
            .col(int(r.in_btilde)).col(r.max_overlap).col(r.torus_mass)
            .col(int(r.pass_overlap)).col(int(r.pass_scar));
        w.row_end();
    }
}

std::string ScarReport::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["h"] = h;
    j["t"] = t;
    j["R"] = R;
    j["lambda"] = lambda;
    j["overlap_threshold"] = overlap_threshold;
    j["mass_threshold"] = mass_threshold;
    j["btilde_proportion"] = btilde_proportion;
    auto& arr = j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        arr.push_back({{"m", {r.m[0], r.m[1]}},
                       {"I", {r.I[0], r.I[1]}},
                       {"mu", r.mu},
                       {"N_m", r.N_m},
                       {"in_btilde", r.in_btilde},
                       {"max_overlap", r.max_overlap},
                       {"argmax_eigindex", r.argmax_eigindex},
                       {"torus_mass", r.torus_mass},
                       {"pass_overlap", r.pass_overlap},
                       {"pass_scar", r.pass_scar}});
    }
    return j.dump(2);
}

void CoverageReport::save_csv(const std::string& path) const {
    CsvWriter w(path);
    w.header("h,fraction,bound,pass");
    for (const auto& r : rows) {
        w.row_begin();
        w.col(r.h).col(r.fraction).col(r.bound).col(int(r.pass));
        w.row_end();
    }
}

CoverageReport coverage_report(const std::vector<std::pair<double, std::vector<Vec2>>>& selected,
                               const NonresonantActionSet& E_ref, const ScarConfig& cfg) {
    cfg.validate();
    CoverageReport rep;
    const Grid2& g = E_ref.grid;
    std::vector<std::size_t> masked;
    for (std::size_t id = 0; id < g.size(); ++id)
        if (E_ref.mask[id]) masked.push_back(id);
    std::vector<int> covered_count(masked.size(), 0);
    const double bound = 1.0 - cfg.L * cfg.L / (M_PI * cfg.lambda);

    for (const auto& [h, pts] : selected) {
        // bucket the selected actions on a cell grid of size Lh
        const double cell = cfg.L * h;
        std::map<std::pair<long, long>, std::vector<Vec2>> buckets;
        for (const auto& p : pts)
            buckets[{long(std::floor(p[0] / cell)), long(std::floor(p[1] / cell))}].push_back(p);
        CoverageRow row;
        row.h = h;
        row.bound = bound;
        std::size_t hit = 0;
        for (std::size_t mi = 0; mi < masked.size(); ++mi) {
            std::size_t id = masked[mi];
            Vec2 c{g.x(int(id / g.ny)), g.y(int(id % g.ny))};
            long bx = long(std::floor(c[0] / cell)), by = long(std::floor(c[1] / cell));
            bool in = false;
            for (long dx = -1; dx <= 1 && !in; ++dx)
                for (long dy = -1; dy <= 1 && !in; ++dy) {
                    auto it = buckets.find({bx + dx, by + dy});
                    if (it == buckets.end()) continue;
                    for (const auto& p : it->second)
                        if (norm(p - c) < cfg.L * h) {
                            in = true;
                            break;
                        }
                }
            if (in) {
                ++hit;
                ++covered_count[mi];
            }
        }
        row.fraction = masked.empty() ? 0.0 : double(hit) / double(masked.size());
        row.pass = row.fraction >= bound;
        rep.rows.push_back(row);
    }
    // persistence proxy over the last three h values
    const int lastk = std::min<std::size_t>(3, selected.size());
    if (lastk > 0 && !masked.empty()) {
        // recount over only the last k h-values
        std::vector<int> cnt(masked.size(), 0);
        for (std::size_t si = selected.size() - lastk; si < selected.size(); ++si) {
            const auto& [h, pts] = selected[si];
            const double cell = cfg.L * h;
            std::map<std::pair<long, long>, std::vector<Vec2>> buckets;
            for (const auto& p : pts)
                buckets[{long(std::floor(p[0] / cell)), long(std::floor(p[1] / cell))}]
                    .push_back(p);
            for (std::size_t mi = 0; mi < masked.size(); ++mi) {
                std::size_t id = masked[mi];
                Vec2 c{g.x(int(id / g.ny)), g.y(int(id % g.ny))};
                long bx = long(std::floor(c[0] / cell)), by = long(std::floor(c[1] / cell));
                bool in = false;
                for (long dx = -1; dx <= 1 && !in; ++dx)
                    for (long dy = -1; dy <= 1 && !in; ++dy) {
                        auto it = buckets.find({bx + dx, by + dy});
                        if (it == buckets.end()) continue;
                        for (const auto& p : it->second)
                            if (norm(p - c) < cfg.L * h) {
                                in = true;
                                break;
                            }
                    }
                if (in) ++cnt[mi];
            }
        }
        std::size_t persistent = 0;
        for (int c : cnt)
            if (c == lastk) ++persistent;
        rep.persistent_fraction = double(persistent) / double(masked.size());
    }
    return rep;
}

}  // namespace kam
