#include "kam/flow_stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "kam/io_util.hpp"

namespace kam {

TSubset::TSubset(std::vector<std::pair<double, double>> iv) : iv_(std::move(iv)) {
    std::sort(iv_.begin(), iv_.end());
    std::vector<std::pair<double, double>> merged;
    for (auto& [lo, hi] : iv_) {
        if (hi <= lo) continue;
        if (!merged.empty() && lo <= merged.back().second)
            merged.back().second = std::max(merged.back().second, hi);
        else
            merged.emplace_back(lo, hi);
    }
    iv_ = std::move(merged);
}

double TSubset::measure() const {
    double s = 0;
    for (auto& [lo, hi] : iv_) s += hi - lo;
    return s;
}

bool TSubset::contains(double t) const {
    for (auto& [lo, hi] : iv_)
        if (t >= lo && t < hi) return true;
    return false;
}

TSubset TSubset::unite(const TSubset& o) const {
    auto iv = iv_;
    iv.insert(iv.end(), o.iv_.begin(), o.iv_.end());
    return TSubset(std::move(iv));
}

TSubset TSubset::intersect(const TSubset& o) const {
    std::vector<std::pair<double, double>> out;
    std::size_t i = 0, j = 0;
    while (i < iv_.size() && j < o.iv_.size()) {
        double lo = std::max(iv_[i].first, o.iv_[j].first);
        double hi = std::min(iv_[i].second, o.iv_[j].second);
        if (lo < hi) out.emplace_back(lo, hi);
        if (iv_[i].second < o.iv_[j].second)
            ++i;
        else
            ++j;
    }
    return TSubset(std::move(out));
}

TSubset TSubset::subtract(const TSubset& o) const {
    std::vector<std::pair<double, double>> out;
    for (auto [lo, hi] : iv_) {
        double cur = lo;
        for (auto& [slo, shi] : o.iv_) {
            if (shi <= cur || slo >= hi) continue;
            if (slo > cur) out.emplace_back(cur, slo);
            cur = std::max(cur, shi);
            if (cur >= hi) break;
        }
        if (cur < hi) out.emplace_back(cur, hi);
    }
    return TSubset(std::move(out));
}

std::string TSubset::to_json() const {
    std::ostringstream ss;
    ss << "[";
    for (std::size_t i = 0; i < iv_.size(); ++i) {
        if (i) ss << ",";
        ss << "[" << fmt_g(iv_[i].first) << "," << fmt_g(iv_[i].second) << "]";
    }
    ss << "]";
    return ss.str();
}

void FlowConfig::validate(double h_min) const {
    if (!(gamma > 3.5)) throw ConfigError("FlowConfig: gamma must exceed 7/2");
    if (t_steps < 1) throw ConfigError("FlowConfig: t_steps must be >= 1");
    if (!(t0 > 0)) throw ConfigError("FlowConfig: t0 must be > 0");
    if (!(L > 0)) throw ConfigError("FlowConfig: L must be > 0");
    if (delta_grid_factor < 4.0 / L)
        throw ConfigError("FlowConfig: delta_grid_factor must be >= 4/L");
    if (dt() > h_min)
        throw ConfigError("FlowConfig: t-grid spacing " + fmt_g(dt()) +
                          " too coarse to resolve O(h) membership at h = " + fmt_g(h_min));
    dioph.validate();
}

SpacingConstants derive_spacing_constants(const FourierPolyHamiltonian& H, double kappa,
                                          int grid_n) {
    const auto& b = H.domain().box;
    double S = 0;
    for (int i = 0; i <= grid_n; ++i)
        for (int j = 0; j <= grid_n; ++j) {
            Vec2 I{b.lo[0] + b.width() * i / grid_n, b.lo[1] + b.height() * j / grid_n};
            if (!H.domain().contains(I)) continue;
            auto hs = H.hess_h0(I);
            double mean = 0.5 * (hs[0] + hs[2]);
            double rad = std::sqrt(0.25 * (hs[0] - hs[2]) * (hs[0] - hs[2]) + hs[1] * hs[1]);
            S = std::max({S, std::abs(mean + rad), std::abs(mean - rad)});
        }
    if (S <= 0) throw HypothesisViolation("derive_spacing_constants: H0 Hessian vanishes on D",
                                          {b.lo[0], b.lo[1]});
    SpacingConstants c;
    c.S = S;
    c.C1 = std::pow(kappa / (2 * S), 0.25);
    c.C2 = std::sqrt(kappa * S / 2);
    return c;
}

std::vector<IVec2> FlowScaffold::mh_at(std::size_t ti) const {
    std::vector<IVec2> out;
    for (std::size_t i = 0; i < lattice.points.size(); ++i)
        if (member[ti][i]) out.push_back(lattice.points[i]);
    return out;
}

FlowScaffold build_flow_scaffold(const FourierPolyHamiltonian& H,
                                 const NormalFormExpansion& nf, double h,
                                 const FlowConfig& cfg) {
    cfg.validate(h);
    FlowScaffold fs;
    fs.h = h;
    fs.lattice = ActionLattice::build(h, H.domain(), cfg.theta_over_4);
    const std::size_t n = fs.lattice.points.size();
    fs.mu0.resize(n);
    fs.slope.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 I = fs.lattice.action(fs.lattice.points[i]);
        fs.mu0[i] = nf.k0_eval(I, 0.0, h);
        fs.slope[i] = H.angle_average_dtH(I);
    }
    fs.tgrid.resize(cfg.t_steps);
    for (int i = 0; i < cfg.t_steps; ++i) fs.tgrid[i] = (i + 1) * cfg.dt();
    fs.member.resize(cfg.t_steps);
    for (int ti = 0; ti < cfg.t_steps; ++ti) {
        auto E = nonresonant_action_set(H, fs.tgrid[ti], cfg.dioph, h / cfg.delta_grid_factor);
        fs.member[ti].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            Vec2 I = fs.lattice.action(fs.lattice.points[i]);
            fs.member[ti][i] = E.distance_at(I) < cfg.L * h ? 1 : 0;
        }
    }
    return fs;
}

SpacingAuditReport spacing_audit(const FlowScaffold& fs, std::size_t t_index,
                                 const FlowConfig& cfg) {
    SpacingAuditReport rep;
    rep.h = fs.h;
    rep.t = fs.tgrid.at(t_index);
    rep.C1 = cfg.C1;
    rep.C2 = cfg.C2;
    if (!(rep.C1 > 0) || !(rep.C2 > 0))
        throw ConfigError("spacing_audit: C1, C2 must be set (derive them first)");
    const double rad = rep.C1 * std::pow(fs.h, 0.75);
    const double thr = rep.C2 * std::pow(fs.h, 1.5);
    const int w = int(std::ceil(rad / fs.h)) + 1;
    std::map<IVec2, std::size_t> index;
    for (std::size_t i = 0; i < fs.lattice.points.size(); ++i) index[fs.lattice.points[i]] = i;
    double min_ratio = 1e300;
    for (std::size_t im = 0; im < fs.lattice.points.size(); ++im) {
        const IVec2 m = fs.lattice.points[im];
        const Vec2 Im = fs.lattice.action(m);
        double mum = fs.mu0[im] + rep.t * fs.slope[im];
        for (int a = -w; a <= w; ++a) {
            for (int b = -w; b <= w; ++b) {
                if (a == 0 && b == 0) continue;
                auto it = index.find(IVec2{m[0] + a, m[1] + b});
                if (it == index.end()) continue;
                std::size_t in = it->second;
                if (!fs.member[t_index][in]) continue;  // n must lie in M_h(t)
                Vec2 In = fs.lattice.action(fs.lattice.points[in]);
                if (norm(Im - In) > rad) continue;
                ++rep.audited_pairs;
                double gap = std::abs(mum - (fs.mu0[in] + rep.t * fs.slope[in]));
                min_ratio = std::min(min_ratio, gap / std::pow(fs.h, 1.5));
                if (gap < thr)
                    rep.violations.push_back(
                        {m, fs.lattice.points[in], rep.t, fs.h, gap, thr});
            }
        }
    }
    rep.min_gap_ratio = rep.audited_pairs ? min_ratio : 0.0;
    return rep;
}

namespace {

// {t in (0,t0): |a + b t + c t^2| < eps} for a degree <= 2 polynomial.
TSubset band_solutions(double a, double b, double c, double eps, double t0) {
    std::vector<double> cuts{0.0, t0};
    auto add_roots = [&](double q0, double q1, double q2) {
        // roots of q0 + q1 t + q2 t^2
        if (std::abs(q2) < 1e-300) {
            if (q1 != 0.0) cuts.push_back(-q0 / q1);
            return;
        }
        double disc = q1 * q1 - 4 * q2 * q0;
        if (disc < 0) return;
        double sq = std::sqrt(disc);
        // numerically stable quadratic roots
        double qq = -0.5 * (q1 + (q1 >= 0 ? sq : -sq));
        cuts.push_back(qq / q2);
        if (qq != 0.0) cuts.push_back(q0 / qq);
    };
    add_roots(a - eps, b, c);
    add_roots(a + eps, b, c);
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::pair<double, double>> iv;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double lo = std::max(cuts[i], 0.0), hi = std::min(cuts[i + 1], t0);
        if (!(lo < hi)) continue;
        double tm = 0.5 * (lo + hi);
        if (std::abs(a + b * tm + c * tm * tm) < eps) iv.emplace_back(lo, hi);
    }
    return TSubset(std::move(iv));
}

}  // namespace

TSubset crossing_set(const NormalFormExpansion& nf, const ActionLattice& lattice,
                     const IVec2& m, const IVec2& n, double h, const FlowConfig& cfg) {
    if (m == n) throw ConfigError("crossing_set: m and n must differ");
    Vec2 Im = lattice.action(m), In = lattice.action(n);
    if (!lattice.domain.contains(Im) || !lattice.domain.contains(In))
        throw OutOfDomain("crossing_set: lattice action outside the domain");
    const auto& H = nf.hamiltonian();
    double a = H.h0().eval_real(Im[0], Im[1], 0) - H.h0().eval_real(In[0], In[1], 0);
    double b = H.angle_average_dtH(Im) - H.angle_average_dtH(In);
    double c = nf.order_t() >= 2 ? nf.k2(Im) - nf.k2(In) : 0.0;
    double scale = std::max({1.0, std::abs(a), std::abs(b)});
    if (std::abs(a) <= 1e-14 * scale && std::abs(b) <= 1e-14 && std::abs(c) <= 1e-14)
        throw DegeneratePair("crossing_set: mu_m - mu_n vanishes identically for m=(" +
                             std::to_string(m[0]) + "," + std::to_string(m[1]) + "), n=(" +
                             std::to_string(n[0]) + "," + std::to_string(n[1]) + ")");
    return band_solutions(a, b, c, std::pow(h, cfg.gamma), cfg.t0);
}

ABSets ab_sets(const FlowScaffold& fs, std::size_t i, const FlowConfig& cfg) {
    ABSets out;
    const std::size_t n = fs.lattice.points.size();
    // A_m from membership runs on the t grid, half-cell extension each side
    std::vector<std::pair<double, double>> aiv;
    const double dt = cfg.dt();
    std::size_t ti = 0;
    while (ti < fs.tgrid.size()) {
        if (fs.member[ti][i]) {
            std::size_t tj = ti;
            while (tj + 1 < fs.tgrid.size() && fs.member[tj + 1][i]) ++tj;
            aiv.emplace_back(std::max(fs.tgrid[ti] - dt / 2, 0.0),
                             std::min(fs.tgrid[tj] + dt / 2, cfg.t0));
            ti = tj + 1;
        } else {
            ++ti;
        }
    }
    out.A = TSubset(std::move(aiv));
    if (out.A.empty()) {
        out.B = out.A;
        out.ratio = 1.0;
        return out;
    }
    const double eps = std::pow(fs.h, cfg.gamma);
    std::vector<std::pair<double, double>> cuts;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double a = fs.mu0[j] - fs.mu0[i];
        double b = fs.slope[j] - fs.slope[i];
        if (a == 0.0 && b == 0.0) {
            // identically degenerate partner never separates
            cuts.emplace_back(0.0, cfg.t0);
            continue;
        }
        if (b == 0.0) {
            if (std::abs(a) < eps) cuts.emplace_back(0.0, cfg.t0);
            continue;
        }
        double lo = (-eps - a) / b, hi = (eps - a) / b;
        if (lo > hi) std::swap(lo, hi);
        lo = std::max(lo, 0.0);
        hi = std::min(hi, cfg.t0);
        if (lo < hi) cuts.emplace_back(lo, hi);
    }
    out.B = out.A.subtract(TSubset(std::move(cuts)));
    double ma = out.A.measure();
    out.ratio = ma > 0 ? out.B.measure() / ma : 1.0;
    return out;
}

void FlowReport::save_csv(const std::string& path) const {
    CsvWriter w(path);
    w.header("t,N1,N2,good");
    for (std::size_t i = 0; i < tgrid.size(); ++i) {
        w.row_begin();
        w.col(tgrid[i]).col(N1[i]).col(N2[i]).col(int(good[i]));
        w.row_end();
    }
}

FlowReport n1_n2_report(const FlowScaffold& fs, const FlowConfig& cfg) {
    FlowReport rep;
    rep.h = fs.h;
    rep.eps = cfg.eps(fs.h);
    rep.tgrid = fs.tgrid;
    const std::size_t n = fs.lattice.points.size();
    const double hg = std::pow(fs.h, cfg.gamma);
    std::size_t n_good = 0;
    double deficit_sum = 0;
    std::size_t deficit_cnt = 0;
    std::vector<std::pair<double, std::size_t>> mus(n);
    for (std::size_t ti = 0; ti < fs.tgrid.size(); ++ti) {
        double t = fs.tgrid[ti];
        for (std::size_t i = 0; i < n; ++i) mus[i] = {fs.mu0[i] + t * fs.slope[i], i};
        std::sort(mus.begin(), mus.end());
        std::vector<double> gap(n, 1e300);
        for (std::size_t s = 0; s < n; ++s) {
            double g = 1e300;
            if (s > 0) g = std::min(g, mus[s].first - mus[s - 1].first);
            if (s + 1 < n) g = std::min(g, mus[s + 1].first - mus[s].first);
            gap[mus[s].second] = g;
        }
        std::size_t n1 = 0, n2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!fs.member[ti][i]) continue;
            ++n1;
            if (gap[i] > hg) ++n2;
        }
        rep.N1.push_back(n1);
        rep.N2.push_back(n2);
        bool good = n1 == 0 || double(n2) > (1.0 - rep.eps) * double(n1);
        rep.good.push_back(good ? 1 : 0);
        if (good) ++n_good;
        if (n1 > 0) {
            deficit_sum += double(n1 - n2) / double(n1);
            ++deficit_cnt;
        }
    }
    rep.good_fraction = fs.tgrid.empty() ? 0.0 : double(n_good) / double(fs.tgrid.size());
    rep.mean_deficit = deficit_cnt ? deficit_sum / double(deficit_cnt) : 0.0;
    return rep;
}

EpsScalingFit epsilon_scaling_fit(const std::vector<std::pair<double, double>>& h_proxy,
                                  double gamma, double band) {
    std::vector<std::pair<double, double>> pts;
    for (auto& [h, y] : h_proxy)
        if (y > 0 && h > 0) pts.emplace_back(std::log(h), std::log(y));
    if (pts.size() < 3)
        throw InsufficientData("epsilon_scaling_fit: need >= 3 positive proxy points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double nn = double(pts.size());
    EpsScalingFit fit;
    fit.slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    fit.target = gamma / 2 - 1.75;
    fit.mismatch = std::abs(fit.slope - fit.target) > band;
    fit.points_used = pts.size();
    return fit;
}

CrossingAuditReport audit_crossing_triples(const FlowScaffold& fs, const FlowConfig& cfg,
                                           std::size_t n_triples, std::uint64_t seed) {
    CrossingAuditReport rep;
    Rng rng(seed);
    const std::size_t n = fs.lattice.points.size();
    const double hg = std::pow(fs.h, cfg.gamma);
    const double h34 = std::pow(fs.h, 0.75);
    const double dt = cfg.dt();
    double min_slope = 1e300;
    std::size_t attempts = 0;
    const std::size_t max_attempts = 400 * n_triples + 10000;
    while (rep.triples.size() < n_triples && attempts++ < max_attempts) {
        std::size_t i = std::size_t(rng.uniform() * n);
        std::size_t j = std::size_t(rng.uniform() * n);
        if (i >= n || j >= n || i == j) continue;
        double a = fs.mu0[i] - fs.mu0[j];
        double b = fs.slope[i] - fs.slope[j];
        if (b == 0.0) continue;
        double tstar = -a / b;
        if (!(tstar > 0 && tstar < cfg.t0)) continue;
        // membership of m at the nearest t-grid node
        std::size_t ti = std::size_t(std::clamp(std::lround(tstar / dt) - 1, long(0),
                                                long(fs.tgrid.size() - 1)));
        if (!fs.member[ti][i]) continue;
        CrossingTriple tr;
        tr.m = fs.lattice.points[i];
        tr.n = fs.lattice.points[j];
        tr.t_star = tstar;
        double w = hg / std::abs(b);  // half-width of the crossing interval
        TSubset cross({{std::max(tstar - w, 0.0), std::min(tstar + w, cfg.t0)}});
        TSubset window({{std::max(tstar - rep.ctilde1 * h34, 0.0),
                         std::min(tstar + rep.ctilde1 * h34, cfg.t0)}});
        tr.window_fraction = window.intersect(cross).measure() / h34;
        tr.ctilde2 = tr.window_fraction / std::pow(fs.h, cfg.gamma - 1.5);
        tr.slope_gap = std::abs(b);
        min_slope = std::min(min_slope, tr.slope_gap);
        rep.ctilde2_max = std::max(rep.ctilde2_max, tr.ctilde2);
        rep.triples.push_back(tr);
    }
    rep.min_slope_gap_over_h34 = rep.triples.empty() ? 0.0 : min_slope / h34;
    return rep;
}

}  // namespace kam
