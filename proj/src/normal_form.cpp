#include "kam/normal_form.hpp"

#include <algorithm>
#include <cmath>

#include "kam/io_util.hpp"

namespace kam {

NormalFormExpansion::NormalFormExpansion(const FourierPolyHamiltonian& H, int order_t,
                                         double divisor_tol)
    : H_(&H), order_t_(order_t), divisor_tol_(divisor_tol) {
    if (order_t < 1 || order_t > 2)
        throw ConfigError("NormalFormExpansion: order_t must be 1 or 2");
    if (order_t_ == 2) {
        for (auto& [k, q] : H.dt_coefficients()) {
            if (k[0] < 0 || (k[0] == 0 && k[1] < 0)) continue;  // one per +-pair
            PairTerm pt;
            pt.k = k;
            pt.q = q;
            pt.dq1 = q.deriv_I1();
            pt.dq2 = q.deriv_I2();
            pairs_.push_back(std::move(pt));
        }
    }
}

double NormalFormExpansion::k2(const Vec2& I) const {
    if (order_t_ < 2) return 0.0;
    double acc = 0.0;
    Vec2 w = H_->grad_h0(I);
    auto hess = H_->hess_h0(I);
    for (const auto& pt : pairs_) {
        double wk = w[0] * pt.k[0] + w[1] * pt.k[1];
        if (std::abs(wk) < divisor_tol_)
            throw SmallDivisor("k2: small divisor <w,k> at I=(" + fmt_g(I[0]) + "," +
                                   fmt_g(I[1]) + ")",
                               {pt.k[0], pt.k[1]});
        cplx q = pt.q.eval(I[0], I[1], 0);
        cplx d1 = pt.dq1.eval(I[0], I[1], 0), d2 = pt.dq2.eval(I[0], I[1], 0);
        double q2 = std::norm(q);
        // k . grad |q|^2 = 2 Re(conj(q) k.grad q)
        double kgrad = 2.0 * (std::conj(q) * (double(pt.k[0]) * d1 + double(pt.k[1]) * d2)).real();
        double hk = hess[0] * pt.k[0] * pt.k[0] + 2 * hess[1] * pt.k[0] * pt.k[1] +
                    hess[2] * pt.k[1] * pt.k[1];
        acc += -kgrad / wk + q2 * hk / (wk * wk);
    }
    return acc;
}

double NormalFormExpansion::k0_eval(const Vec2& I, double t, double) const {
    double v = H_->h0().eval_real(I[0], I[1], 0) + t * H_->angle_average_dtH(I);
    if (order_t_ >= 2) v += t * t * k2(I);
    return v;
}

double NormalFormExpansion::dk0_dt(const Vec2& I, double t, double) const {
    double v = H_->angle_average_dtH(I);
    if (order_t_ >= 2) v += 2 * t * k2(I);
    return v;
}

Vec2 NormalFormExpansion::eta_map(const Vec2& I, double t, double h) const {
    return {k0_eval(I, t, h), dk0_dt(I, t, h)};
}

QuasiEigenvalue quasieigenvalue(const NormalFormExpansion& nf, const IVec2& m, double t,
                                double h, const ActionLattice& lattice) {
    Vec2 I = {h * (m[0] + lattice.theta_over_4[0]), h * (m[1] + lattice.theta_over_4[1])};
    if (!lattice.domain.contains(I))
        throw OutOfDomain("quasieigenvalue: I_m = (" + fmt_g(I[0]) + "," + fmt_g(I[1]) +
                          ") outside the domain");
    QuasiEigenvalue q;
    q.m = m;
    q.I = I;
    q.t = t;
    q.h = h;
    q.mu = nf.k0_eval(I, t, h);
    q.dmu_dt = nf.dk0_dt(I, t, h);
    return q;
}

void QuasiSpectrum::save_csv(const std::string& path) const {
    CsvWriter w(path);
    w.header("m1,m2,I1,I2,t,h,mu,dmu_dt");
    for (const auto& r : rows) {
        w.row_begin();
        w.col(r.m[0]).col(r.m[1]).col(r.I[0]).col(r.I[1]).col(r.t).col(r.h).col(r.mu).col(
            r.dmu_dt);
        w.row_end();
    }
}

QuasiSpectrum quasi_spectrum(const NormalFormExpansion& nf, const ActionLattice& lattice,
                             const std::vector<IVec2>& members, double t) {
    QuasiSpectrum qs;
    qs.h = lattice.h;
    qs.t = t;
    qs.rows.reserve(members.size());
    for (const auto& m : members) qs.rows.push_back(quasieigenvalue(nf, m, t, lattice.h, lattice));
    return qs;
}

BilipschitzResult bilipschitz_constants(const NormalFormExpansion& nf,
                                        const ActionDomain& d_sub, double t, double h,
                                        std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 1000)
        throw ConfigError("bilipschitz_constants: n_samples must be >= 1000");
    const auto& b = d_sub.box;
    std::vector<Vec2> probes;
    const int ng = 7;
    for (int i = 1; i < ng; ++i)
        for (int j = 1; j < ng; ++j) {
            Vec2 p{b.lo[0] + b.width() * i / ng, b.lo[1] + b.height() * j / ng};
            if (d_sub.contains(p)) probes.push_back(p);
        }
    // coordinate-swap partners of the probes, when inside
    std::vector<std::pair<Vec2, Vec2>> pairs;
    for (const auto& p : probes) {
        Vec2 s{p[1], p[0]};
        if (d_sub.contains(s) && norm(p - s) > 1e-9) pairs.emplace_back(p, s);
    }
    for (std::size_t i = 0; i < probes.size(); ++i)
        for (std::size_t j = i + 1; j < probes.size(); ++j) pairs.emplace_back(probes[i], probes[j]);
    Rng rng(seed);
    auto draw = [&] {
        while (true) {
            Vec2 p{rng.uniform(b.lo[0], b.hi[0]), rng.uniform(b.lo[1], b.hi[1])};
            if (d_sub.contains(p)) return p;
        }
    };
    const std::size_t target = pairs.size() + n_samples;
    while (pairs.size() < target) {
        Vec2 p = draw(), q = draw();
        if (norm(p - q) > 1e-9) pairs.emplace_back(p, q);
    }

    BilipschitzResult res;
    double rmin = 1e300, rmax = 0.0;
    double eta_scale = 1.0;
    for (const auto& [pa, pb] : pairs) {
        Vec2 ea = nf.eta_map(pa, t, h), eb = nf.eta_map(pb, t, h);
        eta_scale = std::max({eta_scale, std::abs(ea[0]), std::abs(ea[1])});
        double dI = norm(pa - pb), de = norm(ea - eb);
        if (de <= 1e-13 * eta_scale)
            throw SingularEta("eta map not injective: eta collision between (" + fmt_g(pa[0]) +
                                  "," + fmt_g(pa[1]) + ") and (" + fmt_g(pb[0]) + "," +
                                  fmt_g(pb[1]) + ")",
                              {pa[0], pa[1]}, {pb[0], pb[1]});
        double r = dI / de;
        if (r < rmin) {
            rmin = r;
            res.argmin_a = pa;
            res.argmin_b = pb;
        }
        if (r > rmax) {
            rmax = r;
            res.argmax_a = pa;
            res.argmax_b = pb;
        }
    }
    res.G1 = rmin;
    res.G2 = rmax;
    res.pairs_sampled = pairs.size();
    return res;
}

HomologicalSolution homological_solve(const FourierPolyHamiltonian& H, const Vec2& I,
                                      int k_trunc, double divisor_tol) {
    HomologicalSolution sol;
    sol.I = I;
    sol.min_divisor = 1e300;
    Vec2 w = H.grad_h0(I);
    auto qk = H.dt_coefficients();
    for (const auto& [k, q] : qk) {
        if (norm(k) > k_trunc + 1e-9) continue;
        cplx qv = q.eval(I[0], I[1], 0);
        if (qv == cplx(0.0)) continue;
        double wk = w[0] * k[0] + w[1] * k[1];
        if (std::abs(wk) < divisor_tol)
            throw SmallDivisor("homological_solve: |<w,k>| = " + fmt_g(std::abs(wk)) +
                                   " below divisor_tol",
                               {k[0], k[1]});
        sol.min_divisor = std::min(sol.min_divisor, std::abs(wk));
        sol.coeffs[k] = qv / (cplx(0, 1) * wk);
    }
    if (sol.coeffs.empty()) sol.min_divisor = 0.0;

    // Residual of the first-order identity  w . d_theta S = Q - Qbar, with the
    // oscillatory part Q - Qbar taken from the full symbol (all k, not only
    // |k| <= k_trunc), so an undersized truncation is caught here.
    const int n = 128;
    double qbar = H.angle_average_dtH(I);
    double scale = std::max(1.0, std::abs(qbar));
    double sup = 0.0;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            double th1 = 2 * M_PI * a / n, th2 = 2 * M_PI * b / n;
            cplx lhs(0.0), qosc(0.0);
            for (const auto& [k, s] : sol.coeffs) {
                cplx e = std::polar(1.0, k[0] * th1 + k[1] * th2);
                lhs += cplx(0, 1) * (w[0] * k[0] + w[1] * k[1]) * s * e;
            }
            for (const auto& [k, q] : qk)
                qosc += q.eval(I[0], I[1], 0) * std::polar(1.0, k[0] * th1 + k[1] * th2);
            sup = std::max(sup, std::abs(lhs - qosc));
            scale = std::max(scale, std::abs(qosc));
        }
    }
    sol.residual_sup = sup;
    if (sup > 1e-8 * scale)
        throw NumericalError("homological_solve: identity residual " + fmt_g(sup) +
                             " exceeds 1e-8");
    return sol;
}

}  // namespace kam
