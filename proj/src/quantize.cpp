#include "kam/quantize.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

#include "kam/io_util.hpp"

namespace kam {

namespace {
constexpr double kHermTol = 1e-14;
constexpr double kShellFrac = 0.1;
constexpr double kShellMassLimit = 1e-6;
}  // namespace

void BasisTruncation::finalize() {
    std::sort(states_.begin(), states_.end());
    for (int r = 0; r < int(states_.size()); ++r) index_[states_[r]] = r;
    max_radius_ = 0;
    for (int r = 0; r < int(states_.size()); ++r)
        max_radius_ = std::max(max_radius_, norm(action(r)));
    std::uint64_t d = fnv1a64("trunc");
    d = fnv1a64(&h_, sizeof(h_), d);
    d = fnv1a64(&theta4_, sizeof(theta4_), d);
    d = fnv1a64(&energy_limit_, sizeof(energy_limit_), d);
    std::size_t n = states_.size();
    d = fnv1a64(&n, sizeof(n), d);
    if (!states_.empty()) {
        d = fnv1a64(states_.data(), states_.size() * sizeof(IVec2), d);
    }
    digest_ = d;
}

BasisTruncation BasisTruncation::energy_ball(const FourierPolyHamiltonian& H, double h,
                                             Vec2 theta_over_4, double E_cut,
                                             double rho_margin) {
    if (!(h > 0) || !(E_cut > 0) || !(rho_margin >= 1))
        throw ConfigError("BasisTruncation: need h>0, E_cut>0, rho_margin>=1");
    BasisTruncation tr;
    tr.h_ = h;
    tr.theta4_ = theta_over_4;
    tr.energy_limit_ = E_cut * rho_margin;
    // conservative index bound from a scan of H0 on rays
    int mmax = 8;
    auto h0_at = [&](int m1, int m2) {
        return H.h0().eval_real(h * (m1 + theta_over_4[0]), h * (m2 + theta_over_4[1]), 0);
    };
    while (mmax < 100000) {
        bool outside = true;
        for (int s = -mmax; s <= mmax && outside; s += std::max(1, mmax / 8))
            outside = h0_at(mmax, s) > tr.energy_limit_ && h0_at(-mmax, s) > tr.energy_limit_ &&
                      h0_at(s, mmax) > tr.energy_limit_ && h0_at(s, -mmax) > tr.energy_limit_;
        if (outside) break;
        mmax *= 2;
    }
    for (int m1 = -mmax; m1 <= mmax; ++m1)
        for (int m2 = -mmax; m2 <= mmax; ++m2)
            if (h0_at(m1, m2) <= tr.energy_limit_) tr.states_.push_back({m1, m2});
    if (tr.states_.empty()) throw ConfigError("BasisTruncation: empty basis");
    tr.finalize();
    return tr;
}

BasisTruncation BasisTruncation::lattice_ball(double h, Vec2 theta_over_4, int radius) {
    if (!(h > 0) || radius < 0) throw ConfigError("BasisTruncation: bad lattice ball");
    BasisTruncation tr;
    tr.h_ = h;
    tr.theta4_ = theta_over_4;
    tr.energy_limit_ = 0;
    for (int m1 = -radius; m1 <= radius; ++m1)
        for (int m2 = -radius; m2 <= radius; ++m2)
            if (m1 * m1 + m2 * m2 <= radius * radius) tr.states_.push_back({m1, m2});
    tr.finalize();
    return tr;
}

int BasisTruncation::row_of(const IVec2& m) const {
    auto it = index_.find(m);
    return it == index_.end() ? -1 : it->second;
}

cplx matrix_element(const FourierPolyHamiltonian& H, const IVec2& m, const IVec2& mp,
                    double h, double t, Vec2 theta_over_4) {
    IVec2 k{mp[0] - m[0], mp[1] - m[1]};
    const TriPoly* c = H.term(k);
    if (!c) return cplx(0.0);
    double I1 = h * (0.5 * (m[0] + mp[0]) + theta_over_4[0]);
    double I2 = h * (0.5 * (m[1] + mp[1]) + theta_over_4[1]);
    return c->eval(I1, I2, t);
}

HermitianOperatorMatrix build_operator(const FourierPolyHamiltonian& H, double h, double t,
                                       std::shared_ptr<const BasisTruncation> trunc,
                                       Vec2 theta_over_4) {
    if (!trunc) throw ConfigError("build_operator: null truncation");
    HermitianOperatorMatrix A;
    A.trunc_ = std::move(trunc);
    A.h_ = h;
    A.t_ = t;
    A.theta4_ = theta_over_4;
    const auto& tr = *A.trunc_;
    const int n = tr.dimension();
    A.diag_.assign(n, 0.0);
    double scale = 0.0;
    for (int r = 0; r < n; ++r) {
        cplx d = matrix_element(H, tr.state(r), tr.state(r), h, t, theta_over_4);
        if (std::abs(d.imag()) > kHermTol * (1.0 + std::abs(d.real())))
            throw SymmetryViolation("build_operator: complex diagonal at row " +
                                    std::to_string(r));
        A.diag_[r] = d.real();
        scale = std::max(scale, std::abs(d.real()));
    }
    for (const auto& [k, poly] : H.terms()) {
        if (k[0] == 0 && k[1] == 0) continue;
        HermitianOperatorMatrix::Band band;
        band.k = k;
        band.entry.assign(n, cplx(0.0));
        bool any = false;
        for (int r = 0; r < n; ++r) {
            IVec2 mp{tr.state(r)[0] + k[0], tr.state(r)[1] + k[1]};
            if (tr.row_of(mp) < 0) continue;
            band.entry[r] = matrix_element(H, tr.state(r), mp, h, t, theta_over_4);
            if (band.entry[r] != cplx(0.0)) any = true;
        }
        if (any) A.bands_.push_back(std::move(band));
    }
    double defect = A.hermiticity_defect();
    for (const auto& b : A.bands_)
        for (const auto& e : b.entry) scale = std::max(scale, std::abs(e));
    if (defect > kHermTol * (1.0 + scale))
        throw SymmetryViolation("build_operator: hermiticity defect " + fmt_g(defect));
    return A;
}

void HermitianOperatorMatrix::apply(const std::vector<cplx>& x, std::vector<cplx>& y) const {
    const int n = dimension();
    y.assign(n, cplx(0.0));
    for (int r = 0; r < n; ++r) y[r] = diag_[r] * x[r];
    const auto& tr = *trunc_;
    for (const auto& band : bands_) {
        for (int r = 0; r < n; ++r) {
            if (band.entry[r] == cplx(0.0)) continue;
            int rp = tr.row_of({tr.state(r)[0] + band.k[0], tr.state(r)[1] + band.k[1]});
            y[rp] += band.entry[r] * x[r];
        }
    }
}

double HermitianOperatorMatrix::hermiticity_defect() const {
    // A(r', r) must equal conj(A(r, r')); the (r, r') element lives in the
    // band of -k at column r'.
    double defect = 0.0;
    const auto& tr = *trunc_;
    for (const auto& band : bands_) {
        const HermitianOperatorMatrix::Band* opp = nullptr;
        for (const auto& b2 : bands_)
            if (b2.k[0] == -band.k[0] && b2.k[1] == -band.k[1]) opp = &b2;
        for (int r = 0; r < dimension(); ++r) {
            int rp = tr.row_of({tr.state(r)[0] + band.k[0], tr.state(r)[1] + band.k[1]});
            if (rp < 0) {
                if (band.entry[r] != cplx(0.0)) defect = std::max(defect, std::abs(band.entry[r]));
                continue;
            }
            cplx other = opp ? opp->entry[rp] : cplx(0.0);
            defect = std::max(defect, std::abs(band.entry[r] - std::conj(other)));
        }
    }
    return defect;
}

bool HermitianOperatorMatrix::bands_real() const {
    double scale = 1.0;
    double im = 0.0;
    for (const auto& b : bands_)
        for (const auto& e : b.entry) {
            scale = std::max(scale, std::abs(e));
            im = std::max(im, std::abs(e.imag()));
        }
    return im <= 1e-15 * scale;
}

double SparseVec::norm() const {
    double s = 0;
    for (auto& [r, a] : entries) s += std::norm(a);
    return std::sqrt(s);
}

void SparseVec::normalize() {
    double n = norm();
    if (n == 0) throw NumericalError("SparseVec: cannot normalize zero vector");
    for (auto& [r, a] : entries) a /= n;
}

cplx overlap(const SparseVec& u, const SparseVec& v) {
    if (u.trunc_digest != v.trunc_digest)
        throw DimensionMismatch("overlap: vectors on different truncations");
    cplx s(0.0);
    std::size_t i = 0, j = 0;
    while (i < u.entries.size() && j < v.entries.size()) {
        if (u.entries[i].first < v.entries[j].first)
            ++i;
        else if (u.entries[i].first > v.entries[j].first)
            ++j;
        else {
            s += std::conj(u.entries[i].second) * v.entries[j].second;
            ++i;
            ++j;
        }
    }
    return s;
}

std::size_t EigenWindowResult::count_in(double lo, double hi) const {
    auto itlo = std::lower_bound(pairs.begin(), pairs.end(), lo,
                                 [](const EigPair& p, double v) { return p.value < v; });
    auto ithi = std::upper_bound(pairs.begin(), pairs.end(), hi,
                                 [](double v, const EigPair& p) { return v < p.value; });
    return itlo <= ithi ? std::size_t(ithi - itlo) : 0;
}

EigenWindowResult eigensolve_window(const HermitianOperatorMatrix& mat, double a, double b,
                                    double tol) {
    if (!(a <= b)) throw ConfigError("eigensolve_window: need a <= b");
    const auto& tr = mat.truncation();
    const int n = mat.dimension();

    // connected components of the coupling graph (union-find)
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& band : mat.bands())
        for (int r = 0; r < n; ++r) {
            if (band.entry[r] == cplx(0.0)) continue;
            int rp = tr.row_of({tr.state(r)[0] + band.k[0], tr.state(r)[1] + band.k[1]});
            int pa = find(r), pb = find(rp);
            if (pa != pb) parent[std::max(pa, pb)] = std::min(pa, pb);
        }
    std::map<int, std::vector<int>> comps;  // root -> rows (sorted)
    for (int r = 0; r < n; ++r) comps[find(r)].push_back(r);

    const bool realsym = mat.bands_real();
    const double shell_radius = (1.0 - kShellFrac) * tr.max_radius();

    EigenWindowResult res;
    res.a = a;
    res.b = b;
    res.h = mat.h();
    res.t = mat.t();
    res.trunc_digest = tr.digest();
    res.dimension = n;

    int comp_id = 0;
    std::vector<cplx> xfull, yfull;
    for (const auto& [root, rows] : comps) {
        const int sz = int(rows.size());
        std::vector<int> local(n, -1);
        for (int i = 0; i < sz; ++i) local[rows[i]] = i;

        Eigen::VectorXd evals;
        Eigen::MatrixXcd evecsC;
        Eigen::MatrixXd evecsR;
        if (realsym) {
            Eigen::MatrixXd A = Eigen::MatrixXd::Zero(sz, sz);
            for (int i = 0; i < sz; ++i) A(i, i) = mat.diag()[rows[i]];
            for (const auto& band : mat.bands())
                for (int i = 0; i < sz; ++i) {
                    int r = rows[i];
                    if (band.entry[r] == cplx(0.0)) continue;
                    int rp = tr.row_of({tr.state(r)[0] + band.k[0], tr.state(r)[1] + band.k[1]});
                    A(local[rp], i) = band.entry[r].real();
                }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
            if (es.info() != Eigen::Success)
                throw SolverFailure("eigensolve_window: dense solver failed");
            evals = es.eigenvalues();
            evecsR = es.eigenvectors();
        } else {
            Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(sz, sz);
            for (int i = 0; i < sz; ++i) A(i, i) = mat.diag()[rows[i]];
            for (const auto& band : mat.bands())
                for (int i = 0; i < sz; ++i) {
                    int r = rows[i];
                    if (band.entry[r] == cplx(0.0)) continue;
                    int rp = tr.row_of({tr.state(r)[0] + band.k[0], tr.state(r)[1] + band.k[1]});
                    A(local[rp], i) = band.entry[r];
                }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A);
            if (es.info() != Eigen::Success)
                throw SolverFailure("eigensolve_window: dense solver failed");
            evals = es.eigenvalues();
            evecsC = es.eigenvectors();
        }

        // orthonormality: exhaustive for small blocks, sampled for large
        {
            const int check_n = std::min(sz, 48);
            double worst = 0;
            for (int i = 0; i < check_n; ++i)
                for (int j = i; j < check_n; ++j) {
                    cplx g(0.0);
                    for (int r = 0; r < sz; ++r)
                        g += realsym ? cplx(evecsR(r, i) * evecsR(r, j))
                                     : std::conj(evecsC(r, i)) * evecsC(r, j);
                    worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
                }
            if (worst > 1e-10)
                throw SolverFailure("eigensolve_window: orthonormality defect " + fmt_g(worst));
        }

        for (int e = 0; e < sz; ++e) {
            double val = evals(e);
            if (val < a || val > b) continue;
            EigPair pair;
            pair.value = val;
            pair.component = comp_id;
            pair.vec.trunc_digest = tr.digest();
            pair.vec.entries.reserve(sz);
            double shell = 0;
            for (int r = 0; r < sz; ++r) {
                cplx amp = realsym ? cplx(evecsR(r, e)) : evecsC(r, e);
                if (amp == cplx(0.0)) continue;
                pair.vec.entries.emplace_back(rows[r], amp);
                if (norm(tr.action(rows[r])) >= shell_radius) shell += std::norm(amp);
            }
            pair.shell_mass = shell;
            res.pairs.push_back(std::move(pair));
        }
        ++comp_id;
    }

    std::sort(res.pairs.begin(), res.pairs.end(), [](const EigPair& x, const EigPair& y) {
        return std::tie(x.value, x.component) < std::tie(y.value, y.component);
    });

    double scale = 1.0;
    for (const auto& p : res.pairs) scale = std::max(scale, std::abs(p.value));
    for (auto& p : res.pairs) {
        p.residual = residual_norm(mat, p.vec, p.value);
        if (p.residual > std::max(tol, 1e-12) * scale * 100)
            throw SolverFailure("eigensolve_window: residual " + fmt_g(p.residual) +
                                " at E = " + fmt_g(p.value));
        if (p.shell_mass > kShellMassLimit)
            throw BoundaryContamination(
                "eigensolve_window: shell mass " + fmt_g(p.shell_mass) + " at E = " +
                fmt_g(p.value) + "; enlarge the truncation");
    }
    return res;
}

QuasimodeVector build_quasimode(const FourierPolyHamiltonian& H, const IVec2& m, double t,
                                double h, int k_trunc,
                                std::shared_ptr<const BasisTruncation> trunc,
                                Vec2 theta_over_4, double divisor_tol) {
    if (!trunc) throw ConfigError("build_quasimode: null truncation");
    const auto& tr = *trunc;
    int row_m = tr.row_of(m);
    if (row_m < 0) throw OutOfDomain("build_quasimode: m outside the truncation");
    Vec2 Im{h * (m[0] + theta_over_4[0]), h * (m[1] + theta_over_4[1])};
    double h0m = H.h0().eval_real(Im[0], Im[1], 0);
    double tol_abs = divisor_tol * std::max(1.0, std::abs(h0m));

    QuasimodeVector qv;
    qv.m = m;
    qv.order_t = 1;
    qv.v.trunc_digest = tr.digest();
    qv.v.entries.emplace_back(row_m, cplx(1.0));
    for (const auto& [k, poly] : H.terms()) {
        if (k[0] == 0 && k[1] == 0) continue;
        if (norm(k) > double(k_trunc) + 1e-9) continue;
        TriPoly cp = poly.t_coefficient(1);
        if (cp.is_zero()) continue;
        IVec2 mk{m[0] + k[0], m[1] + k[1]};
        Vec2 Imk{h * (mk[0] + theta_over_4[0]), h * (mk[1] + theta_over_4[1])};
        double denom = h0m - H.h0().eval_real(Imk[0], Imk[1], 0);
        if (std::abs(denom) < tol_abs)
            throw NearDegeneracy("build_quasimode: unperturbed gap " + fmt_g(denom) +
                                     " below divisor_tol for coupling k",
                                 {k[0], k[1]});
        int row_k = tr.row_of(mk);
        if (row_k < 0) continue;  // coupling leaves the truncation; margin absorbs it
        double mid1 = h * (m[0] + 0.5 * k[0] + theta_over_4[0]);
        double mid2 = h * (m[1] + 0.5 * k[1] + theta_over_4[1]);
        cplx num = cp.eval(mid1, mid2, 0);
        qv.v.entries.emplace_back(row_k, t * num / denom);
    }
    std::sort(qv.v.entries.begin(), qv.v.entries.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    qv.v.normalize();
    return qv;
}

double residual_norm(const HermitianOperatorMatrix& mat, const SparseVec& v, double mu) {
    if (v.trunc_digest != mat.truncation().digest())
        throw DimensionMismatch("residual_norm: vector on a different truncation");
    const auto& tr = mat.truncation();
    // (A - mu) v restricted to the reach of v's support
    std::map<int, cplx> y;
    for (const auto& [r, amp] : v.entries) {
        y[r] += (mat.diag()[r] - mu) * amp;
        for (const auto& band : mat.bands()) {
            if (band.entry[r] == cplx(0.0)) continue;
            int rp = tr.row_of({tr.state(r)[0] + band.k[0], tr.state(r)[1] + band.k[1]});
            y[rp] += band.entry[r] * amp;
        }
    }
    double s = 0;
    for (const auto& [r, val] : y) s += std::norm(val);
    return std::sqrt(s);
}

void EigenWindowResult::save_binary(const std::string& path) const {
    std::ofstream out(path + ".tmp", std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    const char magic[4] = {'K', 'E', 'I', 'G'};
    std::uint32_t version = 1;
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&h), 8);
    out.write(reinterpret_cast<const char*>(&t), 8);
    out.write(reinterpret_cast<const char*>(&a), 8);
    out.write(reinterpret_cast<const char*>(&b), 8);
    std::uint64_t dim = std::uint64_t(dimension), td = trunc_digest,
                  np = std::uint64_t(pairs.size());
    out.write(reinterpret_cast<const char*>(&dim), 8);
    out.write(reinterpret_cast<const char*>(&td), 8);
    out.write(reinterpret_cast<const char*>(&np), 8);
    for (const auto& p : pairs) {
        out.write(reinterpret_cast<const char*>(&p.value), 8);
        out.write(reinterpret_cast<const char*>(&p.residual), 8);
        out.write(reinterpret_cast<const char*>(&p.shell_mass), 8);
        std::uint32_t comp = std::uint32_t(p.component), ne = std::uint32_t(p.vec.entries.size());
        out.write(reinterpret_cast<const char*>(&comp), 4);
        out.write(reinterpret_cast<const char*>(&ne), 4);
        for (const auto& [r, amp] : p.vec.entries) {
            std::uint32_t row = std::uint32_t(r);
            double re = amp.real(), im = amp.imag();
            out.write(reinterpret_cast<const char*>(&row), 4);
            out.write(reinterpret_cast<const char*>(&re), 8);
            out.write(reinterpret_cast<const char*>(&im), 8);
        }
    }
    out.close();
    if (std::rename((path + ".tmp").c_str(), path.c_str()) != 0)
        throw ConfigError("cannot finalize " + path);
}

EigenWindowResult EigenWindowResult::load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open for reading: " + path);
    char magic[4];
    std::uint32_t version = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    if (std::string(magic, 4) != "KEIG" || version != 1)
        throw ConfigError("bad eigen container: " + path);
    EigenWindowResult res;
    std::uint64_t dim = 0, td = 0, np = 0;
    in.read(reinterpret_cast<char*>(&res.h), 8);
    in.read(reinterpret_cast<char*>(&res.t), 8);
    in.read(reinterpret_cast<char*>(&res.a), 8);
    in.read(reinterpret_cast<char*>(&res.b), 8);
    in.read(reinterpret_cast<char*>(&dim), 8);
    in.read(reinterpret_cast<char*>(&td), 8);
    in.read(reinterpret_cast<char*>(&np), 8);
    res.dimension = int(dim);
    res.trunc_digest = td;
    res.pairs.resize(np);
    for (auto& p : res.pairs) {
        std::uint32_t comp = 0, ne = 0;
        in.read(reinterpret_cast<char*>(&p.value), 8);
        in.read(reinterpret_cast<char*>(&p.residual), 8);
        in.read(reinterpret_cast<char*>(&p.shell_mass), 8);
        in.read(reinterpret_cast<char*>(&comp), 4);
        in.read(reinterpret_cast<char*>(&ne), 4);
        p.component = int(comp);
        p.vec.trunc_digest = td;
        p.vec.entries.resize(ne);
        for (auto& [r, amp] : p.vec.entries) {
            std::uint32_t row = 0;
            double re = 0, im = 0;
            in.read(reinterpret_cast<char*>(&row), 4);
            in.read(reinterpret_cast<char*>(&re), 8);
            in.read(reinterpret_cast<char*>(&im), 8);
            r = int(row);
            amp = cplx(re, im);
        }
    }
    if (!in) throw ConfigError("truncated eigen container: " + path);
    return res;
}

void EigenWindowResult::save_values_csv(const std::string& path) const {
    CsvWriter w(path);
    w.header("E,residual,shell_mass,component");
    for (const auto& p : pairs) {
        w.row_begin();
        w.col(p.value).col(p.residual).col(p.shell_mass).col(p.component);
        w.row_end();
    }
}

}  // namespace kam
