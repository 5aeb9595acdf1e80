#include "kam/poly.hpp"

#include <algorithm>

namespace kam {

cplx TriPoly::eval(double I1, double I2, double t) const {
    // Horner in t innermost, then I2, then I1.
    cplx acc1(0.0);
    for (int a = d1_; a >= 0; --a) {
        cplx acc2(0.0);
        for (int b = d2_; b >= 0; --b) {
            cplx acct(0.0);
            for (int c = dt_; c >= 0; --c) acct = acct * t + c_[index(a, b, c)];
            acc2 = acc2 * I2 + acct;
        }
        acc1 = acc1 * I1 + acc2;
    }
    return acc1;
}

void TriPoly::grow(int a, int b, int c) {
    if (a <= d1_ && b <= d2_ && c <= dt_) return;
    int n1 = std::max(a, d1_), n2 = std::max(b, d2_), nt = std::max(c, dt_);
    TriPoly bigger(n1, n2, nt);
    for (int i = 0; i <= d1_; ++i)
        for (int j = 0; j <= d2_; ++j)
            for (int k = 0; k <= dt_; ++k) bigger.c_[bigger.index(i, j, k)] = c_[index(i, j, k)];
    *this = std::move(bigger);
}

TriPoly TriPoly::deriv_I1() const {
    TriPoly r(std::max(d1_ - 1, 0), d2_, dt_);
    for (int a = 1; a <= d1_; ++a)
        for (int b = 0; b <= d2_; ++b)
            for (int c = 0; c <= dt_; ++c)
                r.c_[r.index(a - 1, b, c)] = double(a) * c_[index(a, b, c)];
    return r;
}

TriPoly TriPoly::deriv_I2() const {
    TriPoly r(d1_, std::max(d2_ - 1, 0), dt_);
    for (int a = 0; a <= d1_; ++a)
        for (int b = 1; b <= d2_; ++b)
            for (int c = 0; c <= dt_; ++c)
                r.c_[r.index(a, b - 1, c)] = double(b) * c_[index(a, b, c)];
    return r;
}

TriPoly TriPoly::deriv_t() const {
    TriPoly r(d1_, d2_, std::max(dt_ - 1, 0));
    for (int a = 0; a <= d1_; ++a)
        for (int b = 0; b <= d2_; ++b)
            for (int c = 1; c <= dt_; ++c)
                r.c_[r.index(a, b, c - 1)] = double(c) * c_[index(a, b, c)];
    return r;
}

TriPoly TriPoly::t_coefficient(int j) const {
    TriPoly r(d1_, d2_, 0);
    if (j > dt_) return r;
    for (int a = 0; a <= d1_; ++a)
        for (int b = 0; b <= d2_; ++b) r.c_[r.index(a, b, 0)] = c_[index(a, b, j)];
    return r;
}

TriPoly TriPoly::conjugate() const {
    TriPoly r(d1_, d2_, dt_);
    for (std::size_t i = 0; i < c_.size(); ++i) r.c_[i] = std::conj(c_[i]);
    return r;
}

TriPoly TriPoly::operator+(const TriPoly& o) const {
    TriPoly r(std::max(d1_, o.d1_), std::max(d2_, o.d2_), std::max(dt_, o.dt_));
    for_each([&](int a, int b, int c, cplx v) { r.add_term(a, b, c, v); });
    o.for_each([&](int a, int b, int c, cplx v) { r.add_term(a, b, c, v); });
    return r;
}

TriPoly TriPoly::operator-(const TriPoly& o) const { return *this + o.scaled(cplx(-1.0)); }

TriPoly TriPoly::scaled(cplx s) const {
    TriPoly r = *this;
    for (auto& v : r.c_) v *= s;
    return r;
}

double TriPoly::max_abs_coeff() const {
    double m = 0.0;
    for (const auto& v : c_) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace kam
