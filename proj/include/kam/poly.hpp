#ifndef KAM_POLY_HPP
#define KAM_POLY_HPP

#include <complex>
#include <vector>

#include "kam/geometry.hpp"

namespace kam {

using cplx = std::complex<double>;

// Polynomial in (I1, I2, t) with complex coefficients, stored as a dense
// coefficient table indexed by (deg_I1, deg_I2, deg_t).
class TriPoly {
  public:
    TriPoly() : d1_(0), d2_(0), dt_(0), c_(1, cplx(0.0)) {}
    TriPoly(int d1, int d2, int dt)
        : d1_(d1), d2_(d2), dt_(dt),
          c_(std::size_t(d1 + 1) * (d2 + 1) * (dt + 1), cplx(0.0)) {}

    static TriPoly constant(cplx v) {
        TriPoly p;
        p.set(0, 0, 0, v);
        return p;
    }

    int deg1() const { return d1_; }
    int deg2() const { return d2_; }
    int degt() const { return dt_; }

    cplx get(int a, int b, int c) const {
        if (a > d1_ || b > d2_ || c > dt_) return cplx(0.0);
        return c_[index(a, b, c)];
    }
    void set(int a, int b, int c, cplx v) {
        grow(a, b, c);
        c_[index(a, b, c)] = v;
    }
    void add_term(int a, int b, int c, cplx v) {
        grow(a, b, c);
        c_[index(a, b, c)] += v;
    }

    cplx eval(double I1, double I2, double t) const;
    double eval_real(double I1, double I2, double t) const { return eval(I1, I2, t).real(); }

    TriPoly deriv_I1() const;
    TriPoly deriv_I2() const;
    TriPoly deriv_t() const;
    // Coefficient of t^j, as a polynomial in (I1, I2) alone.
    TriPoly t_coefficient(int j) const;
    TriPoly conjugate() const;

    TriPoly operator+(const TriPoly& o) const;
    TriPoly operator-(const TriPoly& o) const;
    TriPoly scaled(cplx s) const;

    double max_abs_coeff() const;
    bool is_zero(double tol = 0.0) const { return max_abs_coeff() <= tol; }

    // Enumerate nonzero coefficients as (a, b, c, value).
    template <typename F>
    void for_each(F&& f) const {
        for (int a = 0; a <= d1_; ++a)
            for (int b = 0; b <= d2_; ++b)
                for (int c = 0; c <= dt_; ++c) {
                    cplx v = c_[index(a, b, c)];
                    if (v != cplx(0.0)) f(a, b, c, v);
                }
    }

  private:
    std::size_t index(int a, int b, int c) const {
        return (std::size_t(a) * (d2_ + 1) + b) * (dt_ + 1) + c;
    }
    void grow(int a, int b, int c);

    int d1_, d2_, dt_;
    std::vector<cplx> c_;
};

}  // namespace kam

#endif
