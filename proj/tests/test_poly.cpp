#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "kam/poly.hpp"

using namespace kam;

TEST_CASE("evaluation and exact differentiation") {
    // p = 2 I1^2 + 3 I1 I2 t + (1+i) t^2
    TriPoly p;
    p.add_term(2, 0, 0, 2.0);
    p.add_term(1, 1, 1, 3.0);
    p.add_term(0, 0, 2, cplx(1.0, 1.0));
    CHECK(p.eval(0.5, 2.0, 1.0) == cplx(2 * 0.25 + 3.0 * 0.5 * 2.0 + 1.0, 1.0));

    TriPoly d1 = p.deriv_I1();
    CHECK(d1.eval(0.5, 2.0, 1.0) == cplx(4 * 0.5 + 3 * 2.0, 0.0));
    TriPoly dt = p.deriv_t();
    CHECK(dt.eval(0.5, 2.0, 1.0) == cplx(3.0 * 0.5 * 2.0 + 2.0, 2.0));
    CHECK(p.deriv_I2().eval(0.5, 2.0, 1.0) == cplx(1.5, 0.0));
}

TEST_CASE("t slices") {
    TriPoly p;
    p.add_term(1, 0, 0, 1.0);   // I1
    p.add_term(0, 1, 1, -2.0);  // -2 I2 t
    TriPoly s0 = p.t_coefficient(0);
    TriPoly s1 = p.t_coefficient(1);
    CHECK(s0.eval(3.0, 5.0, 99.0) == cplx(3.0));
    CHECK(s1.eval(3.0, 5.0, 99.0) == cplx(-10.0));
    CHECK(p.t_coefficient(2).is_zero());
}

TEST_CASE("arithmetic and conjugation") {
    TriPoly a, b;
    a.add_term(1, 0, 0, cplx(0.0, 2.0));
    b.add_term(1, 0, 0, cplx(1.0, -2.0));
    TriPoly s = a + b;
    CHECK(s.eval(2.0, 0.0, 0.0) == cplx(2.0, 0.0));
    CHECK(a.conjugate().eval(2.0, 0.0, 0.0) == cplx(0.0, -4.0));
    CHECK((a - a).is_zero());
    CHECK(a.scaled(cplx(0.0, 1.0)).eval(1.0, 0.0, 0.0) == cplx(-2.0, 0.0));
}

TEST_CASE("random polynomial identity d/dI1 of I1^a matches power rule") {
    std::mt19937_64 eng(7);
    auto u = [&] { return double(eng() >> 11) * 0x1.0p-53 * 2 - 1; };
    for (int trial = 0; trial < 20; ++trial) {
        TriPoly p;
        for (int a = 0; a <= 3; ++a)
            for (int b = 0; b <= 3; ++b)
                for (int c = 0; c <= 2; ++c) p.add_term(a, b, c, cplx(u(), u()));
        double x = u(), y = u(), t = u();
        // compare exact derivative against complex-step-free central FD
        double e = 1e-6;
        cplx fd = (p.eval(x + e, y, t) - p.eval(x - e, y, t)) / (2 * e);
        cplx ex = p.deriv_I1().eval(x, y, t);
        CHECK(std::abs(fd - ex) < 1e-8 * (1 + std::abs(ex)));
    }
}
