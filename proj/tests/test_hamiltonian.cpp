#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "kam/hamiltonian.hpp"
#include "test_oracles.hpp"

using namespace kam;
using doctest::Approx;

namespace {

FourierPolyHamiltonian make_synthetic_osc_only() {
    // purely oscillatory perturbation: H = I1^2 + I2^2 + t sin(th1+th2) I1
    std::map<IVec2, TriPoly> terms;
    TriPoly c0;
    c0.add_term(2, 0, 0, 1.0);
    c0.add_term(0, 2, 0, 1.0);
    TriPoly c11;  // sin = (e^{i th} - e^{-i th})/(2i): c_{(1,1)} = t I1/(2i)
    c11.add_term(1, 0, 1, cplx(0.0, -0.5));
    ActionDomain dom;
    dom.box = {{0.1, 0.1}, {1.0, 1.0}};
    std::map<IVec2, TriPoly> t2;
    t2[{0, 0}] = c0;
    t2[{1, 1}] = c11;
    t2[{-1, -1}] = c11.conjugate();
    return FourierPolyHamiltonian(t2, dom, "osc_only");
}

}  // namespace

TEST_CASE("flat torus eval_symbol examples") {
    auto H = FourierPolyHamiltonian::flat_torus();
    CHECK(H.eval_symbol({0, 0}, {0.3, 0.4}, 0.0) == Approx(0.25).epsilon(1e-14));
    // oracle cross-check (term sum vs trapezoid reconstruction of cos^2):
    // value = |I|^2 + t*cos^2(0)*I1*I2 = 0.2512
    CHECK(H.eval_symbol({0, 0}, {0.3, 0.4}, 0.01) == Approx(0.2512).epsilon(1e-13));
    CHECK(H.eval_symbol({M_PI / 2, 0}, {0.3, 0.4}, 0.01) == Approx(0.25).epsilon(1e-13));
    // full symbol agrees with the cos^2 closed form on a grid
    for (int a = 0; a < 7; ++a) {
        double th = 2 * M_PI * a / 7;
        double expect = 0.25 + 0.02 * std::cos(th) * std::cos(th) * 0.12;
        CHECK(H.eval_symbol({th, 1.1}, {0.3, 0.4}, 0.02) == Approx(expect).epsilon(1e-13));
    }
}

TEST_CASE("flat torus builtin term data") {
    auto H = FourierPolyHamiltonian::flat_torus();
    CHECK(H.eval_symbol({0, 0}, {1, 1}, 1.0) == Approx(3.0));
    const TriPoly* c2 = H.term({2, 0});
    REQUIRE(c2 != nullptr);
    CHECK(c2->eval(0.3, 0.4, 0.01).real() == Approx(0.0003).epsilon(1e-13));
    CHECK(c2->eval(0.3, 0.4, 0.01).imag() == Approx(0.0));
    // t=0 equals |I|^2 for all theta
    for (int a = 0; a < 5; ++a)
        CHECK(H.eval_symbol({1.3 * a, 0.4 * a}, {0.6, 0.2}, 0.0) == Approx(0.4).epsilon(1e-13));
}

TEST_CASE("frequency map") {
    auto H = FourierPolyHamiltonian::flat_torus();
    Vec2 w0 = H.frequency_map({0.3, 0.4}, 0.0);
    CHECK(w0[0] == Approx(0.6).epsilon(1e-14));
    CHECK(w0[1] == Approx(0.8).epsilon(1e-14));
    Vec2 w = H.frequency_map({0.3, 0.4}, 0.01);
    CHECK(w[0] == Approx(0.602).epsilon(1e-14));
    CHECK(w[1] == Approx(0.8015).epsilon(1e-14));

    // constant H0: frequency vanishes
    std::map<IVec2, TriPoly> terms;
    terms[{0, 0}] = TriPoly::constant(5.0);
    ActionDomain dom;
    dom.box = {{0, 0}, {1, 1}};
    FourierPolyHamiltonian Hc(terms, dom, "const");
    Vec2 wc = Hc.frequency_map({0.5, 0.5}, 0.3);
    CHECK(wc[0] == 0.0);
    CHECK(wc[1] == 0.0);
}

TEST_CASE("frequency map agrees with finite differences of the angle average") {
    auto H = FourierPolyHamiltonian::flat_torus();
    const double e = 1e-5, t = 0.07;
    std::mt19937_64 eng(3);
    auto u = [&] { return 0.1 + 0.9 * double(eng() >> 11) * 0x1.0p-53; };
    for (int trial = 0; trial < 10; ++trial) {
        Vec2 I{u(), u()};
        auto favg = [&](double x, double y) {
            return kam::testing::angle_average(
                [&](double a, double b) { return H.eval_symbol({a, b}, {x, y}, t); }, 32);
        };
        double fd1 = (favg(I[0] + e, I[1]) - favg(I[0] - e, I[1])) / (2 * e);
        double fd2 = (favg(I[0], I[1] + e) - favg(I[0], I[1] - e)) / (2 * e);
        Vec2 w = H.frequency_map(I, t);
        CHECK(w[0] == Approx(fd1).epsilon(1e-6));
        CHECK(w[1] == Approx(fd2).epsilon(1e-6));
    }
}

TEST_CASE("angle average of dt H") {
    auto H = FourierPolyHamiltonian::flat_torus();
    CHECK(H.angle_average_dtH({0.3, 0.4}) == Approx(0.06).epsilon(1e-14));
    CHECK(H.angle_average_dtH({0.0, 0.4}) == 0.0);
    auto Hosc = make_synthetic_osc_only();
    CHECK(Hosc.angle_average_dtH({0.3, 0.4}) == 0.0);
    CHECK(Hosc.angle_average_dtH({0.9, 0.2}) == 0.0);

    // quadrature oracle: (2pi)^-2 int dt_H dtheta via central t-difference
    const double e = 1e-6;
    double quad = kam::testing::angle_average(
        [&](double a, double b) {
            return (H.eval_symbol({a, b}, {0.3, 0.4}, e) -
                    H.eval_symbol({a, b}, {0.3, 0.4}, -e)) /
                   (2 * e);
        },
        64);
    CHECK(H.angle_average_dtH({0.3, 0.4}) == Approx(quad).epsilon(1e-8));
}

TEST_CASE("transversality determinant") {
    auto H = FourierPolyHamiltonian::flat_torus();
    CHECK(H.transversality_det({0.5, 0.5}) == Approx(0.0).scale(1));
    CHECK(H.transversality_det({0.6, 0.3}) == Approx(0.27).epsilon(1e-13));
    CHECK(H.transversality_det({0.3, 0.4}) == Approx(-0.07).epsilon(1e-13));
    // equals I1^2 - I2^2 on a grid, and matches an FD-gradient oracle
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) {
            Vec2 I{0.1 + 0.1 * i, 0.1 + 0.1 * j};
            CHECK(H.transversality_det(I) ==
                  Approx(I[0] * I[0] - I[1] * I[1]).epsilon(1e-12).scale(1));
        }
    Vec2 I{0.47, 0.81};
    const double e = 1e-5;
    auto h0 = [&](double x, double y) { return H.h0().eval_real(x, y, 0); };
    auto qb = [&](double x, double y) { return H.angle_average_dtH({x, y}); };
    double a11 = (h0(I[0] + e, I[1]) - h0(I[0] - e, I[1])) / (2 * e);
    double a12 = (h0(I[0], I[1] + e) - h0(I[0], I[1] - e)) / (2 * e);
    double a21 = (qb(I[0] + e, I[1]) - qb(I[0] - e, I[1])) / (2 * e);
    double a22 = (qb(I[0], I[1] + e) - qb(I[0], I[1] - e)) / (2 * e);
    CHECK(H.transversality_det(I) == Approx(a11 * a22 - a12 * a21).epsilon(1e-6));
}

TEST_CASE("hessian determinant") {
    auto H = FourierPolyHamiltonian::flat_torus();
    CHECK(H.hessian_det({0.123, 0.9}) == Approx(4.0));
    CHECK(H.hessian_det({0.55, 0.31}) == Approx(4.0));

    std::map<IVec2, TriPoly> t1;
    TriPoly c;
    c.add_term(2, 0, 0, 1.0);  // I1^2 only: degenerate
    t1[{0, 0}] = c;
    ActionDomain dom;
    dom.box = {{0, 0}, {1, 1}};
    CHECK(FourierPolyHamiltonian(t1, dom, "deg").hessian_det({0.4, 0.2}) == 0.0);

    std::map<IVec2, TriPoly> t2;
    TriPoly c2;
    c2.add_term(2, 0, 0, 1.0);
    c2.add_term(0, 2, 0, 1.0);
    c2.add_term(3, 0, 0, 1.0);  // + I1^3
    t2[{0, 0}] = c2;
    FourierPolyHamiltonian Hc(t2, dom, "cubic");
    CHECK(Hc.hessian_det({0.1, 0.0}) == Approx(5.2).epsilon(1e-13));
    // second-difference oracle
    auto f = [&](double x) { return Hc.h0().eval_real(x, 0.0, 0); };
    double d2 = kam::testing::fd_second(f, 0.1, 1e-4);
    CHECK(Hc.hessian_det({0.1, 0.0}) == Approx(d2 * 2.0).epsilon(1e-6));
}

TEST_CASE("symmetry invariant on a 17^3 sample grid") {
    auto check_H = [](const FourierPolyHamiltonian& H) {
        for (int a = 0; a < 17; ++a)
            for (int b = 0; b < 17; ++b)
                for (int c = 0; c < 17; ++c) {
                    Vec2 th{2 * M_PI * a / 17, 2 * M_PI * ((a * 7 + b) % 17) / 17};
                    Vec2 I{0.1 + 0.9 * b / 16.0, 0.1 + 0.9 * ((b * 5 + c) % 17) / 16.0};
                    double t = 0.2 * c / 16.0;
                    CHECK_NOTHROW(H.eval_symbol(th, I, t));  // throws beyond 1e-12 imag
                }
    };
    check_H(FourierPolyHamiltonian::flat_torus());
    check_H(make_synthetic_osc_only());
}

TEST_CASE("serialization round trip and loader rejection") {
    auto H = FourierPolyHamiltonian::flat_torus(0.7);
    auto H2 = FourierPolyHamiltonian::from_json(H.to_json());
    CHECK(H2.name() == "flat_torus");
    CHECK(H2.domain().below_diagonal);
    for (int i = 0; i < 5; ++i) {
        Vec2 th{0.3 * i, 1.1}, I{0.2 + 0.1 * i, 0.35};
        CHECK(H.eval_symbol(th, I, 0.05) == Approx(H2.eval_symbol(th, I, 0.05)).epsilon(1e-15));
    }

    // asymmetric term map must be rejected
    std::string bad = R"({
      "name": "bad", "domain": {"lo": [0,0], "hi": [1,1]},
      "terms": [
        {"k": [0,0], "coeffs": [[2,0,0,1.0,0.0]]},
        {"k": [1,0], "coeffs": [[0,0,1,1.0,0.0]]}
      ]})";
    CHECK_THROWS_AS(FourierPolyHamiltonian::from_json(bad), SymmetryViolation);

    // non-integrable at t=0 rejected
    std::string bad2 = R"({
      "name": "bad2", "domain": {"lo": [0,0], "hi": [1,1]},
      "terms": [
        {"k": [0,0], "coeffs": [[2,0,0,1.0,0.0]]},
        {"k": [1,0], "coeffs": [[0,0,0,1.0,0.0]]},
        {"k": [-1,0], "coeffs": [[0,0,0,1.0,0.0]]}
      ]})";
    CHECK_THROWS_AS(FourierPolyHamiltonian::from_json(bad2), ConfigError);
}

TEST_CASE("domain measure of the one-sided default") {
    auto H = FourierPolyHamiltonian::flat_torus();
    CHECK(H.domain().measure() == Approx(0.5 * 0.9 * 0.9).epsilon(1e-12));
    CHECK(H.domain().contains({0.8, 0.1}));
    CHECK(!H.domain().contains({0.1, 0.8}));
    CHECK(!H.domain().contains({0.5, 0.5}));  // strictly below the diagonal
}
