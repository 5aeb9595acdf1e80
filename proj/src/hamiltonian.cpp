#include "kam/hamiltonian.hpp"

#include <cmath>

#include "json.hpp"
#include "kam/io_util.hpp"

namespace kam {

namespace {
constexpr double kSymTol = 1e-12;
}

FourierPolyHamiltonian::FourierPolyHamiltonian(std::map<IVec2, TriPoly> terms,
                                               ActionDomain domain, std::string name)
    : terms_(std::move(terms)), domain_(domain), name_(std::move(name)) {
    validate_and_cache();
}

void FourierPolyHamiltonian::validate_and_cache() {
    domain_.box.validate();
    double scale = 0.0;
    for (const auto& [k, p] : terms_) scale = std::max(scale, p.max_abs_coeff());
    for (const auto& [k, p] : terms_) {
        IVec2 mk{-k[0], -k[1]};
        auto it = terms_.find(mk);
        if (it == terms_.end())
            throw SymmetryViolation("term map not closed under k -> -k at k=(" +
                                    std::to_string(k[0]) + "," + std::to_string(k[1]) + ")");
        if ((p - it->second.conjugate()).max_abs_coeff() > kSymTol * (1.0 + scale))
            throw SymmetryViolation("Hermitian symmetry c_{-k} = conj(c_k) fails at k=(" +
                                    std::to_string(k[0]) + "," + std::to_string(k[1]) + ")");
        if (!(k[0] == 0 && k[1] == 0)) {
            if (p.t_coefficient(0).max_abs_coeff() > kSymTol * (1.0 + scale))
                throw ConfigError("not integrable at t=0: c_k(I,0) != 0 for k=(" +
                                  std::to_string(k[0]) + "," + std::to_string(k[1]) + ")");
        }
    }
    TriPoly c0;
    auto it = terms_.find(IVec2{0, 0});
    if (it != terms_.end()) c0 = it->second;
    h0_ = c0.t_coefficient(0);
    qbar_ = c0.t_coefficient(1);
    dh0_[0] = h0_.deriv_I1();
    dh0_[1] = h0_.deriv_I2();
    dqbar_[0] = qbar_.deriv_I1();
    dqbar_[1] = qbar_.deriv_I2();
    hess_h0_[0] = dh0_[0].deriv_I1();
    hess_h0_[1] = dh0_[0].deriv_I2();
    hess_h0_[2] = dh0_[1].deriv_I2();
    hess_qbar_[0] = dqbar_[0].deriv_I1();
    hess_qbar_[1] = dqbar_[0].deriv_I2();
    hess_qbar_[2] = dqbar_[1].deriv_I2();
}

const TriPoly* FourierPolyHamiltonian::term(const IVec2& k) const {
    auto it = terms_.find(k);
    return it == terms_.end() ? nullptr : &it->second;
}

int FourierPolyHamiltonian::max_wavenumber() const {
    int m = 0;
    for (const auto& [k, p] : terms_) m = std::max({m, std::abs(k[0]), std::abs(k[1])});
    return m;
}

double FourierPolyHamiltonian::eval_symbol(const Vec2& theta, const Vec2& I, double t) const {
    cplx acc(0.0);
    for (const auto& [k, p] : terms_) {
        double phase = k[0] * theta[0] + k[1] * theta[1];
        acc += p.eval(I[0], I[1], t) * std::polar(1.0, phase);
    }
    if (std::abs(acc.imag()) > kSymTol * (1.0 + std::abs(acc.real())))
        throw SymmetryViolation("eval_symbol: residual imaginary part " + fmt_g(acc.imag()));
    return acc.real();
}

Vec2 FourierPolyHamiltonian::frequency_map(const Vec2& I, double t) const {
    return {dh0_[0].eval_real(I[0], I[1], 0) + t * dqbar_[0].eval_real(I[0], I[1], 0),
            dh0_[1].eval_real(I[0], I[1], 0) + t * dqbar_[1].eval_real(I[0], I[1], 0)};
}

double FourierPolyHamiltonian::angle_average_dtH(const Vec2& I) const {
    return qbar_.eval_real(I[0], I[1], 0);
}

double FourierPolyHamiltonian::transversality_det(const Vec2& I) const {
    Vec2 a = grad_h0(I), b = grad_qbar(I);
    return a[0] * b[1] - a[1] * b[0];
}

double FourierPolyHamiltonian::hessian_det(const Vec2& I) const {
    auto h = hess_h0(I);
    return h[0] * h[2] - h[1] * h[1];
}

Vec2 FourierPolyHamiltonian::grad_h0(const Vec2& I) const {
    return {dh0_[0].eval_real(I[0], I[1], 0), dh0_[1].eval_real(I[0], I[1], 0)};
}

Vec2 FourierPolyHamiltonian::grad_qbar(const Vec2& I) const {
    return {dqbar_[0].eval_real(I[0], I[1], 0), dqbar_[1].eval_real(I[0], I[1], 0)};
}

std::array<double, 3> FourierPolyHamiltonian::hess_h0(const Vec2& I) const {
    return {hess_h0_[0].eval_real(I[0], I[1], 0), hess_h0_[1].eval_real(I[0], I[1], 0),
            hess_h0_[2].eval_real(I[0], I[1], 0)};
}

std::array<double, 3> FourierPolyHamiltonian::hess_k0(const Vec2& I, double t) const {
    auto a = hess_h0(I);
    return {a[0] + t * hess_qbar_[0].eval_real(I[0], I[1], 0),
            a[1] + t * hess_qbar_[1].eval_real(I[0], I[1], 0),
            a[2] + t * hess_qbar_[2].eval_real(I[0], I[1], 0)};
}

std::map<IVec2, TriPoly> FourierPolyHamiltonian::dt_coefficients() const {
    std::map<IVec2, TriPoly> out;
    for (const auto& [k, p] : terms_) {
        if (k[0] == 0 && k[1] == 0) continue;
        TriPoly q = p.t_coefficient(1);
        if (!q.is_zero()) out[k] = q;
    }
    return out;
}

std::string FourierPolyHamiltonian::to_json() const {
    nlohmann::ordered_json j;
    j["name"] = name_;
    j["domain"] = {{"lo", {domain_.box.lo[0], domain_.box.lo[1]}},
                   {"hi", {domain_.box.hi[0], domain_.box.hi[1]}},
                   {"below_diagonal", domain_.below_diagonal}};
    auto& arr = j["terms"] = nlohmann::ordered_json::array();
    for (const auto& [k, p] : terms_) {
        nlohmann::ordered_json tj;
        tj["k"] = {k[0], k[1]};
        auto& cj = tj["coeffs"] = nlohmann::ordered_json::array();
        p.for_each([&](int a, int b, int c, cplx v) {
            cj.push_back({a, b, c, v.real(), v.imag()});
        });
        arr.push_back(tj);
    }
    return j.dump(2);
}

FourierPolyHamiltonian FourierPolyHamiltonian::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("hamiltonian json parse error: ") + e.what());
    }
    ActionDomain dom;
    dom.box.lo = {j.at("domain").at("lo").at(0), j.at("domain").at("lo").at(1)};
    dom.box.hi = {j.at("domain").at("hi").at(0), j.at("domain").at("hi").at(1)};
    dom.below_diagonal = j.at("domain").value("below_diagonal", false);
    std::map<IVec2, TriPoly> terms;
    for (const auto& tj : j.at("terms")) {
        IVec2 k{tj.at("k").at(0), tj.at("k").at(1)};
        TriPoly p;
        for (const auto& cj : tj.at("coeffs"))
            p.add_term(cj.at(0), cj.at(1), cj.at(2), cplx(cj.at(3), cj.at(4)));
        if (terms.count(k)) throw ConfigError("duplicate term k in hamiltonian json");
        terms[k] = p;
    }
    return FourierPolyHamiltonian(std::move(terms), dom,
                                  j.value("name", std::string("unnamed")));
}

FourierPolyHamiltonian FourierPolyHamiltonian::flat_torus(double coupling) {
    // cos^2(th1) = 1/2 + e^{2i th1}/4 + e^{-2i th1}/4
    std::map<IVec2, TriPoly> terms;
    TriPoly c0;
    c0.add_term(2, 0, 0, 1.0);
    c0.add_term(0, 2, 0, 1.0);
    c0.add_term(1, 1, 1, 0.5 * coupling);
    TriPoly c2;
    c2.add_term(1, 1, 1, 0.25 * coupling);
    terms[IVec2{0, 0}] = c0;
    terms[IVec2{2, 0}] = c2;
    terms[IVec2{-2, 0}] = c2;
    ActionDomain dom;
    dom.box.lo = {0.1, 0.1};
    dom.box.hi = {1.0, 1.0};
    dom.below_diagonal = true;
    return FourierPolyHamiltonian(std::move(terms), dom, "flat_torus");
}

}  // namespace kam
