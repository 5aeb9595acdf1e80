#ifndef KAM_HAMILTONIAN_HPP
#define KAM_HAMILTONIAN_HPP

#include <map>
#include <string>

#include "kam/geometry.hpp"
#include "kam/poly.hpp"

namespace kam {

// Perturbed integrable Hamiltonian on T^2 x D in action-angle form:
//
//   H(theta, I; t) = sum_k c_k(I, t) exp(i k.theta)
//
// with finitely many wave vectors k and polynomial coefficients c_k.
// Invariants: c_{-k} = conj(c_k) (real symbol) and c_k(I, 0) = 0 for k != 0
// (integrable at t = 0).  The k = 0 coefficient carries H0(I) and, through
// its t-slope, the angle-averaged perturbation Qbar(I).
class FourierPolyHamiltonian {
  public:
    FourierPolyHamiltonian() = default;
    FourierPolyHamiltonian(std::map<IVec2, TriPoly> terms, ActionDomain domain,
                           std::string name);

    const std::map<IVec2, TriPoly>& terms() const { return terms_; }
    const TriPoly* term(const IVec2& k) const;
    const ActionDomain& domain() const { return domain_; }
    const std::string& name() const { return name_; }

    // Largest |k|_inf over the term support; operator bandwidth downstream.
    int max_wavenumber() const;

    double eval_symbol(const Vec2& theta, const Vec2& I, double t) const;
    // grad_I [H0(I) + t Qbar(I)], by exact polynomial differentiation.
    Vec2 frequency_map(const Vec2& I, double t) const;
    // Qbar(I) = (2pi)^-2 int dt_H(theta, I; 0) dtheta = d_t c_0 |_{t=0}.
    double angle_average_dtH(const Vec2& I) const;
    // det of rows grad H0, grad Qbar; nonzero iff the transversality
    // hypothesis holds at I.
    double transversality_det(const Vec2& I) const;
    // det of the I-Hessian of H0.
    double hessian_det(const Vec2& I) const;

    // H0 and Qbar as polynomials in I (t-degree 0), plus exact derivatives.
    const TriPoly& h0() const { return h0_; }
    const TriPoly& qbar() const { return qbar_; }
    Vec2 grad_h0(const Vec2& I) const;
    Vec2 grad_qbar(const Vec2& I) const;
    // Hessian of H0 at I as (xx, xy, yy).
    std::array<double, 3> hess_h0(const Vec2& I) const;
    std::array<double, 3> hess_k0(const Vec2& I, double t) const;  // H0 + t Qbar

    // d_t c_k |_{t=0} for k != 0 (the oscillatory part of the perturbation).
    std::map<IVec2, TriPoly> dt_coefficients() const;

    std::string to_json() const;
    static FourierPolyHamiltonian from_json(const std::string& text);

    // Section-5.1 flat-torus example: H = I1^2 + I2^2 + t c cos^2(th1) I1 I2,
    // on the one-sided domain {0.1 <= I2 < I1 <= 1}.
    static FourierPolyHamiltonian flat_torus(double coupling = 1.0);

  private:
    void validate_and_cache();

    std::map<IVec2, TriPoly> terms_;
    ActionDomain domain_;
    std::string name_;

    TriPoly h0_, qbar_;
    TriPoly dh0_[2], dqbar_[2];
    TriPoly hess_h0_[3];   // xx, xy, yy
    TriPoly hess_qbar_[3];
};

}  // namespace kam

#endif
