#ifndef KAM_NORMAL_FORM_HPP
#define KAM_NORMAL_FORM_HPP

#include <map>

#include "kam/diophantine.hpp"
#include "kam/hamiltonian.hpp"

namespace kam {

// Finite-order integrable normal form
//
//   K0(I, t) = H0(I) + t Qbar(I) [+ t^2 K2(I)]
//
// truncated at order_t in t (K1 = 0 in the h-expansion throughout).  The
// optional second-order term comes from the homological bracket,
// K2 = -<{S, Q}>/2, written per +-k pair of the oscillatory perturbation:
//
//   K2(I) = sum_{pairs k} [ -k.grad|Qk|^2 / <w,k> + |Qk|^2 <Hess H0 k, k> / <w,k>^2 ]
//
// with w = grad H0, Qk = d_t c_k|_{t=0}.
class NormalFormExpansion {
  public:
    NormalFormExpansion() = default;
    NormalFormExpansion(const FourierPolyHamiltonian& H, int order_t = 1,
                        double divisor_tol = 1e-6);

    int order_t() const { return order_t_; }
    const FourierPolyHamiltonian& hamiltonian() const { return *H_; }

    double k0_eval(const Vec2& I, double t, double h = 0) const;
    double dk0_dt(const Vec2& I, double t, double h = 0) const;
    Vec2 eta_map(const Vec2& I, double t, double h = 0) const;
    double k2(const Vec2& I) const;  // 0 when order_t < 2

  private:
    const FourierPolyHamiltonian* H_ = nullptr;
    int order_t_ = 1;
    double divisor_tol_ = 1e-6;
    // one representative per +-k pair, with the t-slope polynomial and grads
    struct PairTerm {
        IVec2 k;
        TriPoly q, dq1, dq2;
    };
    std::vector<PairTerm> pairs_;
};

struct QuasiEigenvalue {
    IVec2 m{0, 0};
    Vec2 I{0, 0};
    double mu = 0;
    double dmu_dt = 0;
    double t = 0;
    double h = 0;
};

QuasiEigenvalue quasieigenvalue(const NormalFormExpansion& nf, const IVec2& m, double t,
                                double h, const ActionLattice& lattice);

// Table of quasieigenvalues at fixed (h, t).
struct QuasiSpectrum {
    double h = 0, t = 0;
    std::vector<QuasiEigenvalue> rows;
    void save_csv(const std::string& path) const;
};

QuasiSpectrum quasi_spectrum(const NormalFormExpansion& nf, const ActionLattice& lattice,
                             const std::vector<IVec2>& members, double t);

struct BilipschitzResult {
    double G1 = 0, G2 = 0;
    Vec2 argmin_a{0, 0}, argmin_b{0, 0};  // pair realizing G1
    Vec2 argmax_a{0, 0}, argmax_b{0, 0};  // pair realizing G2
    std::size_t pairs_sampled = 0;
};

// Empirical extremal ratios |I_a - I_b| / |eta(I_a) - eta(I_b)| over sampled
// pairs: G1 = min, G2 = max.  Deterministic grid probes (including the
// coordinate-swap partner of each probe, the canonical symmetry hazard of
// this model class) plus seeded random pairs.  Throws SingularEta when a
// sampled pair has eta(I_a) = eta(I_b) with I_a != I_b.
BilipschitzResult bilipschitz_constants(const NormalFormExpansion& nf,
                                        const ActionDomain& d_sub, double t, double h,
                                        std::size_t n_samples, std::uint64_t seed = 12345);

struct HomologicalSolution {
    Vec2 I{0, 0};
    std::map<IVec2, cplx> coeffs;  // s_k, k != 0
    double min_divisor = 0;        // smallest |<w(I),k>| encountered
    double residual_sup = 0;       // sup over angle grid of the identity residual
};

// First-order homological solve s_k = Qk(I) / (i <w(I), k>); verifies the
// identity w . d_theta S = Q - Qbar on an angle grid to 1e-8.
HomologicalSolution homological_solve(const FourierPolyHamiltonian& H, const Vec2& I,
                                      int k_trunc, double divisor_tol = 1e-6);

}  // namespace kam

#endif
