#ifndef KAM_QUANTIZE_HPP
#define KAM_QUANTIZE_HPP

#include <memory>

#include "kam/hamiltonian.hpp"

namespace kam {

// Fourier-basis truncation: all m with H0(I_m) <= E_cut * rho_margin (or an
// explicit lattice ball |m| <= radius).  Row indices are assigned in (m1,m2)
// lexicographic order, so the index map is a deterministic bijection.
class BasisTruncation {
  public:
    static BasisTruncation energy_ball(const FourierPolyHamiltonian& H, double h,
                                       Vec2 theta_over_4, double E_cut,
                                       double rho_margin = 1.5);
    static BasisTruncation lattice_ball(double h, Vec2 theta_over_4, int radius);

    int dimension() const { return int(states_.size()); }
    const std::vector<IVec2>& states() const { return states_; }
    const IVec2& state(int row) const { return states_[row]; }
    int row_of(const IVec2& m) const;  // -1 when absent
    Vec2 action(int row) const {
        return {h_ * (states_[row][0] + theta4_[0]), h_ * (states_[row][1] + theta4_[1])};
    }
    double h() const { return h_; }
    Vec2 theta_over_4() const { return theta4_; }
    double energy_limit() const { return energy_limit_; }
    double max_radius() const { return max_radius_; }
    std::uint64_t digest() const { return digest_; }

  private:
    void finalize();
    std::vector<IVec2> states_;
    std::map<IVec2, int> index_;
    double h_ = 0;
    Vec2 theta4_{0, 0};
    double energy_limit_ = 0;
    double max_radius_ = 0;
    std::uint64_t digest_ = 0;
};

// Exact Weyl matrix element on the torus Fourier basis: 0 unless
// k = m' - m lies in the symbol support, else c_k(h((m+m')/2 + theta/4), t).
cplx matrix_element(const FourierPolyHamiltonian& H, const IVec2& m, const IVec2& mp,
                    double h, double t, Vec2 theta_over_4);

// Banded Hermitian matrix keyed by coupling vector k.  band(k)[r] holds the
// element A(r', r) with m_{r'} = m_r + k.
class HermitianOperatorMatrix {
  public:
    struct Band {
        IVec2 k;
        std::vector<cplx> entry;  // per column row index r: A(row_of(m_r+k), r)
    };

    int dimension() const { return trunc_->dimension(); }
    double h() const { return h_; }
    double t() const { return t_; }
    const BasisTruncation& truncation() const { return *trunc_; }
    std::shared_ptr<const BasisTruncation> truncation_ptr() const { return trunc_; }
    const std::vector<double>& diag() const { return diag_; }
    const std::vector<Band>& bands() const { return bands_; }

    // y = A x (dense work vectors of dimension())
    void apply(const std::vector<cplx>& x, std::vector<cplx>& y) const;
    double hermiticity_defect() const;
    bool bands_real() const;

    friend HermitianOperatorMatrix build_operator(const FourierPolyHamiltonian& H, double h,
                                                  double t,
                                                  std::shared_ptr<const BasisTruncation> trunc,
                                                  Vec2 theta_over_4);

  private:
    std::shared_ptr<const BasisTruncation> trunc_;
    double h_ = 0, t_ = 0;
    Vec2 theta4_{0, 0};
    std::vector<double> diag_;
    std::vector<Band> bands_;  // k != 0 couplings present in the symbol
};

HermitianOperatorMatrix build_operator(const FourierPolyHamiltonian& H, double h, double t,
                                       std::shared_ptr<const BasisTruncation> trunc,
                                       Vec2 theta_over_4);

// Sparse coefficient table over a truncation basis.
struct SparseVec {
    std::uint64_t trunc_digest = 0;
    std::vector<std::pair<int, cplx>> entries;  // sorted by row

    double norm() const;
    void normalize();
};

cplx overlap(const SparseVec& u, const SparseVec& v);

struct EigPair {
    double value = 0;
    SparseVec vec;
    double residual = 0;
    double shell_mass = 0;
    int component = 0;
};

struct EigenWindowResult {
    double a = 0, b = 0;  // window
    double h = 0, t = 0;
    std::uint64_t trunc_digest = 0;
    int dimension = 0;
    std::vector<EigPair> pairs;  // sorted by eigenvalue

    // count of eigenvalues in [lo, hi] (binary search)
    std::size_t count_in(double lo, double hi) const;
    void save_binary(const std::string& path) const;
    static EigenWindowResult load_binary(const std::string& path);
    void save_values_csv(const std::string& path) const;
};

// All eigenpairs with eigenvalue in [a, b].  The matrix splits into
// connected components of the coupling graph; each component is solved
// densely (real-symmetric path when the bands are real).  Eigenvectors are
// checked for orthonormality and residuals; mass on the outer 10% radial
// shell of the truncation ball above 1e-6 rejects the result.
EigenWindowResult eigensolve_window(const HermitianOperatorMatrix& mat, double a, double b,
                                    double tol = 1e-10);

struct QuasimodeVector {
    IVec2 m{0, 0};
    SparseVec v;
    int order_t = 1;
};

// First-order Rayleigh-Schrodinger quasimode with exact Weyl elements:
//   v_m = normalize(e_m + t sum_k c'_k(h(m+k/2+theta/4)) / (H0(I_m) - H0(I_{m+k})) e_{m+k}).
QuasimodeVector build_quasimode(const FourierPolyHamiltonian& H, const IVec2& m, double t,
                                double h, int k_trunc,
                                std::shared_ptr<const BasisTruncation> trunc,
                                Vec2 theta_over_4, double divisor_tol = 1e-8);

double residual_norm(const HermitianOperatorMatrix& mat, const SparseVec& v, double mu);

}  // namespace kam

#endif
