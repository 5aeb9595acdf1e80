#ifndef KAM_SCARRING_HPP
#define KAM_SCARRING_HPP

#include "kam/flow_stats.hpp"
#include "kam/quantize.hpp"

namespace kam {

struct ScarConfig {
    double lambda = 4.0;
    double L = 1.0;
    double delta_factor = 3.0;  // torus-mass radius delta = delta_factor * L * h
    double band_a = 0.0;
    double band_b = 2.05;
    double gamma = 4.0;

    double delta(double h) const { return delta_factor * L * h; }
    void validate() const {
        if (!(lambda > 1)) throw ConfigError("ScarConfig: lambda must exceed 1");
        if (!(delta_factor > 0)) throw ConfigError("ScarConfig: delta_factor must be > 0");
        if (!(band_a < band_b)) throw ConfigError("ScarConfig: band must satisfy a < b");
        if (!(gamma > 3.5)) throw ConfigError("ScarConfig: gamma must exceed 7/2");
    }
};

// N_m = #{E_j in [mu_m - h^g/3, mu_m + h^g/3]} for quasieigenvalues in band.
std::vector<std::pair<IVec2, std::size_t>> window_counts(const EigenWindowResult& eigs,
                                                         const QuasiSpectrum& quasi,
                                                         const ScarConfig& cfg);

struct RRatio {
    double value = 0;
    double band_volume = 0;  // meas(p^{-1}([a,b])) in phase space
    double band_se = 0;
    double measure_E = 0;  // phase-space measure (2pi)^2 meas_I(E)
};

// R = meas(p^{-1}([a,b])) / ((2pi)^2 meas_I(E_kappa)); numerator by Monte
// Carlo over T^2 x I-box, denominator from the grid mask.
RRatio r_ratio(const FourierPolyHamiltonian& H, double t, const ScarConfig& cfg,
               const NonresonantActionSet& E, long n_mc, std::uint64_t seed);

struct BTildeSelection {
    std::vector<IVec2> members;
    double proportion = 0;  // #Btilde / #B_h
    double lambda_R = 0;
};

BTildeSelection btilde_select(const std::vector<std::pair<IVec2, std::size_t>>& counts,
                              const std::vector<IVec2>& b_h, double R, const ScarConfig& cfg);

struct OverlapAudit {
    double max_overlap = 0;
    std::size_t argmax = 0;        // index into eigs.pairs
    bool found = false;            // window contained at least one eigenpair
    bool pass = false;             // max_overlap >= 1/(2 lambda R)
    double projector_sum = 0;      // sum over window of |<u_j, v_m>|^2
    double threshold = 0;
};

OverlapAudit max_overlap_audit(const QuasiEigenvalue& qm, const EigenWindowResult& eigs,
                               const QuasimodeVector& vm, const ScarConfig& cfg, double R);

// <Op(chi) u, u> for the sharp action cutoff chi = 1_{|I - I_w| < delta}.
double torus_mass(const SparseVec& u, const BasisTruncation& trunc, const Vec2& I_omega,
                  double delta);

// <Op^W(a) u, u> for a Hermitian-symmetric finite Fourier-polynomial symbol.
double symbol_expectation(const SparseVec& u, const FourierPolyHamiltonian& a,
                          const BasisTruncation& trunc, double h, double t,
                          Vec2 theta_over_4);

struct ScarAssert {
    bool pass = false;
    double mass = 0;
    double threshold = 0;  // (5 lambda^2 R^2)^-1
    double margin = 0;     // mass * 5 lambda^2 R^2
};

ScarAssert scar_assert(const SparseVec& u, const BasisTruncation& trunc, const Vec2& I_omega,
                       const ScarConfig& cfg, double R, double h);

struct ScarRow {
    IVec2 m{0, 0};
    Vec2 I{0, 0};
    double mu = 0;
    std::size_t N_m = 0;
    bool in_btilde = false;
    double max_overlap = 0;
    long argmax_eigindex = -1;
    double torus_mass = 0;
    bool pass_overlap = false;
    bool pass_scar = false;
};

struct ScarReport {
    double h = 0, t = 0;
    double R = 0, lambda = 0;
    double overlap_threshold = 0;  // 1/(2 lambda R)
    double mass_threshold = 0;     // 1/(5 lambda^2 R^2)
    double btilde_proportion = 0;
    std::vector<ScarRow> rows;

    void save_csv(const std::string& path) const;
    std::string to_json() const;
};

struct CoverageRow {
    double h = 0;
    double fraction = 0;   // fraction of E cells within Lh of selected actions
    double bound = 0;      // 1 - L^2/(pi lambda)
    bool pass = false;
};

struct CoverageReport {
    std::vector<CoverageRow> rows;
    double persistent_fraction = 0;  // cells covered for all of the last 3 h
    void save_csv(const std::string& path) const;
};

// Fraction of E_kappa (reference mask) within L h of the selected action set,
// per h; the per-cell persistence proxy uses the last three h values.
CoverageReport coverage_report(const std::vector<std::pair<double, std::vector<Vec2>>>& selected,
                               const NonresonantActionSet& E_ref, const ScarConfig& cfg);

}  // namespace kam

#endif
