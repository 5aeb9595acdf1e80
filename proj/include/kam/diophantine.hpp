#ifndef KAM_DIOPHANTINE_HPP
#define KAM_DIOPHANTINE_HPP

#include <optional>
#include <vector>

#include "kam/hamiltonian.hpp"

namespace kam {

struct DiophantineParams {
    double kappa = 0.2;
    double tau = 2.0;   // KAM exponent; tau > n-1 = 1
    int k_max = 200;    // certification radius of the lattice search
    double boundary_margin = 0.0;  // dist(omega, d Omega) clause; 0 disables
    std::optional<ActionRect> omega_domain;  // Omega for the boundary clause

    void validate() const {
        if (!(kappa > 0)) throw ConfigError("DiophantineParams: kappa must be > 0");
        if (!(tau > 1)) throw ConfigError("DiophantineParams: tau must be > 1");
        if (k_max < 8) throw ConfigError("DiophantineParams: k_max must be >= 8");
    }
};

struct DiophantineResult {
    bool pass = false;
    IVec2 witness{0, 0};        // minimal-norm violating k (on Fail)
    bool boundary_fail = false; // the dist(omega, dOmega) clause failed
    double min_margin = 0.0;    // min over tested k of |<w,k>| |k|^tau / kappa
    double tail_bound = 0.0;    // kappa / k_max^tau: untested tail scale
};

// Primitive lattice vectors with k1 > 0 or (k1 == 0, k2 == 1), |k| <= k_max,
// sorted by (|k|^2, k1, k2).  One representative per +-k pair; a violation at
// a non-primitive multiple implies one at its primitive with smaller norm, so
// scanning these certifies the full ball.
struct PrimitiveLattice {
    std::vector<int> k1, k2;
    std::vector<double> k1d, k2d;  // same values as doubles (hot-loop form)
    std::vector<double> thr2;      // (kappa/|k|^tau)^2
    int k_max = 0;

    static const PrimitiveLattice& get(int k_max, double kappa, double tau);
};

DiophantineResult diophantine_check(const Vec2& omega, const DiophantineParams& p);

// Quantization lattice I_m = h (m + theta/4) restricted to the domain.
struct ActionLattice {
    double h = 0;
    Vec2 theta_over_4{0, 0};
    ActionDomain domain;
    std::vector<IVec2> points;

    Vec2 action(const IVec2& m) const {
        return {h * (m[0] + theta_over_4[0]), h * (m[1] + theta_over_4[1])};
    }
    static ActionLattice build(double h, const ActionDomain& domain, Vec2 theta_over_4);
};

// Grid mask of the nonresonant action set E_kappa(t) together with the
// Euclidean distance field to the nearest masked node (action units).
struct NonresonantActionSet {
    double t = 0;
    Grid2 grid;
    ActionDomain domain;
    DiophantineParams params;
    std::vector<std::uint8_t> mask;
    std::vector<double> dist;

    double distance_at(const Vec2& I) const { return grid.bilinear(dist, I[0], I[1]); }
    bool mask_at_node(int i, int j) const { return mask[grid.idx(i, j)] != 0; }
    std::size_t masked_count() const;

    void save_csv(const std::string& path) const;
    void save_binary(const std::string& path) const;
};

NonresonantActionSet nonresonant_action_set(const FourierPolyHamiltonian& H, double t,
                                            const DiophantineParams& p, double delta_grid);

std::vector<IVec2> index_set_Mh(const ActionLattice& lattice, const NonresonantActionSet& E,
                                double L);

struct MeasureEstimate {
    double measure = 0;
    double std_error = 0;  // 0 unless Monte Carlo refinement requested
};
MeasureEstimate measure_estimate(const NonresonantActionSet& E, long mc_samples = 0,
                                 std::uint64_t seed = 0);

struct WeylDensityRow {
    double h = 0;
    std::size_t count = 0;        // #M_h
    double measure_E = 0;         // grid measure of E_kappa (action units)
    double tube_volume = 0;       // Monte Carlo volume of the Lh-tube within D
    double tube_se = 0;
    double ratio_asymptotic = 0;  // count * h^2 / meas(E)  (Weyl-count diagnostic)
    double ratio_tube = 0;        // count * h^2 / tube volume
};

struct WeylDensityReport {
    double L = 0;
    double t = 0;
    std::vector<WeylDensityRow> rows;  // ordered as given h_list
    bool monotone_toward_one = false;  // |ratio_asymptotic - 1| nonincreasing
    void save_csv(const std::string& path) const;
};

WeylDensityReport weyl_density_report(const FourierPolyHamiltonian& H,
                                      const DiophantineParams& p, double L,
                                      const std::vector<double>& h_list, double t,
                                      Vec2 theta_over_4, long mc_samples,
                                      std::uint64_t seed);

}  // namespace kam

#endif
