#ifndef KAM_FLOW_STATS_HPP
#define KAM_FLOW_STATS_HPP

#include "kam/normal_form.hpp"

namespace kam {

// Sorted disjoint intervals within (0, t0); exact endpoint arithmetic.
class TSubset {
  public:
    TSubset() = default;
    explicit TSubset(std::vector<std::pair<double, double>> iv);

    const std::vector<std::pair<double, double>>& intervals() const { return iv_; }
    double measure() const;
    bool contains(double t) const;
    bool empty() const { return iv_.empty(); }

    TSubset unite(const TSubset& o) const;
    TSubset intersect(const TSubset& o) const;
    TSubset subtract(const TSubset& o) const;

    std::string to_json() const;  // [[lo,hi],...]

  private:
    std::vector<std::pair<double, double>> iv_;
};

struct FlowConfig {
    double gamma = 4.0;
    double t0 = 0.2;
    int t_steps = 50;
    double L = 1.0;
    double C1 = 0.0;  // 0 => derive from (kappa, S)
    double C2 = 0.0;
    double eps_c = 1.0;  // eps(h) = eps_c * h^(gamma/2 - 7/4)
    DiophantineParams dioph;
    Vec2 theta_over_4{0, 0};
    double delta_grid_factor = 8.0;  // delta = h / factor

    double dt() const { return t0 / t_steps; }
    double eps(double h) const { return eps_c * std::pow(h, gamma / 2 - 1.75); }
    void validate(double h_min) const;
};

// C1 = (kappa/(2S))^{1/4}, C2 = sqrt(kappa S / 2) with S the sup over a
// domain grid of the operator norm of the H0 Hessian.
struct SpacingConstants {
    double C1 = 0, C2 = 0, S = 0;
};
SpacingConstants derive_spacing_constants(const FourierPolyHamiltonian& H, double kappa,
                                          int grid_n = 64);

// Per-(h) scaffolding shared by the flow audits: lattice, quasieigenvalue
// slopes, and M_h(t) membership sampled on the t grid.
struct FlowScaffold {
    double h = 0;
    ActionLattice lattice;
    std::vector<double> mu0;    // K0(I_m, 0)
    std::vector<double> slope;  // dmu/dt = Qbar(I_m)
    std::vector<double> tgrid;  // t_i = i dt, i = 1..t_steps
    std::vector<std::vector<std::uint8_t>> member;  // [t index][lattice index]
    std::vector<IVec2> mh_at(std::size_t ti) const;
};

FlowScaffold build_flow_scaffold(const FourierPolyHamiltonian& H,
                                 const NormalFormExpansion& nf, double h,
                                 const FlowConfig& cfg);

struct SpacingViolation {
    IVec2 m{0, 0}, n{0, 0};
    double t = 0, h = 0;
    double gap = 0;        // |mu_m - mu_n|
    double threshold = 0;  // C2 h^{3/2}
};

struct SpacingAuditReport {
    double h = 0, t = 0;
    double C1 = 0, C2 = 0;
    std::size_t audited_pairs = 0;
    std::vector<SpacingViolation> violations;
    double min_gap_ratio = 0;  // min |mu_m - mu_n| / h^{3/2} over audited pairs
};

// Prop 3.3 audit at fixed (h, t): ordered pairs with n in M_h(t) and
// |I_m - I_n| <= C1 h^{3/4} must satisfy |mu_m - mu_n| >= C2 h^{3/2}.
SpacingAuditReport spacing_audit(const FlowScaffold& fs, std::size_t t_index,
                                 const FlowConfig& cfg);

// C_{m,n}(h) = {t in (0,t0): |mu_m(t) - mu_n(t)| < h^gamma}; exact root
// solves of the degree<=2 polynomial mu_m - mu_n in t.
TSubset crossing_set(const NormalFormExpansion& nf, const ActionLattice& lattice,
                     const IVec2& m, const IVec2& n, double h, const FlowConfig& cfg);

struct ABSets {
    TSubset A, B;
    double ratio = 1.0;  // meas(B)/meas(A); 1 when A empty
};

ABSets ab_sets(const FlowScaffold& fs, std::size_t lattice_index, const FlowConfig& cfg);

struct FlowReport {
    double h = 0;
    double eps = 0;
    std::vector<double> tgrid;
    std::vector<std::size_t> N1, N2;
    std::vector<std::uint8_t> good;
    double good_fraction = 0;
    double mean_deficit = 0;  // mean over t of (N1-N2)/N1
    void save_csv(const std::string& path) const;
};

FlowReport n1_n2_report(const FlowScaffold& fs, const FlowConfig& cfg);

struct EpsScalingFit {
    double slope = 0;
    double target = 0;  // gamma/2 - 7/4
    bool mismatch = false;  // |slope - target| > band
    std::size_t points_used = 0;
};

// Least-squares slope of log(proxy) vs log(h); proxy must be positive.
EpsScalingFit epsilon_scaling_fit(const std::vector<std::pair<double, double>>& h_proxy,
                                  double gamma, double band = 0.5);

struct CrossingTriple {
    IVec2 m{0, 0}, n{0, 0};
    double t_star = 0;
    double window_fraction = 0;  // meas(window cap C)/h^{3/4}
    double ctilde2 = 0;          // window_fraction / h^{gamma - 3/2}
    double slope_gap = 0;        // |dmu_m - dmu_n|
};

struct CrossingAuditReport {
    std::vector<CrossingTriple> triples;
    double ctilde1 = 1.0;
    double ctilde2_max = 0;  // empirical constant of Eq-style windowed bound
    double min_slope_gap_over_h34 = 0;
};

// Samples pairs whose exact crossing time lies in (0,t0) with m in M_h(t*),
// and audits the windowed crossing fraction and the separation-speed bound.
CrossingAuditReport audit_crossing_triples(const FlowScaffold& fs, const FlowConfig& cfg,
                                           std::size_t n_triples, std::uint64_t seed);

}  // namespace kam

#endif
