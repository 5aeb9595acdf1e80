#ifndef KAM_RUNNER_HPP
#define KAM_RUNNER_HPP

#include "kam/scarring.hpp"

namespace kam {

struct ExperimentConfig {
    int schema_version = 1;
    std::string name = "flat-torus-default";
    std::string hamiltonian = "flat_torus";  // builtin name or file path (*.json)
    double coupling = 1.0;
    std::optional<ActionDomain> domain_override;

    double kappa = 0.2, tau = 2.0;
    int k_max = 200;
    double boundary_margin = 0.0;

    double gamma = 4.0, lambda = 4.0, L = 1.0;
    Vec2 theta_over_4{0, 0};
    double delta_factor = 3.0;  // torus-mass radius rule delta = factor * L * h

    std::vector<double> h_list{1.0 / 16, 1.0 / 32, 1.0 / 64};
    double t0 = 0.2;
    int t_steps = 50;
    double scar_t = 0.01;
    std::vector<double> quasi_t_list{0.01};

    double band_a = 0.0, band_b = 2.05;
    double rho_margin = 1.5;
    int scar_order_t = 2;
    double divisor_tol = 1e-8;
    int k_trunc = 8;
    double eig_tol = 1e-10;

    double eps_c = 1.0;
    double C1 = 0.0, C2 = 0.0;  // 0 => derived from (kappa, S)
    double delta_grid_factor = 8.0;

    long mc_samples = 1000000;
    std::uint64_t seed = 20240801;
    std::string out_dir = "out";
    bool emit_mask_csv = false;

    static ExperimentConfig defaults() { return {}; }
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    std::string to_json() const;
    void validate() const;

    FourierPolyHamiltonian load_hamiltonian() const;
    DiophantineParams dioph() const;
    FlowConfig flow() const;
    ScarConfig scar() const;
    std::string cache_dir() const;  // out_dir/cache, env KAMLAB_CACHE_DIR override
};

class RunManifest {
  public:
    explicit RunManifest(const ExperimentConfig& cfg);
    void stage(const std::string& name, double wall_ms);
    void file(const std::string& path);
    void write(const std::string& path) const;

  private:
    std::string config_digest_;
    std::vector<std::pair<std::string, double>> stages_;
    std::vector<std::string> files_;
};

struct StageTimer;

// Pipeline entry points (shared by the CLI and the tests).
struct HypothesisReport {
    bool pass = false;
    double min_abs_hessian_det = 0;
    double min_abs_transversality = 0;
    Vec2 witness{0, 0};
    std::string failing_check;
};
HypothesisReport check_hypotheses(const FourierPolyHamiltonian& H, int grid_n = 33);
void cmd_check_hypotheses(const ExperimentConfig& cfg);

void cmd_quasispectrum(const ExperimentConfig& cfg);
void cmd_flow_stats(const ExperimentConfig& cfg);
void cmd_eigensolve(const ExperimentConfig& cfg);
void cmd_scar_report(const ExperimentConfig& cfg);

// Cached eigensolve: content-keyed by (hamiltonian json, h, t, truncation,
// theta, window); cache files are created atomically and never rewritten.
EigenWindowResult eigensolve_cached(const FourierPolyHamiltonian& H, double h, double t,
                                    double E_cut, double rho_margin, Vec2 theta_over_4,
                                    double a, double b, double tol,
                                    const std::string& cache_dir);

}  // namespace kam

#endif
