#include <iostream>

#include "CLI11.hpp"
#include "kam/runner.hpp"

namespace {

enum ExitCode { kOk = 0, kHypothesis = 2, kNumerical = 3, kConfig = 4 };

int run_guarded(const std::function<void()>& fn) {
    try {
        fn();
        return kOk;
    } catch (const kam::HypothesisViolation& e) {
        std::cerr << "hypothesis violation: " << e.what() << "\n";
        return kHypothesis;
    } catch (const kam::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const kam::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const kam::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kamlab: spectral statistics of perturbed integrable systems on T^2"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "experiment config (json)")->required();
        sub->add_option("-o,--out", out_override, "override output directory");
    };

    auto* c_hyp = app.add_subcommand("check-hypotheses",
                                     "grid audit of nondegeneracy and transversality");
    add_common(c_hyp);
    auto* c_quasi = app.add_subcommand("quasispectrum",
                                       "lattice, nonresonant masks, M_h, quasieigenvalues");
    add_common(c_quasi);
    auto* c_flow = app.add_subcommand("flow-stats",
                                      "spacing, crossing, A/B and N1/N2 statistics");
    add_common(c_flow);
    auto* c_eig = app.add_subcommand("eigensolve", "windowed eigensolve (cached)");
    add_common(c_eig);
    auto* c_scar = app.add_subcommand("scar-report",
                                      "window counts, overlaps, torus masses, coverage");
    add_common(c_scar);
    auto* c_def = app.add_subcommand("print-defaults", "print the default config json");

    CLI11_PARSE(app, argc, argv);

    if (c_def->parsed()) {
        std::cout << kam::ExperimentConfig::defaults().to_json() << "\n";
        return kOk;
    }

    kam::ExperimentConfig cfg;
    int rc = run_guarded([&] {
        cfg = kam::ExperimentConfig::from_file(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
    });
    if (rc != kOk) return rc;

    if (c_hyp->parsed()) return run_guarded([&] { kam::cmd_check_hypotheses(cfg); });
    if (c_quasi->parsed()) return run_guarded([&] { kam::cmd_quasispectrum(cfg); });
    if (c_flow->parsed()) return run_guarded([&] { kam::cmd_flow_stats(cfg); });
    if (c_eig->parsed()) return run_guarded([&] { kam::cmd_eigensolve(cfg); });
    if (c_scar->parsed()) return run_guarded([&] { kam::cmd_scar_report(cfg); });
    return kConfig;
}
