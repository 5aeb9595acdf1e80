#include "kam/runner.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "json.hpp"
#include "kam/io_util.hpp"

namespace fs = std::filesystem;

namespace kam {

namespace {

double wall_ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

std::string h_tag(double h) {
    // 1/16 -> "h64th" style tags keep file names readable for dyadic h
    double inv = 1.0 / h;
    if (std::abs(inv - std::round(inv)) < 1e-9)
        return "h_1over" + std::to_string(long(std::round(inv)));
    return "h_" + fmt_g(h);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig c;
    if (j.value("schema_version", 1) != 1) throw ConfigError("unsupported schema_version");
    c.name = j.value("name", c.name);
    if (j.contains("hamiltonian")) {
        if (j["hamiltonian"].is_string())
            c.hamiltonian = j["hamiltonian"];
        else
            throw ConfigError("hamiltonian must be a builtin name or a file path string");
    }
    c.coupling = j.value("coupling", c.coupling);
    if (j.contains("domain")) {
        ActionDomain d;
        d.box.lo = {j["domain"].at("lo").at(0), j["domain"].at("lo").at(1)};
        d.box.hi = {j["domain"].at("hi").at(0), j["domain"].at("hi").at(1)};
        d.below_diagonal = j["domain"].value("below_diagonal", false);
        c.domain_override = d;
    }
    c.kappa = j.value("kappa", c.kappa);
    c.tau = j.value("tau", c.tau);
    c.k_max = j.value("k_max", c.k_max);
    c.boundary_margin = j.value("boundary_margin", c.boundary_margin);
    c.gamma = j.value("gamma", c.gamma);
    c.lambda = j.value("lambda", c.lambda);
    c.L = j.value("L", c.L);
    if (j.contains("theta_over_4"))
        c.theta_over_4 = {j["theta_over_4"].at(0), j["theta_over_4"].at(1)};
    c.delta_factor = j.value("delta_factor", c.delta_factor);
    if (j.contains("h_list")) c.h_list = j["h_list"].get<std::vector<double>>();
    c.t0 = j.value("t0", c.t0);
    c.t_steps = j.value("t_steps", c.t_steps);
    c.scar_t = j.value("scar_t", c.scar_t);
    if (j.contains("quasi_t_list"))
        c.quasi_t_list = j["quasi_t_list"].get<std::vector<double>>();
    if (j.contains("band")) {
        c.band_a = j["band"].at(0);
        c.band_b = j["band"].at(1);
    }
    c.rho_margin = j.value("rho_margin", c.rho_margin);
    c.scar_order_t = j.value("scar_order_t", c.scar_order_t);
    c.divisor_tol = j.value("divisor_tol", c.divisor_tol);
    c.k_trunc = j.value("k_trunc", c.k_trunc);
    c.eig_tol = j.value("eig_tol", c.eig_tol);
    c.eps_c = j.value("eps_c", c.eps_c);
    c.C1 = j.value("C1", c.C1);
    c.C2 = j.value("C2", c.C2);
    c.delta_grid_factor = j.value("delta_grid_factor", c.delta_grid_factor);
    c.mc_samples = j.value("mc_samples", c.mc_samples);
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.emit_mask_csv = j.value("emit_mask_csv", c.emit_mask_csv);
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_json(read_text_file(path));
}

std::string ExperimentConfig::to_json() const {
    nlohmann::ordered_json j;
    j["schema_version"] = schema_version;
    j["name"] = name;
    j["hamiltonian"] = hamiltonian;
    j["coupling"] = coupling;
    if (domain_override) {
        j["domain"] = {{"lo", {domain_override->box.lo[0], domain_override->box.lo[1]}},
                       {"hi", {domain_override->box.hi[0], domain_override->box.hi[1]}},
                       {"below_diagonal", domain_override->below_diagonal}};
    }
    j["kappa"] = kappa;
    j["tau"] = tau;
    j["k_max"] = k_max;
    j["boundary_margin"] = boundary_margin;
    j["gamma"] = gamma;
    j["lambda"] = lambda;
    j["L"] = L;
    j["theta_over_4"] = {theta_over_4[0], theta_over_4[1]};
    j["delta_factor"] = delta_factor;
    j["h_list"] = h_list;
    j["t0"] = t0;
    j["t_steps"] = t_steps;
    j["scar_t"] = scar_t;
    j["quasi_t_list"] = quasi_t_list;
    j["band"] = {band_a, band_b};
    j["rho_margin"] = rho_margin;
    j["scar_order_t"] = scar_order_t;
    j["divisor_tol"] = divisor_tol;
    j["k_trunc"] = k_trunc;
    j["eig_tol"] = eig_tol;
    j["eps_c"] = eps_c;
    j["C1"] = C1;
    j["C2"] = C2;
    j["delta_grid_factor"] = delta_grid_factor;
    j["mc_samples"] = mc_samples;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["emit_mask_csv"] = emit_mask_csv;
    return j.dump(2);
}

void ExperimentConfig::validate() const {
    if (h_list.empty()) throw ConfigError("config: h_list must not be empty");
    for (double h : h_list)
        if (!(h > 0)) throw ConfigError("config: h values must be positive");
    if (!(scar_t >= 0 && scar_t <= t0)) throw ConfigError("config: scar_t outside [0, t0]");
    if (!(band_a < band_b)) throw ConfigError("config: band must satisfy a < b");
    if (!(lambda > 1)) throw ConfigError("config: lambda must exceed 1");
    if (!(gamma > 3.5)) throw ConfigError("config: gamma must exceed 7/2");
    if (!(L >= std::sqrt(2.0) / 2))
        throw ConfigError("config: L must be >= sqrt(2)/2 so lattice tubes cover E_kappa");
    if (scar_order_t < 1 || scar_order_t > 2)
        throw ConfigError("config: scar_order_t must be 1 or 2");
    if (mc_samples < 1000) throw ConfigError("config: mc_samples too small");
    dioph().validate();
}

FourierPolyHamiltonian ExperimentConfig::load_hamiltonian() const {
    FourierPolyHamiltonian H = [&] {
        if (hamiltonian == "flat_torus") return FourierPolyHamiltonian::flat_torus(coupling);
        return FourierPolyHamiltonian::from_json(read_text_file(hamiltonian));
    }();
    if (domain_override) {
        return FourierPolyHamiltonian(H.terms(), *domain_override, H.name());
    }
    return H;
}

DiophantineParams ExperimentConfig::dioph() const {
    DiophantineParams p;
    p.kappa = kappa;
    p.tau = tau;
    p.k_max = k_max;
    p.boundary_margin = boundary_margin;
    return p;
}

FlowConfig ExperimentConfig::flow() const {
    FlowConfig f;
    f.gamma = gamma;
    f.t0 = t0;
    f.t_steps = t_steps;
    f.L = L;
    f.C1 = C1;
    f.C2 = C2;
    f.eps_c = eps_c;
    f.dioph = dioph();
    f.theta_over_4 = theta_over_4;
    f.delta_grid_factor = delta_grid_factor;
    return f;
}

ScarConfig ExperimentConfig::scar() const {
    ScarConfig s;
    s.lambda = lambda;
    s.L = L;
    s.delta_factor = delta_factor;
    s.band_a = band_a;
    s.band_b = band_b;
    s.gamma = gamma;
    return s;
}

std::string ExperimentConfig::cache_dir() const {
    if (const char* env = std::getenv("KAMLAB_CACHE_DIR")) return env;
    return out_dir + "/cache";
}

RunManifest::RunManifest(const ExperimentConfig& cfg)
    : config_digest_(hex64(fnv1a64(cfg.to_json()))) {}

void RunManifest::stage(const std::string& name, double wall_ms) {
    stages_.emplace_back(name, wall_ms);
}

void RunManifest::file(const std::string& path) { files_.push_back(path); }

void RunManifest::write(const std::string& path) const {
    nlohmann::ordered_json j;
    j["config_digest"] = config_digest_;
    j["artifact_version"] = "kamlab-1.0";
    auto& st = j["stages"] = nlohmann::ordered_json::array();
    for (const auto& [n, ms] : stages_) st.push_back({{"name", n}, {"wall_ms", ms}});
    auto& fl = j["files"] = nlohmann::ordered_json::array();
    for (const auto& f : files_)
        fl.push_back({{"path", f}, {"digest", hex64(file_digest(f))}});
    write_text_file(path, j.dump(2) + "\n");
}

HypothesisReport check_hypotheses(const FourierPolyHamiltonian& H, int grid_n) {
    HypothesisReport rep;
    rep.min_abs_hessian_det = 1e300;
    rep.min_abs_transversality = 1e300;
    const auto& b = H.domain().box;
    for (int i = 0; i <= grid_n - 1; ++i)
        for (int j = 0; j <= grid_n - 1; ++j) {
            Vec2 I{b.lo[0] + b.width() * i / (grid_n - 1),
                   b.lo[1] + b.height() * j / (grid_n - 1)};
            if (!H.domain().contains(I)) continue;
            double hd = std::abs(H.hessian_det(I));
            double td = std::abs(H.transversality_det(I));
            if (hd < rep.min_abs_hessian_det) rep.min_abs_hessian_det = hd;
            if (td < rep.min_abs_transversality) {
                rep.min_abs_transversality = td;
                rep.witness = I;
            }
            if (hd < 1e-12) {
                rep.failing_check = "hessian";
                rep.witness = I;
                rep.pass = false;
                return rep;
            }
            if (td < 1e-12) {
                rep.failing_check = "transversality";
                rep.witness = I;
                rep.pass = false;
                return rep;
            }
        }
    rep.pass = true;
    return rep;
}

void cmd_check_hypotheses(const ExperimentConfig& cfg) {
    auto H = cfg.load_hamiltonian();
    fs::create_directories(cfg.out_dir);
    auto t0 = std::chrono::steady_clock::now();
    auto rep = check_hypotheses(H);
    RunManifest man(cfg);
    nlohmann::ordered_json j;
    j["pass"] = rep.pass;
    j["min_abs_hessian_det"] = rep.min_abs_hessian_det;
    j["min_abs_transversality"] = rep.min_abs_transversality;
    j["witness"] = {rep.witness[0], rep.witness[1]};
    j["failing_check"] = rep.failing_check;
    std::string path = cfg.out_dir + "/hypotheses_report.json";
    write_text_file(path, j.dump(2) + "\n");
    man.stage("check_hypotheses", wall_ms_since(t0));
    man.file(path);
    man.write(cfg.out_dir + "/run_manifest.json");
    if (!rep.pass)
        throw HypothesisViolation("hypothesis check failed (" + rep.failing_check +
                                      ") at I = (" + fmt_g(rep.witness[0]) + "," +
                                      fmt_g(rep.witness[1]) + ")",
                                  {rep.witness[0], rep.witness[1]});
}

void cmd_quasispectrum(const ExperimentConfig& cfg) {
    auto H = cfg.load_hamiltonian();
    fs::create_directories(cfg.out_dir);
    RunManifest man(cfg);
    NormalFormExpansion nf(H, 1, cfg.divisor_tol);
    for (double h : cfg.h_list) {
        auto lattice = ActionLattice::build(h, H.domain(), cfg.theta_over_4);
        for (double t : cfg.quasi_t_list) {
            auto t0 = std::chrono::steady_clock::now();
            auto E = nonresonant_action_set(H, t, cfg.dioph(), h / cfg.delta_grid_factor);
            auto Mh = index_set_Mh(lattice, E, cfg.L);
            if (Mh.empty())
                std::cerr << "warning: M_h(t) empty at h=" << fmt_g(h) << " t=" << fmt_g(t)
                          << " (kappa too large?)\n";
            std::string tag = h_tag(h) + "_t" + fmt_prec(t, 6);
            std::string mask_path = cfg.out_dir + "/mask_" + tag + ".bin";
            E.save_binary(mask_path);
            man.file(mask_path);
            if (cfg.emit_mask_csv) {
                std::string csv_path = cfg.out_dir + "/mask_" + tag + ".csv";
                E.save_csv(csv_path);
                man.file(csv_path);
            }
            auto qs = quasi_spectrum(nf, lattice, Mh, t);
            std::string qpath = cfg.out_dir + "/quasispectrum_" + tag + ".csv";
            qs.save_csv(qpath);
            man.file(qpath);
            man.stage("quasispectrum_" + tag, wall_ms_since(t0));
        }
    }
    man.write(cfg.out_dir + "/run_manifest.json");
}

void cmd_flow_stats(const ExperimentConfig& cfg) {
    auto H = cfg.load_hamiltonian();
    fs::create_directories(cfg.out_dir);
    RunManifest man(cfg);
    NormalFormExpansion nf(H, 1, cfg.divisor_tol);
    FlowConfig fcfg = cfg.flow();
    if (fcfg.C1 == 0 || fcfg.C2 == 0) {
        auto sc = derive_spacing_constants(H, cfg.kappa);
        if (fcfg.C1 == 0) fcfg.C1 = sc.C1;
        if (fcfg.C2 == 0) fcfg.C2 = sc.C2;
    }
    std::vector<std::pair<double, double>> proxy;
    for (double h : cfg.h_list) {
        auto t0 = std::chrono::steady_clock::now();
        auto fsc = build_flow_scaffold(H, nf, h, fcfg);
        std::string tag = h_tag(h);

        CsvWriter viol(cfg.out_dir + "/spacing_violations_" + tag + ".csv");
        viol.header("m1,m2,n1,n2,t,h,gap,threshold");
        std::size_t n_viol = 0, n_pairs = 0;
        double min_ratio = 1e300;
        for (std::size_t ti = 0; ti < fsc.tgrid.size(); ++ti) {
            auto rep = spacing_audit(fsc, ti, fcfg);
            n_pairs += rep.audited_pairs;
            if (rep.audited_pairs) min_ratio = std::min(min_ratio, rep.min_gap_ratio);
            for (const auto& v : rep.violations) {
                ++n_viol;
                viol.row_begin();
                viol.col(v.m[0]).col(v.m[1]).col(v.n[0]).col(v.n[1]).col(v.t).col(v.h)
                    .col(v.gap).col(v.threshold);
                viol.row_end();
            }
        }
        man.file(cfg.out_dir + "/spacing_violations_" + tag + ".csv");

        CsvWriter ab(cfg.out_dir + "/ab_ratios_" + tag + ".csv");
        ab.header("m1,m2,measA,measB,ratio");
        std::size_t n_ok = 0, n_nonempty = 0;
        double eps2 = fcfg.eps(h) * fcfg.eps(h);
        for (std::size_t i = 0; i < fsc.lattice.points.size(); ++i) {
            auto abs_ = ab_sets(fsc, i, fcfg);
            ab.row_begin();
            ab.col(fsc.lattice.points[i][0]).col(fsc.lattice.points[i][1])
                .col(abs_.A.measure()).col(abs_.B.measure()).col(abs_.ratio);
            ab.row_end();
            if (!abs_.A.empty()) {
                ++n_nonempty;
                if (abs_.ratio >= 1 - eps2) ++n_ok;
            }
        }
        man.file(cfg.out_dir + "/ab_ratios_" + tag + ".csv");

        auto flow = n1_n2_report(fsc, fcfg);
        flow.save_csv(cfg.out_dir + "/flow_report_" + tag + ".csv");
        man.file(cfg.out_dir + "/flow_report_" + tag + ".csv");
        proxy.emplace_back(h, std::max(1.0 - flow.good_fraction, flow.mean_deficit));

        auto cross = audit_crossing_triples(fsc, fcfg, 200, cfg.seed + 7);
        nlohmann::ordered_json cj;
        cj["n_triples"] = cross.triples.size();
        cj["ctilde1"] = cross.ctilde1;
        cj["ctilde2_max"] = cross.ctilde2_max;
        cj["min_slope_gap_over_h34"] = cross.min_slope_gap_over_h34;
        nlohmann::ordered_json sj;
        sj["h"] = h;
        sj["C1"] = fcfg.C1;
        sj["C2"] = fcfg.C2;
        sj["audited_pairs"] = n_pairs;
        sj["violations"] = n_viol;
        sj["min_gap_ratio"] = n_pairs ? min_ratio : 0.0;
        sj["ab_fraction_ok"] = n_nonempty ? double(n_ok) / double(n_nonempty) : 1.0;
        sj["good_t_fraction"] = flow.good_fraction;
        sj["mean_deficit"] = flow.mean_deficit;
        sj["eps"] = fcfg.eps(h);
        sj["crossing_audit"] = cj;
        write_text_file(cfg.out_dir + "/flow_summary_" + tag + ".json", sj.dump(2) + "\n");
        man.file(cfg.out_dir + "/flow_summary_" + tag + ".json");
        man.stage("flow_stats_" + tag, wall_ms_since(t0));
    }
    try {
        auto fit = epsilon_scaling_fit(proxy, cfg.gamma);
        nlohmann::ordered_json fj;
        fj["slope"] = fit.slope;
        fj["target"] = fit.target;
        fj["mismatch"] = fit.mismatch;
        fj["points_used"] = fit.points_used;
        write_text_file(cfg.out_dir + "/eps_fit.json", fj.dump(2) + "\n");
        man.file(cfg.out_dir + "/eps_fit.json");
    } catch (const InsufficientData& e) {
        nlohmann::ordered_json fj;
        fj["error"] = std::string("InsufficientData: ") + e.what();
        write_text_file(cfg.out_dir + "/eps_fit.json", fj.dump(2) + "\n");
        man.file(cfg.out_dir + "/eps_fit.json");
    }
    man.write(cfg.out_dir + "/run_manifest.json");
}

EigenWindowResult eigensolve_cached(const FourierPolyHamiltonian& H, double h, double t,
                                    double E_cut, double rho_margin, Vec2 theta_over_4,
                                    double a, double b, double tol,
                                    const std::string& cache_dir) {
    std::uint64_t key = fnv1a64(H.to_json());
    for (double v : {h, t, E_cut, rho_margin, theta_over_4[0], theta_over_4[1], a, b, tol})
        key = fnv1a64(&v, sizeof(v), key);
    fs::create_directories(cache_dir);
    std::string path = cache_dir + "/" + hex64(key) + ".eig";
    if (fs::exists(path)) return EigenWindowResult::load_binary(path);
    auto trunc = std::make_shared<BasisTruncation>(
        BasisTruncation::energy_ball(H, h, theta_over_4, E_cut, rho_margin));
    auto mat = build_operator(H, h, t, trunc, theta_over_4);
    auto res = eigensolve_window(mat, a, b, tol);
    res.save_binary(path);
    return res;
}

void cmd_eigensolve(const ExperimentConfig& cfg) {
    auto H = cfg.load_hamiltonian();
    fs::create_directories(cfg.out_dir);
    RunManifest man(cfg);
    for (double h : cfg.h_list) {
        auto t0 = std::chrono::steady_clock::now();
        double hg = std::pow(h, cfg.gamma);
        auto eigs = eigensolve_cached(H, h, cfg.scar_t, cfg.band_b, cfg.rho_margin,
                                      cfg.theta_over_4, cfg.band_a - 2 * hg,
                                      cfg.band_b + 2 * hg, cfg.eig_tol, cfg.cache_dir());
        std::string path = cfg.out_dir + "/eigenvalues_" + h_tag(h) + ".csv";
        eigs.save_values_csv(path);
        man.file(path);
        man.stage("eigensolve_" + h_tag(h), wall_ms_since(t0));
    }
    man.write(cfg.out_dir + "/run_manifest.json");
}

void cmd_scar_report(const ExperimentConfig& cfg) {
    auto H = cfg.load_hamiltonian();
    fs::create_directories(cfg.out_dir);
    RunManifest man(cfg);
    ScarConfig scfg = cfg.scar();
    NormalFormExpansion nf_scar(H, cfg.scar_order_t, cfg.divisor_tol);
    NormalFormExpansion nf_flow(H, 1, cfg.divisor_tol);
    const double t = cfg.scar_t;

    // reference E mask at the finest resolution for the coverage report
    double h_min = *std::min_element(cfg.h_list.begin(), cfg.h_list.end());
    auto E_ref = nonresonant_action_set(H, t, cfg.dioph(), h_min / cfg.delta_grid_factor);
    std::vector<std::pair<double, std::vector<Vec2>>> selected;

    for (double h : cfg.h_list) {
        auto t0 = std::chrono::steady_clock::now();
        std::string tag = h_tag(h);
        auto lattice = ActionLattice::build(h, H.domain(), cfg.theta_over_4);
        auto E = nonresonant_action_set(H, t, cfg.dioph(), h / cfg.delta_grid_factor);
        auto Mh = index_set_Mh(lattice, E, cfg.L);
        const double hg = std::pow(h, cfg.gamma);

        EigenWindowResult eigs;
        try {
            eigs = eigensolve_cached(H, h, t, cfg.band_b, cfg.rho_margin, cfg.theta_over_4,
                                     cfg.band_a - 2 * hg, cfg.band_b + 2 * hg, cfg.eig_tol,
                                     cfg.cache_dir());
        } catch (const BoundaryContamination& e) {
            std::cerr << "warning: (h=" << fmt_g(h) << ", t=" << fmt_g(t)
                      << ") skipped: " << e.what() << "\n";
            continue;
        }
        auto trunc = std::make_shared<BasisTruncation>(BasisTruncation::energy_ball(
            H, h, cfg.theta_over_4, cfg.band_b, cfg.rho_margin));

        auto quasi = quasi_spectrum(nf_scar, lattice, Mh, t);
        auto counts = window_counts(eigs, quasi, scfg);

        // B_h: members isolated at t in the affine (flow) quasieigenvalues
        std::vector<std::pair<double, std::size_t>> mus(lattice.points.size());
        for (std::size_t i = 0; i < lattice.points.size(); ++i) {
            Vec2 I = lattice.action(lattice.points[i]);
            mus[i] = {nf_flow.k0_eval(I, t, h), i};
        }
        std::sort(mus.begin(), mus.end());
        std::vector<double> gap(lattice.points.size(), 1e300);
        for (std::size_t s = 0; s < mus.size(); ++s) {
            double g = 1e300;
            if (s > 0) g = std::min(g, mus[s].first - mus[s - 1].first);
            if (s + 1 < mus.size()) g = std::min(g, mus[s + 1].first - mus[s].first);
            gap[mus[s].second] = g;
        }
        std::map<IVec2, std::size_t> index;
        for (std::size_t i = 0; i < lattice.points.size(); ++i) index[lattice.points[i]] = i;
        std::vector<IVec2> Bh;
        for (const auto& m : Mh)
            if (gap[index[m]] > hg) Bh.push_back(m);

        auto R = r_ratio(H, t, scfg, E, cfg.mc_samples, cfg.seed + 11);
        auto btilde = btilde_select(counts, Bh, R.value, scfg);

        ScarReport rep;
        rep.h = h;
        rep.t = t;
        rep.R = R.value;
        rep.lambda = cfg.lambda;
        rep.overlap_threshold = 1.0 / (2 * cfg.lambda * R.value);
        rep.mass_threshold = 1.0 / (5 * cfg.lambda * cfg.lambda * R.value * R.value);
        rep.btilde_proportion = btilde.proportion;

        std::map<IVec2, std::size_t> cmap(counts.begin(), counts.end());
        std::map<IVec2, bool> in_bt;
        for (const auto& m : btilde.members) in_bt[m] = true;
        std::vector<Vec2> sel_actions;
        for (const auto& m : btilde.members) sel_actions.push_back(lattice.action(m));
        selected.emplace_back(h, sel_actions);

        for (const auto& q : quasi.rows) {
            if (q.mu < scfg.band_a || q.mu > scfg.band_b) continue;
            ScarRow row;
            row.m = q.m;
            row.I = q.I;
            row.mu = q.mu;
            row.N_m = cmap.count(q.m) ? cmap[q.m] : 0;
            row.in_btilde = in_bt.count(q.m) > 0;
            if (row.in_btilde) {
                QuasimodeVector vm;
                bool have_vm = true;
                try {
                    vm = build_quasimode(H, q.m, t, h, cfg.k_trunc, trunc, cfg.theta_over_4,
                                         cfg.divisor_tol);
                } catch (const NearDegeneracy&) {
                    have_vm = false;  // resonant index: excluded from the audit
                }
                if (have_vm) {
                    auto audit = max_overlap_audit(q, eigs, vm, scfg, R.value);
                    row.max_overlap = audit.max_overlap;
                    row.argmax_eigindex = audit.found ? long(audit.argmax) : -1;
                    row.pass_overlap = audit.pass;
                    if (audit.found) {
                        auto sa = scar_assert(eigs.pairs[audit.argmax].vec, *trunc, q.I, scfg,
                                              R.value, h);
                        row.torus_mass = sa.mass;
                        row.pass_scar = sa.pass;
                    }
                }
            }
            rep.rows.push_back(row);
        }
        rep.save_csv(cfg.out_dir + "/scar_report_" + tag + ".csv");
        man.file(cfg.out_dir + "/scar_report_" + tag + ".csv");
        write_text_file(cfg.out_dir + "/scar_report_" + tag + ".json", rep.to_json() + "\n");
        man.file(cfg.out_dir + "/scar_report_" + tag + ".json");

        // plot data: torus mass vs action radius, overlap histogram
        {
            CsvWriter pw(cfg.out_dir + "/plot_mass_vs_action_" + tag + ".csv");
            pw.header("action_radius,torus_mass");
            for (const auto& r : rep.rows) {
                if (!r.in_btilde) continue;
                pw.row_begin();
                pw.col(norm(r.I)).col(r.torus_mass);
                pw.row_end();
            }
            man.file(cfg.out_dir + "/plot_mass_vs_action_" + tag + ".csv");
            CsvWriter hw(cfg.out_dir + "/plot_overlap_hist_" + tag + ".csv");
            hw.header("bin_center,count");
            std::array<long, 20> bins{};
            for (const auto& r : rep.rows)
                if (r.in_btilde) {
                    int b = std::min(19, int(r.max_overlap * 20));
                    if (b >= 0) ++bins[b];
                }
            for (int b = 0; b < 20; ++b) {
                hw.row_begin();
                hw.col((b + 0.5) / 20).col(bins[b]);
                hw.row_end();
            }
            man.file(cfg.out_dir + "/plot_overlap_hist_" + tag + ".csv");
        }
        man.stage("scar_report_" + tag, wall_ms_since(t0));
    }

    auto cov = coverage_report(selected, E_ref, scfg);
    cov.save_csv(cfg.out_dir + "/coverage_report.csv");
    man.file(cfg.out_dir + "/coverage_report.csv");
    nlohmann::ordered_json pm;
    pm["files"] = nlohmann::ordered_json::array();
    for (double h : cfg.h_list) {
        pm["files"].push_back({{"file", "plot_mass_vs_action_" + h_tag(h) + ".csv"},
                               {"x_label", "|I_m|"},
                               {"y_label", "torus mass"}});
        pm["files"].push_back({{"file", "plot_overlap_hist_" + h_tag(h) + ".csv"},
                               {"x_label", "max overlap"},
                               {"y_label", "count"}});
    }
    write_text_file(cfg.out_dir + "/plot_manifest.json", pm.dump(2) + "\n");
    man.file(cfg.out_dir + "/plot_manifest.json");
    man.write(cfg.out_dir + "/run_manifest.json");
}

}  // namespace kam
