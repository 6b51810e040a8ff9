#include "magschrod/runner.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "magschrod/carleman.hpp"
#include "magschrod/field_io.hpp"
#include "magschrod/recon.hpp"
#include "magschrod/rng.hpp"

namespace msw {
namespace cli {

namespace {

using nlohmann::ordered_json;

ordered_json config_echo(const RunConfig& cfg) {
    ordered_json j;
    for (const auto& [k, v] : cfg.echo) j[k] = v;
    return j;
}

void write_summary(const RunConfig& cfg, const std::string& command, ordered_json results) {
    std::filesystem::create_directories(cfg.output_dir);
    ordered_json j;
    j["schema_version"] = 1;
    j["command"] = command;
    j["config"] = config_echo(cfg);
    j["defaults_in_effect"] = cfg.echo.empty();
    j["results"] = std::move(results);
    std::ofstream os(cfg.output_dir + "/summary.json", std::ios::trunc);
    os << j.dump(2) << "\n";
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows) {
    std::ofstream os(path, std::ios::trunc);
    os << header << "\n";
    for (const std::string& r : rows) os << r << "\n";
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

Potentials build_potential(const RunConfig& cfg, int which, const Grid3& g) {
    const std::string& kind = which == 1 ? cfg.potential1_kind : cfg.potential2_kind;
    PotentialParams p;
    p.amplitude = which == 1 ? cfg.potential1_amplitude : cfg.potential2_amplitude;
    p.q_amplitude = which == 1 ? cfg.potential1_q_amplitude : cfg.potential2_q_amplitude;
    p.direction = which == 1 ? cfg.potential1_direction : cfg.potential2_direction;
    p.radius_fraction =
        which == 1 ? cfg.potential1_radius_fraction : cfg.potential2_radius_fraction;
    if (kind == "zero") {
        return Potentials(VectorField(g), ScalarField(g), default_omega_mask(g));
    }
    if (kind == "gauge_of_1") {
        Potentials base = build_potential(cfg, 1, g);
        double w = cfg.gauge_width_fraction * g.box_length();
        ScalarField psi = gaussian_bump(g, {0.1, -0.05, 0.08}, std::max(w, 1.7 * g.spacing()),
                                        0.2375 * g.box_length(), cplx(cfg.gauge_amplitude));
        return gauge_shift(base, psi);
    }
    return make_test_potential(g, potential_kind_from_string(kind), p);
}

}  // namespace

int run_forward(const RunConfig& cfg) {
    Grid3 g(cfg.grid_n, cfg.box_length);
    Potentials p = build_potential(cfg, 1, g);
    forward::BoxDomain dom(g, cfg.forward_nodes, cfg.forward_stride);
    forward::CauchyDataset ds =
        forward::build_cauchy_dataset(p, dom, cfg.cauchy_modes, cfg.workers);
    ds.save(cfg.output_dir + "/cauchy_dataset");
    p.save(cfg.output_dir + "/potentials");

    double max_entry = 0.0, herm_gap = 0.0;
    for (int m = 0; m < ds.modes; ++m)
        for (int mp = 0; mp < ds.modes; ++mp) {
            max_entry = std::max(max_entry, std::abs(ds.at(m, mp)));
            herm_gap = std::max(herm_gap, std::abs(ds.at(m, mp) - std::conj(ds.at(mp, m))));
        }
    ordered_json res;
    res["modes"] = ds.modes;
    res["max_entry"] = max_entry;
    res["hermitian_gap"] = herm_gap;
    write_summary(cfg, "forward", std::move(res));
    return kOk;
}

int run_cgo(const RunConfig& cfg) {
    Grid3 g(cfg.grid_n, cfg.box_length);
    Potentials p = build_potential(cfg, 1, g);
    Vec3 xi = cfg.cgo_xi_norm * normalized(cfg.xi_direction);
    for (double h : cfg.h_sweep) {
        if (h * norm(xi) >= 2.0) {
            std::cerr << "cgo: h |xi| >= 2 (h = " << h
                      << "); the zeta pair has no real root, shrink h or xi\n";
            return kValidation;
        }
    }
    dbar::Frame frame = dbar::make_frame(xi);

    std::vector<std::string> rows;
    ordered_json sweep = ordered_json::array();
    double prev_r = 0.0, prev_goh = 0.0;
    bool r_decreasing = true, goh_decreasing = true;
    try {
        for (std::size_t i = 0; i < cfg.h_sweep.size(); ++i) {
            double h = cfg.h_sweep[i];
            cgo::CGOSolution sol = cgo::build_cgo(p, frame, h, cfg.sigma, 1);
            double goh = sol.g_norm_hm1 / h;
            rows.push_back(fmt(h) + "," + fmt(sol.tau) + "," + fmt(sol.g_norm_hm1) + "," +
                           fmt(goh) + "," + fmt(sol.r_norm_h1) + "," +
                           fmt(sol.solve_residual) + "," + fmt(sol.transport_residual) + "," +
                           fmt(sol.weak_residual) + "," + std::to_string(sol.iterations));
            ordered_json row;
            row["h"] = h;
            row["tau"] = sol.tau;
            row["g_norm_hm1_over_h"] = goh;
            row["r_norm_h1scl"] = sol.r_norm_h1;
            row["weak_residual"] = sol.weak_residual;
            sweep.push_back(row);
            if (i > 0) {
                r_decreasing = r_decreasing && sol.r_norm_h1 < prev_r;
                goh_decreasing = goh_decreasing && goh < prev_goh;
            }
            prev_r = sol.r_norm_h1;
            prev_goh = goh;
            if (i == cfg.h_sweep.size() - 1) cgo::save_cgo(sol, cfg.output_dir + "/cgo_solution");
        }
    } catch (const cgo::SolveError& e) {
        std::cerr << "cgo: " << e.what() << "\n";
        return kNonConvergence;
    }
    std::filesystem::create_directories(cfg.output_dir);
    write_csv(cfg.output_dir + "/cgo_sweep.csv",
              "h,tau,g_norm_hm1,g_norm_hm1_over_h,r_norm_h1scl,solve_residual,"
              "transport_residual,weak_residual,iterations",
              rows);
    ordered_json res;
    res["sweep"] = std::move(sweep);
    res["r_norm_decreasing"] = r_decreasing;
    res["g_over_h_decreasing"] = goh_decreasing;
    write_summary(cfg, "cgo", std::move(res));
    return kOk;
}

int run_carleman_probe(const RunConfig& cfg) {
    Grid3 g(cfg.grid_n, cfg.box_length);
    Vec3 alpha = {1.0, 0.0, 0.0};
    std::vector<std::string> rows;
    ordered_json res;

    carleman::ProbeReport lap = carleman::probe_laplacian_estimate(
        g, alpha, cfg.carleman_epsilon, -1.0, cfg.probe_samples, cfg.h_sweep, cfg.seed,
        cfg.workers);
    for (std::size_t i = 0; i < lap.h_values.size(); ++i)
        rows.push_back("laplacian," + fmt(lap.h_values[i]) + "," + fmt(cfg.carleman_epsilon) +
                       ",-1," + fmt(lap.min_ratio[i]) + "," + fmt(lap.slope) + "," +
                       fmt(lap.constant));
    res["laplacian_slope"] = lap.slope;
    res["laplacian_constant"] = lap.constant;
    res["laplacian_min_ratios"] = lap.min_ratio;
    res["laplacian_regime_ok"] = lap.regime_ok;

    // 1/sqrt(eps) factor: min ratio at fixed h across the epsilon sweep
    {
        ordered_json eps_rows = ordered_json::array();
        for (double eps : cfg.epsilon_sweep) {
            carleman::ProbeReport r = carleman::probe_laplacian_estimate(
                g, alpha, eps, -1.0, std::max(cfg.probe_samples / 4, 10), {cfg.cgo_h}, cfg.seed,
                cfg.workers);
            ordered_json row;
            row["epsilon"] = eps;
            row["min_ratio"] = r.min_ratio[0];
            eps_rows.push_back(row);
            rows.push_back("laplacian-eps," + fmt(cfg.cgo_h) + "," + fmt(eps) + ",-1," +
                           fmt(r.min_ratio[0]) + ",,");
        }
        res["epsilon_sweep"] = std::move(eps_rows);
    }

    Potentials p = build_potential(cfg, 1, g);
    carleman::ProbeReport mag = carleman::probe_magnetic_estimate(
        p, alpha, cfg.probe_samples, cfg.h_sweep, cfg.seed, cfg.workers);
    for (std::size_t i = 0; i < mag.h_values.size(); ++i)
        rows.push_back("magnetic," + fmt(mag.h_values[i]) + ",,-1," + fmt(mag.min_ratio[i]) +
                       "," + fmt(mag.slope) + "," + fmt(mag.constant));
    res["magnetic_slope"] = mag.slope;
    res["magnetic_constant"] = mag.constant;
    res["magnetic_min_ratios"] = mag.min_ratio;

    carleman::ProbeReport control = carleman::probe_laplacian_estimate(
        g, {0.0, 0.0, 0.0}, cfg.carleman_epsilon, -1.0, cfg.probe_samples, cfg.h_sweep,
        cfg.seed, cfg.workers);
    res["control_min_ratios"] = control.min_ratio;
    res["control_collapse"] =
        control.min_ratio.back() < 0.5 * lap.min_ratio.back();

    std::filesystem::create_directories(cfg.output_dir);
    write_csv(cfg.output_dir + "/carleman_probe.csv",
              "probe,h,epsilon,s,min_ratio,slope,constant", rows);
    write_summary(cfg, "carleman-probe", std::move(res));
    return kOk;
}

int run_dbar_verify(const RunConfig& cfg) {
    Grid3 g(cfg.grid_n, cfg.box_length);
    RngStream rng(cfg.seed, "dbar-verify");
    const double L = cfg.box_length;

    std::vector<std::string> rows;
    double worst_inverse = 0.0;
    double fitted_c_bound = 0.0;   // Lemma 2.4 style sup bound constant
    double fitted_c_weight = 0.0;  // Lemma 2.5 style weighted bound constant
    for (int fi = 0; fi < cfg.dbar_frames; ++fi) {
        Vec3 xi = {rng.normal(), rng.normal(), rng.normal()};
        dbar::Frame fr = dbar::make_frame(xi);
        for (int si = 0; si < cfg.dbar_samples; ++si) {
            Vec3 c = {rng.uniform(-0.1 * L, 0.1 * L), rng.uniform(-0.1 * L, 0.1 * L),
                      rng.uniform(-0.1 * L, 0.1 * L)};
            double width = rng.uniform(1.0, 1.6) * default_bump_width(g);
            ScalarField f = gaussian_bump(g, c, width, 0.2 * L);
            double resid = dbar::inverse_residual(f, fr.zeta0_plus());
            worst_inverse = std::max(worst_inverse, resid);

            ScalarField phi = dbar::cauchy_transform_inverse(f, fr.zeta0_plus());
            double sup_ratio = sup_norm(phi) / std::max(sup_norm(f), 1e-300);
            fitted_c_bound = std::max(fitted_c_bound, sup_ratio);
            double wr = dbar::weighted_l2_norm(phi, -0.5) /
                        std::max(dbar::weighted_l2_norm(f, 0.5), 1e-300);
            fitted_c_weight = std::max(fitted_c_weight, wr);
            rows.push_back(std::to_string(fi) + "," + std::to_string(si) + "," + fmt(resid) +
                           "," + fmt(sup_ratio) + "," + fmt(wr));
        }
    }
    std::filesystem::create_directories(cfg.output_dir);
    write_csv(cfg.output_dir + "/dbar_verify.csv",
              "frame,sample,inverse_residual,sup_ratio,weighted_ratio", rows);
    ordered_json res;
    res["max_inverse_residual"] = worst_inverse;
    res["fitted_sup_constant"] = fitted_c_bound;
    res["fitted_weighted_constant"] = fitted_c_weight;
    res["samples"] = cfg.dbar_samples * cfg.dbar_frames;
    write_summary(cfg, "dbar-verify", std::move(res));
    return worst_inverse <= 1e-4 ? kOk : kNonConvergence;
}

int run_reconstruct(const RunConfig& cfg) {
    Grid3 g(cfg.recon_grid_n, cfg.box_length);
    Potentials p1 = build_potential(cfg, 1, g);
    Potentials p2 = build_potential(cfg, 2, g);
    recon::ReconConfig rc;
    rc.xi_max_modes = cfg.xi_ball;
    rc.h_sweep = cfg.recon_h_sweep;
    rc.sigma = cfg.recon_sigma;
    rc.workers = cfg.workers;

    recon::ReconResult r = recon::reconstruct(p1, p2, rc);

    std::filesystem::create_directories(cfg.output_dir);
    write_field(cfg.output_dir + "/dA_12", r.da_estimate.f12, "magnetic-field-diff-12");
    write_field(cfg.output_dir + "/dA_13", r.da_estimate.f13, "magnetic-field-diff-13");
    write_field(cfg.output_dir + "/dA_23", r.da_estimate.f23, "magnetic-field-diff-23");
    if (r.psi_estimate) write_field(cfg.output_dir + "/psi", *r.psi_estimate, "gauge-potential");
    write_field(cfg.output_dir + "/q_diff", r.q_diff_estimate, "electric-potential-diff");

    ordered_json res;
    res["da_oracle_rel"] = r.da_oracle_rel;
    res["da_noise"] = r.da_noise;
    res["da_scale"] = r.da_scale;
    res["q_oracle_rel"] = r.q_oracle_rel;
    res["q_noise_scale"] = r.q_noise_scale;
    res["psi_gradient_rel"] = r.psi_gradient_rel;
    res["gauge_stage_ran"] = r.gauge_stage_ran;
    res["a_parts_forced"] = r.a_parts_forced;
    res["max_lsq_residual"] = r.max_lsq_residual;
    res["phase_swap_bound_ok"] = r.phase_swap_bound_ok;
    res["stages"] = r.stage_log;
    write_summary(cfg, "reconstruct", std::move(res));
    return kOk;
}

int run_verify_gauge(const RunConfig& cfg) {
    Grid3 g(cfg.grid_n, cfg.box_length);
    Potentials p = build_potential(cfg, 1, g);
    forward::BoxDomain dom(g, cfg.forward_nodes, cfg.forward_stride);
    double w = std::max(cfg.gauge_width_fraction * g.box_length(), 1.7 * g.spacing());
    ScalarField psi =
        gaussian_bump(g, {0.1, -0.05, 0.08}, w, 0.2375 * g.box_length(), cplx(cfg.gauge_amplitude));
    forward::GaugeReport rep =
        forward::verify_gauge_equivalence(p, psi, dom, cfg.cauchy_modes, cfg.workers);

    std::filesystem::create_directories(cfg.output_dir);
    write_csv(cfg.output_dir + "/gauge_report.csv",
              "quantity,value",
              {"positive_discrepancy," + fmt(rep.positive_discrepancy),
               "negative_discrepancy," + fmt(rep.negative_discrepancy),
               "nested_discrepancy," + fmt(rep.nested_discrepancy),
               "discretization_budget," + fmt(rep.discretization_budget)});
    ordered_json res;
    res["positive_discrepancy"] = rep.positive_discrepancy;
    res["negative_discrepancy"] = rep.negative_discrepancy;
    res["nested_discrepancy"] = rep.nested_discrepancy;
    res["discretization_budget"] = rep.discretization_budget;
    res["modes"] = rep.modes;
    res["positive_within_10x_budget"] =
        rep.positive_discrepancy <= 10.0 * rep.discretization_budget;
    res["negative_exceeds_100x_budget"] =
        rep.negative_discrepancy >= 100.0 * rep.discretization_budget;
    write_summary(cfg, "verify-gauge", std::move(res));
    return kOk;
}

int run_eskin_ralston(const RunConfig& cfg) {
    Grid3 g(cfg.grid_n, cfg.box_length);
    RngStream rng(cfg.seed, "eskin-ralston");
    Potentials smooth = build_potential(cfg, 1, g);
    PotentialParams ip;
    ip.amplitude = 1.0;
    Potentials indicator = make_test_potential(g, PotentialKind::Indicator, ip);
    VectorField w_smooth = smooth.a();
    VectorField w_rough = mollify(indicator, MollifierSpec(0.05 * cfg.box_length));

    std::vector<std::string> rows;
    double worst_smooth = 0.0, worst_rough = 0.0;
    for (int fi = 0; fi < cfg.dbar_frames; ++fi) {
        Vec3 xi = {rng.normal(), rng.normal(), rng.normal()};
        dbar::Frame fr = dbar::make_frame(xi);
        auto [l1, r1] = recon::eskin_ralston_check(w_smooth, fr);
        double e1 = std::abs(l1 - r1) / std::max(std::abs(r1), 1e-300);
        auto [l2, r2] = recon::eskin_ralston_check(w_rough, fr);
        double e2 = std::abs(l2 - r2) / std::max(std::abs(r2), 1e-300);
        worst_smooth = std::max(worst_smooth, e1);
        worst_rough = std::max(worst_rough, e2);
        rows.push_back(std::to_string(fi) + ",smooth," + fmt(e1));
        rows.push_back(std::to_string(fi) + ",mollified-indicator," + fmt(e2));
    }
    std::filesystem::create_directories(cfg.output_dir);
    write_csv(cfg.output_dir + "/eskin_ralston.csv", "frame,field,rel_error", rows);
    ordered_json res;
    res["max_rel_error_smooth"] = worst_smooth;
    res["max_rel_error_mollified_indicator"] = worst_rough;
    res["frames"] = cfg.dbar_frames;
    write_summary(cfg, "eskin-ralston", std::move(res));
    return kOk;
}

int run_command(int argc, const char* const* argv) {
    CLI::App app{"desk-scale workbench for CGO solutions and magnetic Schroedinger "
                 "inverse-problem reconstruction"};
    app.require_subcommand(1);

    std::string config_path;
    double cli_h = -1.0, cli_xi = -1.0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration file");
    };
    CLI::App* fwd = app.add_subcommand("forward", "Cauchy dataset from Dirichlet solves");
    CLI::App* cgo_cmd = app.add_subcommand("cgo", "CGO solution h-sweep");
    CLI::App* car = app.add_subcommand("carleman-probe", "Carleman estimate scaling probes");
    CLI::App* dbv = app.add_subcommand("dbar-verify", "inverse Cauchy transform verification");
    CLI::App* rec = app.add_subcommand("reconstruct", "dA and q reconstruction pipeline");
    CLI::App* vg = app.add_subcommand("verify-gauge", "gauge equivalence of Cauchy datasets");
    CLI::App* er = app.add_subcommand("eskin-ralston", "phase cancellation identity check");
    for (CLI::App* sub : {fwd, cgo_cmd, car, dbv, rec, vg, er}) add_common(sub);
    cgo_cmd->add_option("--h", cli_h, "semiclassical parameter override");
    cgo_cmd->add_option("--xi-norm", cli_xi, "frequency magnitude override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        RunConfig cfg =
            config_path.empty() ? RunConfig::defaults() : RunConfig::parse_file(config_path);
        if (cli_h > 0) cfg.h_sweep = {cli_h};
        if (cli_xi > 0) cfg.cgo_xi_norm = cli_xi;
        if (fwd->parsed()) return run_forward(cfg);
        if (cgo_cmd->parsed()) return run_cgo(cfg);
        if (car->parsed()) return run_carleman_probe(cfg);
        if (dbv->parsed()) return run_dbar_verify(cfg);
        if (rec->parsed()) return run_reconstruct(cfg);
        if (vg->parsed()) return run_verify_gauge(cfg);
        if (er->parsed()) return run_eskin_ralston(cfg);
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return std::string(e.what()).rfind("config:", 0) == 0 ? kUsage : kValidation;
    } catch (const cgo::SolveError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNonConvergence;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNonConvergence;
    }
}

}  // namespace cli
}  // namespace msw
