#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cgl/run.hpp"

namespace {

using namespace cgl;

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::IoError, "cannot open config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::UnknownKey:
        case ErrorCode::TypeError:
        case ErrorCode::MissingRequired:
        case ErrorCode::BadExponent:
        case ErrorCode::SupercriticalOrCritical:
        case ErrorCode::MismatchedParameters:
            return 2;
        default:
            return 1;
    }
}

int cmd_validate(const std::string& cfg_path) {
    const RunConfig cfg = load_config(cfg_path);
    const InitialDataReport rep = validate_from_config(cfg);
    std::printf("check                          value                 pass\n");
    std::printf("lower bound  min U0/Ubar^(1+e2) %-21.12g %s\n", rep.lower_bound_min,
                rep.lower_bound_ok ? "yes" : "NO");
    std::printf("H0^(p-1) < nu                  %-21.12g %s\n", rep.H0_pow,
                rep.H0_ok ? "yes" : "NO");
    std::printf("trace (literal)                %-21.12g %s\n", rep.trace_literal,
                rep.trace_ok ? "yes" : "NO");
    std::printf("trace (magnitude)              %-21.12g -\n", rep.trace_abs);
    std::printf("|W0| proxy < nu                %-21.12g %s\n", rep.W_norm,
                rep.norms_ok ? "yes" : "NO");
    std::printf("|Phi0| proxy < nu              %-21.12g %s\n", rep.Phi_norm,
                rep.norms_ok ? "yes" : "NO");
    std::printf("V0 = (");
    for (std::size_t i = 0; i < rep.V0.size(); ++i)
        std::printf("%s%.12g", i ? ", " : "", rep.V0[i]);
    std::printf("), H0 = %.12g\n", rep.H0);
    std::printf("overall: %s\n", rep.pass ? "PASS" : "FAIL");
    return rep.pass ? 0 : 2;
}

int cmd_profile(const std::string& cfg_path, const std::string& out, double rmax, int count) {
    const RunConfig cfg = load_config(cfg_path);
    const Parameters params = params_of(cfg);
    const Profile prof(params);
    const DerivedConstants& dc = prof.constants();
    const WeightConstants wc = weight_constants(params, cfg.k_top);
    std::ofstream os(out);
    if (!os) fail(ErrorCode::IoError, "cannot open " + out);
    os << "r,Ubar,dUbar,d2Ubar,Thetabar0";
    for (int k = 0; k <= cfg.k_top; ++k) os << ",rho_" << k;
    for (int k = 1; k <= cfg.k_top; ++k) os << ",ring_rho_" << k;
    os << "\n";
    for (int i = 0; i < count; ++i) {
        const double r = rmax * (i + 1) / count;
        const double z[2] = {r, 0.0};
        const DerivTensors t = prof.derivs(z, params.d, 2);
        os << format_g17(r) << "," << format_g17(t.value) << "," << format_g17(t.grad[0]) << ","
           << format_g17(t.hess[0]) << "," << format_g17(prof.theta_value_r2(r * r, 0.0));
        for (int k = 0; k <= cfg.k_top; ++k) {
            const WeightSpec spec = make_weight(WeightFamily::rho, k, params, cfg.k_top, wc);
            os << "," << format_g17(eval_weight(spec, params, dc, r * r));
        }
        for (int k = 1; k <= cfg.k_top; ++k) {
            const WeightSpec spec = make_weight(WeightFamily::ring_rho, k, params, cfg.k_top, wc);
            os << ","
               << format_g17(eval_weight(spec, params, dc, r * r, t.value, true));
        }
        os << "\n";
    }
    return 0;
}

int cmd_reduced_ode(const std::vector<double>& q0, int d, double tau_end, double dtau_cap,
                    const std::string& out) {
    if (static_cast<int>(q0.size()) != d * d)
        fail(ErrorCode::TypeError, "--q0 needs d*d row-major entries");
    QMatrix Q;
    Q.m = Eigen::MatrixXd(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) Q.m(i, j) = q0[i * d + j];
    Q.m = 0.5 * (Q.m + Q.m.transpose()).eval();

    std::ofstream os(out);
    if (!os) fail(ErrorCode::IoError, "cannot open " + out);
    os << "tau,trQ,detQ,lambda_min,lambda_max,trQ_times_tau_over_d\n";
    double tau = 0.0;
    double next_out = 0.0;
    const double out_stride = std::max(tau_end / 2000.0, 1e-6);
    while (tau < tau_end - 1e-12) {
        if (tau >= next_out - 1e-12) {
            double lmin, lmax;
            Q.eigenvalues(lmin, lmax);
            os << format_g17(tau) << "," << format_g17(Q.trace()) << "," << format_g17(Q.det())
               << "," << format_g17(lmin) << "," << format_g17(lmax) << ","
               << format_g17(Q.trace() * tau / d) << "\n";
            next_out += out_stride;
        }
        const double dt = std::min({dtau_cap, 0.1 / std::max(Q.m.norm(), 1e-12), tau_end - tau});
        Q = reduced_q_step(Q, dt);
        tau += dt;
    }
    double lmin, lmax;
    Q.eigenvalues(lmin, lmax);
    os << format_g17(tau) << "," << format_g17(Q.trace()) << "," << format_g17(Q.det()) << ","
       << format_g17(lmin) << "," << format_g17(lmax) << ","
       << format_g17(Q.trace() * tau / d) << "\n";
    std::printf("final tau = %.6g, trQ*tau/d = %.8g\n", tau, Q.trace() * tau / d);
    return 0;
}

int cmd_compare(const std::string& rescaled_dir, const std::string& physical_dir,
                const std::vector<double>& times, double z_box) {
    const RescaledRunData run = load_rescaled_run(rescaled_dir);

    // load physical run: meta for params, snapshots for fields
    PhysicalRunResult phys;
    {
        std::ifstream ms(std::filesystem::path(physical_dir) / "meta.json");
        if (!ms) fail(ErrorCode::IoError, "missing meta.json in " + physical_dir);
        std::stringstream ss;
        ss << ms.rdbuf();
        const auto meta = nlohmann::json::parse(ss.str());
        const RunConfig cfg = parse_config(meta.at("config").get<std::string>());
        phys.params = params_of(cfg);
        phys.outcome = meta.at("outcome").get<std::string>();
        namespace fs = std::filesystem;
        std::vector<fs::path> snaps;
        for (const auto& e : fs::directory_iterator(fs::path(physical_dir) / "snapshots"))
            if (e.path().extension() == ".snap") snaps.push_back(e.path());
        std::sort(snaps.begin(), snaps.end());
        for (const auto& sp : snaps) {
            Grid g;
            phys.snapshots.push_back(read_physical_snapshot(sp.string(), g));
        }
    }
    const CompareReport rep = compare_runs(run, phys, times, z_box);
    std::printf("t                      rel_Linf_err        points\n");
    for (const auto& row : rep.rows)
        std::printf("%-22.12g %-19.6g %d\n", row.t, row.rel_err, row.n_points);
    std::printf("worst: %.6g\n", rep.worst);
    return 0;
}

int cmd_report(const std::string& run_dir, const std::string& out_csv) {
    const RescaledRunData run = load_rescaled_run(run_dir);
    write_report_json(run_dir, run);
    if (!out_csv.empty()) {
        std::vector<RateInputRow> rows;
        for (const auto& s : run.series)
            rows.push_back(RateInputRow{s.tau, s.t, s.H, s.trQ, s.phi0, false, UpperTri(run.params.d)});
        const auto rates = rate_report(rows, run.params);
        std::ofstream os(out_csv);
        if (!os) fail(ErrorCode::IoError, "cannot open " + out_csv);
        os << "tau,t,That,ratio_TH,ratio_H,ratio_pred,trQ_tau_over_d,A_phase,Abar_phase\n";
        for (const auto& r : rates) {
            os << format_g17(r.tau) << "," << format_g17(r.t) << "," << format_g17(r.That) << ","
               << format_g17(r.ratio_TH) << "," << format_g17(r.ratio_H) << ","
               << format_g17(r.ratio_pred) << "," << format_g17(r.trQ_tau_over_d) << ","
               << format_g17(r.A_phase) << "," << format_g17(r.Abar_phase) << "\n";
        }
    }
    std::printf("report.json written under %s\n", run_dir.c_str());
    return 0;
}

int cmd_stability(const std::string& cfg_path, double amp, double width) {
    const RunConfig cfg = load_config(cfg_path);
    PerturbationSpec spec;
    spec.amplitude = amp;
    spec.width = width;
    const StabilityReport rep = stability_experiment(cfg, spec);
    std::printf("base:  outcome=%s  That=%.12g  err_complex(final)=%.6g\n", rep.base.outcome.c_str(),
                rep.That_base, rep.err_complex_base);
    if (rep.pert_validation_failed) {
        std::printf("pert:  validation FAILED (experiment asymmetric)\n");
        return 2;
    }
    std::printf("pert:  outcome=%s  That=%.12g  err_complex(final)=%.6g\n", rep.pert.outcome.c_str(),
                rep.That_pert, rep.err_complex_pert);
    std::printf("|dThat|/That = %.6g\n", rep.dThat_rel);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cgl-lab: dynamic-rescaling laboratory for complex Ginzburg-Landau blowup"};
    app.require_subcommand(1);

    std::string cfg_path, out_path, rescaled_dir, physical_dir, run_dir;
    double rmax = 20.0, z_box = 5.0, pert_amp = 1e-3, pert_width = 1.0;
    int count = 400, qd = 1;
    double tau_end = 1e4, dtau_cap = 0.01;
    std::vector<double> q0{1.0}, times;

    auto* validate = app.add_subcommand("validate", "validate initial data against the admissibility checks");
    validate->add_option("--config", cfg_path)->required();

    auto* profile = app.add_subcommand("profile", "dump profile, phase, and weights as CSV");
    profile->add_option("--config", cfg_path)->required();
    profile->add_option("--out", out_path)->required();
    profile->add_option("--rmax", rmax);
    profile->add_option("--count", count);

    auto* reduced = app.add_subcommand("reduced-ode", "integrate the leading-order Q matrix ODE");
    reduced->add_option("--q0", q0, "row-major d*d entries")->required();
    reduced->add_option("--d", qd)->required();
    reduced->add_option("--tau-end", tau_end);
    reduced->add_option("--dtau", dtau_cap);
    reduced->add_option("--out", out_path);

    auto* rescaled = app.add_subcommand("rescaled", "run the rescaled solver");
    rescaled->add_option("--config", cfg_path)->required();

    auto* physical = app.add_subcommand("physical", "run the physical-space reference solver");
    physical->add_option("--config", cfg_path)->required();

    auto* compare = app.add_subcommand("compare", "compare a rescaled run against a physical run");
    compare->add_option("--rescaled", rescaled_dir)->required();
    compare->add_option("--physical", physical_dir)->required();
    compare->add_option("--times", times)->required();
    compare->add_option("--box", z_box);

    auto* report = app.add_subcommand("report", "render diagnostics for a completed run");
    report->add_option("--run", run_dir)->required();
    report->add_option("--out", out_path);

    auto* stability = app.add_subcommand("stability", "paired-run stability experiment");
    stability->add_option("--config", cfg_path)->required();
    stability->add_option("--perturb-amp", pert_amp);
    stability->add_option("--perturb-width", pert_width);

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(cfg_path);
        if (profile->parsed()) return cmd_profile(cfg_path, out_path, rmax, count);
        if (reduced->parsed())
            return cmd_reduced_ode(q0, qd, tau_end, dtau_cap,
                                   out_path.empty() ? "reduced_ode.csv" : out_path);
        if (rescaled->parsed()) {
            const cgl::RunConfig cfg = load_config(cfg_path);
            const cgl::RescaledRunData run = cgl::run_rescaled(cfg);
            std::printf("outcome: %s (%zu report rows, %zu snapshots) -> %s\n",
                        run.outcome.c_str(), run.series.size(), run.snapshots.size(),
                        cfg.dir.c_str());
            return run.outcome == "completed" ? 0 : 1;
        }
        if (physical->parsed()) {
            const cgl::RunConfig cfg = load_config(cfg_path);
            const cgl::PhysicalRunResult res = cgl::run_physical(cfg);
            std::printf("outcome: %s (%zu rows) -> %s\n", res.outcome.c_str(), res.series.size(),
                        cfg.dir.c_str());
            return (res.outcome == "completed" || res.outcome == "amp_stop") ? 0 : 1;
        }
        if (compare->parsed()) return cmd_compare(rescaled_dir, physical_dir, times, z_box);
        if (report->parsed()) return cmd_report(run_dir, out_path);
        if (stability->parsed()) return cmd_stability(cfg_path, pert_amp, pert_width);
    } catch (const cgl::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
