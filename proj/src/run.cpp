#include "cgl/run.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

namespace cgl {

namespace fs = std::filesystem;

InitialData raw_initial_data_from_config(const RunConfig& cfg, const Parameters& params,
                                         const Grid& grid) {
    const int d = params.d;
    std::vector<double> shift(d, 0.0);
    for (int a = 0; a < d && a < static_cast<int>(cfg.shift.size()); ++a) shift[a] = cfg.shift[a];

    InitialData out;
    out.V_guess = shift;
    if (cfg.kind == "profile_scaled") {
        const Profile prof(params);
        const double amp = cfg.amplitude;
        const double tc = cfg.theta_const;
        out.u0 = [prof, amp, shift, d](const double* x) {
            double r2 = 0.0;
            for (int a = 0; a < d; ++a) r2 += (x[a] - shift[a]) * (x[a] - shift[a]);
            return amp * prof.value_r2(r2);
        };
        out.theta0 = [prof, tc, shift, d](const double* x) {
            double r2 = 0.0;
            for (int a = 0; a < d; ++a) r2 += (x[a] - shift[a]) * (x[a] - shift[a]);
            return prof.theta_value_r2(r2, 0.0) + tc;
        };
    } else if (cfg.kind == "gaussian") {
        const double amp = cfg.amplitude;
        const double w2 = cfg.width * cfg.width;
        const double tc = cfg.theta_const;
        out.u0 = [amp, w2, shift, d](const double* x) {
            double r2 = 0.0;
            for (int a = 0; a < d; ++a) r2 += (x[a] - shift[a]) * (x[a] - shift[a]);
            return amp * std::exp(-r2 / (2.0 * w2));
        };
        out.theta0 = [tc](const double*) { return tc; };
    } else if (cfg.kind == "file") {
        if (cfg.u0_file.empty()) fail(ErrorCode::MissingRequired, "initial.u0_file");
        Grid g;
        const RescaledSnapshot snap = read_rescaled_snapshot(cfg.u0_file, g);
        const DerivedConstants dc = derive_constants(params);
        auto make_eval = [g, dc, params](Field f, bool phase) {
            return [g, dc, params, f = std::move(f), phase](const double* x) {
                bool inside = true;
                for (int a = 0; a < g.d; ++a) inside = inside && std::fabs(x[a]) <= g.L;
                if (inside) return interpolate(f, x);
                double scale = 1.0;
                for (int a = 0; a < g.d; ++a) scale = std::max(scale, std::fabs(x[a]) / g.L);
                double xb[2];
                double r2 = 0.0, rb2 = 0.0;
                for (int a = 0; a < g.d; ++a) {
                    xb[a] = x[a] / scale;
                    r2 += x[a] * x[a];
                    rb2 += xb[a] * xb[a];
                }
                const double ratio = std::sqrt(r2 / rb2);
                if (phase)
                    return interpolate(f, xb) + params.delta * dc.sigma * std::log(ratio);
                return interpolate(f, xb) * std::pow(ratio, dc.sigma);
            };
        };
        out.u0 = make_eval(snap.U, false);
        out.theta0 = make_eval(snap.Theta, true);
        out.V_guess.clear();
    } else {
        fail(ErrorCode::TypeError, "unknown initial.kind " + cfg.kind);
    }
    (void)grid;
    return out;
}

InitialData apply_H_scale(const RunConfig& cfg, const Parameters& params, const Grid& grid,
                          const InitialData& raw) {
    if (cfg.H_scale <= 0.0) return raw;
    // Parabolic prescale u_l(z) = l^{1/(p-1)} u(l^{1/2} z), theta_l(z) = theta(l^{1/2} z)
    // with l chosen so that H(0)^{p-1} equals H_scale: H0(l)^{p-1} = H0(1)^{p-1}/l.
    const InitialRescaling base =
        initial_rescaling_fn(raw.u0, raw.theta0, params, grid, raw.V_guess);
    const double H0p = std::pow(base.mod.H, params.p - 1.0);
    const double l = H0p / cfg.H_scale;
    const double sqrtl = std::sqrt(l);
    const double ampl = std::pow(l, 1.0 / (params.p - 1.0));
    const int d = params.d;

    InitialData out;
    out.fd_scale = std::min(raw.fd_scale, raw.fd_scale / sqrtl);
    out.u0 = [u0 = raw.u0, ampl, sqrtl, d](const double* x) {
        double y[2];
        for (int a = 0; a < d; ++a) y[a] = sqrtl * x[a];
        return ampl * u0(y);
    };
    out.theta0 = [theta0 = raw.theta0, sqrtl, d](const double* x) {
        double y[2];
        for (int a = 0; a < d; ++a) y[a] = sqrtl * x[a];
        return theta0(y);
    };
    out.V_guess.assign(d, 0.0);
    for (int a = 0; a < d && a < static_cast<int>(base.mod.V.size()); ++a)
        out.V_guess[a] = base.mod.V[a] / sqrtl;
    return out;
}

InitialData initial_data_from_config(const RunConfig& cfg, const Parameters& params,
                                     const Grid& grid) {
    return apply_H_scale(cfg, params, grid, raw_initial_data_from_config(cfg, params, grid));
}

RescaledRunData run_rescaled_with_data(const RunConfig& cfg, const InitialData& init,
                                       bool write_output) {
    const Parameters params = params_of(cfg);
    if (params.d > 2) fail(ErrorCode::GridTooSmall, "PDE runs support d in {1,2}");
    double L;
    int n;
    resolved_domain(cfg, L, n);
    const Grid grid(cfg.d, L, n);
    const WeightConstants wc = weight_constants(params, cfg.k_top);
    const DerivedConstants dc = derive_constants(params);

    InitialRescaling ir =
        initial_rescaling_fn(init.u0, init.theta0, params, grid, init.V_guess, init.fd_scale);

    RescaledState state;
    state.U = std::move(ir.U0);
    state.Theta = std::move(ir.Theta0);
    state.mod = ir.mod;
    state.mod.phi0 = phase_tracker(state.Theta, 0.0, params);

    if (write_output) ensure_output_dir(cfg.dir, cfg.overwrite);

    RescaledRunData run;
    run.params = params;
    run.grid = grid;
    run.k_top = cfg.k_top;
    MonitorSummary mon;

    std::vector<double> snap_taus = cfg.snapshot_taus;
    std::sort(snap_taus.begin(), snap_taus.end());
    std::size_t next_snap = 0;
    double next_report = 0.0;
    long steps = 0;
    int snap_index = 0;

    EnergyOptions eopts;
    eopts.k_top = cfg.k_top;
    eopts.nu1 = cfg.nu1;
    eopts.nu2 = cfg.nu2;

    auto emit_report = [&]() {
        const double res = normalization_residual(state.U, params);
        mon.max_norm_residual_at_report = std::max(mon.max_norm_residual_at_report, res);
        const QMatrix Q = q_of(state.mod, params);
        const ModulationRates r = closure_for(state.U, state.Theta, Q, state.mod.H, params);
        const EnergyReport er = energy_of_state(state, params, wc, eopts);
        SeriesRow row;
        row.tau = state.mod.tau;
        row.t = state.mod.t;
        row.H = state.mod.H;
        row.cW = r.c_W;
        row.cU = r.c_U;
        row.trQ = Q.trace();
        row.detQ = Q.det();
        Q.eigenvalues(row.lam_min, row.lam_max);
        row.V = state.mod.V;
        row.E0 = er.E[0];
        row.Ektop = er.E[cfg.k_top];
        row.F1 = er.F[0];
        row.Fktop = er.F[cfg.k_top - 1];
        row.Etotal = er.E_total;
        row.min_U_ratio = min_U_ratio(state.U, params);
        row.phi0 = state.mod.phi0;
        const double factor = row.tau > 0.0 ? 1.0 + dc.mu5 / row.tau : 1.0;
        row.That_estimate = row.t + std::pow(row.H, params.p - 1.0) * factor;
        run.series.push_back(row);

        mon.min_U_ratio_min = std::min(mon.min_U_ratio_min, row.min_U_ratio);
        mon.detQ_min = std::min(mon.detQ_min, row.detQ);
        mon.lower_bound_ok = mon.lower_bound_ok && (row.min_U_ratio >= dc.C_b);
        const bool bounded = std::isfinite(er.E_total) &&
                             std::max({er.E[0], er.E[cfg.k_top], er.F[0], er.F[cfg.k_top - 1]}) <=
                                 1.0;
        mon.energies_bounded = mon.energies_bounded && bounded;
    };
    auto emit_snapshot = [&]() {
        RescaledSnapshot snap;
        snap.tau = state.mod.tau;
        snap.t = state.mod.t;
        snap.H = state.mod.H;
        snap.phi0 = state.mod.phi0;
        snap.V = state.mod.V;
        snap.M = state.mod.M;
        snap.U = state.U;
        snap.Theta = state.Theta;
        if (write_output) {
            char name[64];
            std::snprintf(name, sizeof(name), "snap_%04d.snap", snap_index);
            write_rescaled_snapshot((fs::path(cfg.dir) / "snapshots" / name).string(), grid, snap);
        }
        ++snap_index;
        run.snapshots.push_back(std::move(snap));
    };

    run.outcome = "completed";
    try {
        emit_report();
        next_report = cfg.report_every;
        while (next_snap < snap_taus.size() && snap_taus[next_snap] <= 1e-12) {
            emit_snapshot();
            ++next_snap;
        }
        const double tiny = 1e-10;
        while (state.mod.tau < cfg.tau_end - tiny) {
            double horizon = std::min(cfg.tau_end, next_report);
            if (next_snap < snap_taus.size()) horizon = std::min(horizon, snap_taus[next_snap]);
            const double hint = std::min(cfg.dtau_max, horizon - state.mod.tau);
            StepResult sr = step(state, params, hint);
            state = std::move(sr.state);
            mon.last_cfl_dt = sr.dtau;
            ++steps;

            const bool due_proj = (steps % cfg.N_proj == 0) ||
                                  normalization_residual(state.U, params) > 1e-8;
            if (due_proj) {
                RenormalizeResult rr = renormalize(state, params);
                state = std::move(rr.state);
                mon.max_projection_correction =
                    std::max(mon.max_projection_correction, rr.correction);
            }
            if (state.mod.tau >= next_report - tiny) {
                emit_report();
                next_report += cfg.report_every;
            }
            while (next_snap < snap_taus.size() && state.mod.tau >= snap_taus[next_snap] - tiny) {
                emit_snapshot();
                ++next_snap;
            }
        }
    } catch (const Error& e) {
        run.outcome = std::string("aborted: ") + e.what();
    }
    mon.total_steps = steps;
    run.monitors = mon;

    if (write_output) {
        write_series_csv((fs::path(cfg.dir) / "series.csv").string(), run.series, params.d);
        write_meta(cfg.dir, cfg, params, mon, run.outcome);
        write_report_json(cfg.dir, run);
    }
    return run;
}

RescaledRunData run_rescaled(const RunConfig& cfg, bool write_output) {
    const Parameters params = params_of(cfg);
    double L;
    int n;
    resolved_domain(cfg, L, n);
    const Grid grid(cfg.d, L, n);
    return run_rescaled_with_data(cfg, initial_data_from_config(cfg, params, grid), write_output);
}

PhysicalRunResult run_physical(const RunConfig& cfg, bool write_output) {
    const Parameters params = params_of(cfg);
    const Grid grid = Grid::physical(cfg.d, cfg.phys_L, cfg.phys_n);

    ComplexField psi0(grid);
    if (cfg.phys_kind == "constant") {
        for (std::size_t i = 0; i < psi0.size(); ++i) psi0.re[i] = cfg.phys_amplitude;
    } else if (cfg.phys_kind == "gaussian") {
        double z[2];
        const double w2 = cfg.phys_width * cfg.phys_width;
        for (std::size_t i = 0; i < psi0.size(); ++i) {
            grid.node_coords(i, z);
            double r2 = 0.0;
            for (int a = 0; a < grid.d; ++a) r2 += z[a] * z[a];
            psi0.re[i] = cfg.phys_amplitude * std::exp(-r2 / (2.0 * w2));
        }
    } else if (cfg.phys_kind == "from_rescaled") {
        if (cfg.phys_source_run.empty()) fail(ErrorCode::MissingRequired, "physical.source_run");
        const RescaledRunData run = load_rescaled_run(cfg.phys_source_run);
        const double H_target = run.snapshots.front().H / cfg.phys_source_amp_factor;
        const RescaledSnapshot* best = &run.snapshots.front();
        for (const auto& s : run.snapshots)
            if (std::fabs(s.H - H_target) < std::fabs(best->H - H_target)) best = &s;
        std::vector<std::vector<double>> pts;
        double z[2];
        for (std::size_t i = 0; i < psi0.size(); ++i) {
            grid.node_coords(i, z);
            pts.push_back(std::vector<double>(z, z + grid.d));
        }
        const auto rec = reconstruct_from_rescaled(run, pts, best->t);
        for (std::size_t i = 0; i < psi0.size(); ++i) {
            if (!rec[i].ok) fail(ErrorCode::OutsideRescaledDomain,
                                 "physical grid exceeds the reconstructable region");
            psi0.re[i] = rec[i].value.real();
            psi0.im[i] = rec[i].value.imag();
        }
    } else {
        fail(ErrorCode::TypeError, "unknown physical.kind " + cfg.phys_kind);
    }

    PhysicalRunOptions opts;
    opts.t_end = cfg.phys_t_end;
    opts.amp_stop = cfg.phys_amp_stop;
    opts.periodic = cfg.phys_periodic;
    PhysicalRunResult res = physical_run(psi0, params, opts);

    if (write_output) {
        ensure_output_dir(cfg.dir, cfg.overwrite);
        write_physical_series_csv((fs::path(cfg.dir) / "series.csv").string(), res.series,
                                  params.d);
        int i = 0;
        for (const auto& s : res.snapshots) {
            char name[64];
            std::snprintf(name, sizeof(name), "snap_%04d.snap", i++);
            write_physical_snapshot((fs::path(cfg.dir) / "snapshots" / name).string(), grid, s);
        }
        MonitorSummary mon;
        mon.total_steps = static_cast<long>(res.series.size());
        write_meta(cfg.dir, cfg, params, mon, res.outcome);
    }
    return res;
}

InitialDataReport validate_from_config(const RunConfig& cfg) {
    const Parameters params = params_of(cfg);
    double L;
    int n;
    resolved_domain(cfg, L, n);
    const Grid grid(cfg.d, L, n);
    const InitialData init = initial_data_from_config(cfg, params, grid);
    return validate_initial_data(init.u0, init.theta0, params, grid, cfg.k_top, cfg.nu,
                                 init.fd_scale);
}

double extrapolated_blowup_time(const RescaledRunData& run) {
    if (run.series.empty()) fail(ErrorCode::InsufficientSeries, "run has no series rows");
    const DerivedConstants dc = derive_constants(run.params);
    const SeriesRow& r = run.series.back();
    const double factor = r.tau > 0.0 ? 1.0 + dc.mu5 / r.tau : 1.0;
    return r.t + std::pow(r.H, run.params.p - 1.0) * factor;
}

StabilityReport stability_experiment(const RunConfig& base_cfg, const PerturbationSpec& pert) {
    const Parameters params = params_of(base_cfg);
    double L;
    int n;
    resolved_domain(base_cfg, L, n);
    const Grid grid(base_cfg.d, L, n);

    // perturb the raw data, then send both through the same pipeline (incl. H_scale)
    const InitialData raw = raw_initial_data_from_config(base_cfg, params, grid);
    const Profile prof(params);
    const int d = params.d;
    const double amp = pert.amplitude;
    const double w2 = pert.width * pert.width;
    InitialData raw_pert = raw;
    raw_pert.u0 = [u0 = raw.u0, prof, amp, w2, d](const double* x) {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) r2 += x[a] * x[a];
        return u0(x) + amp * prof.value_r2(r2) * std::exp(-r2 / w2);
    };

    const InitialData base_init = apply_H_scale(base_cfg, params, grid, raw);
    const InitialData pert_init = apply_H_scale(base_cfg, params, grid, raw_pert);

    StabilityReport rep;
    rep.base_validation = validate_initial_data(base_init.u0, base_init.theta0, params, grid,
                                                base_cfg.k_top, base_cfg.nu, base_init.fd_scale);
    try {
        rep.pert_validation = validate_initial_data(pert_init.u0, pert_init.theta0, params, grid,
                                                    base_cfg.k_top, base_cfg.nu, pert_init.fd_scale);
        rep.pert_validation_failed = !rep.pert_validation.pass;
    } catch (const Error&) {
        rep.pert_validation_failed = true;
    }

    rep.base = run_rescaled_with_data(base_cfg, base_init, !base_cfg.dir.empty());
    if (!rep.pert_validation_failed) {
        RunConfig pert_cfg = base_cfg;
        if (!pert_cfg.dir.empty()) pert_cfg.dir += "_pert";
        rep.pert = run_rescaled_with_data(pert_cfg, pert_init, !pert_cfg.dir.empty());
        rep.That_base = extrapolated_blowup_time(rep.base);
        rep.That_pert = extrapolated_blowup_time(rep.pert);
        rep.dThat_rel = std::fabs(rep.That_base - rep.That_pert) / std::fabs(rep.That_base);
        if (!rep.base.snapshots.empty()) {
            const auto& s = rep.base.snapshots.back();
            rep.err_complex_base = linf_profile_error(s.U, s.Theta, s.tau, params).err_complex;
        }
        if (!rep.pert.snapshots.empty()) {
            const auto& s = rep.pert.snapshots.back();
            rep.err_complex_pert = linf_profile_error(s.U, s.Theta, s.tau, params).err_complex;
        }
    }
    return rep;
}

}  // namespace cgl
