#include "cgl/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cgl {

namespace {

// Sum over all k-th derivative multi-indices of (d^alpha f)^2, with the
// multinomial multiplicity (|grad^k f|^2 as a full tensor norm).
Field grad_k_sq(const Field& f, int k) {
    const Grid& g = f.grid;
    Field out(g);
    if (k == 0) {
        for (std::size_t i = 0; i < f.size(); ++i) out.v[i] = f.v[i] * f.v[i];
        return out;
    }
    if (g.d == 1) {
        const Field df = differentiate(f, {k, 0});
        for (std::size_t i = 0; i < f.size(); ++i) out.v[i] = df.v[i] * df.v[i];
        return out;
    }
    auto binom = [](int n, int r) {
        double b = 1.0;
        for (int i = 0; i < r; ++i) b = b * (n - i) / (i + 1);
        return b;
    };
    for (int a = 0; a <= k; ++a) {
        const Field df = differentiate(f, {k - a, a});
        const double mult = binom(k, a);
        for (std::size_t i = 0; i < f.size(); ++i) out.v[i] += mult * df.v[i] * df.v[i];
    }
    return out;
}

double radius2(const Grid& g, std::size_t idx) {
    double z[2];
    g.node_coords(idx, z);
    double r2 = 0.0;
    for (int a = 0; a < g.d; ++a) r2 += z[a] * z[a];
    return r2;
}

}  // namespace

EnergyReport energy(const Field& W, const Field& Phi, const Field& U, const Parameters& params,
                    const WeightConstants& wc, const EnergyOptions& opts) {
    const Grid& g = W.grid;
    if (!W.finite() || !Phi.finite()) fail(ErrorCode::NonFiniteField, "non-finite energy input");
    const DerivedConstants dc = derive_constants(params);
    const int kt = opts.k_top;

    EnergyReport rep;
    rep.E.assign(kt + 1, 0.0);
    rep.F.assign(kt, 0.0);
    rep.bc_E.assign(kt + 1, 0.0);
    rep.bc_F.assign(kt, 0.0);

    // origin-vanishing precheck for the singular weights
    const OriginDerivs wo = derivatives_at_origin(W, 2);
    double origin_res = std::fabs(wo.value);
    for (int a = 0; a < g.d; ++a) origin_res = std::max(origin_res, std::fabs(wo.grad[a]));
    for (int a = 0; a < g.d; ++a)
        for (int b = 0; b < g.d; ++b) origin_res = std::max(origin_res, std::fabs(wo.hess_at(a, b)));
    rep.origin_vanishing_ok = origin_res <= opts.origin_fit_tol;

    const double rim2 = 0.81 * g.L * g.L;  // outermost 10% of radius
    auto split_integral = [&](const Field& f2, const std::function<double(double)>& w_of_r2,
                              double& total, double& rim_frac) {
        auto w_all = [&](const double* z) {
            double r2 = 0.0;
            for (int a = 0; a < g.d; ++a) r2 += z[a] * z[a];
            return w_of_r2(r2);
        };
        auto w_rim = [&](const double* z) {
            double r2 = 0.0;
            for (int a = 0; a < g.d; ++a) r2 += z[a] * z[a];
            return r2 >= rim2 ? w_of_r2(r2) : 0.0;
        };
        total = weighted_integral(f2, w_all);
        const double rim = weighted_integral(f2, w_rim);
        rim_frac = total > 0.0 ? rim / total : 0.0;
    };

    for (int k = 0; k <= kt; ++k) {
        const Field f2 = grad_k_sq(W, k);
        const WeightSpec spec = make_weight(WeightFamily::rho, k, params, kt, wc);
        double total = 0.0, frac = 0.0;
        split_integral(f2, [&](double r2) { return eval_weight(spec, params, dc, r2); }, total,
                       frac);
        rep.E[k] = std::sqrt(std::max(total, 0.0));
        rep.bc_E[k] = frac;
    }
    // ring weights; the top order needs the local U value, so fold U^2 rho_top
    // into the integrand instead of the weight callback.
    for (int k = 1; k <= kt; ++k) {
        Field f2 = grad_k_sq(Phi, k);
        const WeightSpec spec = make_weight(WeightFamily::ring_rho, k, params, kt, wc);
        double total = 0.0, frac = 0.0;
        if (k == kt) {
            const WeightSpec rho_top = make_weight(WeightFamily::rho, kt, params, kt, wc);
            for (std::size_t i = 0; i < f2.size(); ++i) f2.v[i] *= U.v[i] * U.v[i];
            split_integral(f2, [&](double r2) { return eval_weight(rho_top, params, dc, r2); },
                           total, frac);
        } else {
            split_integral(f2, [&](double r2) { return eval_weight(spec, params, dc, r2); }, total,
                           frac);
        }
        rep.F[k - 1] = std::sqrt(std::max(total, 0.0));
        rep.bc_F[k - 1] = frac;
    }
    const double e2 = rep.E[kt] * rep.E[kt] + rep.F[kt - 1] * rep.F[kt - 1] +
                      rep.F[0] * rep.F[0] / opts.nu1 + rep.E[0] * rep.E[0] / opts.nu2;
    rep.E_total = std::sqrt(e2);
    return rep;
}

EnergyReport energy_of_state(const RescaledState& state, const Parameters& params,
                             const WeightConstants& wc, const EnergyOptions& opts) {
    const Grid& g = state.U.grid;
    const Profile prof(params);
    Field W(g), Phi(g);
    for (std::size_t i = 0; i < W.size(); ++i) {
        const double r2 = radius2(g, i);
        W.v[i] = state.U.v[i] - prof.value_r2(r2);
        Phi.v[i] = state.Theta.v[i] - prof.theta_value_r2(r2, state.mod.tau);
    }
    EnergyReport rep = energy(W, Phi, state.U, params, wc, opts);
    rep.tau = state.mod.tau;
    return rep;
}

InitialDataReport validate_initial_data(const SpatialFn& u0, const SpatialFn& theta0,
                                        const Parameters& params, const Grid& grid, int k_top,
                                        double nu, double fd_scale) {
    const DerivedConstants dc = derive_constants(params);
    const Profile prof(params);
    InitialRescaling ir = initial_rescaling_fn(u0, theta0, params, grid, {}, fd_scale);

    InitialDataReport rep;
    rep.V0 = ir.mod.V;
    rep.H0 = ir.mod.H;
    rep.M0 = ir.mod.M;

    // pointwise lower bound of the rescaled amplitude
    double lbmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ir.U0.size(); ++i) {
        const double ub = prof.value_r2(radius2(grid, i));
        lbmin = std::min(lbmin, ir.U0.v[i] * std::pow(ub, -1.0 - dc.eps2));
    }
    rep.lower_bound_min = lbmin;
    rep.lower_bound_ok = lbmin > 2.0 * dc.C_b;

    rep.H0_pow = std::pow(ir.mod.H, params.p - 1.0);
    rep.H0_ok = rep.H0_pow < nu;

    // literal third condition: u0(V0)^{-p} tr(hess u0(V0)) < nu. The Hessian at a
    // maximum is negative definite, so the literal value is negative; both it
    // and its magnitude are reported.
    {
        const double uv = u0(rep.V0.data());
        // tr(hess) from the rescaling identity M^T M = H0 hess/kappa2
        const Eigen::MatrixXd M = ir.mod.M.mat();
        const Eigen::MatrixXd S = M.transpose() * M;  // = H0 hess/kappa2
        const double tr_hess = dc.kappa2 / ir.mod.H * S.trace();
        rep.trace_literal = std::pow(uv, -params.p) * tr_hess;
        rep.trace_abs = std::fabs(rep.trace_literal);
        rep.trace_ok = rep.trace_literal < nu;
    }

    // truncated norm proxies of the rescaled perturbations
    Field W(grid), Phi(grid), U0 = ir.U0;
    for (std::size_t i = 0; i < W.size(); ++i) {
        const double r2 = radius2(grid, i);
        W.v[i] = ir.U0.v[i] - prof.value_r2(r2);
        Phi.v[i] = ir.Theta0.v[i] - prof.theta_value_r2(r2, 0.0);
    }
    const WeightConstants wc = weight_constants(params, k_top);
    EnergyOptions opts;
    opts.k_top = k_top;
    const EnergyReport er = energy(W, Phi, U0, params, wc, opts);
    rep.W_norm = 0.0;
    for (double e : er.E) rep.W_norm += e;
    rep.Phi_norm = 0.0;
    for (double f : er.F) rep.Phi_norm += f;
    rep.norms_ok = rep.W_norm < nu && rep.Phi_norm < nu;
    rep.pass = rep.lower_bound_ok && rep.H0_ok && rep.trace_ok && rep.norms_ok;
    return rep;
}

std::vector<RateReport> rate_report(const std::vector<RateInputRow>& rows,
                                    const Parameters& params) {
    if (rows.size() < 2) fail(ErrorCode::InsufficientSeries, "need at least two series rows");
    const DerivedConstants dc = derive_constants(params);
    const double pm1 = params.p - 1.0;
    const std::size_t n = rows.size();

    // That - t(tau_k), accumulated backward from the final row. Forward
    // differences That - t lose all precision once H^{p-1} drops below the
    // ulp of t; the backward tail sums int H^{p-1} per report interval with an
    // exponential-fit quadrature (exact when H decays exponentially).
    std::vector<double> Hp(n), gap(n);
    for (std::size_t i = 0; i < n; ++i) Hp[i] = std::pow(rows[i].H, pm1);
    const double tau_f = rows.back().tau;
    gap[n - 1] = Hp[n - 1] * (tau_f > 0.0 ? 1.0 + dc.mu5 / tau_f : 1.0);
    for (std::size_t i = n - 1; i-- > 0;) {
        const double dtau = rows[i + 1].tau - rows[i].tau;
        double seg;
        if (Hp[i + 1] > 0.0 && Hp[i] > 0.0 && Hp[i + 1] != Hp[i] && dtau > 0.0) {
            const double lam = std::log(Hp[i] / Hp[i + 1]) / dtau;
            seg = (Hp[i] - Hp[i + 1]) / lam;
        } else {
            seg = 0.5 * (Hp[i] + Hp[i + 1]) * dtau;
        }
        gap[i] = gap[i + 1] + seg;
    }

    auto that_of = [&](const RateInputRow& r) {
        const double factor = r.tau > 0.0 ? 1.0 + dc.mu5 / r.tau : 1.0;
        return r.t + std::pow(r.H, pm1) * factor;
    };

    std::vector<RateReport> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = rows[i];
        RateReport rr;
        rr.tau = r.tau;
        rr.t = r.t;
        rr.That = that_of(r);
        rr.ratio_TH = gap[i] / Hp[i];
        rr.ratio_H = Hp[i] / gap[i];
        rr.ratio_pred = r.tau > 0.0 ? 1.0 + dc.mu5 / r.tau : 1.0;
        rr.trQ_tau_over_d = r.trQ * r.tau / params.d;
        rr.A_phase = params.delta * r.tau / pm1 + r.phi0;
        if (gap[i] > 0.0 && gap[i] < 1.0) {
            const double lg = std::log(gap[i]);
            rr.Abar_phase = -params.delta * lg / pm1 -
                            params.d * params.beta * (1.0 + params.delta * params.delta) *
                                std::log(std::fabs(lg)) / (2.0 * dc.flat_star);
        } else {
            rr.Abar_phase = std::numeric_limits<double>::quiet_NaN();
        }
        if (r.has_M && gap[i] > 0.0 && gap[i] < 1.0) {
            ModulationState ms(params.d);
            ms.tau = r.tau;
            ms.M = r.M;
            const Eigen::MatrixXd R = ms.R();
            const double scale = std::sqrt(gap[i] * std::fabs(std::log(gap[i])));
            const Eigen::MatrixXd D =
                R / scale - Eigen::MatrixXd::Identity(params.d, params.d);
            rr.R_scale_check = D.norm();
        } else {
            rr.R_scale_check = std::numeric_limits<double>::quiet_NaN();
        }
        rr.linf_profile_err = std::numeric_limits<double>::quiet_NaN();
        out.push_back(rr);
    }
    return out;
}

ProfileError linf_profile_error(const Field& U, const Field& Theta, double tau,
                                const Parameters& params) {
    const Grid& g = U.grid;
    const Profile prof(params);
    const DerivedConstants& dc = prof.constants();
    const double A = phase_tracker(Theta, tau, params) + params.delta * tau / (params.p - 1.0);
    ProfileError pe;
    const double half2 = 0.25 * g.L * g.L;
    for (std::size_t i = 0; i < U.size(); ++i) {
        const double r2 = radius2(g, i);
        const double ub = prof.value_r2(r2);
        pe.err_amp_weighted =
            std::max(pe.err_amp_weighted,
                     std::fabs((U.v[i] - ub) / std::pow(ub, 1.0 + dc.eps2)));
        if (r2 <= half2) {
            const double ph = Theta.v[i] - A;
            const double lph = params.delta * std::log(ub);
            const double dre = U.v[i] * std::cos(ph) - ub * std::cos(lph);
            const double dim = U.v[i] * std::sin(ph) - ub * std::sin(lph);
            pe.err_complex = std::max(pe.err_complex, std::hypot(dre, dim));
        }
    }
    return pe;
}

ProfileError linf_profile_error(const RescaledState& state, const Parameters& params) {
    return linf_profile_error(state.U, state.Theta, state.mod.tau, params);
}

CompareReport compare_runs(const RescaledRunData& rescaled, const PhysicalRunResult& physical,
                           const std::vector<double>& t_list, double z_box) {
    const Parameters& a = rescaled.params;
    const Parameters& b = physical.params;
    if (a.p != b.p || a.beta != b.beta || a.delta != b.delta || a.gamma != b.gamma || a.d != b.d)
        fail(ErrorCode::MismatchedParameters, "rescaled and physical runs use different parameters");

    CompareReport rep;
    for (double t : t_list) {
        const PhysicalSnapshot* snap = nullptr;
        for (const auto& s : physical.snapshots)
            if (std::fabs(s.t - t) <= 1e-10 * std::max(1.0, std::fabs(t))) snap = &s;
        if (!snap) fail(ErrorCode::OutOfRange, "no physical snapshot at a requested time");

        // physical nodes mapping into the rescaled box |z|_inf <= z_box
        std::vector<std::vector<double>> pts;
        std::vector<std::size_t> idx;
        const Grid& pg = snap->psi.grid;
        double z[2];
        for (std::size_t i = 0; i < snap->psi.size(); ++i) {
            pg.node_coords(i, z);
            pts.push_back(std::vector<double>(z, z + pg.d));
            idx.push_back(i);
        }
        const auto rec = reconstruct_from_rescaled(rescaled, pts, t);

        // need z for the box test: recompute through the same modulation map is
        // internal to reconstruct; approximate the box by |x - V|/scale. Instead,
        // select by reconstruct flag and by the rescaled coordinate computed here.
        double err = 0.0, ref = 0.0;
        int n_used = 0;
        // reconstruct exposes only values; recompute z via the closest snapshot
        const RescaledSnapshot* rs = nullptr;
        for (const auto& s : rescaled.snapshots)
            if (!rs || std::fabs(s.t - t) < std::fabs(rs->t - t)) rs = &s;
        ModulationState ms(a.d);
        ms.tau = rs->tau;
        ms.M = rs->M;
        const Eigen::MatrixXd Rinv = std::exp(0.5 * rs->tau) * rs->M.mat();
        for (std::size_t k = 0; k < pts.size(); ++k) {
            if (!rec[k].ok) continue;
            double zr[2] = {0.0, 0.0};
            for (int ia = 0; ia < a.d; ++ia)
                for (int ib = 0; ib < a.d; ++ib) zr[ia] += Rinv(ia, ib) * (pts[k][ib] - rs->V[ib]);
            bool inbox = true;
            for (int ia = 0; ia < a.d; ++ia) inbox = inbox && std::fabs(zr[ia]) <= z_box;
            if (!inbox) continue;
            const std::size_t i = idx[k];
            const double pr = snap->psi.re[i], pi = snap->psi.im[i];
            err = std::max(err, std::hypot(rec[k].value.real() - pr, rec[k].value.imag() - pi));
            ref = std::max(ref, std::hypot(pr, pi));
            ++n_used;
        }
        if (n_used == 0) fail(ErrorCode::OutOfRange, "comparison box contains no points");
        CompareRow row;
        row.t = t;
        row.rel_err = err / std::max(ref, 1e-300);
        row.n_points = n_used;
        rep.rows.push_back(row);
        rep.worst = std::max(rep.worst, row.rel_err);
    }
    return rep;
}

}  // namespace cgl
