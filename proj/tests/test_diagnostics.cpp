#include <cmath>
#include <complex>
#include <functional>

#include "cgl/diagnostics.hpp"
#include "cgl/run.hpp"
#include "doctest.h"

using namespace cgl;

namespace {

Field sample_profile(const Grid& g, const Profile& prof) {
    return sample(g, [&](const double* z) {
        double r2 = 0.0;
        for (int a = 0; a < g.d; ++a) r2 += z[a] * z[a];
        return prof.value_r2(r2);
    });
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("energies of the zero perturbation vanish") {
    const Parameters p = validate_params(2, 0.5, 0.2, 0, 1);
    const Grid g(1, 30.0, 241);
    const Profile prof(p);
    const Field U = sample_profile(g, prof);
    const WeightConstants wc = weight_constants(p, 4);
    EnergyOptions opts;
    const EnergyReport er = energy(Field(g), Field(g), U, p, wc, opts);
    for (double e : er.E) CHECK(e == 0.0);
    for (double f : er.F) CHECK(f == 0.0);
    CHECK(er.E_total == 0.0);
    CHECK(er.origin_vanishing_ok);
}

TEST_CASE("energies are absolutely homogeneous") {
    const Parameters p = validate_params(2, 0.5, 0.2, 0, 1);
    const Grid g(1, 30.0, 481);
    const Profile prof(p);
    const Field U = sample_profile(g, prof);
    const WeightConstants wc = weight_constants(p, 4);
    EnergyOptions opts;
    const Field W = sample(g, [](const double* z) {
        const double r2 = z[0] * z[0];
        return r2 * r2 * std::exp(-r2);  // vanishes to 4th order at 0
    });
    const Field Phi = sample(g, [](const double* z) { return std::exp(-z[0] * z[0]); });
    const EnergyReport e1 = energy(W, Phi, U, p, wc, opts);
    Field W3 = W, Phi3 = Phi;
    const double c = -3.7;
    for (auto& x : W3.v) x *= c;
    for (auto& x : Phi3.v) x *= c;
    const EnergyReport e3 = energy(W3, Phi3, U, p, wc, opts);
    for (std::size_t k = 0; k < e1.E.size(); ++k)
        CHECK(e3.E[k] == doctest::Approx(std::fabs(c) * e1.E[k]).epsilon(1e-12));
    for (std::size_t k = 0; k < e1.F.size(); ++k)
        CHECK(e3.F[k] == doctest::Approx(std::fabs(c) * e1.F[k]).epsilon(1e-12));
}

TEST_CASE("E0 of a cubic-vanishing input is finite; quartic input is refinement-Cauchy") {
    const Parameters p = validate_params(2, 0, 0, 0, 1);
    const Profile prof(p);
    const WeightConstants wc = weight_constants(p, 4);
    EnergyOptions opts;
    auto e0_of = [&](int n, double pw) {
        const Grid g(1, 30.0, n);
        const Field W = sample(g, [&](const double* z) {
            const double r = std::fabs(z[0]);
            return std::pow(r, pw) * std::exp(-r * r);
        });
        const Field U = sample_profile(g, prof);
        return energy(W, Field(g), U, p, wc, opts).E[0];
    };
    // |z|^3 e^{-|z|^2}: finite at every h; grows only logarithmically under
    // refinement (the |z|^{eps-1} origin mass), so it is NOT 1%-Cauchy
    const double c1 = e0_of(961, 3.0), c2 = e0_of(1921, 3.0);
    CHECK(std::isfinite(c1));
    CHECK(c2 > c1);
    CHECK(c2 / c1 < 1.15);
    // |z|^4 e^{-|z|^2}: bounded integrand, Cauchy within 1% per halving
    const double q1 = e0_of(961, 4.0), q2 = e0_of(1921, 4.0);
    CHECK(std::fabs(q2 - q1) <= 0.01 * q1);
}

TEST_CASE("state-based energies decay along a healthy stretch") {
    // short run from slightly perturbed data; E_total at tau=2 < E_total at tau=0.5
    RunConfig cfg;
    cfg.p = 2;
    cfg.beta = 0.5;
    cfg.delta = 0.2;
    cfg.d = 1;
    cfg.L = 15;
    cfg.n = 481;
    cfg.tau_end = 8.0;
    cfg.report_every = 1.0;
    cfg.kind = "profile_scaled";
    cfg.amplitude = 1.5;
    cfg.H_scale = 1e-3;
    cfg.dir = "";
    const RescaledRunData run = run_rescaled(cfg, false);
    REQUIRE(run.outcome == "completed");
    REQUIRE(run.series.size() >= 8);
    // the Q-forced transient peaks early; by tau in [3, 8] the energy decays
    CHECK(run.series.back().Etotal < run.series[3].Etotal);
}

TEST_CASE("validate_initial_data: profile data passes after H-prescaling") {
    RunConfig cfg;
    cfg.p = 2;
    cfg.beta = 0.5;
    cfg.delta = 0.2;
    cfg.d = 1;
    cfg.amplitude = 10.0;  // u0 = 10 Ubar
    cfg.H_scale = 0.01;
    cfg.dir = "";
    const InitialDataReport rep = validate_from_config(cfg);
    CHECK(rep.pass);
    CHECK(rep.H0_pow == doctest::Approx(0.01).epsilon(1e-9));
    CHECK(rep.lower_bound_ok);
    CHECK(rep.trace_literal < 0.0);  // Hessian at a max: literal value negative
    CHECK(rep.W_norm <= 1e-6);  // grid-projected rescaling leaves no low-order modes
    // without prescaling, H0^{p-1} = 0.1 is not < nu = 0.1
    RunConfig raw = cfg;
    raw.H_scale = 0.0;
    const InitialDataReport rep2 = validate_from_config(raw);
    CHECK(!rep2.H0_ok);
}

TEST_CASE("validate_initial_data: constructed lower-bound violation is reported") {
    const Parameters p = validate_params(2, 0.5, 0.2, 0, 1);
    const Profile prof(p);
    const Grid g(1, 30.0, 961);
    auto u0 = [&](const double* x) {
        const double r2 = x[0] * x[0];
        // smooth even dip centered at |z| = 3 taking the amplitude to 45%
        const double dip = 1.0 - 0.55 * std::exp(-(r2 - 9.0) * (r2 - 9.0) / 16.0);
        return prof.value_r2(r2) * dip;
    };
    auto th0 = [&](const double* x) { return prof.theta_value_r2(x[0] * x[0], 0.0); };
    const InitialDataReport rep = validate_initial_data(u0, th0, p, g, 4, 0.1);
    CHECK(!rep.lower_bound_ok);
    CHECK(!rep.pass);
}

TEST_CASE("validate_initial_data: translation covariance") {
    const Parameters p = validate_params(2, 0.5, 0.2, 0, 1);
    const Profile prof(p);
    const Grid g(1, 30.0, 961);
    const double b = 0.4;
    auto u0 = [&](const double* x) { return prof.value_r2(x[0] * x[0]); };
    auto u0b = [&](const double* x) { return prof.value_r2((x[0] - b) * (x[0] - b)); };
    auto th0 = [&](const double* x) { return prof.theta_value_r2(x[0] * x[0], 0.0); };
    auto th0b = [&](const double* x) { return prof.theta_value_r2((x[0] - b) * (x[0] - b), 0.0); };
    const InitialDataReport r1 = validate_initial_data(u0, th0, p, g, 4, 0.1);
    const InitialDataReport r2 = validate_initial_data(u0b, th0b, p, g, 4, 0.1);
    CHECK(r2.V0[0] == doctest::Approx(b).epsilon(1e-8));
    CHECK(std::fabs(r1.V0[0]) <= 1e-8);
    CHECK(r1.H0 == doctest::Approx(r2.H0).epsilon(1e-9));
    CHECK(std::fabs(r1.W_norm - r2.W_norm) <= 1e-6);
    CHECK(r1.lower_bound_min == doctest::Approx(r2.lower_bound_min).epsilon(1e-6));
}

TEST_CASE("rate_report: geometric synthetic series") {
    const Parameters p = validate_params(2, 0.5, 0.2, 0, 1);
    const DerivedConstants dc = derive_constants(p);
    std::vector<RateInputRow> rows;
    for (int i = 0; i <= 40; ++i) {
        RateInputRow r;
        r.tau = 1.0 + i * 0.5;
        r.H = std::exp(-r.tau);  // H^{p-1} = e^{-tau} for p = 2
        r.t = 1.0 - std::exp(-r.tau);
        r.trQ = 1.0 / r.tau;
        r.phi0 = 0.0;
        rows.push_back(r);
    }
    const auto reps = rate_report(rows, p);
    // with the mu5-truncated extrapolation, That = 1 + e^{-tau} mu5/tau exactly
    for (std::size_t i = 0; i < reps.size(); ++i) {
        const double expect = 1.0 + std::exp(-rows[i].tau) * dc.mu5 / rows[i].tau;
        CHECK(reps[i].That == doctest::Approx(expect).epsilon(1e-14));
        CHECK(reps[i].trQ_tau_over_d == doctest::Approx(1.0).epsilon(1e-13));
    }
    // beta = 0 kills the log-log term: Abar = -delta log(That - t)/(p-1)
    const Parameters p0 = validate_params(2, 0.0, 0.2, 0, 1);
    const auto reps0 = rate_report(rows, p0);
    const auto& last = reps0[20];
    const double gap = reps0.back().That - last.t;
    CHECK(last.Abar_phase ==
          doctest::Approx(-p0.delta * std::log(gap) / (p0.p - 1.0)).epsilon(1e-10));
    CHECK_THROWS_AS(rate_report({rows[0]}, p), Error);
}

TEST_CASE("linf_profile_error: matched gauge is exact, amplitude bump scales") {
    const Parameters p = validate_params(2, 0.5, 0.2, 0, 1);
    const DerivedConstants dc = derive_constants(p);
    const Profile prof(p);
    const Grid g(1, 30.0, 961);
    RescaledState s;
    s.U = sample_profile(g, prof);
    s.Theta = sample(g, [&](const double* z) {
        return prof.theta_value_r2(z[0] * z[0], 3.0) + 0.77;  // arbitrary gauge shift
    });
    s.mod = ModulationState(1);
    s.mod.tau = 3.0;
    const ProfileError pe = linf_profile_error(s, p);
    CHECK(pe.err_complex <= 1e-12);
    CHECK(pe.err_amp_weighted <= 1e-12);

    RescaledState s2 = s;
    const double eps = 1e-3;
    for (auto& u : s2.U.v) u *= 1.0 + eps;
    const ProfileError pe2 = linf_profile_error(s2, p);
    CHECK(pe2.err_complex == doctest::Approx(eps * dc.kappa0).epsilon(1e-6));
}

TEST_CASE("compare_runs: self-consistency and parameter guard") {
    const Parameters p = validate_params(2, 0.5, 0.2, 0, 1);
    const Profile prof(p);
    const Grid g(1, 30.0, 961);

    RescaledRunData run;
    run.params = p;
    run.grid = g;
    RescaledSnapshot snap;
    snap.tau = 0.0;
    snap.t = 0.125;
    snap.H = 1.0;
    snap.V = {0.0};
    snap.M = UpperTri::identity(1);
    snap.U = sample_profile(g, prof);
    snap.Theta = sample(g, [&](const double* z) { return prof.theta_value_r2(z[0] * z[0], 0.0); });
    run.snapshots.push_back(snap);

    // physical snapshot built from the reconstruction itself
    const Grid pg = Grid::physical(1, 8.0, 257);
    PhysicalRunResult phys;
    phys.params = p;
    PhysicalSnapshot ps;
    ps.t = 0.125;
    ps.psi = ComplexField(pg);
    std::vector<std::vector<double>> pts;
    double z[2];
    for (std::size_t i = 0; i < ps.psi.size(); ++i) {
        pg.node_coords(i, z);
        pts.push_back({z[0]});
    }
    const auto rec = reconstruct_from_rescaled(run, pts, 0.125);
    for (std::size_t i = 0; i < ps.psi.size(); ++i) {
        ps.psi.re[i] = rec[i].value.real();
        ps.psi.im[i] = rec[i].value.imag();
    }
    phys.snapshots.push_back(ps);

    const CompareReport rep = compare_runs(run, phys, {0.125}, 5.0);
    CHECK(rep.worst <= 1e-8);
    CHECK(rep.rows[0].n_points > 50);

    PhysicalRunResult mismatched = phys;
    mismatched.params = validate_params(2, 0.4, 0.2, 0, 1);
    CHECK_THROWS_AS(compare_runs(run, mismatched, {0.125}, 5.0), Error);
}

}  // TEST_SUITE
