#ifndef CGL_DIAGNOSTICS_HPP
#define CGL_DIAGNOSTICS_HPP

#include "cgl/physical.hpp"
#include "cgl/rescaled.hpp"

namespace cgl {

// Weighted H^k energies of the perturbations:
//   E_k^2 = int |grad^k W|^2 rho_k,   F_k^2 = int |grad^k Phi|^2 ring-rho_k,
// E_total^2 = E_top^2 + F_top^2 + F_1^2/nu1 + E_0^2/nu2. boundary_contamination
// is the fraction of each integral carried by the outermost 10% of radius.
struct EnergyReport {
    double tau = 0.0;
    std::vector<double> E;     // k = 0..k_top
    std::vector<double> F;     // k = 1..k_top (F[0] is F_1)
    double E_total = 0.0;
    std::vector<double> bc_E;
    std::vector<double> bc_F;
    bool origin_vanishing_ok = true;  // W vanishes to 3rd order at 0 (fit tolerance)
};

struct EnergyOptions {
    int k_top = 4;
    double nu1 = 0.1;
    double nu2 = 0.01;
    double origin_fit_tol = 1e-4;
};

EnergyReport energy(const Field& W, const Field& Phi, const Field& U, const Parameters& params,
                    const WeightConstants& wc, const EnergyOptions& opts);

// Convenience: W = U - Ubar, Phi = Theta - Thetabar(tau) from a rescaled state.
EnergyReport energy_of_state(const RescaledState& state, const Parameters& params,
                             const WeightConstants& wc, const EnergyOptions& opts);

// --- initial-data validation ---------------------------------------------------

struct InitialDataReport {
    std::vector<double> V0;
    double H0 = 0.0;
    UpperTri M0;
    double lower_bound_min = 0.0;  // min U0 Ubar^{-1-eps2}
    bool lower_bound_ok = false;   // > 2 C_b
    double H0_pow = 0.0;           // H0^{p-1}
    bool H0_ok = false;            // < nu
    double trace_literal = 0.0;    // u0(V0)^{-p} tr(hess u0(V0)), reported verbatim
    double trace_abs = 0.0;
    bool trace_ok = false;         // literal < nu (vacuous for admissible data)
    double W_norm = 0.0;           // truncated-norm proxy sum_k E_k(W0)
    double Phi_norm = 0.0;         // sum_k F_k(Phi0)
    bool norms_ok = false;
    bool pass = false;
};

InitialDataReport validate_initial_data(const SpatialFn& u0, const SpatialFn& theta0,
                                        const Parameters& params, const Grid& grid, int k_top,
                                        double nu, double fd_scale = 1e-2);

// --- rate & phase reports --------------------------------------------------------

struct RateReport {
    double tau = 0.0, t = 0.0;
    double That = 0.0;            // per-row extrapolation t + H^{p-1}(1 + mu5/tau)
    double ratio_TH = 0.0;        // (That_final - t)/H^{p-1}; predicted by ratio_pred
    double ratio_H = 0.0;         // H^{p-1}/(That_final - t)
    double ratio_pred = 0.0;      // 1 + mu5/tau
    double trQ_tau_over_d = 0.0;
    double R_scale_check = 0.0;   // |R/sqrt((That-t)|log(That-t)|) - I|, NaN w/o M data
    double A_phase = 0.0;         // delta tau/(p-1) + phi0
    double Abar_phase = 0.0;      // paper asymptotic phase
    double linf_profile_err = 0.0;  // filled when snapshots are available
};

// Input rows for rate reports; M is optional (known at snapshot times).
struct RateInputRow {
    double tau = 0.0, t = 0.0, H = 0.0, trQ = 0.0, phi0 = 0.0;
    bool has_M = false;
    UpperTri M;
};

std::vector<RateReport> rate_report(const std::vector<RateInputRow>& rows,
                                    const Parameters& params);

// --- profile convergence ---------------------------------------------------------

struct ProfileError {
    double err_amp_weighted = 0.0;  // sup |(U-Ubar)/Ubar^{1+eps2}|
    double err_complex = 0.0;       // sup_{|z|<=L/2} |U e^{i(Theta-A)} - Ubar^{1+i delta}|
};

ProfileError linf_profile_error(const RescaledState& state, const Parameters& params);
ProfileError linf_profile_error(const Field& U, const Field& Theta, double tau,
                                const Parameters& params);

// --- run comparison ---------------------------------------------------------------

struct CompareRow {
    double t = 0.0;
    double rel_err = 0.0;
    int n_points = 0;
};

struct CompareReport {
    std::vector<CompareRow> rows;
    double worst = 0.0;
};

// Compares reconstruct_from_rescaled against stored physical snapshots at the
// given times, over physical points mapping into the rescaled box |z|_inf <= z_box.
CompareReport compare_runs(const RescaledRunData& rescaled, const PhysicalRunResult& physical,
                           const std::vector<double>& t_list, double z_box);

}  // namespace cgl

#endif
