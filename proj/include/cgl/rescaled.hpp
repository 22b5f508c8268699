#ifndef CGL_RESCALED_HPP
#define CGL_RESCALED_HPP

#include "cgl/modulation.hpp"

namespace cgl {

// Full simulator state of the rescaled system.
struct RescaledState {
    Field U;
    Field Theta;
    ModulationState mod;
};

struct MonitorFlags {
    bool lower_bound_ok = true;   // U >= C_b Ubar^{1+eps2} pointwise
    bool detQ_positive = true;
    bool energies_bounded = true;
    double cfl_dt = 0.0;          // last stable step size
};

// Viscous terms of the rescaled system:
//   D_U     = Lap_Q U - 2 beta <grad U, grad Theta>_Q - U <grad Theta, grad Theta>_Q
//             - beta U Lap_Q Theta
//   D_Theta = beta Lap_Q U / U + 2 <grad U, grad Theta>_Q / U
//             - beta <grad Theta, grad Theta>_Q + Lap_Q Theta
// with Lap_Q f = tr(Q grad^2 f), far field closed by power-law/log ghosts.
void viscous_terms(const Field& U, const Field& Theta, const QMatrix& Q, const Parameters& params,
                   Field& D_U, Field& D_Theta);

// Right-hand sides
//   U_tau     = c_U U - (z/2 + P z + Vcal).grad U + U^p - H^{p-1} gamma U + D_U
//   Theta_tau = -(z/2 + P z + Vcal).grad Theta + delta U^{p-1} + D_Theta
// advection uses 5th-order upwind-biased stencils oriented by the local
// velocity sign.
void rhs(const RescaledState& state, const ModulationRates& rates, const QMatrix& Q,
         const Parameters& params, Field& dU, Field& dTheta);

// Origin data + closure for the current fields.
ModulationRates closure_for(const Field& U, const Field& Theta, const QMatrix& Q, double H,
                            const Parameters& params);

struct StepResult {
    RescaledState state;
    ModulationRates rates;  // rates at the step start (reported)
    double dtau = 0.0;
};

// One explicit RK4 step with stage-consistent closure. The accepted step is
// min(dtau_hint, 0.5 h / v_max, 0.25 h^2 / |Q|, 0.01).
StepResult step(const RescaledState& state, const Parameters& params, double dtau_hint);

// Renormalization projection: re-imposes U(0)=kappa0, grad U(0)=0,
// grad^2 U(0)=kappa2 I by composing a small symmetry correction (h, v, m) into
// (H, V, M) and resampling the fields. Iterates until the measured residual is
// <= tol (or stops improving).
struct RenormalizeResult {
    RescaledState state;
    double residual = 0.0;     // post-projection normalization residual
    double correction = 0.0;   // magnitude of the applied correction
};

RenormalizeResult renormalize(const RescaledState& state, const Parameters& params,
                              double tol = 1e-10);

// Measured normalization residual max(|U(0)-kappa0|, |grad U(0)|, |grad^2 U(0)-kappa2 I|).
double normalization_residual(const Field& U, const Parameters& params);

// min over nodes of U / Ubar^{1+eps2} (bootstrap lower-bound monitor).
double min_U_ratio(const Field& U, const Parameters& params);

// Current phase tracker Phi(0, tau) = Theta(0) - delta tau/(p-1) - delta log kappa0.
double phase_tracker(const Field& Theta, double tau, const Parameters& params);

// --- run artifacts -----------------------------------------------------------

// One scalar-series row, in the exact order of the series CSV schema.
struct SeriesRow {
    double tau = 0.0, t = 0.0, H = 0.0, cW = 0.0, cU = 0.0;
    double trQ = 0.0, detQ = 0.0, lam_min = 0.0, lam_max = 0.0;
    std::vector<double> V;
    double E0 = 0.0, Ektop = 0.0, F1 = 0.0, Fktop = 0.0, Etotal = 0.0;
    double min_U_ratio = 0.0, phi0 = 0.0, That_estimate = 0.0;
};

struct RescaledSnapshot {
    double tau = 0.0, t = 0.0, H = 1.0, phi0 = 0.0;
    std::vector<double> V;
    UpperTri M;
    Field U, Theta;
};

// Aggregated bootstrap-monitor summary of a run.
struct MonitorSummary {
    double max_norm_residual_at_report = 0.0;
    double min_U_ratio_min = 1e300;
    double detQ_min = 1e300;
    bool lower_bound_ok = true;
    bool energies_bounded = true;
    double max_projection_correction = 0.0;
    double last_cfl_dt = 0.0;
    long total_steps = 0;
};

struct RescaledRunData {
    Parameters params;
    Grid grid;
    int k_top = 4;
    std::vector<SeriesRow> series;
    std::vector<RescaledSnapshot> snapshots;
    MonitorSummary monitors;
    std::string outcome;
};

}  // namespace cgl

#endif
