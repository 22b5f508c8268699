#ifndef CGL_MODULATION_HPP
#define CGL_MODULATION_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "cgl/grid.hpp"
#include "cgl/params.hpp"
#include "cgl/profile.hpp"

namespace cgl {

// Upper-triangular d x d matrix with only the d(d+1)/2 upper entries stored,
// so upper-triangularity is exact by representation.
struct UpperTri {
    int d = 1;
    std::vector<double> a;  // row-major upper entries: (0,0),(0,1),...,(1,1),...

    UpperTri() : a(1, 0.0) {}
    explicit UpperTri(int d_) : d(d_), a(d_ * (d_ + 1) / 2, 0.0) {}
    static UpperTri identity(int d_);

    int slot(int i, int j) const;  // valid for i <= j
    double at(int i, int j) const { return i > j ? 0.0 : a[slot(i, j)]; }
    void set(int i, int j, double v);

    Eigen::MatrixXd mat() const;
    static UpperTri from_upper(const Eigen::MatrixXd& m);  // reads the upper part
    UpperTri operator*(const UpperTri& o) const;
    double min_diag() const;
};

// Everything needed to map rescaled <-> physical variables. R = e^{-tau/2} M^{-1}.
struct ModulationState {
    double tau = 0.0;
    double t = 0.0;
    double H = 1.0;
    std::vector<double> V;
    UpperTri M;
    double phi0 = 0.0;  // Phi(0, tau), the phase tracker

    ModulationState() : V(1, 0.0), M(UpperTri::identity(1)) {}
    explicit ModulationState(int d) : V(d, 0.0), M(UpperTri::identity(d)) {}

    Eigen::MatrixXd R() const;
};

// Rates (c_W, Vcal, Pcal) fixed by the origin normalization conditions.
struct ModulationRates {
    double c_W = 0.0;
    double c_U = 0.0;
    std::vector<double> Vcal;
    UpperTri Pcal;

    ModulationRates() : Vcal(1, 0.0), Pcal(1) {}
    explicit ModulationRates(int d) : Vcal(d, 0.0), Pcal(d) {}
};

struct QMatrix {
    Eigen::MatrixXd m;

    int d() const { return static_cast<int>(m.rows()); }
    double trace() const { return m.trace(); }
    double det() const { return m.determinant(); }
    void eigenvalues(double& lam_min, double& lam_max) const;
    bool positive_definite() const;
};

// --- initial rescaling -------------------------------------------------------

using SpatialFn = std::function<double(const double*)>;

struct InitialRescaling {
    ModulationState mod;
    Field U0;
    Field Theta0;
};

// Function-based path: u0/theta0 are callables on R^d (exact resampling, with
// grid-consistent projection of the origin normalization). V_guess seeds the
// maximizer search; fd_scale is the differencing scale of the seed search.
InitialRescaling initial_rescaling_fn(const SpatialFn& u0, const SpatialFn& theta0,
                                      const Parameters& params, const Grid& grid,
                                      const std::vector<double>& V_guess = {},
                                      double fd_scale = 1e-2);

// Field-based path: maximizer refined by Newton steps on interpolated
// derivative fields; out-of-range resample points use the far-field power law.
InitialRescaling initial_rescaling(const Field& u0, const Field& theta0,
                                   const Parameters& params);

// --- closure -----------------------------------------------------------------

// Origin derivative data feeding the normalization closure.
struct ClosureInput {
    OriginDerivs U;      // order 4
    OriginDerivs Theta;  // order 4
};

ModulationRates closure_rates(const ClosureInput& in, const QMatrix& Q, double H,
                              const Parameters& params);

// --- evolution ---------------------------------------------------------------

// One RK4 step of H_tau = c_U H (via log H), M_tau = Pcal M, V_tau = -R Vcal,
// t_tau = H^{p-1}, with the rates frozen over the step.
ModulationState advance_modulation(const ModulationState& state, const ModulationRates& rates,
                                   double dtau, const Parameters& params);

QMatrix q_of(const ModulationState& state, const Parameters& params);

// One RK4 step of the leading-order matrix ODE
//   Q_tau = -(Q_u + Q_d/2) Q - Q (Q_u^T + Q_d/2).
QMatrix reduced_q_step(const QMatrix& Q, double dtau);

struct Predictors {
    double trQ_pred = 0.0;
    double cW_pred = 0.0;
    double rate_pred = 0.0;
};

Predictors predictors(double tau, const Parameters& params);

}  // namespace cgl

#endif
