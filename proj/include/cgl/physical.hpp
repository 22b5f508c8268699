#ifndef CGL_PHYSICAL_HPP
#define CGL_PHYSICAL_HPP

#include <complex>
#include <string>

#include "cgl/rescaled.hpp"

namespace cgl {

// psi on a truncated physical domain, Cartesian Re/Im parts.
struct ComplexField {
    Grid grid;
    std::vector<double> re, im;

    ComplexField() = default;
    explicit ComplexField(const Grid& g) : grid(g), re(g.size(), 0.0), im(g.size(), 0.0) {}
    std::size_t size() const { return re.size(); }
    double abs_at(std::size_t i) const { return std::hypot(re[i], im[i]); }
    double max_abs() const;
    bool finite() const;
};

// (1+i beta) Lap psi + (1+i delta)|psi|^{p-1} psi - gamma psi, 6th-order
// Laplacian. periodic=true wraps the Laplacian (constant-mode oracle runs);
// otherwise ghost values come from quadratic extrapolation.
ComplexField physical_rhs(const ComplexField& psi, const Parameters& params,
                          bool periodic = false);

struct PhysicalSeriesRow {
    double t = 0.0;
    double amp_max = 0.0;
    std::vector<double> amp_argmax;
    double dt = 0.0;
};

struct PhysicalSnapshot {
    double t = 0.0;
    ComplexField psi;
};

struct PhysicalRunOptions {
    double t_end = 1.0;
    double amp_stop = 1e12;
    bool periodic = false;
    double C_diff = 0.2;
    double C_nl = 0.05;
    int record_every = 1;
    std::vector<double> snapshot_times;
    double boundary_decay_tol = 1e-8;  // precondition |psi0|_boundary <= tol * max|psi0|
};

struct PhysicalRunResult {
    Parameters params;
    std::vector<PhysicalSeriesRow> series;
    std::vector<PhysicalSnapshot> snapshots;
    std::string outcome;  // completed | amp_stop | dt_collapse | nonfinite
};

PhysicalRunResult physical_run(const ComplexField& psi0, const Parameters& params,
                               const PhysicalRunOptions& opts);

// Change-of-variables comparator: psi(x, t) = H^{-1} U(R^{-1}(x-V)) e^{i Theta(R^{-1}(x-V))}
// from the stored snapshots of a rescaled run. Off-snapshot times interpolate
// the modulation geometrically (log H, M, V linear in tau) and blend fields.
struct ReconstructedValue {
    std::complex<double> value{0.0, 0.0};
    bool ok = false;  // false: point outside the rescaled domain
};

std::vector<ReconstructedValue> reconstruct_from_rescaled(const RescaledRunData& run,
                                                          const std::vector<std::vector<double>>& x_points,
                                                          double t_query);

// Least-squares fit of |psi|_inf^{-(p-1)}/(p-1) ~ T - t over the last decade of
// growth; rate_check is the RMS relative residual of that linear model.
struct BlowupFit {
    double T_fit = 0.0;
    double rate_check = 0.0;
};

BlowupFit fit_blowup_rate(const std::vector<std::pair<double, double>>& amp_series,
                          const Parameters& params);

}  // namespace cgl

#endif
