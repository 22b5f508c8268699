#ifndef CGL_PARAMS_HPP
#define CGL_PARAMS_HPP

#include <string>

#include "cgl/error.hpp"

namespace cgl {

// Model tuple for psi_t = (1+i*beta) Lap psi + (1+i*delta)|psi|^{p-1} psi - gamma psi.
// Construction goes through validate_params(); a Parameters value is always in
// the subcritical range flat_star = p - delta^2 - beta*delta*(p+1) > 0, p > 1.
struct Parameters {
    double p = 2.0;
    double beta = 0.0;
    double delta = 0.0;
    double gamma = 0.0;
    int d = 1;
};

inline double flat_star(double p, double beta, double delta) {
    return p - delta * delta - beta * delta * (p + 1.0);
}

Parameters validate_params(double p, double beta, double delta, double gamma, int d);

// Closed-form constants of the blowup profile and of the weighted-energy setup.
//   kappa0 = Ubar(0), kappa2 = d^2/dz1^2 Ubar(0), kappa4 = d^4/dz1^4 Ubar(0)
//   mu_phase = -beta(1+delta^2)/(2 flat_star)   (phase log-log coefficient)
//   mu5      = 2(1-beta*delta) d c_p/(p-1)      (blowup-rate 1/tau coefficient)
//   K, eps, eps2 follow the fixed order: K first, then eps, then eps2.
//   C_b = kappa0^{-eps2}/4 (amplitude lower-bound constant; min_{|z|<=1} Ubar^{-eps2} is at 0).
struct DerivedConstants {
    double flat_star = 0.0;
    double c_p = 0.0;
    double sigma = 0.0;
    double kappa0 = 0.0;
    double kappa2 = 0.0;
    double kappa4 = 0.0;
    double mu_phase = 0.0;
    double mu5 = 0.0;
    double sigma_prime = 0.0;
    int K = 0;
    double eps = 0.0;
    double eps2 = 0.0;
    double C_b = 0.0;
};

DerivedConstants derive_constants(const Parameters& params);

// Weight-family constants c0 (singular family rho_k) and c1 (regular family).
// Both are fixed deterministically: largest admissible value by bisection, then halved.
struct WeightConstants {
    double c0 = 0.0;
    double c1 = 0.0;
};

double weight_c0(const Parameters& params);
double weight_c1(const Parameters& params, int k_top);
WeightConstants weight_constants(const Parameters& params, int k_top);

}  // namespace cgl

#endif
