#include "cgl/params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cgl {

Parameters validate_params(double p, double beta, double delta, double gamma, int d) {
    if (!std::isfinite(p) || !std::isfinite(beta) || !std::isfinite(delta) || !std::isfinite(gamma))
        fail(ErrorCode::NonFiniteInput, "model parameters must be finite");
    if (d < 1) fail(ErrorCode::BadExponent, "dimension d must be a positive integer");
    if (!(p > 1.0)) {
        std::ostringstream os;
        os << "exponent p = " << p << " must satisfy p > 1";
        fail(ErrorCode::BadExponent, os.str());
    }
    const double fs = flat_star(p, beta, delta);
    if (!(fs > 0.0)) {
        std::ostringstream os;
        os << "parameters outside the subcritical range: flat_star = " << fs << " <= 0";
        fail(ErrorCode::SupercriticalOrCritical, os.str());
    }
    return Parameters{p, beta, delta, gamma, d};
}

DerivedConstants derive_constants(const Parameters& params) {
    const double p = params.p;
    DerivedConstants c;
    c.flat_star = flat_star(p, params.beta, params.delta);
    c.c_p = (p - 1.0) * (p - 1.0) / (4.0 * c.flat_star);
    c.sigma = -2.0 / (p - 1.0);
    c.kappa0 = std::pow(p - 1.0, -1.0 / (p - 1.0));
    c.kappa2 = -2.0 * c.c_p * c.kappa0 / ((p - 1.0) * (p - 1.0));
    c.kappa4 = 12.0 * p * c.c_p * c.c_p * c.kappa0 / std::pow(p - 1.0, 4);
    c.mu_phase = -params.beta * (1.0 + params.delta * params.delta) / (2.0 * c.flat_star);
    c.mu5 = 2.0 * (1.0 - params.beta * params.delta) * params.d * c.c_p / (p - 1.0);
    c.sigma_prime = std::min(1.0, 4.0 / (p - 1.0));
    c.K = 2 * params.d + 4 + 2 * static_cast<int>(std::ceil((p + 1.0) / std::min(p - 1.0, c.c_p)));
    const double denom = 5.0 * (p + 3.0) * (c.K + p);
    c.eps = std::min((p - 1.0) / denom, 4.0 / denom);
    c.eps2 = (p - 1.0) * c.eps / 4.0;
    c.C_b = std::pow(c.kappa0, -c.eps2) / 4.0;
    return c;
}

namespace {

// log(LHS) - log(RHS) of the c0 admissibility inequality; decreasing in log(c0),
// so the equality point is a bisection root.
double c0_margin(double log_c0, double p, double eps, double c_p) {
    const double a = 6.0 + 4.0 / (p - 1.0) - 2.0 * eps;
    const double b = a + 2.0;
    const double lhs = a * (std::log(eps * c_p / (2.0 * a)) + log_c0) + 2.0 * std::log((p - 1.0) / 2.0);
    const double rhs = b * (std::log(4.0 * p / b) + log_c0);
    return lhs - rhs;
}

// Top-order damping bound evaluated at radius r for a trial c1. Must stay
// <= -eps/8 for the weight family to damp the H^{k_top} estimate.
double damping_at(double r, double c1, double p, double delta, double eps, double c_p, int k_top,
                  int d) {
    const double m = std::min(p - 1.0, c_p);
    const double zb = std::sqrt(1.0 + r * r);
    const double phase_term = (p - 1.0) * std::fabs(delta) / (std::sqrt(m) * std::sqrt(zb));
    const double expo = 4.0 / (p - 1.0) - eps - d + 2.0 * k_top;
    const double x = std::pow(r, expo);
    const double A = 2.0 * k_top + 4.0 / (p - 1.0) - eps;
    const double bracket = (d + A * c1 * x) / (4.0 * (1.0 + c1 * x));
    return phase_term - 1.0 / (p - 1.0) - 0.5 * k_top + bracket;
}

}  // namespace

double weight_c0(const Parameters& params) {
    const DerivedConstants c = derive_constants(params);
    double lo = -700.0, hi = 700.0;  // log(c0) bracket
    if (c0_margin(lo, params.p, c.eps, c.c_p) < 0.0)
        fail(ErrorCode::LostPositivity, "no admissible c0 in bracket");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (c0_margin(mid, params.p, c.eps, c.c_p) >= 0.0 ? lo : hi) = mid;
    }
    return 0.5 * std::exp(lo);
}

double weight_c1(const Parameters& params, int k_top) {
    const DerivedConstants c = derive_constants(params);
    // Log-spaced radius grid covering the near field through the asymptotic
    // regime where the damping limit -eps/4 takes over.
    const int n_grid = 10000;
    const double r_lo = 1e-6, r_hi = 1e10;
    auto admissible = [&](double log_c1) {
        const double c1 = std::exp(log_c1);
        for (int i = 0; i < n_grid; ++i) {
            const double t = static_cast<double>(i) / (n_grid - 1);
            const double r = r_lo * std::pow(r_hi / r_lo, t);
            if (damping_at(r, c1, params.p, params.delta, c.eps, c.c_p, k_top, params.d) >
                -c.eps / 8.0)
                return false;
        }
        return true;
    };
    // Keep the growing branch subdominant (c1 |z|^expo <= 1) out to radius 100,
    // so truncated-domain energies are not dominated by the far-field tail.
    const double expo = 4.0 / (params.p - 1.0) - c.eps - params.d + 2.0 * k_top;
    const double log_cap = -expo * std::log(100.0);
    double lo = -700.0, hi = log_cap;
    if (!admissible(lo)) fail(ErrorCode::LostPositivity, "no admissible c1 in bracket");
    if (admissible(hi)) return 0.5 * std::exp(hi);
    for (int it = 0; it < 120; ++it) {
        const double mid = 0.5 * (lo + hi);
        (admissible(mid) ? lo : hi) = mid;
    }
    return 0.5 * std::exp(lo);
}

WeightConstants weight_constants(const Parameters& params, int k_top) {
    return WeightConstants{weight_c0(params), weight_c1(params, k_top)};
}

}  // namespace cgl
