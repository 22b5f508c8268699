#ifndef CGL_PROFILE_HPP
#define CGL_PROFILE_HPP

#include <array>
#include <vector>

#include "cgl/params.hpp"

namespace cgl {

// Dense derivative tensors of a scalar function at one point, up to order 4.
// Entry (i,j,k,...) is stored at flat index i*d^{m-1} + j*d^{m-2} + ...；all
// tensors are symmetric under index permutation.
struct DerivTensors {
    int d = 1;
    int order = 0;
    double value = 0.0;
    std::vector<double> grad;    // d
    std::vector<double> hess;    // d*d
    std::vector<double> third;   // d^3
    std::vector<double> fourth;  // d^4
};

// Universal amplitude profile Ubar(z) = (p-1 + c_p |z|^2)^{-1/(p-1)} and the
// phase profile Thetabar = delta*tau/(p-1) + delta*log Ubar. All derivatives
// are analytic closed forms, never finite differences.
class Profile {
  public:
    explicit Profile(const Parameters& params)
        : params_(params), dc_(derive_constants(params)) {}

    const Parameters& params() const { return params_; }
    const DerivedConstants& constants() const { return dc_; }

    double value_r2(double r2) const;        // Ubar as a function of |z|^2
    double theta_value_r2(double r2, double tau) const;

    // eval_profile: derivative tensors of Ubar at z, order <= 4.
    DerivTensors derivs(const double* z, int d, int order) const;
    // eval_profile_phase: derivative tensors of Thetabar at z, order <= 2.
    DerivTensors theta_derivs(const double* z, int d, double tau, int order) const;

  private:
    Parameters params_;
    DerivedConstants dc_;
};

enum class WeightFamily { rho, ring_rho };

// One weight rho_k or ring-rho_k. c0/c1 are the family constants (see
// weight_constants); k_top is the configured top order standing in for the
// paper's K.
struct WeightSpec {
    WeightFamily family = WeightFamily::rho;
    int k = 0;
    double c0 = 0.0;
    double c1 = 0.0;
    int k_top = 4;
};

WeightSpec make_weight(WeightFamily family, int k, const Parameters& params, int k_top,
                       const WeightConstants& wc);

// Evaluate the weight at radius-squared r2 = |z|^2. U_value is required only
// for the top-order ring family (ring-rho_top = U^2 rho_top).
double eval_weight(const WeightSpec& spec, const Parameters& params, const DerivedConstants& dc,
                   double r2, double U_value = 0.0, bool have_U = false);

}  // namespace cgl

#endif
