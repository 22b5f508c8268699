#include "cgl/profile.hpp"

#include <cmath>

namespace cgl {

double Profile::value_r2(double r2) const {
    const double g = params_.p - 1.0 + dc_.c_p * r2;
    return std::pow(g, -1.0 / (params_.p - 1.0));
}

double Profile::theta_value_r2(double r2, double tau) const {
    return params_.delta * tau / (params_.p - 1.0) + params_.delta * std::log(value_r2(r2));
}

DerivTensors Profile::derivs(const double* z, int d, int order) const {
    if (order < 0 || order > 4) fail(ErrorCode::OrderTooHigh, "profile derivatives support order <= 4");
    const double p = params_.p;
    const double q = 1.0 / (p - 1.0);
    const double cp = dc_.c_p;
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += z[i] * z[i];
    const double g = p - 1.0 + cp * r2;
    // G[m] = g^{-q-m}
    double G[5];
    G[0] = std::pow(g, -q);
    for (int m = 1; m <= 4; ++m) G[m] = G[m - 1] / g;

    const double a1 = -2.0 * q * cp;                       // coefficient of z_i g^{-q-1}
    const double a2 = 4.0 * q * (q + 1.0) * cp * cp;       // coefficient of z_i z_j g^{-q-2}
    const double a3 = -8.0 * q * (q + 1.0) * (q + 2.0) * cp * cp * cp;
    const double a4 = 16.0 * q * (q + 1.0) * (q + 2.0) * (q + 3.0) * cp * cp * cp * cp;

    DerivTensors t;
    t.d = d;
    t.order = order;
    t.value = G[0];
    auto kron = [](int i, int j) { return i == j ? 1.0 : 0.0; };
    if (order >= 1) {
        t.grad.assign(d, 0.0);
        for (int i = 0; i < d; ++i) t.grad[i] = a1 * z[i] * G[1];
    }
    if (order >= 2) {
        t.hess.assign(d * d, 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                t.hess[i * d + j] = a1 * kron(i, j) * G[1] + a2 * z[i] * z[j] * G[2];
    }
    if (order >= 3) {
        t.third.assign(d * d * d, 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k) {
                    const double sym = kron(i, j) * z[k] + kron(i, k) * z[j] + kron(j, k) * z[i];
                    t.third[(i * d + j) * d + k] = a2 * sym * G[2] + a3 * z[i] * z[j] * z[k] * G[3];
                }
    }
    if (order >= 4) {
        t.fourth.assign(d * d * d * d, 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k)
                    for (int l = 0; l < d; ++l) {
                        const double dd = kron(i, j) * kron(k, l) + kron(i, k) * kron(j, l) +
                                          kron(j, k) * kron(i, l);
                        const double dzz = kron(i, j) * z[k] * z[l] + kron(i, k) * z[j] * z[l] +
                                           kron(i, l) * z[j] * z[k] + kron(j, k) * z[i] * z[l] +
                                           kron(j, l) * z[i] * z[k] + kron(k, l) * z[i] * z[j];
                        t.fourth[((i * d + j) * d + k) * d + l] =
                            a2 * dd * G[2] + a3 * dzz * G[3] + a4 * z[i] * z[j] * z[k] * z[l] * G[4];
                    }
    }
    return t;
}

DerivTensors Profile::theta_derivs(const double* z, int d, double tau, int order) const {
    if (order < 0 || order > 2)
        fail(ErrorCode::OrderTooHigh, "profile phase derivatives support order <= 2");
    const double p = params_.p;
    const double q = 1.0 / (p - 1.0);
    const double cp = dc_.c_p;
    const double del = params_.delta;
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += z[i] * z[i];
    const double g = p - 1.0 + cp * r2;

    DerivTensors t;
    t.d = d;
    t.order = order;
    t.value = del * tau / (p - 1.0) - q * del * std::log(g);
    const double b = -2.0 * q * del * cp;
    if (order >= 1) {
        t.grad.assign(d, 0.0);
        for (int i = 0; i < d; ++i) t.grad[i] = b * z[i] / g;
    }
    if (order >= 2) {
        t.hess.assign(d * d, 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                t.hess[i * d + j] =
                    b * ((i == j ? 1.0 : 0.0) / g - 2.0 * cp * z[i] * z[j] / (g * g));
    }
    return t;
}

WeightSpec make_weight(WeightFamily family, int k, const Parameters& params, int k_top,
                       const WeightConstants& wc) {
    if (k < 0) fail(ErrorCode::OrderTooHigh, "weight order must be nonnegative");
    if (family == WeightFamily::rho && k > k_top)
        fail(ErrorCode::OrderTooHigh, "rho_k beyond configured top order");
    if (family == WeightFamily::ring_rho && (k < 1 || k > k_top))
        fail(ErrorCode::OrderTooHigh, "ring-rho_k outside 1..k_top");
    (void)params;
    return WeightSpec{family, k, wc.c0, wc.c1, k_top};
}

double eval_weight(const WeightSpec& spec, const Parameters& params, const DerivedConstants& dc,
                   double r2, double U_value, bool have_U) {
    const double d = params.d;
    const double eps = dc.eps;
    const double grow = -2.0 * dc.sigma - eps - d + 2.0 * spec.k;  // 4/(p-1)-eps-d+2k
    auto rpow = [&](double e) {
        if (r2 == 0.0) {
            if (e < 0.0) fail(ErrorCode::OriginSingularity, "singular weight evaluated at z = 0");
            return e == 0.0 ? 1.0 : 0.0;
        }
        return std::pow(r2, 0.5 * e);
    };
    if (spec.family == WeightFamily::rho) {
        if (spec.k <= (d + 5.0) / 2.0) return rpow(-6.0 + eps - d + 2.0 * spec.k) + spec.c0 * rpow(grow);
        return 1.0 + spec.c1 * rpow(grow);
    }
    // ring family
    const double e = 2.0 * spec.k - 1.0 - d;
    if (spec.k == spec.k_top) {
        if (!have_U) fail(ErrorCode::NonFiniteInput, "top-order ring weight needs the U value");
        const double rho_top = (spec.k_top <= (d + 5.0) / 2.0)
                                   ? rpow(-6.0 + eps - d + 2.0 * spec.k_top) + spec.c0 * rpow(grow)
                                   : 1.0 + spec.c1 * rpow(grow);
        return U_value * U_value * rho_top;
    }
    if (spec.k <= d / 2.0) return rpow(e);
    return 1.0 + rpow(e);
}

}  // namespace cgl
