#include <functional>
#include <cmath>
#include <random>
#include <vector>

#include "cgl/profile.hpp"
#include "doctest.h"

using namespace cgl;

namespace {

const std::vector<std::array<double, 3>> kSubcriticalSets = {
    {2.0, 0.0, 0.0}, {2.0, 0.5, 0.2}, {3.0, 0.0, 0.5}, {1.5, 0.1, 0.1}, {2.5, -0.2, 0.3}};

// Richardson-extrapolated central difference of a long-double function,
// the finite-difference oracle for the closed-form derivatives.
double fd_derivative(const std::function<long double(long double)>& f, int m, long double h0,
                     int levels) {
    auto stencil = [&](long double h) -> long double {
        switch (m) {
            case 1:
                return (f(-2 * h) - 8 * f(-h) + 8 * f(h) - f(2 * h)) / (12 * h);
            case 2:
                return (-f(-2 * h) + 16 * f(-h) - 30 * f(0) + 16 * f(h) - f(2 * h)) /
                       (12 * h * h);
            case 4:
                return (-f(-3 * h) + 12 * f(-2 * h) - 39 * f(-h) + 56 * f(0) - 39 * f(h) +
                        12 * f(2 * h) - f(3 * h)) /
                       (6 * h * h * h * h);
            default:
                return 0.0;
        }
    };
    // base order 4; central differences gain 2 orders per extrapolation level
    std::vector<long double> row(levels);
    for (int i = 0; i < levels; ++i) row[i] = stencil(h0 / std::pow(2.0L, i));
    int order = 4;
    for (int lev = 1; lev < levels; ++lev) {
        const long double f2 = std::pow(2.0L, order);
        for (int i = levels - 1; i >= lev; --i) row[i] = (f2 * row[i] - row[i - 1]) / (f2 - 1.0L);
        order += 2;
    }
    return static_cast<double>(row[levels - 1]);
}

// long-double evaluation of the closed-form profile, independent of Profile
long double ubar_ld(const Parameters& p, long double z) {
    const long double fs = p.p - p.delta * p.delta - p.beta * p.delta * (p.p + 1.0L);
    const long double cp = (p.p - 1.0L) * (p.p - 1.0L) / (4.0L * fs);
    return std::pow(p.p - 1.0L + cp * z * z, -1.0L / (p.p - 1.0L));
}

}  // namespace

TEST_SUITE("profile") {

TEST_CASE("point values of Ubar") {
    const Parameters p = validate_params(2, 0, 0, 0, 1);
    const Profile prof(p);
    CHECK(prof.value_r2(0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(prof.value_r2(8.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("origin derivatives: grad = 0, hess = kappa2 I") {
    for (const auto& s : kSubcriticalSets) {
        for (int d : {1, 2}) {
            const Parameters p = validate_params(s[0], s[1], s[2], 0.0, d);
            const DerivedConstants c = derive_constants(p);
            const Profile prof(p);
            const double z0[2] = {0.0, 0.0};
            const DerivTensors t = prof.derivs(z0, d, 4);
            CHECK(t.value == doctest::Approx(c.kappa0).epsilon(1e-14));
            for (int i = 0; i < d; ++i) CHECK(t.grad[i] == 0.0);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    CHECK(t.hess[i * d + j] ==
                          doctest::Approx(i == j ? c.kappa2 : 0.0).epsilon(1e-14));
            for (double x : t.third) CHECK(x == 0.0);
            CHECK(t.fourth[0] == doctest::Approx(c.kappa4).epsilon(1e-13));
        }
    }
}

TEST_CASE("profile residual: Ubar solves the reduced steady equation exactly") {
    for (const auto& s : kSubcriticalSets) {
        const Parameters p = validate_params(s[0], s[1], s[2], 0.0, 1);
        const Profile prof(p);
        for (int i = 0; i < 1000; ++i) {
            const double z = -20.0 + 40.0 * (i + 0.5) / 1000.0;
            const DerivTensors t = prof.derivs(&z, 1, 1);
            const double res = -t.value / (p.p - 1.0) - 0.5 * z * t.grad[0] +
                               std::pow(t.value, p.p);
            CHECK(std::fabs(res) <= 1e-12 * t.value);
        }
    }
}

TEST_CASE("finite differences of order 0 match the closed-form derivatives") {
    const Parameters p = validate_params(2.5, -0.2, 0.3, 0.0, 1);
    const Profile prof(p);
    for (double z0 : {0.7, 2.3, 9.1}) {
        auto f = [&](long double dz) { return ubar_ld(p, z0 + dz); };
        const double z = z0;
        const DerivTensors t = prof.derivs(&z, 1, 2);
        const double fd1 = fd_derivative(f, 1, 0.05L, 3);
        const double fd2 = fd_derivative(f, 2, 0.05L, 3);
        CHECK(std::fabs(fd1 - t.grad[0]) <= 1e-10 * std::max(1.0, std::fabs(t.grad[0])));
        CHECK(std::fabs(fd2 - t.hess[0]) <= 1e-10 * std::max(1.0, std::fabs(t.hess[0])));
    }
}

TEST_CASE("kappa2 and kappa4 agree with finite differences at the origin") {
    for (const auto& s : kSubcriticalSets) {
        const Parameters p = validate_params(s[0], s[1], s[2], 0.0, 1);
        const DerivedConstants c = derive_constants(p);
        auto f = [&](long double z) { return ubar_ld(p, z); };
        const double fd2 = fd_derivative(f, 2, 0.1L, 4);
        const double fd4 = fd_derivative(f, 4, 0.2L, 4);
        CHECK(std::fabs(fd2 - c.kappa2) <= 1e-10 * std::fabs(c.kappa2));
        CHECK(std::fabs(fd4 - c.kappa4) <= 1e-10 * std::fabs(c.kappa4));
    }
}

TEST_CASE("phase profile and its derivatives") {
    {
        const Parameters p = validate_params(2, 0.5, 0.0, 0.0, 1);  // delta = 0
        const Profile prof(p);
        const double z = 1.7;
        const DerivTensors t = prof.theta_derivs(&z, 1, 5.0, 2);
        CHECK(t.value == 0.0);
        CHECK(t.grad[0] == 0.0);
        CHECK(t.hess[0] == 0.0);
    }
    {
        const Parameters p = validate_params(2, 0, 1, 0, 1);  // flat_star = 1
        const DerivedConstants c = derive_constants(p);
        const Profile prof(p);
        const double z0 = 0.0;
        const DerivTensors t = prof.theta_derivs(&z0, 1, 0.0, 2);
        CHECK(t.grad[0] == 0.0);
        CHECK(t.hess[0] == doctest::Approx(c.kappa2 / c.kappa0).epsilon(1e-14));
        const DerivTensors t3 = prof.theta_derivs(&z0, 1, 3.0, 0);
        CHECK(t3.value == doctest::Approx(3.0).epsilon(1e-14));  // delta*tau/(p-1) + log(1)
    }
    {
        // grad Thetabar = delta grad Ubar / Ubar exactly
        const Parameters p = validate_params(2.5, -0.2, 0.3, 0.0, 2);
        const Profile prof(p);
        const double z[2] = {1.2, -0.7};
        const DerivTensors tu = prof.derivs(z, 2, 1);
        const DerivTensors tt = prof.theta_derivs(z, 2, 0.0, 1);
        for (int i = 0; i < 2; ++i)
            CHECK(tt.grad[i] ==
                  doctest::Approx(p.delta * tu.grad[i] / tu.value).epsilon(1e-14));
    }
}

TEST_CASE("weights: scaling relation, positivity, branch values") {
    const Parameters p = validate_params(2, 0.5, 0.2, 0, 1);
    const DerivedConstants dc = derive_constants(p);
    const WeightConstants wc = weight_constants(p, 4);

    // rho_k = |z|^{2k} rho_0 for the singular family
    const WeightSpec r0 = make_weight(WeightFamily::rho, 0, p, 4, wc);
    for (int k = 1; k <= 3; ++k) {
        const WeightSpec rk = make_weight(WeightFamily::rho, k, p, 4, wc);
        for (int i = 0; i < 40; ++i) {
            const double r = std::pow(10.0, -4.0 + 8.0 * i / 39.0);
            const double lhs = eval_weight(rk, p, dc, r * r);
            const double rhs = std::pow(r, 2.0 * k) * eval_weight(r0, p, dc, r * r);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
            CHECK(lhs > 0.0);
        }
    }
    // regular family positivity
    const WeightSpec r4 = make_weight(WeightFamily::rho, 4, p, 4, wc);
    for (int i = 0; i < 40; ++i) {
        const double r = std::pow(10.0, -4.0 + 8.0 * i / 39.0);
        CHECK(eval_weight(r4, p, dc, r * r) >= 1.0);
    }

    // ring family: d=1, k=1 sits in the regular branch 1 + |z|^{2k-1-d}
    const WeightSpec g1 = make_weight(WeightFamily::ring_rho, 1, p, 4, wc);
    CHECK(eval_weight(g1, p, dc, 4.0) == doctest::Approx(2.0).epsilon(1e-15));

    // top order: ring-rho_top = U^2 rho_top
    const WeightSpec gt = make_weight(WeightFamily::ring_rho, 4, p, 4, wc);
    const double u = 0.37;
    CHECK(eval_weight(gt, p, dc, 4.0, u, true) ==
          doctest::Approx(u * u * eval_weight(r4, p, dc, 4.0)).epsilon(1e-15));

    // d=2, k=1 is the singular branch |z|^{2k-1-d} = 1/|z|
    const Parameters p2 = validate_params(2, 0.5, 0.2, 0, 2);
    const DerivedConstants dc2 = derive_constants(p2);
    const WeightConstants wc2 = weight_constants(p2, 4);
    const WeightSpec g12 = make_weight(WeightFamily::ring_rho, 1, p2, 4, wc2);
    CHECK(eval_weight(g12, p2, dc2, 4.0) == doctest::Approx(0.5).epsilon(1e-15));

    // singular branches reject the origin
    CHECK_THROWS_AS(eval_weight(r0, p, dc, 0.0), Error);
    CHECK_THROWS_AS(eval_weight(g12, p2, dc2, 0.0), Error);
    // regular branches are fine there
    CHECK(eval_weight(g1, p, dc, 0.0) == doctest::Approx(2.0));
}

TEST_CASE("profile derivative order cap") {
    const Parameters p = validate_params(2, 0, 0, 0, 1);
    const Profile prof(p);
    const double z = 0.3;
    CHECK_THROWS_AS(prof.derivs(&z, 1, 5), Error);
    CHECK_THROWS_AS(prof.theta_derivs(&z, 1, 0.0, 3), Error);
}

}  // TEST_SUITE
