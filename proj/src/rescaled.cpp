#include "cgl/rescaled.hpp"

#include <algorithm>
#include <map>
#include <cmath>

namespace cgl {

namespace {

constexpr int kGhost = 4;

// Field extended by kGhost layers per side. Index arguments run in [-G, n+G).
struct ExtField {
    int d = 1;
    int n = 0;
    std::vector<double> v;

    int stride() const { return n + 2 * kGhost; }
    double& at(int i0, int i1 = 0) {
        if (d == 1) return v[i0 + kGhost];
        return v[static_cast<std::size_t>(i0 + kGhost) * stride() + (i1 + kGhost)];
    }
    double at(int i0, int i1 = 0) const {
        if (d == 1) return v[i0 + kGhost];
        return v[static_cast<std::size_t>(i0 + kGhost) * stride() + (i1 + kGhost)];
    }
};

enum class ExtMode { amplitude, phase };

// Far-field closure for the diffusion stencils: the profile part (Ubar, or
// delta log Ubar for the phase) is continued exactly, and the perturbation on
// top of it is extrapolated linearly along the axis. The profile continuation
// carries the |z|^sigma / log|z| asymptotics; the linear term matches both the
// boundary value and slope of the actual perturbation.
ExtField build_ext(const Field& f, const Parameters& params, const DerivedConstants& dc,
                   ExtMode mode) {
    const Grid& g = f.grid;
    const Profile prof(params);
    ExtField e;
    e.d = g.d;
    e.n = g.n;
    e.v.assign(static_cast<std::size_t>(e.stride()) * (g.d == 2 ? e.stride() : 1), 0.0);
    (void)dc;
    auto base = [&](double r2) {
        if (mode == ExtMode::amplitude) return prof.value_r2(r2);
        return params.delta * std::log(prof.value_r2(r2));
    };
    if (g.d == 1) {
        for (int i = 0; i < g.n; ++i) e.at(i) = f.v[i];
        for (int s : {-1, 1}) {
            const int b = (s > 0) ? g.n - 1 : 0;
            const double rb = g.coord(b);
            const double rb1 = g.coord(b - s);
            const double wb = f.v[b] - base(rb * rb);
            const double wb1 = f.v[b - s] - base(rb1 * rb1);
            for (int k = 1; k <= kGhost; ++k) {
                const double zg = rb + s * k * g.h;
                e.at(b + s * k) = base(zg * zg) + wb + k * (wb - wb1);
            }
        }
        return e;
    }
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) e.at(i, j) = f.v[static_cast<std::size_t>(i) * g.n + j];
    // axis 0 ghosts (rows), then axis 1 ghosts over all rows including new ones
    for (int j = 0; j < g.n; ++j) {
        const double y = g.coord(j);
        for (int s : {-1, 1}) {
            const int b = (s > 0) ? g.n - 1 : 0;
            const double xb = g.coord(b), xb1 = g.coord(b - s);
            const double wb = e.at(b, j) - base(xb * xb + y * y);
            const double wb1 = e.at(b - s, j) - base(xb1 * xb1 + y * y);
            for (int k = 1; k <= kGhost; ++k) {
                const double xg = xb + s * k * g.h;
                e.at(b + s * k, j) = base(xg * xg + y * y) + wb + k * (wb - wb1);
            }
        }
    }
    for (int i = -kGhost; i < g.n + kGhost; ++i) {
        const double x = g.coord(i);
        for (int s : {-1, 1}) {
            const int b = (s > 0) ? g.n - 1 : 0;
            const double yb = g.coord(b), yb1 = g.coord(b - s);
            const double wb = e.at(i, b) - base(x * x + yb * yb);
            const double wb1 = e.at(i, b - s) - base(x * x + yb1 * yb1);
            for (int k = 1; k <= kGhost; ++k) {
                const double yg = yb + s * k * g.h;
                e.at(i, b + s * k) = base(x * x + yg * yg) + wb + k * (wb - wb1);
            }
        }
    }
    return e;
}

struct Kernels {
    std::vector<double> d1;      // central first derivative, offsets -3..3
    std::vector<double> d2;      // central second derivative, offsets -3..3
    std::vector<double> up_pos;  // 5th-order upwind for w > 0, offsets -3..2
    std::vector<double> up_neg;  // offsets -2..3
};

const Kernels& kernels() {
    static const Kernels k = [] {
        Kernels kk;
        kk.d1 = fd_coeffs(1, {-3, -2, -1, 0, 1, 2, 3});
        kk.d2 = fd_coeffs(2, {-3, -2, -1, 0, 1, 2, 3});
        kk.up_pos = fd_coeffs(1, {-3, -2, -1, 0, 1, 2});
        kk.up_neg = fd_coeffs(1, {-2, -1, 0, 1, 2, 3});
        return kk;
    }();
    return k;
}

inline double ext_d1(const ExtField& e, int i0, int i1, int axis, double h) {
    const auto& c = kernels().d1;
    double acc = 0.0;
    for (int j = -3; j <= 3; ++j)
        acc += c[j + 3] * (axis == 0 ? e.at(i0 + j, i1) : e.at(i0, i1 + j));
    return acc / h;
}

inline double ext_d2(const ExtField& e, int i0, int i1, int axis, double h) {
    const auto& c = kernels().d2;
    double acc = 0.0;
    for (int j = -3; j <= 3; ++j)
        acc += c[j + 3] * (axis == 0 ? e.at(i0 + j, i1) : e.at(i0, i1 + j));
    return acc / (h * h);
}

inline double ext_d11(const ExtField& e, int i0, int i1, double h) {
    const auto& c = kernels().d1;
    double acc = 0.0;
    for (int a = -3; a <= 3; ++a) {
        double row = 0.0;
        for (int b = -3; b <= 3; ++b) row += c[b + 3] * e.at(i0 + a, i1 + b);
        acc += c[a + 3] * row;
    }
    return acc / (h * h);
}

// Upwind-biased 6-point window, clamped inside the domain near the boundary
// (outflow advection takes no data from the ghost layer; the edge windows are
// fully one-sided on the upwind side).
inline double ext_upwind(const ExtField& e, int i0, int i1, int axis, double h, double w) {
    static std::map<int, std::vector<double>> shifted;  // keyed by window start
    const int n = e.n;
    const int i = (axis == 0) ? i0 : i1;
    int a = (w >= 0.0) ? -3 : -2;
    if (i + a < 0) a = -i;
    if (i + a + 5 > n - 1) a = n - 1 - 5 - i;
    const std::vector<double>* c;
    if (a == -3) {
        c = &kernels().up_pos;
    } else if (a == -2) {
        c = &kernels().up_neg;
    } else {
        auto it = shifted.find(a);
        if (it == shifted.end()) {
            std::vector<int> offs(6);
            for (int j = 0; j < 6; ++j) offs[j] = a + j;
            it = shifted.emplace(a, fd_coeffs(1, offs)).first;
        }
        c = &it->second;
    }
    double acc = 0.0;
    for (int j = 0; j < 6; ++j) {
        const int o = a + j;
        acc += (*c)[j] * (axis == 0 ? e.at(i0 + o, i1) : e.at(i0, i1 + o));
    }
    return acc / h;
}

void check_positive(const Field& U) {
    for (double x : U.v)
        if (!(x > 0.0)) fail(ErrorCode::NonPositiveU, "amplitude U must stay positive");
}

}  // namespace

void viscous_terms(const Field& U, const Field& Theta, const QMatrix& Q, const Parameters& params,
                   Field& D_U, Field& D_Theta) {
    const Grid& g = U.grid;
    const DerivedConstants dc = derive_constants(params);
    check_positive(U);
    D_U = Field(g);
    D_Theta = Field(g);
    const ExtField eu = build_ext(U, params, dc, ExtMode::amplitude);
    const ExtField et = build_ext(Theta, params, dc, ExtMode::phase);
    const double h = g.h;
    const double beta = params.beta;
    const int d = g.d;

    auto node_terms = [&](int i0, int i1, std::size_t idx) {
        double gu[2] = {0, 0}, gt[2] = {0, 0};
        for (int a = 0; a < d; ++a) {
            gu[a] = ext_d1(eu, i0, i1, a, h);
            gt[a] = ext_d1(et, i0, i1, a, h);
        }
        double lapq_u = 0.0, lapq_t = 0.0;
        if (d == 1) {
            lapq_u = Q.m(0, 0) * ext_d2(eu, i0, i1, 0, h);
            lapq_t = Q.m(0, 0) * ext_d2(et, i0, i1, 0, h);
        } else {
            lapq_u = Q.m(0, 0) * ext_d2(eu, i0, i1, 0, h) + Q.m(1, 1) * ext_d2(eu, i0, i1, 1, h) +
                     2.0 * Q.m(0, 1) * ext_d11(eu, i0, i1, h);
            lapq_t = Q.m(0, 0) * ext_d2(et, i0, i1, 0, h) + Q.m(1, 1) * ext_d2(et, i0, i1, 1, h) +
                     2.0 * Q.m(0, 1) * ext_d11(et, i0, i1, h);
        }
        double ut_q = 0.0, tt_q = 0.0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
                ut_q += Q.m(a, b) * gu[a] * gt[b];
                tt_q += Q.m(a, b) * gt[a] * gt[b];
            }
        const double u = U.v[idx];
        D_U.v[idx] = lapq_u - 2.0 * beta * ut_q - u * tt_q - beta * u * lapq_t;
        D_Theta.v[idx] = beta * lapq_u / u + 2.0 * ut_q / u - beta * tt_q + lapq_t;
    };

    if (d == 1) {
        for (int i = 0; i < g.n; ++i) node_terms(i, 0, i);
    } else {
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) node_terms(i, j, static_cast<std::size_t>(i) * g.n + j);
    }
}

ModulationRates closure_for(const Field& U, const Field& Theta, const QMatrix& Q, double H,
                            const Parameters& params) {
    ClosureInput in;
    in.U = derivatives_at_origin(U, 4);
    in.Theta = derivatives_at_origin(Theta, 4);
    return closure_rates(in, Q, H, params);
}

void rhs(const RescaledState& state, const ModulationRates& rates, const QMatrix& Q,
         const Parameters& params, Field& dU, Field& dTheta) {
    const Grid& g = state.U.grid;
    const DerivedConstants dc = derive_constants(params);
    check_positive(state.U);
    dU = Field(g);
    dTheta = Field(g);
    const ExtField eu = build_ext(state.U, params, dc, ExtMode::amplitude);
    const ExtField et = build_ext(state.Theta, params, dc, ExtMode::phase);
    const double h = g.h;
    const double beta = params.beta;
    const int d = g.d;
    const double Hp = std::pow(state.mod.H, params.p - 1.0);
    const Eigen::MatrixXd P = rates.Pcal.mat();

    auto node_rhs = [&](int i0, int i1, std::size_t idx) {
        double z[2];
        g.node_coords(idx, z);
        double w[2] = {0, 0};
        for (int a = 0; a < d; ++a) {
            w[a] = 0.5 * z[a] + rates.Vcal[a];
            for (int b = 0; b < d; ++b) w[a] += P(a, b) * z[b];
        }
        double adv_u = 0.0, adv_t = 0.0;
        for (int a = 0; a < d; ++a) {
            adv_u += w[a] * ext_upwind(eu, i0, i1, a, h, w[a]);
            adv_t += w[a] * ext_upwind(et, i0, i1, a, h, w[a]);
        }
        double gu[2] = {0, 0}, gt[2] = {0, 0};
        for (int a = 0; a < d; ++a) {
            gu[a] = ext_d1(eu, i0, i1, a, h);
            gt[a] = ext_d1(et, i0, i1, a, h);
        }
        double lapq_u = 0.0, lapq_t = 0.0;
        if (d == 1) {
            lapq_u = Q.m(0, 0) * ext_d2(eu, i0, i1, 0, h);
            lapq_t = Q.m(0, 0) * ext_d2(et, i0, i1, 0, h);
        } else {
            lapq_u = Q.m(0, 0) * ext_d2(eu, i0, i1, 0, h) + Q.m(1, 1) * ext_d2(eu, i0, i1, 1, h) +
                     2.0 * Q.m(0, 1) * ext_d11(eu, i0, i1, h);
            lapq_t = Q.m(0, 0) * ext_d2(et, i0, i1, 0, h) + Q.m(1, 1) * ext_d2(et, i0, i1, 1, h) +
                     2.0 * Q.m(0, 1) * ext_d11(et, i0, i1, h);
        }
        double ut_q = 0.0, tt_q = 0.0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
                ut_q += Q.m(a, b) * gu[a] * gt[b];
                tt_q += Q.m(a, b) * gt[a] * gt[b];
            }
        const double u = state.U.v[idx];
        const double Dub = lapq_u - 2.0 * beta * ut_q - u * tt_q - beta * u * lapq_t;
        const double Dth = beta * lapq_u / u + 2.0 * ut_q / u - beta * tt_q + lapq_t;
        const double up = std::pow(u, params.p);
        dU.v[idx] = rates.c_U * u - adv_u + up - Hp * params.gamma * u + Dub;
        dTheta.v[idx] = -adv_t + params.delta * up / u + Dth;
    };

    if (d == 1) {
        for (int i = 0; i < g.n; ++i) node_rhs(i, 0, i);
    } else {
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) node_rhs(i, j, static_cast<std::size_t>(i) * g.n + j);
    }
}

double normalization_residual(const Field& U, const Parameters& params) {
    const DerivedConstants dc = derive_constants(params);
    const OriginDerivs od = derivatives_at_origin(U, 2);
    double res = std::fabs(od.value - dc.kappa0);
    for (int i = 0; i < params.d; ++i) res = std::max(res, std::fabs(od.grad[i]));
    for (int i = 0; i < params.d; ++i)
        for (int j = 0; j < params.d; ++j)
            res = std::max(res, std::fabs(od.hess_at(i, j) - (i == j ? dc.kappa2 : 0.0)));
    return res;
}

double min_U_ratio(const Field& U, const Parameters& params) {
    const Profile prof(params);
    const DerivedConstants& dc = prof.constants();
    const Grid& g = U.grid;
    double z[2];
    double m = 1e300;
    for (std::size_t i = 0; i < U.size(); ++i) {
        g.node_coords(i, z);
        double r2 = 0.0;
        for (int a = 0; a < g.d; ++a) r2 += z[a] * z[a];
        const double ub = prof.value_r2(r2);
        m = std::min(m, U.v[i] / std::pow(ub, 1.0 + dc.eps2));
    }
    return m;
}

double phase_tracker(const Field& Theta, double tau, const Parameters& params) {
    const DerivedConstants dc = derive_constants(params);
    const Grid& g = Theta.grid;
    const std::size_t origin = (g.d == 1) ? static_cast<std::size_t>(g.center())
                                          : static_cast<std::size_t>(g.center()) * g.n + g.center();
    return Theta.v[origin] - params.delta * tau / (params.p - 1.0) -
           params.delta * std::log(dc.kappa0);
}

StepResult step(const RescaledState& state, const Parameters& params, double dtau_hint) {
    const Grid& g = state.U.grid;
    const int d = params.d;

    // step-size control from the state at the step start
    const QMatrix Q0 = q_of(state.mod, params);
    const ModulationRates r0 = closure_for(state.U, state.Theta, Q0, state.mod.H, params);
    const Eigen::MatrixXd P0 = r0.Pcal.mat();
    double vmax = 0.0;
    for (int a = 0; a < d; ++a) {
        double wa = 0.5 * g.L + std::fabs(r0.Vcal[a]);
        for (int b = 0; b < d; ++b) wa += std::fabs(P0(a, b)) * g.L;
        vmax = std::max(vmax, wa);
    }
    const double qnorm = Q0.m.norm();
    double dtau = std::min(dtau_hint, 0.01);
    if (vmax > 0.0) dtau = std::min(dtau, 0.5 * g.h / vmax);
    if (qnorm > 0.0) dtau = std::min(dtau, 0.25 * g.h * g.h / qnorm);

    // stage state container
    struct Stage {
        Field U, Th;
        double logH, t;
        Eigen::VectorXd V;
        Eigen::MatrixXd M;
    };
    auto pack = [&](const RescaledState& s) {
        Stage y;
        y.U = s.U;
        y.Th = s.Theta;
        y.logH = std::log(s.mod.H);
        y.t = s.mod.t;
        y.V = Eigen::Map<const Eigen::VectorXd>(s.mod.V.data(), d);
        y.M = s.mod.M.mat();
        return y;
    };
    struct Deriv {
        Field dU, dTh;
        double dlogH, dt;
        Eigen::VectorXd dV;
        Eigen::MatrixXd dM;
    };
    ModulationRates first_rates = r0;
    auto eval = [&](const Stage& y, double tau, bool keep_rates) {
        RescaledState s;
        s.U = y.U;
        s.Theta = y.Th;
        s.mod = ModulationState(d);
        s.mod.tau = tau;
        s.mod.t = y.t;
        s.mod.H = std::exp(y.logH);
        for (int i = 0; i < d; ++i) s.mod.V[i] = y.V(i);
        s.mod.M = UpperTri::from_upper(y.M);
        const QMatrix Q = q_of(s.mod, params);
        const ModulationRates r = closure_for(s.U, s.Theta, Q, s.mod.H, params);
        if (keep_rates) first_rates = r;
        Deriv dy;
        rhs(s, r, Q, params, dy.dU, dy.dTh);
        dy.dlogH = r.c_U;
        dy.dt = std::pow(s.mod.H, params.p - 1.0);
        const Eigen::MatrixXd Minv =
            y.M.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(d, d));
        Eigen::Map<const Eigen::VectorXd> vcal(r.Vcal.data(), d);
        dy.dV = -std::exp(-0.5 * tau) * (Minv * vcal);
        dy.dM = r.Pcal.mat() * y.M;
        return dy;
    };
    auto advance = [&](const Stage& y, double c, const Deriv& k) {
        Stage r = y;
        for (std::size_t i = 0; i < r.U.size(); ++i) {
            r.U.v[i] += c * k.dU.v[i];
            r.Th.v[i] += c * k.dTh.v[i];
        }
        r.logH += c * k.dlogH;
        r.t += c * k.dt;
        r.V += c * k.dV;
        r.M += c * k.dM;
        return r;
    };

    const double tau = state.mod.tau;
    const Stage y0 = pack(state);
    const Deriv k1 = eval(y0, tau, true);
    const Deriv k2 = eval(advance(y0, 0.5 * dtau, k1), tau + 0.5 * dtau, false);
    const Deriv k3 = eval(advance(y0, 0.5 * dtau, k2), tau + 0.5 * dtau, false);
    const Deriv k4 = eval(advance(y0, dtau, k3), tau + dtau, false);

    StepResult out;
    out.dtau = dtau;
    out.rates = first_rates;
    out.state = state;
    out.state.mod.tau = tau + dtau;
    Field& U = out.state.U;
    Field& Th = out.state.Theta;
    for (std::size_t i = 0; i < U.size(); ++i) {
        U.v[i] = y0.U.v[i] + dtau / 6.0 * (k1.dU.v[i] + 2.0 * k2.dU.v[i] + 2.0 * k3.dU.v[i] +
                                           k4.dU.v[i]);
        Th.v[i] = y0.Th.v[i] + dtau / 6.0 * (k1.dTh.v[i] + 2.0 * k2.dTh.v[i] + 2.0 * k3.dTh.v[i] +
                                             k4.dTh.v[i]);
    }
    out.state.mod.H = std::exp(y0.logH + dtau / 6.0 * (k1.dlogH + 2.0 * k2.dlogH +
                                                       2.0 * k3.dlogH + k4.dlogH));
    out.state.mod.t = y0.t + dtau / 6.0 * (k1.dt + 2.0 * k2.dt + 2.0 * k3.dt + k4.dt);
    Eigen::VectorXd Vn = y0.V + dtau / 6.0 * (k1.dV + 2.0 * k2.dV + 2.0 * k3.dV + k4.dV);
    for (int i = 0; i < d; ++i) out.state.mod.V[i] = Vn(i);
    Eigen::MatrixXd Mn = y0.M + dtau / 6.0 * (k1.dM + 2.0 * k2.dM + 2.0 * k3.dM + k4.dM);
    out.state.mod.M = UpperTri::from_upper(Mn);

    if (!U.finite() || !Th.finite()) fail(ErrorCode::NonFiniteField, "non-finite field after step");
    check_positive(U);
    if (out.state.mod.M.min_diag() <= 0.0) fail(ErrorCode::SingularM, "M diagonal lost positivity");
    out.state.mod.phi0 = phase_tracker(Th, out.state.mod.tau, params);
    return out;
}

RenormalizeResult renormalize(const RescaledState& state, const Parameters& params, double tol) {
    const Grid& g = state.U.grid;
    const int d = params.d;
    const DerivedConstants dc = derive_constants(params);

    RescaledState cur = state;
    double correction = 0.0;
    double res = normalization_residual(cur.U, params);
    for (int iter = 0; iter < 8 && res > tol; ++iter) {
        // locate the near-origin maximum of U
        std::size_t best = static_cast<std::size_t>(-1);
        double bestv = -1e300;
        double z[2];
        for (std::size_t i = 0; i < cur.U.size(); ++i) {
            g.node_coords(i, z);
            bool near = true;
            for (int a = 0; a < d; ++a) near = near && std::fabs(z[a]) <= 1.0;
            if (near && cur.U.v[i] > bestv) {
                bestv = cur.U.v[i];
                best = i;
            }
        }
        if (best == static_cast<std::size_t>(-1))
            fail(ErrorCode::MaxDrifted, "no origin-adjacent maximum");
        double x0[2];
        g.node_coords(best, x0);

        std::array<Field, 2> du;
        std::array<std::array<Field, 2>, 2> d2u;
        for (int a = 0; a < d; ++a) {
            std::array<int, 2> mi{0, 0};
            mi[a] = 1;
            du[a] = differentiate(cur.U, mi);
            for (int b = a; b < d; ++b) {
                std::array<int, 2> mj{0, 0};
                mj[a] += 1;
                mj[b] += 1;
                d2u[a][b] = differentiate(cur.U, mj);
            }
        }
        Eigen::VectorXd x(d);
        for (int a = 0; a < d; ++a) x(a) = x0[a];
        Eigen::VectorXd grad(d);
        Eigen::MatrixXd hess(d, d);
        for (int it = 0; it < 12; ++it) {
            double xp[2] = {x(0), d == 2 ? x(1) : 0.0};
            for (int a = 0; a < d; ++a) grad(a) = interpolate(du[a], xp);
            for (int a = 0; a < d; ++a)
                for (int b = a; b < d; ++b) {
                    hess(a, b) = interpolate(d2u[a][b], xp);
                    hess(b, a) = hess(a, b);
                }
            const Eigen::VectorXd step = hess.ldlt().solve(grad);
            x -= step;
            if (grad.norm() < 1e-14) break;
        }
        for (int a = 0; a < d; ++a)
            if (std::fabs(x(a)) > 1.0) fail(ErrorCode::MaxDrifted, "maximum fled beyond |z| = 1");

        double xv[2] = {x(0), d == 2 ? x(1) : 0.0};
        const double uval = interpolate(cur.U, xv);
        if (!(uval > 0.0)) fail(ErrorCode::NonPositiveU, "non-positive maximum value");
        const double hcorr = dc.kappa0 / uval;
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) {
                hess(a, b) = interpolate(d2u[a][b], xv);
                hess(b, a) = hess(a, b);
            }
        Eigen::LLT<Eigen::MatrixXd> llt(hcorr / dc.kappa2 * hess);
        if (llt.info() != Eigen::Success)
            fail(ErrorCode::DegenerateHessian, "projection Hessian not definite");
        const Eigen::MatrixXd mcorr = Eigen::MatrixXd(llt.matrixL()).transpose();
        const Eigen::MatrixXd minv =
            mcorr.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(d, d));

        // resample fields through the correction map
        Field Un(g), Tn(g);
        double zz[2], xx[2];
        for (std::size_t i = 0; i < Un.size(); ++i) {
            g.node_coords(i, zz);
            for (int a = 0; a < d; ++a) {
                xx[a] = x(a);
                for (int b = 0; b < d; ++b) xx[a] += minv(a, b) * zz[b];
            }
            bool inside = true;
            for (int a = 0; a < d; ++a) inside = inside && std::fabs(xx[a]) <= g.L;
            if (inside) {
                Un.v[i] = hcorr * interpolate(cur.U, xx);
                Tn.v[i] = interpolate(cur.Theta, xx);
            } else {
                // shrink to the boundary along the ray and extend
                double scale = 1.0;
                for (int a = 0; a < d; ++a) scale = std::max(scale, std::fabs(xx[a]) / g.L);
                double xb[2];
                double r2 = 0.0, rb2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    xb[a] = xx[a] / scale;
                    r2 += xx[a] * xx[a];
                    rb2 += xb[a] * xb[a];
                }
                const double ratio = std::sqrt(r2 / rb2);
                Un.v[i] = hcorr * interpolate(cur.U, xb) * std::pow(ratio, dc.sigma);
                Tn.v[i] = interpolate(cur.Theta, xb) + params.delta * dc.sigma * std::log(ratio);
            }
        }

        // compose the correction into the modulation state
        const Eigen::MatrixXd R = cur.mod.R();
        for (int a = 0; a < d; ++a) {
            double shift = 0.0;
            for (int b = 0; b < d; ++b) shift += R(a, b) * x(b);
            cur.mod.V[a] += shift;
        }
        cur.mod.H *= hcorr;
        cur.mod.M = UpperTri::from_upper(mcorr) * cur.mod.M;
        cur.U = Un;
        cur.Theta = Tn;

        double corr = std::fabs(hcorr - 1.0) + x.norm();
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) corr += std::fabs(mcorr(a, b) - (a == b ? 1.0 : 0.0));
        correction = std::max(correction, corr);

        const double next = normalization_residual(cur.U, params);
        if (next >= res && iter > 0) {
            res = next;
            break;
        }
        res = next;
    }
    cur.mod.phi0 = phase_tracker(cur.Theta, cur.mod.tau, params);
    return RenormalizeResult{cur, res, correction};
}

}  // namespace cgl
