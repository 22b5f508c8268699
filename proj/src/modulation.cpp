#include "cgl/modulation.hpp"

#include <cmath>

namespace cgl {

UpperTri UpperTri::identity(int d_) {
    UpperTri m(d_);
    for (int i = 0; i < d_; ++i) m.set(i, i, 1.0);
    return m;
}

int UpperTri::slot(int i, int j) const {
    // row i holds d - i entries starting at column i
    return i * d - i * (i - 1) / 2 + (j - i);
}

void UpperTri::set(int i, int j, double v) {
    if (i > j) fail(ErrorCode::NonFiniteInput, "lower entry of an upper-triangular matrix");
    a[slot(i, j)] = v;
}

Eigen::MatrixXd UpperTri::mat() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) m(i, j) = at(i, j);
    return m;
}

UpperTri UpperTri::from_upper(const Eigen::MatrixXd& m) {
    UpperTri out(static_cast<int>(m.rows()));
    for (int i = 0; i < out.d; ++i)
        for (int j = i; j < out.d; ++j) out.set(i, j, m(i, j));
    return out;
}

UpperTri UpperTri::operator*(const UpperTri& o) const {
    UpperTri out(d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            double s = 0.0;
            for (int k = i; k <= j; ++k) s += at(i, k) * o.at(k, j);
            out.set(i, j, s);
        }
    return out;
}

double UpperTri::min_diag() const {
    double m = at(0, 0);
    for (int i = 1; i < d; ++i) m = std::min(m, at(i, i));
    return m;
}

Eigen::MatrixXd ModulationState::R() const {
    const Eigen::MatrixXd Minv =
        M.mat().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(M.d, M.d));
    return std::exp(-0.5 * tau) * Minv;
}

void QMatrix::eigenvalues(double& lam_min, double& lam_max) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    lam_min = es.eigenvalues().minCoeff();
    lam_max = es.eigenvalues().maxCoeff();
}

bool QMatrix::positive_definite() const {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    return llt.info() == Eigen::Success;
}

// --- initial rescaling -------------------------------------------------------

namespace {

// Upper-triangular factor with positive diagonal of an SPD matrix: S = M^T M.
UpperTri upper_cholesky(const Eigen::MatrixXd& S) {
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
        fail(ErrorCode::DegenerateHessian, "Hessian scaling matrix is not positive definite");
    Eigen::MatrixXd Mt = llt.matrixL();  // S = L L^T, M = L^T
    return UpperTri::from_upper(Eigen::MatrixXd(Mt.transpose()));
}

struct CriticalPoint {
    std::vector<double> x;
    double value;
    Eigen::MatrixXd hess;
};

// Newton refinement of a maximizer of an evaluator with gradient/Hessian
// callbacks. Starts from x0; tolerance on the gradient.
template <typename ValueFn, typename GradFn, typename HessFn>
CriticalPoint refine_max(const ValueFn& val, const GradFn& grad, const HessFn& hess,
                         std::vector<double> x, int d, double tol, int max_iter) {
    Eigen::VectorXd g(d);
    Eigen::MatrixXd Hm(d, d);
    for (int it = 0; it < max_iter; ++it) {
        grad(x.data(), g.data());
        hess(x.data(), Hm.data());
        Eigen::VectorXd step = Hm.ldlt().solve(g);
        for (int i = 0; i < d; ++i) x[i] -= step(i);
        if (g.norm() < tol) break;
    }
    grad(x.data(), g.data());
    hess(x.data(), Hm.data());
    return CriticalPoint{x, val(x.data()), Hm};
}

InitialRescaling rescale_from_critical(const CriticalPoint& cp, const SpatialFn& u0,
                                       const SpatialFn& theta0, const Parameters& params,
                                       const Grid& grid) {
    const DerivedConstants dc = derive_constants(params);
    if (!(cp.value > 0.0)) fail(ErrorCode::NoInteriorMax, "maximum value must be positive");
    const double H0 = dc.kappa0 / cp.value;
    // M^T M = H0 * hess / kappa2; negative-definite Hessian and kappa2 < 0 give SPD.
    const Eigen::MatrixXd S = H0 / dc.kappa2 * cp.hess;
    const UpperTri M0 = upper_cholesky(S);
    const Eigen::MatrixXd Minv =
        M0.mat().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(M0.d, M0.d));

    InitialRescaling out;
    out.mod = ModulationState(params.d);
    out.mod.H = H0;
    out.mod.V = cp.x;
    out.mod.M = M0;

    out.U0 = Field(grid);
    out.Theta0 = Field(grid);
    double z[2], x[2];
    for (std::size_t idx = 0; idx < out.U0.size(); ++idx) {
        grid.node_coords(idx, z);
        for (int i = 0; i < params.d; ++i) {
            x[i] = cp.x[i];
            for (int j = 0; j < params.d; ++j) x[i] += Minv(i, j) * z[j];
        }
        out.U0.v[idx] = H0 * u0(x);
        out.Theta0.v[idx] = theta0(x);
    }
    if (!out.U0.finite() || !out.Theta0.finite())
        fail(ErrorCode::NonFiniteField, "rescaled initial data is not finite");
    return out;
}

// Residual against the sampled profile's own origin data, so the grid-stencil
// bias common to both fields cancels.
void check_normalization(const Field& U0, const Parameters& params, const DerivedConstants& dc,
                         double tol) {
    const Profile prof(params);
    const Field ub = sample(U0.grid, [&](const double* z) {
        double r2 = 0.0;
        for (int a = 0; a < params.d; ++a) r2 += z[a] * z[a];
        return prof.value_r2(r2);
    });
    const OriginDerivs od = derivatives_at_origin(U0, 2);
    const OriginDerivs ref = derivatives_at_origin(ub, 2);
    double res = std::fabs(od.value - ref.value);
    for (int i = 0; i < params.d; ++i)
        res = std::max(res, std::fabs(od.grad[i] - ref.grad[i]));
    for (int i = 0; i < params.d; ++i)
        for (int j = 0; j < params.d; ++j)
            res = std::max(res, std::fabs(od.hess_at(i, j) - ref.hess_at(i, j)));
    (void)dc;
    if (res > tol) fail(ErrorCode::NormalizationResidual, "initial normalization residual " +
                                                              std::to_string(res));
}

}  // namespace

InitialRescaling initial_rescaling_fn(const SpatialFn& u0, const SpatialFn& theta0,
                                      const Parameters& params, const Grid& grid,
                                      const std::vector<double>& V_guess, double fd_scale) {
    const int d = params.d;
    const double fh = fd_scale;  // differencing scale for the analytic evaluator
    auto shifted = [&](const double* x, int axis, double dz) {
        double y[2];
        for (int k = 0; k < d; ++k) y[k] = x[k];
        y[axis] += dz;
        return u0(y);
    };
    auto val = [&](const double* x) { return u0(x); };
    auto grad = [&](const double* x, double* g) {
        for (int i = 0; i < d; ++i)
            g[i] = (shifted(x, i, -2 * fh) - 8.0 * shifted(x, i, -fh) + 8.0 * shifted(x, i, fh) -
                    shifted(x, i, 2 * fh)) /
                   (12.0 * fh);
    };
    auto cross = [&](const double* x, int i, int j, double h) {
        double y[2];
        double acc = 0.0;
        for (int s1 : {-1, 1})
            for (int s2 : {-1, 1}) {
                for (int k = 0; k < d; ++k) y[k] = x[k];
                y[i] += s1 * h;
                y[j] += s2 * h;
                acc += s1 * s2 * u0(y);
            }
        return acc / (4.0 * h * h);
    };
    auto hess = [&](const double* x, double* hdat) {
        Eigen::Map<Eigen::MatrixXd> H(hdat, d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                if (i == j) {
                    H(i, i) = (-shifted(x, i, 2 * fh) + 16.0 * shifted(x, i, fh) -
                               30.0 * u0(x) + 16.0 * shifted(x, i, -fh) -
                               shifted(x, i, -2 * fh)) /
                              (12.0 * fh * fh);
                } else {
                    // two-level Richardson of the centered cross difference
                    H(i, j) = (4.0 * cross(x, i, j, 0.5 * fh) - cross(x, i, j, fh)) / 3.0;
                }
            }
    };

    std::vector<double> x0 = V_guess;
    if (x0.empty()) {
        // coarse grid scan for the maximizer
        x0.assign(d, 0.0);
        double best = -1e300;
        double z[2];
        Field u = sample(grid, u0);
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (u.v[i] > best) {
                best = u.v[i];
                grid.node_coords(i, z);
                for (int a = 0; a < d; ++a) x0[a] = z[a];
            }
        }
        for (int a = 0; a < d; ++a)
            if (std::fabs(x0[a]) > grid.L - 4.0 * grid.h)
                fail(ErrorCode::NoInteriorMax, "maximizer sits on the domain boundary");
    }
    const CriticalPoint cp = refine_max(val, grad, hess, x0, d, 1e-12, 40);
    InitialRescaling out = rescale_from_critical(cp, u0, theta0, params, grid);

    // Grid-consistent projection: correct (H, V, M) so that the origin
    // derivatives measured by the grid stencils match those of the sampled
    // profile, then recompose analytically (no interpolation enters).
    const DerivedConstants dc = derive_constants(params);
    const Profile prof(params);
    const Field ub = sample(grid, [&](const double* z) {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) r2 += z[a] * z[a];
        return prof.value_r2(r2);
    });
    const OriginDerivs ref = derivatives_at_origin(ub, 2);
    Eigen::Map<const Eigen::MatrixXd> ref_h(ref.hess.data(), d, d);
    for (int it = 0; it < 6; ++it) {
        const OriginDerivs od = derivatives_at_origin(out.U0, 2);
        double res = std::fabs(od.value - ref.value);
        for (int i = 0; i < d; ++i) res = std::max(res, std::fabs(od.grad[i] - ref.grad[i]));
        for (int i = 0; i < d * d; ++i) res = std::max(res, std::fabs(od.hess[i] - ref.hess[i]));
        if (res <= 1e-12) break;

        Eigen::Map<const Eigen::MatrixXd> od_h(od.hess.data(), d, d);
        Eigen::Map<const Eigen::VectorXd> od_g(od.grad.data(), d);
        const double h_c = ref.value / od.value;
        const Eigen::VectorXd v_c = -od_h.ldlt().solve(Eigen::VectorXd(od_g));
        Eigen::MatrixXd A = h_c * ref_h.ldlt().solve(Eigen::MatrixXd(od_h));
        A = 0.5 * (A + A.transpose()).eval();
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() != Eigen::Success) break;
        const Eigen::MatrixXd m_c = Eigen::MatrixXd(llt.matrixL()).transpose();

        // compose: U0_new(z) = h_c U0_old(m_c^{-1} z + v_c)
        const Eigen::MatrixXd Minv_old =
            out.mod.M.mat().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(d, d));
        for (int a = 0; a < d; ++a) {
            double shift = 0.0;
            for (int b = 0; b < d; ++b) shift += Minv_old(a, b) * v_c(b);
            out.mod.V[a] += shift;
        }
        out.mod.H *= h_c;
        out.mod.M = UpperTri::from_upper(m_c) * out.mod.M;

        const Eigen::MatrixXd Minv =
            out.mod.M.mat().triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(d, d));
        double z[2], x[2];
        for (std::size_t idx = 0; idx < out.U0.size(); ++idx) {
            grid.node_coords(idx, z);
            for (int i = 0; i < d; ++i) {
                x[i] = out.mod.V[i];
                for (int j = 0; j < d; ++j) x[i] += Minv(i, j) * z[j];
            }
            out.U0.v[idx] = out.mod.H * u0(x);
            out.Theta0.v[idx] = theta0(x);
        }
    }
    check_normalization(out.U0, params, dc, 1e-6);
    return out;
}

InitialRescaling initial_rescaling(const Field& u0, const Field& theta0,
                                   const Parameters& params) {
    const Grid& grid = u0.grid;
    if (!(theta0.grid == grid)) fail(ErrorCode::NonFiniteInput, "u0/theta0 grids differ");
    const int d = params.d;

    // locate the grid argmax
    std::size_t best = 0;
    for (std::size_t i = 1; i < u0.size(); ++i)
        if (u0.v[i] > u0.v[best]) best = i;
    double z0[2];
    grid.node_coords(best, z0);
    for (int a = 0; a < d; ++a)
        if (std::fabs(z0[a]) > grid.L - 4.0 * grid.h)
            fail(ErrorCode::NoInteriorMax, "maximizer sits on the domain boundary");

    // derivative fields once, then Newton on their interpolants
    std::array<Field, 2> du;
    std::array<std::array<Field, 2>, 2> d2u;
    for (int a = 0; a < d; ++a) {
        std::array<int, 2> mi{0, 0};
        mi[a] = 1;
        du[a] = differentiate(u0, mi);
        for (int b = a; b < d; ++b) {
            std::array<int, 2> mj{0, 0};
            mj[a] += 1;
            mj[b] += 1;
            d2u[a][b] = differentiate(u0, mj);
        }
    }
    auto val = [&](const double* x) { return interpolate(u0, x); };
    auto grad = [&](const double* x, double* g) {
        for (int a = 0; a < d; ++a) g[a] = interpolate(du[a], x);
    };
    auto hess = [&](const double* x, double* hdat) {
        Eigen::Map<Eigen::MatrixXd> H(hdat, d, d);
        for (int a = 0; a < d; ++a)
            for (int b = a; b < d; ++b) {
                H(a, b) = interpolate(d2u[a][b], x);
                H(b, a) = H(a, b);
            }
    };
    std::vector<double> x0(z0, z0 + d);
    const CriticalPoint cp = refine_max(val, grad, hess, x0, d, 1e-13, 12);

    // resample through the interpolant, extending by the far-field power law
    // if a sample point leaves the domain
    const DerivedConstants dc = derive_constants(params);
    auto u0_eval = [&](const double* x) {
        bool inside = true;
        for (int a = 0; a < d; ++a) inside = inside && std::fabs(x[a]) <= grid.L;
        if (inside) return interpolate(u0, x);
        double r = 0.0, s = 0.0;
        for (int a = 0; a < d; ++a) {
            r = std::max(r, std::fabs(x[a]) / grid.L);
            s += x[a] * x[a];
        }
        double xb[2];
        for (int a = 0; a < d; ++a) xb[a] = x[a] / r;
        double sb = 0.0;
        for (int a = 0; a < d; ++a) sb += xb[a] * xb[a];
        return interpolate(u0, xb) * std::pow(std::sqrt(s / sb), dc.sigma);
    };
    auto theta0_eval = [&](const double* x) {
        bool inside = true;
        for (int a = 0; a < d; ++a) inside = inside && std::fabs(x[a]) <= grid.L;
        if (inside) return interpolate(theta0, x);
        double r = 0.0, s = 0.0;
        for (int a = 0; a < d; ++a) {
            r = std::max(r, std::fabs(x[a]) / grid.L);
            s += x[a] * x[a];
        }
        double xb[2];
        for (int a = 0; a < d; ++a) xb[a] = x[a] / r;
        double sb = 0.0;
        for (int a = 0; a < d; ++a) sb += xb[a] * xb[a];
        return interpolate(theta0, xb) +
               params.delta * dc.sigma * 0.5 * std::log(s / sb);
    };
    InitialRescaling out = rescale_from_critical(cp, u0_eval, theta0_eval, params, grid);
    check_normalization(out.U0, params, dc, 1e-6);
    return out;
}

// --- closure -----------------------------------------------------------------

namespace {

struct ViscousOriginData {
    double value = 0.0;
    std::vector<double> grad;
    std::vector<double> hess;
};

// D_U(0), grad D_U(0), hess D_U(0) with D_U = sum Q_ab T_ab,
// T_ab = d_ab U - 2 beta d_a U d_b Theta - U d_a Theta d_b Theta - beta U d_ab Theta.
ViscousOriginData du_taylor(const ClosureInput& in, const QMatrix& Q, double beta) {
    const int d = in.U.d;
    const auto& U = in.U;
    const auto& T = in.Theta;
    ViscousOriginData out;
    out.grad.assign(d, 0.0);
    out.hess.assign(d * d, 0.0);

    const double u0 = U.value;
    auto ug = [&](int i) { return U.grad[i]; };
    auto uh = [&](int i, int j) { return U.hess_at(i, j); };
    auto u3 = [&](int i, int j, int k) { return U.third_at(i, j, k); };
    auto u4 = [&](int i, int j, int k, int l) { return U.fourth_at(i, j, k, l); };
    auto tg = [&](int i) { return T.grad[i]; };
    auto th = [&](int i, int j) { return T.hess_at(i, j); };
    auto t3 = [&](int i, int j, int k) { return T.third_at(i, j, k); };
    auto t4 = [&](int i, int j, int k, int l) { return T.fourth_at(i, j, k, l); };

    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            const double q = Q.m(a, b);
            if (q == 0.0) continue;
            out.value += q * (uh(a, b) - 2.0 * beta * ug(a) * tg(b) - u0 * tg(a) * tg(b) -
                              beta * u0 * th(a, b));
            for (int i = 0; i < d; ++i) {
                out.grad[i] +=
                    q * (u3(i, a, b) - 2.0 * beta * (uh(i, a) * tg(b) + ug(a) * th(i, b)) -
                         ug(i) * tg(a) * tg(b) - u0 * (th(i, a) * tg(b) + tg(a) * th(i, b)) -
                         beta * (ug(i) * th(a, b) + u0 * t3(i, a, b)));
                for (int j = 0; j < d; ++j) {
                    double acc = u4(i, j, a, b);
                    acc -= 2.0 * beta * (u3(i, j, a) * tg(b) + uh(i, a) * th(j, b) +
                                         uh(j, a) * th(i, b) + ug(a) * t3(i, j, b));
                    acc -= uh(i, j) * tg(a) * tg(b) +
                           ug(i) * (th(j, a) * tg(b) + tg(a) * th(j, b)) +
                           ug(j) * (th(i, a) * tg(b) + tg(a) * th(i, b)) +
                           u0 * (t3(i, j, a) * tg(b) + th(i, a) * th(j, b) +
                                 th(j, a) * th(i, b) + tg(a) * t3(i, j, b));
                    acc -= beta * (uh(i, j) * th(a, b) + ug(i) * t3(j, a, b) +
                                   ug(j) * t3(i, a, b) + u0 * t4(i, j, a, b));
                    out.hess[i * d + j] += q * acc;
                }
            }
        }
    return out;
}

}  // namespace

ModulationRates closure_rates(const ClosureInput& in, const QMatrix& Q, double H,
                              const Parameters& params) {
    const int d = params.d;
    const DerivedConstants dc = derive_constants(params);
    const ViscousOriginData dU = du_taylor(in, Q, params.beta);
    if (!std::isfinite(dU.value)) fail(ErrorCode::NonFiniteInput, "non-finite viscous data");

    ModulationRates r(d);
    const double Hp = std::pow(H, params.p - 1.0);
    r.c_W = -dU.value / dc.kappa0 + Hp * params.gamma;
    r.c_U = -1.0 / (params.p - 1.0) + r.c_W;
    for (int i = 0; i < d; ++i) {
        r.Vcal[i] = dU.grad[i] / dc.kappa2;
        if (!std::isfinite(r.Vcal[i])) fail(ErrorCode::NonFiniteInput, "non-finite Vcal");
    }
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            double vw = 0.0;  // Vcal . grad d_ij W(0); third derivatives of Ubar vanish at 0
            for (int k = 0; k < d; ++k) vw += r.Vcal[k] * in.U.third_at(k, i, j);
            const double rhs = -(dU.value / dc.kappa0) * (i == j ? 1.0 : 0.0) +
                               (dU.hess[i * d + j] - vw) / dc.kappa2;
            r.Pcal.set(i, j, rhs / (i == j ? 2.0 : 1.0));
        }
    return r;
}

// --- evolution ---------------------------------------------------------------

namespace {

struct ModVec {
    double logH;
    Eigen::VectorXd V;
    Eigen::MatrixXd M;  // full matrix internally; upper part is what survives
    double t;
};

ModVec mod_rhs(const ModVec& y, double tau, const ModulationRates& rates,
               const Parameters& params) {
    const int d = static_cast<int>(y.V.size());
    ModVec dy;
    dy.logH = rates.c_U;
    const Eigen::MatrixXd P = rates.Pcal.mat();
    dy.M = P * y.M;
    const Eigen::MatrixXd Minv =
        y.M.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(d, d));
    Eigen::Map<const Eigen::VectorXd> vcal(rates.Vcal.data(), d);
    dy.V = -std::exp(-0.5 * tau) * (Minv * vcal);
    dy.t = std::pow(std::exp(y.logH), params.p - 1.0);
    return dy;
}

}  // namespace

ModulationState advance_modulation(const ModulationState& state, const ModulationRates& rates,
                                   double dtau, const Parameters& params) {
    if (!(dtau > 0.0)) fail(ErrorCode::NonFiniteInput, "dtau must be positive");
    const int d = params.d;
    ModVec y;
    y.logH = std::log(state.H);
    y.V = Eigen::Map<const Eigen::VectorXd>(state.V.data(), d);
    y.M = state.M.mat();
    y.t = state.t;

    auto add = [&](const ModVec& a, double c, const ModVec& b) {
        ModVec r = a;
        r.logH += c * b.logH;
        r.V += c * b.V;
        r.M += c * b.M;
        r.t += c * b.t;
        return r;
    };
    const double tau = state.tau;
    const ModVec k1 = mod_rhs(y, tau, rates, params);
    const ModVec k2 = mod_rhs(add(y, 0.5 * dtau, k1), tau + 0.5 * dtau, rates, params);
    const ModVec k3 = mod_rhs(add(y, 0.5 * dtau, k2), tau + 0.5 * dtau, rates, params);
    const ModVec k4 = mod_rhs(add(y, dtau, k3), tau + dtau, rates, params);

    ModulationState out = state;
    out.tau = tau + dtau;
    out.H = std::exp(y.logH + dtau / 6.0 * (k1.logH + 2.0 * k2.logH + 2.0 * k3.logH + k4.logH));
    Eigen::VectorXd Vn = y.V + dtau / 6.0 * (k1.V + 2.0 * k2.V + 2.0 * k3.V + k4.V);
    for (int i = 0; i < d; ++i) out.V[i] = Vn(i);
    Eigen::MatrixXd Mn = y.M + dtau / 6.0 * (k1.M + 2.0 * k2.M + 2.0 * k3.M + k4.M);
    out.M = UpperTri::from_upper(Mn);
    out.t = y.t + dtau / 6.0 * (k1.t + 2.0 * k2.t + 2.0 * k3.t + k4.t);
    if (out.M.min_diag() <= 0.0) fail(ErrorCode::SingularM, "M lost a positive diagonal entry");
    return out;
}

QMatrix q_of(const ModulationState& state, const Parameters& params) {
    const Eigen::MatrixXd M = state.M.mat();
    const double f = std::pow(state.H, params.p - 1.0) * std::exp(state.tau);
    Eigen::MatrixXd Q = f * (M * M.transpose());
    Q = 0.5 * (Q + Q.transpose()).eval();
    return QMatrix{Q};
}

QMatrix reduced_q_step(const QMatrix& Q, double dtau) {
    auto rhs = [](const Eigen::MatrixXd& q) {
        const int d = static_cast<int>(q.rows());
        Eigen::MatrixXd qu = Eigen::MatrixXd::Zero(d, d);
        Eigen::MatrixXd qd = Eigen::MatrixXd::Zero(d, d);
        for (int i = 0; i < d; ++i) {
            qd(i, i) = q(i, i);
            for (int j = i + 1; j < d; ++j) qu(i, j) = q(i, j);
        }
        const Eigen::MatrixXd A = qu + 0.5 * qd;
        return Eigen::MatrixXd(-(A * q) - q * A.transpose());
    };
    const Eigen::MatrixXd& q = Q.m;
    const Eigen::MatrixXd k1 = rhs(q);
    const Eigen::MatrixXd k2 = rhs(q + 0.5 * dtau * k1);
    const Eigen::MatrixXd k3 = rhs(q + 0.5 * dtau * k2);
    const Eigen::MatrixXd k4 = rhs(q + dtau * k3);
    Eigen::MatrixXd qn = q + dtau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    qn = 0.5 * (qn + qn.transpose()).eval();
    QMatrix out{qn};
    if (qn.trace() > 0.0 && !out.positive_definite())
        fail(ErrorCode::LostPositivity, "reduced Q lost positive definiteness");
    return out;
}

Predictors predictors(double tau, const Parameters& params) {
    if (!(tau > 0.0)) fail(ErrorCode::NonFiniteInput, "predictors need tau > 0");
    const DerivedConstants dc = derive_constants(params);
    Predictors out;
    out.trQ_pred = params.d / tau;
    out.cW_pred = 2.0 * (1.0 - params.beta * params.delta) * dc.c_p * params.d /
                  ((params.p - 1.0) * (params.p - 1.0) * tau);
    out.rate_pred = 1.0 + dc.mu5 / tau;
    return out;
}

}  // namespace cgl
