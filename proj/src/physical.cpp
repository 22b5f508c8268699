#include "cgl/physical.hpp"

#include <algorithm>
#include <cmath>

namespace cgl {

double ComplexField::max_abs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < re.size(); ++i) m = std::max(m, abs_at(i));
    return m;
}

bool ComplexField::finite() const {
    for (double x : re)
        if (!std::isfinite(x)) return false;
    for (double x : im)
        if (!std::isfinite(x)) return false;
    return true;
}

namespace {

constexpr int kGhost = 3;

struct ExtArray {
    int d = 1, n = 0;
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

// Quadratic extrapolation through the last three interior nodes, or periodic wrap.
ExtArray build_ext(const std::vector<double>& f, const Grid& g, bool periodic) {
    ExtArray e;
    e.d = g.d;
    e.n = g.n;
    e.v.assign(static_cast<std::size_t>(e.stride()) * (g.d == 2 ? e.stride() : 1), 0.0);
    auto quad = [](double f0, double f1, double f2, int k) {
        // values at offsets 0,-1,-2 from the boundary, extrapolated to +k
        return f0 * (1.0 + k) * (2.0 + k) * 0.5 - f1 * k * (2.0 + k) + f2 * k * (1.0 + k) * 0.5;
    };
    if (g.d == 1) {
        for (int i = 0; i < g.n; ++i) e.at(i) = f[i];
        for (int k = 1; k <= kGhost; ++k) {
            if (periodic) {
                // period 2L = n-1 cells; node n-1 coincides with node 0's image
                e.at(g.n - 1 + k) = f[k % (g.n - 1)];
                e.at(-k) = f[(g.n - 1 - k % (g.n - 1)) % (g.n - 1)];
            } else {
                e.at(g.n - 1 + k) = quad(f[g.n - 1], f[g.n - 2], f[g.n - 3], k);
                e.at(-k) = quad(f[0], f[1], f[2], k);
            }
        }
        return e;
    }
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.n; ++j) e.at(i, j) = f[static_cast<std::size_t>(i) * g.n + j];
    for (int j = 0; j < g.n; ++j)
        for (int k = 1; k <= kGhost; ++k) {
            if (periodic) {
                e.at(g.n - 1 + k, j) = e.at(k % (g.n - 1), j);
                e.at(-k, j) = e.at((g.n - 1 - k % (g.n - 1)) % (g.n - 1), j);
            } else {
                e.at(g.n - 1 + k, j) = quad(e.at(g.n - 1, j), e.at(g.n - 2, j), e.at(g.n - 3, j), k);
                e.at(-k, j) = quad(e.at(0, j), e.at(1, j), e.at(2, j), k);
            }
        }
    for (int i = -kGhost; i < g.n + kGhost; ++i)
        for (int k = 1; k <= kGhost; ++k) {
            if (periodic) {
                e.at(i, g.n - 1 + k) = e.at(i, k % (g.n - 1));
                e.at(i, -k) = e.at(i, (g.n - 1 - k % (g.n - 1)) % (g.n - 1));
            } else {
                e.at(i, g.n - 1 + k) = quad(e.at(i, g.n - 1), e.at(i, g.n - 2), e.at(i, g.n - 3), k);
                e.at(i, -k) = quad(e.at(i, 0), e.at(i, 1), e.at(i, 2), k);
            }
        }
    return e;
}

const std::vector<double>& lap_kernel() {
    static const std::vector<double> c = fd_coeffs(2, {-3, -2, -1, 0, 1, 2, 3});
    return c;
}

double laplacian_at(const ExtArray& e, int i0, int i1, int d, double h) {
    const auto& c = lap_kernel();
    double acc = 0.0;
    for (int j = -3; j <= 3; ++j) acc += c[j + 3] * e.at(i0 + j, i1);
    if (d == 2)
        for (int j = -3; j <= 3; ++j) acc += c[j + 3] * e.at(i0, i1 + j);
    return acc / (h * h);
}

}  // namespace

ComplexField physical_rhs(const ComplexField& psi, const Parameters& params, bool periodic) {
    const Grid& g = psi.grid;
    ComplexField out(g);
    const ExtArray er = build_ext(psi.re, g, periodic);
    const ExtArray ei = build_ext(psi.im, g, periodic);
    const double b = params.beta, del = params.delta, gam = params.gamma;
    const double pm1 = params.p - 1.0;

    auto node = [&](int i0, int i1, std::size_t idx) {
        const double lr = laplacian_at(er, i0, i1, g.d, g.h);
        const double li = laplacian_at(ei, i0, i1, g.d, g.h);
        const double r = psi.re[idx], m = psi.im[idx];
        const double a2 = r * r + m * m;
        const double amp = a2 > 0.0 ? std::pow(a2, 0.5 * pm1) : 0.0;
        out.re[idx] = lr - b * li + amp * (r - del * m) - gam * r;
        out.im[idx] = b * lr + li + amp * (del * r + m) - gam * m;
    };
    if (g.d == 1) {
        for (int i = 0; i < g.n; ++i) node(i, 0, i);
    } else {
        for (int i = 0; i < g.n; ++i)
            for (int j = 0; j < g.n; ++j) node(i, j, static_cast<std::size_t>(i) * g.n + j);
    }
    return out;
}

PhysicalRunResult physical_run(const ComplexField& psi0, const Parameters& params,
                               const PhysicalRunOptions& opts) {
    const Grid& g = psi0.grid;
    if (!psi0.finite()) fail(ErrorCode::NonFiniteField, "initial data not finite");
    if (!opts.periodic) {
        // decay precondition at the domain boundary
        double bmax = 0.0;
        const double peak = psi0.max_abs();
        if (g.d == 1) {
            bmax = std::max(psi0.abs_at(0), psi0.abs_at(g.n - 1));
        } else {
            for (int i = 0; i < g.n; ++i) {
                bmax = std::max({bmax, psi0.abs_at(static_cast<std::size_t>(i) * g.n),
                                 psi0.abs_at(static_cast<std::size_t>(i) * g.n + g.n - 1),
                                 psi0.abs_at(i), psi0.abs_at(static_cast<std::size_t>(g.n - 1) * g.n + i)});
            }
        }
        if (bmax > opts.boundary_decay_tol * peak)
            fail(ErrorCode::OutOfRange, "initial data does not decay at the domain boundary");
    }

    PhysicalRunResult res;
    res.params = params;
    ComplexField psi = psi0;
    double t = 0.0;
    std::vector<double> snap_times = opts.snapshot_times;
    std::sort(snap_times.begin(), snap_times.end());
    std::size_t next_snap = 0;
    while (next_snap < snap_times.size() && snap_times[next_snap] <= 1e-300) {
        res.snapshots.push_back(PhysicalSnapshot{t, psi});
        ++next_snap;
    }

    auto record = [&](double dt) {
        PhysicalSeriesRow row;
        row.t = t;
        row.dt = dt;
        row.amp_argmax.assign(g.d, 0.0);
        std::size_t best = 0;
        for (std::size_t i = 1; i < psi.size(); ++i)
            if (psi.abs_at(i) > psi.abs_at(best)) best = i;
        row.amp_max = psi.abs_at(best);
        double z[2];
        g.node_coords(best, z);
        for (int a = 0; a < g.d; ++a) row.amp_argmax[a] = z[a];
        res.series.push_back(row);
    };
    record(0.0);

    const double pm1 = params.p - 1.0;
    long step_no = 0;
    res.outcome = "completed";
    while (t < opts.t_end - 1e-15) {
        const double amp = psi.max_abs();
        if (amp >= opts.amp_stop) {
            res.outcome = "amp_stop";
            break;
        }
        const double dt_phys = std::min(opts.C_diff * g.h * g.h / (1.0 + std::fabs(params.beta)),
                                        opts.C_nl / std::pow(amp, pm1));
        if (dt_phys < 1e-12) {  // under-resolution near blowup
            res.outcome = "dt_collapse";
            break;
        }
        double dt = std::min(dt_phys, opts.t_end - t);
        if (next_snap < snap_times.size()) dt = std::min(dt, snap_times[next_snap] - t);
        if (dt <= 0.0) break;
        // RK4
        const ComplexField k1 = physical_rhs(psi, params, opts.periodic);
        ComplexField y(g);
        for (std::size_t i = 0; i < psi.size(); ++i) {
            y.re[i] = psi.re[i] + 0.5 * dt * k1.re[i];
            y.im[i] = psi.im[i] + 0.5 * dt * k1.im[i];
        }
        const ComplexField k2 = physical_rhs(y, params, opts.periodic);
        for (std::size_t i = 0; i < psi.size(); ++i) {
            y.re[i] = psi.re[i] + 0.5 * dt * k2.re[i];
            y.im[i] = psi.im[i] + 0.5 * dt * k2.im[i];
        }
        const ComplexField k3 = physical_rhs(y, params, opts.periodic);
        for (std::size_t i = 0; i < psi.size(); ++i) {
            y.re[i] = psi.re[i] + dt * k3.re[i];
            y.im[i] = psi.im[i] + dt * k3.im[i];
        }
        const ComplexField k4 = physical_rhs(y, params, opts.periodic);
        for (std::size_t i = 0; i < psi.size(); ++i) {
            psi.re[i] += dt / 6.0 * (k1.re[i] + 2.0 * k2.re[i] + 2.0 * k3.re[i] + k4.re[i]);
            psi.im[i] += dt / 6.0 * (k1.im[i] + 2.0 * k2.im[i] + 2.0 * k3.im[i] + k4.im[i]);
        }
        t += dt;
        if (!psi.finite()) {
            res.outcome = "nonfinite";
            break;
        }
        ++step_no;
        if (step_no % opts.record_every == 0) record(dt);
        if (next_snap < snap_times.size() && t >= snap_times[next_snap] - 1e-14) {
            res.snapshots.push_back(PhysicalSnapshot{t, psi});
            ++next_snap;
        }
    }
    if (res.series.empty() || res.series.back().t != t) record(0.0);
    return res;
}

std::vector<ReconstructedValue> reconstruct_from_rescaled(
    const RescaledRunData& run, const std::vector<std::vector<double>>& x_points, double t_query) {
    const auto& snaps = run.snapshots;
    if (snaps.size() < 1) fail(ErrorCode::OutOfRange, "rescaled run has no snapshots");
    if (t_query < snaps.front().t - 1e-12 || t_query > snaps.back().t + 1e-12)
        fail(ErrorCode::OutOfRange, "query time outside the rescaled run range");

    // bracketing snapshots
    std::size_t hi = 0;
    while (hi + 1 < snaps.size() && snaps[hi].t < t_query - 1e-15) ++hi;
    const std::size_t lo = (hi == 0) ? 0 : hi - 1;
    const RescaledSnapshot& s0 = snaps[lo];
    const RescaledSnapshot& s1 = snaps[hi];
    double w = 0.0;
    if (hi != lo && s1.t > s0.t) w = std::clamp((t_query - s0.t) / (s1.t - s0.t), 0.0, 1.0);

    const int d = run.params.d;
    const double tau = (1.0 - w) * s0.tau + w * s1.tau;
    const double H = std::exp((1.0 - w) * std::log(s0.H) + w * std::log(s1.H));
    UpperTri M(d);
    for (std::size_t s = 0; s < M.a.size(); ++s) M.a[s] = (1.0 - w) * s0.M.a[s] + w * s1.M.a[s];
    std::vector<double> V(d);
    for (int a = 0; a < d; ++a) V[a] = (1.0 - w) * s0.V[a] + w * s1.V[a];

    const Eigen::MatrixXd Mm = M.mat();
    // R^{-1} = e^{tau/2} M
    const Eigen::MatrixXd Rinv = std::exp(0.5 * tau) * Mm;

    std::vector<ReconstructedValue> out(x_points.size());
    for (std::size_t k = 0; k < x_points.size(); ++k) {
        double z[2] = {0.0, 0.0};
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) z[a] += Rinv(a, b) * (x_points[k][b] - V[b]);
        }
        bool inside = true;
        for (int a = 0; a < d; ++a) inside = inside && std::fabs(z[a]) <= run.grid.L;
        if (!inside) {
            out[k].ok = false;
            continue;
        }
        const double u = (1.0 - w) * interpolate(s0.U, z) + w * interpolate(s1.U, z);
        const double th = (1.0 - w) * interpolate(s0.Theta, z) + w * interpolate(s1.Theta, z);
        out[k].value = (u / H) * std::complex<double>(std::cos(th), std::sin(th));
        out[k].ok = true;
    }
    return out;
}

BlowupFit fit_blowup_rate(const std::vector<std::pair<double, double>>& amp_series,
                          const Parameters& params) {
    if (amp_series.size() < 20)
        fail(ErrorCode::InsufficientGrowth, "need at least 20 amplitude samples");
    double amp_min = 1e300, amp_max = 0.0;
    for (const auto& [t, a] : amp_series) {
        amp_min = std::min(amp_min, a);
        amp_max = std::max(amp_max, a);
    }
    if (!(amp_max >= 10.0 * amp_min))
        fail(ErrorCode::InsufficientGrowth, "amplitude must span a factor >= 10");

    // last decade of growth: samples with amp >= amp_max / 10
    const double pm1 = params.p - 1.0;
    std::vector<double> ys, ts;
    for (const auto& [t, a] : amp_series) {
        if (a >= amp_max / 10.0) {
            ys.push_back(std::pow(a, -pm1) / pm1);
            ts.push_back(t);
        }
    }
    double T = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) T += ys[i] + ts[i];
    T /= static_cast<double>(ys.size());
    double rms = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double resid = (ys[i] - (T - ts[i])) / std::max(ys[i], 1e-300);
        rms += resid * resid;
    }
    rms = std::sqrt(rms / static_cast<double>(ys.size()));
    return BlowupFit{T, rms};
}

}  // namespace cgl
