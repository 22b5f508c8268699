#include "cgl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace cgl {

Grid::Grid(int d_, double L_, int n_, bool require_far_field) : d(d_), L(L_), n(n_) {
    if (d < 1 || d > 2) fail(ErrorCode::GridTooSmall, "grid supports d in {1, 2}");
    if (n < 9) fail(ErrorCode::GridTooSmall, "grid needs at least 9 points per axis");
    if (n % 2 == 0) fail(ErrorCode::GridTooSmall, "grid needs an odd point count per axis");
    if (!(L > 0.0)) fail(ErrorCode::GridTooSmall, "grid half-width must be positive");
    if (require_far_field && L < 10.0)
        fail(ErrorCode::GridTooSmall, "rescaled-domain grid requires L >= 10");
    h = 2.0 * L / (n - 1);
}

std::size_t Grid::size() const {
    std::size_t s = 1;
    for (int a = 0; a < d; ++a) s *= static_cast<std::size_t>(n);
    return s;
}

void Grid::node_coords(std::size_t idx, double* z) const {
    if (d == 1) {
        z[0] = coord(static_cast<int>(idx));
    } else {
        z[0] = coord(static_cast<int>(idx / n));
        z[1] = coord(static_cast<int>(idx % n));
    }
}

std::size_t Grid::index(const int* i) const {
    if (d == 1) return static_cast<std::size_t>(i[0]);
    return static_cast<std::size_t>(i[0]) * n + i[1];
}

bool Field::finite() const {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

double Field::max_abs() const {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

Field sample(const Grid& g, const std::function<double(const double*)>& f) {
    Field out(g);
    double z[2];
    for (std::size_t i = 0; i < out.size(); ++i) {
        g.node_coords(i, z);
        out.v[i] = f(z);
    }
    return out;
}

std::vector<double> fd_coeffs(int m, const std::vector<int>& offsets) {
    const int n = static_cast<int>(offsets.size());
    if (m >= n) fail(ErrorCode::OrderTooHigh, "stencil too short for requested derivative");
    // Solve sum_j c_j s_j^q = m! delta_{q,m}, q = 0..n-1 (long double Gauss).
    std::vector<long double> A(n * n), b(n, 0.0L);
    for (int q = 0; q < n; ++q)
        for (int j = 0; j < n; ++j)
            A[q * n + j] = std::pow(static_cast<long double>(offsets[j]), q);
    long double fact = 1.0L;
    for (int i = 2; i <= m; ++i) fact *= i;
    b[m] = fact;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs((double)A[r * n + col]) > std::fabs((double)A[piv * n + col])) piv = r;
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(A[col * n + c], A[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        for (int r = col + 1; r < n; ++r) {
            const long double f = A[r * n + col] / A[col * n + col];
            for (int c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> c(n);
    for (int r = n - 1; r >= 0; --r) {
        long double s = b[r];
        for (int cidx = r + 1; cidx < n; ++cidx) s -= A[r * n + cidx] * c[cidx];
        c[r] = static_cast<double>(s / A[r * n + r]);
    }
    // make constants annihilate exactly: fold the residual sum into the
    // zero-offset coefficient (within its own roundoff)
    if (m >= 1) {
        double sum = 0.0;
        for (double x : c) sum += x;
        for (int j = 0; j < n; ++j)
            if (offsets[j] == 0) {
                c[j] -= sum;
                break;
            }
    }
    return c;
}

namespace {

// Window half-widths giving 6th-order interior accuracy for m = 1..4.
int central_reach(int m) { return m <= 2 ? 3 : 4; }

struct AxisStencils {
    int m = 0;
    int reach = 0;
    std::vector<double> central;                 // offsets -reach..reach
    std::vector<std::vector<double>> shifted;    // for nodes 0..reach-1 (left side)
};

const AxisStencils& axis_stencils(int m) {
    static std::map<int, AxisStencils> cache;
    auto it = cache.find(m);
    if (it != cache.end()) return it->second;
    AxisStencils s;
    s.m = m;
    s.reach = central_reach(m);
    const int len = 2 * s.reach + 1;
    std::vector<int> offs(len);
    for (int j = 0; j < len; ++j) offs[j] = j - s.reach;
    s.central = fd_coeffs(m, offs);
    s.shifted.resize(s.reach);
    for (int i = 0; i < s.reach; ++i) {
        // node at distance i from the left boundary: window [ -i .. len-1-i ]
        for (int j = 0; j < len; ++j) offs[j] = j - i;
        s.shifted[i] = fd_coeffs(m, offs);
    }
    return cache.emplace(m, std::move(s)).first->second;
}

void apply_axis(const double* in, double* out, int n, std::size_t stride, double hm,
                const AxisStencils& st, bool one_sided) {
    const int R = st.reach;
    const int len = 2 * R + 1;
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        if (i >= R && i <= n - 1 - R) {
            const double* base = in + (i - R) * stride;
            for (int j = 0; j < len; ++j) acc += st.central[j] * base[j * stride];
        } else if (!one_sided) {
            out[i * stride] = 0.0;
            continue;
        } else if (i < R) {
            const double* base = in + 0 * stride;
            const auto& c = st.shifted[i];
            for (int j = 0; j < len; ++j) acc += c[j] * base[(j) * stride];
            // window starts at node 0 when shifted by i: offsets j - i relative to i
        } else {
            // mirror of the left case
            const auto& c = st.shifted[n - 1 - i];
            const double* base = in + (n - len) * stride;
            double a = 0.0;
            for (int j = 0; j < len; ++j) a += -c[len - 1 - j] * base[j * stride];
            acc = (st.m % 2 == 0) ? -a : a;
        }
        out[i * stride] = acc / hm;
    }
}

}  // namespace

Field axis_derivative(const Field& f, int axis, int m, bool one_sided_at_boundary) {
    if (m < 0 || m > 4) fail(ErrorCode::OrderTooHigh, "axis derivative order must be <= 4");
    if (m == 0) return f;
    const Grid& g = f.grid;
    if (axis < 0 || axis >= g.d) fail(ErrorCode::OrderTooHigh, "axis out of range");
    const AxisStencils& st = axis_stencils(m);
    if (g.n < 2 * st.reach + 1) fail(ErrorCode::GridTooSmall, "grid too small for stencil");
    Field out(g);
    const double hm = std::pow(g.h, m);
    if (g.d == 1) {
        apply_axis(f.v.data(), out.v.data(), g.n, 1, hm, st, one_sided_at_boundary);
    } else {
        const int n = g.n;
        if (axis == 0) {
            for (int col = 0; col < n; ++col)
                apply_axis(f.v.data() + col, out.v.data() + col, n, n, hm, st,
                           one_sided_at_boundary);
        } else {
            for (int row = 0; row < n; ++row)
                apply_axis(f.v.data() + static_cast<std::size_t>(row) * n,
                           out.v.data() + static_cast<std::size_t>(row) * n, n, 1, hm, st,
                           one_sided_at_boundary);
        }
    }
    return out;
}

Field differentiate(const Field& f, const std::array<int, 2>& multi_index,
                    bool one_sided_at_boundary) {
    const int total = multi_index[0] + multi_index[1];
    if (total > 4) fail(ErrorCode::OrderTooHigh, "total derivative order must be <= 4");
    Field out = f;
    for (int axis = 0; axis < f.grid.d; ++axis)
        if (multi_index[axis] > 0)
            out = axis_derivative(out, axis, multi_index[axis], one_sided_at_boundary);
    return out;
}

OriginDerivs derivatives_at_origin(const Field& f, int max_order) {
    if (max_order < 0 || max_order > 4)
        fail(ErrorCode::OrderTooHigh, "origin derivatives support order <= 4");
    const Grid& g = f.grid;
    if (g.n < 9) fail(ErrorCode::GridTooSmall, "origin stencils need n >= 9");
    const int c = g.center();
    const int d = g.d;

    // 1-D value of the (m)-th derivative stencil applied at the center along
    // one axis, with the other axis held at node "other".
    auto d1 = [&](int m, int axis, int other) {
        if (m == 0) {
            if (d == 1) return f.v[c];
            int idx[2] = {axis == 0 ? c : other, axis == 0 ? other : c};
            return f.v[g.index(idx)];
        }
        const AxisStencils& st = axis_stencils(m);
        double acc = 0.0;
        for (int j = -st.reach; j <= st.reach; ++j) {
            double val;
            if (d == 1) {
                val = f.v[c + j];
            } else {
                int idx[2];
                idx[axis] = c + j;
                idx[1 - axis] = other;
                val = f.v[g.index(idx)];
            }
            acc += st.central[j + st.reach] * val;
        }
        return acc / std::pow(g.h, m);
    };
    // Mixed derivative with per-axis orders (m0, m1) at the origin.
    auto dmixed = [&](int m0, int m1) {
        if (d == 1) return d1(m0, 0, 0);
        if (m0 == 0) return d1(m1, 1, g.center());
        if (m1 == 0) return d1(m0, 0, g.center());
        const AxisStencils& s0 = axis_stencils(m0);
        const AxisStencils& s1 = axis_stencils(m1);
        double acc = 0.0;
        for (int j0 = -s0.reach; j0 <= s0.reach; ++j0)
            for (int j1 = -s1.reach; j1 <= s1.reach; ++j1) {
                int idx[2] = {c + j0, c + j1};
                acc += s0.central[j0 + s0.reach] * s1.central[j1 + s1.reach] * f.v[g.index(idx)];
            }
        return acc / std::pow(g.h, m0 + m1);
    };

    OriginDerivs out;
    out.d = d;
    out.order = max_order;
    out.value = dmixed(0, 0);
    auto counts_of = [&](std::initializer_list<int> axes) {
        int m[2] = {0, 0};
        for (int a : axes) ++m[a];
        return std::array<int, 2>{m[0], m[1]};
    };
    if (max_order >= 1) {
        out.grad.assign(d, 0.0);
        for (int i = 0; i < d; ++i) {
            auto m = counts_of({i});
            out.grad[i] = dmixed(m[0], m[1]);
        }
    }
    if (max_order >= 2) {
        out.hess.assign(d * d, 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                auto m = counts_of({i, j});
                out.hess[i * d + j] = dmixed(m[0], m[1]);
            }
    }
    if (max_order >= 3) {
        out.third.assign(d * d * d, 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k) {
                    auto m = counts_of({i, j, k});
                    out.third[(i * d + j) * d + k] = dmixed(m[0], m[1]);
                }
    }
    if (max_order >= 4) {
        out.fourth.assign(d * d * d * d, 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                for (int k = 0; k < d; ++k)
                    for (int l = 0; l < d; ++l) {
                        auto m = counts_of({i, j, k, l});
                        out.fourth[((i * d + j) * d + k) * d + l] = dmixed(m[0], m[1]);
                    }
    }
    return out;
}

double weighted_integral(const Field& f, const std::function<double(const double*)>& weight) {
    const Grid& g = f.grid;
    const std::size_t origin = (g.d == 1) ? static_cast<std::size_t>(g.center())
                                          : static_cast<std::size_t>(g.center()) * g.n + g.center();
    double acc = 0.0;
    double z[2];
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (i == origin) continue;
        g.node_coords(i, z);
        double w = 1.0;
        if (g.d == 1) {
            w = (i == 0 || i + 1 == f.size()) ? 0.5 * g.h : g.h;
        } else {
            const int r = static_cast<int>(i / g.n), c = static_cast<int>(i % g.n);
            w = ((r == 0 || r == g.n - 1) ? 0.5 * g.h : g.h) *
                ((c == 0 || c == g.n - 1) ? 0.5 * g.h : g.h);
        }
        const double term = f.v[i] * weight(z);
        if (!std::isfinite(term)) fail(ErrorCode::NonFiniteIntegrand, "non-finite integrand node");
        acc += w * term;
    }
    // Origin cell: midpoint samples of the 2^d adjacent half-cells, with the
    // integrand value at each midpoint extrapolated quadratically along the
    // ray from the three nearest off-origin nodes. This never evaluates the
    // weight at z = 0 and stays linear in f (energies remain homogeneous).
    const int c = g.center();
    const double w1 = 2.40625, w2 = -2.0625, w3 = 0.65625;  // Lagrange at 1/4 on nodes 1,2,3
    auto integrand_at = [&](int i, int j) {
        double z[2];
        const std::size_t idx = (g.d == 1) ? static_cast<std::size_t>(i)
                                           : static_cast<std::size_t>(i) * g.n + j;
        g.node_coords(idx, z);
        const double term = f.v[idx] * weight(z);
        if (!std::isfinite(term)) fail(ErrorCode::NonFiniteIntegrand, "non-finite origin cell");
        return term;
    };
    if (g.d == 1) {
        for (int s : {-1, 1}) {
            const double Fmid = w1 * integrand_at(c + s, 0) + w2 * integrand_at(c + 2 * s, 0) +
                                w3 * integrand_at(c + 3 * s, 0);
            acc += 0.5 * g.h * Fmid;
        }
    } else {
        for (int sx : {-1, 1})
            for (int sy : {-1, 1}) {
                const double Fmid = w1 * integrand_at(c + sx, c + sy) +
                                    w2 * integrand_at(c + 2 * sx, c + 2 * sy) +
                                    w3 * integrand_at(c + 3 * sx, c + 3 * sy);
                acc += 0.25 * g.h * g.h * Fmid;
            }
    }
    return acc;
}

namespace {

void cubic_weights(double t, int n, int& i0, double w[4]) {
    // Window [i0, i0+3] containing t, clamped to the grid.
    i0 = static_cast<int>(std::floor(t)) - 1;
    i0 = std::max(0, std::min(i0, n - 4));
    const double s = t - i0;
    // Lagrange basis on nodes 0,1,2,3 evaluated at s.
    w[0] = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    w[1] = s * (s - 2.0) * (s - 3.0) / 2.0;
    w[2] = -s * (s - 1.0) * (s - 3.0) / 2.0;
    w[3] = s * (s - 1.0) * (s - 2.0) / 6.0;
}

}  // namespace

double interpolate(const Field& f, const double* x) {
    const Grid& g = f.grid;
    const double slack = 1e-12 * g.L;
    for (int a = 0; a < g.d; ++a)
        if (x[a] < -g.L - slack || x[a] > g.L + slack)
            fail(ErrorCode::OutOfDomain, "interpolation point outside the grid");
    if (g.d == 1) {
        int i0;
        double w[4];
        cubic_weights((x[0] + g.L) / g.h, g.n, i0, w);
        double acc = 0.0;
        for (int j = 0; j < 4; ++j) acc += w[j] * f.v[i0 + j];
        return acc;
    }
    int i0, j0;
    double wi[4], wj[4];
    cubic_weights((x[0] + g.L) / g.h, g.n, i0, wi);
    cubic_weights((x[1] + g.L) / g.h, g.n, j0, wj);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
        double row = 0.0;
        const double* base = f.v.data() + static_cast<std::size_t>(i0 + a) * g.n + j0;
        for (int b = 0; b < 4; ++b) row += wj[b] * base[b];
        acc += wi[a] * row;
    }
    return acc;
}

}  // namespace cgl
