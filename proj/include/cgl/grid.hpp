#ifndef CGL_GRID_HPP
#define CGL_GRID_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "cgl/error.hpp"

namespace cgl {

// Uniform tensor grid on [-L, L]^d with an odd point count per axis so that
// z = 0 is a node. Rescaled-domain grids require L >= 10 (the far field must
// reach the asymptotic regime); physical-domain grids may be smaller.
struct Grid {
    int d = 1;
    double L = 30.0;
    int n = 961;
    double h = 0.0625;

    Grid() = default;
    Grid(int d_, double L_, int n_, bool require_far_field = true);
    static Grid physical(int d_, double L_, int n_) { return Grid(d_, L_, n_, false); }

    std::size_t size() const;
    int center() const { return (n - 1) / 2; }
    double coord(int i) const { return -L + h * i; }
    // node -> coordinates
    void node_coords(std::size_t idx, double* z) const;
    std::size_t index(const int* i) const;

    bool operator==(const Grid& o) const {
        return d == o.d && L == o.L && n == o.n;
    }
};

// Scalar field sampled on a grid, row-major. Value semantics throughout.
struct Field {
    Grid grid;
    std::vector<double> v;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : grid(g), v(g.size(), fill) {}

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
    std::size_t size() const { return v.size(); }
    bool finite() const;
    double max_abs() const;
};

Field sample(const Grid& g, const std::function<double(const double*)>& f);

// Finite-difference coefficients for the m-th derivative on the given integer
// offsets (unit spacing), exact for polynomials up to degree offsets.size()-1.
std::vector<double> fd_coeffs(int m, const std::vector<int>& offsets);

// Derivative along one axis: 6th-order central stencils in the interior,
// shifted windows of the same width (order >= 4) near the boundary.
Field axis_derivative(const Field& f, int axis, int m, bool one_sided_at_boundary = true);

// Mixed partial of total order <= 4, given per-axis orders.
Field differentiate(const Field& f, const std::array<int, 2>& multi_index,
                    bool one_sided_at_boundary = true);

// Derivative tensors at the origin node up to max_order <= 4, built from
// tensor products of 1-D central stencils (hence exactly symmetric).
struct OriginDerivs {
    int d = 1;
    int order = 0;
    double value = 0.0;
    std::vector<double> grad;
    std::vector<double> hess;
    std::vector<double> third;
    std::vector<double> fourth;

    double hess_at(int i, int j) const { return hess[i * d + j]; }
    double third_at(int i, int j, int k) const { return third[(i * d + j) * d + k]; }
    double fourth_at(int i, int j, int k, int l) const { return fourth[((i * d + j) * d + k) * d + l]; }
};

OriginDerivs derivatives_at_origin(const Field& f, int max_order);

// Trapezoidal quadrature of f(z)*weight(z); the origin cell is replaced by
// midpoint samples of the 2^d adjacent half-cells so singular-at-0 weights are
// never evaluated at the origin node.
double weighted_integral(const Field& f, const std::function<double(const double*)>& weight);

// Local polynomial interpolation, exact for cubics.
double interpolate(const Field& f, const double* x);

}  // namespace cgl

#endif
