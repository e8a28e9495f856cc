#pragma once

// Vertex-centred finite-volume discretisation on uniform grids. In 1-D the boundary rows coincide
// with ghost-node elimination of the Robin/Neumann condition (second order); for radial balls the
// control volumes carry the measure |S^{N-1}| r^{N-1} dr, and the r = 0 row reduces to 2N(u1-u0)/h^2.
// The operator is symmetric in the quadrature inner product <a, b>_w = sum w_i a_i b_i.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "filtlab/error.hpp"
#include "filtlab/model.hpp"

namespace filtlab {

using Field = std::vector<double>;

/// Uniform grid with n intervals (n + 1 nodes) plus quadrature weights and control-volume faces.
struct Grid {
    bool radial = false;
    int dimension = 1;      ///< N for balls, 1 for intervals
    double h = 0.0;
    Field x;                ///< node coordinates (r for balls)
    Field weights;          ///< control-volume measures; sum = |Omega|
    Field faces;            ///< faces[i]: area of the face between nodes i and i+1
    double outer_area = 1.0;   ///< boundary area at the last node (|S^{N-1}| R^{N-1})
    double inner_area = 1.0;   ///< boundary area at node 0 (intervals only)

    std::size_t size() const { return x.size(); }
    int intervals() const { return static_cast<int>(x.size()) - 1; }
};

inline double unit_sphere_area(int N) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N);
}

inline Grid build_grid(const DomainSpec& d, int n) {
    if (n < 8) throw Error("build_grid: need at least 8 intervals");
    Grid g;
    g.x.resize(n + 1);
    g.weights.resize(n + 1);
    g.faces.resize(n);
    if (d.is_interval()) {
        const auto& iv = d.interval();
        g.h = (iv.b - iv.a) / n;
        for (int i = 0; i <= n; ++i) g.x[i] = iv.a + i * g.h;
        g.x[n] = iv.b;
        for (int i = 0; i <= n; ++i) g.weights[i] = g.h;
        g.weights[0] = g.weights[n] = 0.5 * g.h;
        for (int i = 0; i < n; ++i) g.faces[i] = 1.0;
        g.inner_area = g.outer_area = 1.0;
        return g;
    }
    const auto& ball = d.ball();
    const int N = ball.dimension;
    const double S = unit_sphere_area(N);
    g.radial = true;
    g.dimension = N;
    g.h = ball.radius / n;
    for (int i = 0; i <= n; ++i) g.x[i] = i * g.h;
    g.x[n] = ball.radius;
    auto vol = [&](double r) { return S * std::pow(r, N) / N; };
    for (int i = 0; i <= n; ++i) {
        double lo = i == 0 ? 0.0 : g.x[i] - 0.5 * g.h;
        double hi = i == n ? ball.radius : g.x[i] + 0.5 * g.h;
        g.weights[i] = vol(hi) - vol(lo);
    }
    for (int i = 0; i < n; ++i) g.faces[i] = S * std::pow(g.x[i] + 0.5 * g.h, N - 1);
    g.outer_area = S * std::pow(ball.radius, N - 1);
    g.inner_area = 0.0;
    return g;
}

/// Quadrature-weighted sum.
inline double integrate(std::span<const double> f, const Grid& g) {
    if (f.size() != g.size()) throw Error("integrate: field/grid size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += g.weights[i] * f[i];
    return s;
}

/// Weighted inner product <a, b>_w.
inline double inner(std::span<const double> a, std::span<const double> b, const Grid& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += g.weights[i] * a[i] * b[i];
    return s;
}

inline double weighted_norm(std::span<const double> a, const Grid& g) { return std::sqrt(inner(a, a, g)); }

/// Tridiagonal discrete Laplacian with boundary rows encoding the boundary condition.
/// Dirichlet nodes are flagged `fixed`: their rows are zero in apply() and identity rows in solves.
struct LinearOperator {
    Field lower;  ///< lower[i] couples node i to i-1 (lower[0] unused)
    Field diag;
    Field upper;  ///< upper[i] couples node i to i+1 (upper[n] unused)
    std::vector<bool> fixed;
    BoundarySpec boundary;

    std::size_t size() const { return diag.size(); }

    Field apply(std::span<const double> u) const {
        const std::size_t n = diag.size();
        Field out(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (fixed[i]) continue;
            double v = diag[i] * u[i];
            if (i > 0) v += lower[i] * u[i - 1];
            if (i + 1 < n) v += upper[i] * u[i + 1];
            out[i] = v;
        }
        return out;
    }

    bool any_fixed() const {
        for (bool b : fixed)
            if (b) return true;
        return false;
    }
};

inline LinearOperator laplacian(const Grid& g, const BoundarySpec& b) {
    const std::size_t n = g.size();
    LinearOperator L;
    L.lower.assign(n, 0.0);
    L.diag.assign(n, 0.0);
    L.upper.assign(n, 0.0);
    L.fixed.assign(n, false);
    L.boundary = b;
    const double h = g.h;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        // Flux through face i+1/2 contributes to both neighbouring control volumes.
        double c = g.faces[i] / h;
        L.upper[i] += c / g.weights[i];
        L.diag[i] -= c / g.weights[i];
        L.lower[i + 1] += c / g.weights[i + 1];
        L.diag[i + 1] -= c / g.weights[i + 1];
    }
    auto boundary_row = [&](std::size_t i, const BoundaryCondition& bc, double area, double coord) {
        switch (bc.kind) {
            case BoundaryKind::Neumann: break;
            case BoundaryKind::Robin: {
                double beta = bc.coefficient(coord);
                L.diag[i] -= area * beta / g.weights[i];
                break;
            }
            case BoundaryKind::Dirichlet:
                L.fixed[i] = true;
                L.lower[i] = L.diag[i] = L.upper[i] = 0.0;
                break;
        }
    };
    if (!g.radial) boundary_row(0, b.left, g.inner_area, g.x.front());
    boundary_row(n - 1, b.right, g.outer_area, g.x.back());
    return L;
}

/// Solves the tridiagonal system (lower, diag, upper) x = rhs by Gaussian elimination with
/// partial pivoting. Inputs are taken by value; throws ConvergenceError on a singular pivot.
inline Field solve_tridiagonal(Field lower, Field diag, Field upper, Field rhs) {
    const std::size_t n = diag.size();
    // Second superdiagonal created by pivoting.
    Field upper2(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double& a = diag[i];
        double& b = lower[i + 1];
        if (std::fabs(b) > std::fabs(a)) {
            std::swap(diag[i], lower[i + 1]);
            std::swap(upper[i], diag[i + 1]);
            if (i + 2 < n) std::swap(upper2[i], upper[i + 1]);
            std::swap(rhs[i], rhs[i + 1]);
        }
        if (a == 0.0) throw ConvergenceError("singular tridiagonal system");
        double m = b / a;
        diag[i + 1] -= m * upper[i];
        if (i + 2 < n) upper[i + 1] -= m * upper2[i];
        rhs[i + 1] -= m * rhs[i];
        b = 0.0;
    }
    if (diag[n - 1] == 0.0) throw ConvergenceError("singular tridiagonal system");
    Field x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    if (n >= 2) x[n - 2] = (rhs[n - 2] - upper[n - 2] * x[n - 1]) / diag[n - 2];
    for (std::size_t k = n - 2; k-- > 0;) x[k] = (rhs[k] - upper[k] * x[k + 1] - upper2[k] * x[k + 2]) / diag[k];
    return x;
}

/// Samples an expression of the node coordinate onto the grid.
inline Field sample(const Expression& e, const Grid& g) {
    Field out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = e(g.x[i]);
    return out;
}

}  // namespace filtlab
