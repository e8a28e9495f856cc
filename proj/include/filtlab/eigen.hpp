#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "filtlab/error.hpp"
#include "filtlab/grid.hpp"
#include "filtlab/model.hpp"

namespace filtlab {

enum class Normalization { L1, Weighted };

inline std::string to_string(Normalization n) { return n == Normalization::L1 ? "L1" : "weighted"; }

/// Principal eigenpair. `convention` states how mu enters the equation it solves.
struct EigenPair {
    double mu = 0.0;
    Field phi;
    Normalization normalization = Normalization::L1;
    double residual = 0.0;  ///< ||operator residual||_w / ||phi||_w
    int iterations = 0;
    std::string convention;
};

namespace detail {

/// Number of eigenvalues of the symmetric tridiagonal (d, e) strictly below x.
inline int sturm_count(const Field& d, const Field& e, double x) {
    int count = 0;
    double q = 1.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        double off = i == 0 ? 0.0 : e[i - 1] * e[i - 1];
        q = d[i] - x - (i == 0 ? 0.0 : off / q);
        if (q == 0.0) q = -std::numeric_limits<double>::epsilon() * (std::fabs(d[i]) + std::fabs(x) + 1.0);
        if (q < 0.0) ++count;
    }
    return count;
}

struct SmallestEigen {
    double value;
    Field vector;
    int iterations;
};

/// Smallest eigenpair of a symmetric tridiagonal matrix: Sturm bisection supplies a shift just
/// below the lowest eigenvalue, shifted inverse iteration converges the vector, and a final Sturm
/// count confirms the Rayleigh quotient is the lowest eigenvalue (no convergence to a higher mode).
inline SmallestEigen smallest_eigenpair(const Field& d, const Field& e) {
    const std::size_t n = d.size();
    if (n == 0) throw Error("eigenproblem with no free nodes");
    double glo = std::numeric_limits<double>::infinity(), ghi = -glo;
    for (std::size_t i = 0; i < n; ++i) {
        double r = (i > 0 ? std::fabs(e[i - 1]) : 0.0) + (i + 1 < n ? std::fabs(e[i]) : 0.0);
        glo = std::min(glo, d[i] - r);
        ghi = std::max(ghi, d[i] + r);
    }
    const double scale = std::max({std::fabs(glo), std::fabs(ghi), 1.0});
    double lo = glo - 1e-12 * scale, hi = ghi + 1e-12 * scale;
    for (int it = 0; it < 200 && hi - lo > 1e-9 * scale; ++it) {
        double mid = 0.5 * (lo + hi);
        if (sturm_count(d, e, mid) >= 1)
            hi = mid;
        else
            lo = mid;
    }
    const double shift = lo - 1e-9 * scale;

    Field y(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double mu = std::numeric_limits<double>::quiet_NaN();
    Field lower(n, 0.0), upper(n, 0.0), diag(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        upper[i] = e[i];
        lower[i + 1] = e[i];
    }
    for (std::size_t i = 0; i < n; ++i) diag[i] = d[i] - shift;
    int it = 0;
    for (; it < 100; ++it) {
        Field z = solve_tridiagonal(lower, diag, upper, y);
        double nz = 0.0;
        for (double v : z) nz += v * v;
        nz = std::sqrt(nz);
        for (std::size_t i = 0; i < n; ++i) y[i] = z[i] / nz;
        double rq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double sy = d[i] * y[i];
            if (i > 0) sy += e[i - 1] * y[i - 1];
            if (i + 1 < n) sy += e[i] * y[i + 1];
            rq += y[i] * sy;
        }
        double prev = mu;
        mu = rq;
        if (it > 0 && std::fabs(mu - prev) <= std::max(1e-12 * std::max(std::fabs(mu), 1.0),
                                                       64.0 * std::numeric_limits<double>::epsilon() * scale))
            break;
    }
    if (it >= 100) throw ConvergenceError("inverse iteration did not converge");
    const double guard = 1e-7 * scale;
    if (sturm_count(d, e, mu - guard) != 0)
        throw ConvergenceError("inverse iteration converged to a non-principal eigenvalue");
    return {mu, y, it + 1};
}

}  // namespace detail

/// Principal eigenpair of -Laplace with the operator's boundary condition:
/// Laplace phi + mu phi = 0, phi > 0, integral of phi = 1.
inline EigenPair principal_eigenpair(const LinearOperator& L, const Grid& g) {
    const std::size_t n = L.size();
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i)
        if (!L.fixed[i]) free.push_back(i);
    Field d(free.size()), e(free.size() > 0 ? free.size() - 1 : 0);
    for (std::size_t k = 0; k < free.size(); ++k) {
        std::size_t i = free[k];
        d[k] = -L.diag[i];
        if (k + 1 < free.size()) e[k] = -L.upper[i] * std::sqrt(g.weights[i] / g.weights[i + 1]);
    }
    auto sol = detail::smallest_eigenpair(d, e);
    EigenPair ep;
    ep.mu = sol.value;
    ep.iterations = sol.iterations;
    ep.phi.assign(n, 0.0);
    for (std::size_t k = 0; k < free.size(); ++k) ep.phi[free[k]] = sol.vector[k] / std::sqrt(g.weights[free[k]]);
    auto imax = std::max_element(ep.phi.begin(), ep.phi.end(),
                                 [](double a, double b) { return std::fabs(a) < std::fabs(b); });
    if (*imax < 0.0)
        for (double& v : ep.phi) v = -v;
    for (std::size_t i : free)
        if (!(ep.phi[i] > 0.0)) throw ConvergenceError("principal eigenfunction is not positive");
    double mass = integrate(ep.phi, g);
    for (double& v : ep.phi) v /= mass;
    ep.normalization = Normalization::L1;
    ep.convention = "Laplace phi + mu phi = 0 (mu is the eigenvalue of -Laplace)";
    Field r = L.apply(ep.phi);
    for (std::size_t i : free) r[i] += ep.mu * ep.phi[i];
    ep.residual = weighted_norm(r, g) / weighted_norm(ep.phi, g);
    return ep;
}

/// Principal eigenpair of the linearisation about a steady state w:
///   -Laplace[K'(w) phi] = lambda f'(w) phi + mu phi,  integral of K'(w) phi = 1.
/// Solved for chi = K'(w) phi, which turns it into a symmetric generalised problem.
inline EigenPair linearized_eigenpair(const Field& w, const NonlinearModel& m, const Grid& g) {
    LinearOperator L = laplacian(g, m.boundary);
    const std::size_t n = L.size();
    if (w.size() != n) throw Error("linearized_eigenpair: field/grid size mismatch");
    Field k(n), q(n);
    for (std::size_t i = 0; i < n; ++i) {
        k[i] = m.K.eval(w[i], 1).d1;
        q[i] = m.lambda * m.f.eval(w[i], 1).d1;
    }
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i) {
        if (L.fixed[i]) continue;
        if (!(k[i] > 0.0)) throw HypothesisError("K'(w) must be positive at every free node");
        free.push_back(i);
    }
    Field d(free.size()), e(free.size() > 0 ? free.size() - 1 : 0);
    for (std::size_t a = 0; a < free.size(); ++a) {
        std::size_t i = free[a];
        d[a] = -k[i] * L.diag[i] - q[i];
        if (a + 1 < free.size())
            e[a] = -g.weights[i] * L.upper[i] * std::sqrt(k[i] * k[i + 1] / (g.weights[i] * g.weights[i + 1]));
    }
    auto sol = detail::smallest_eigenpair(d, e);
    EigenPair ep;
    ep.mu = sol.value;
    ep.iterations = sol.iterations;
    ep.phi.assign(n, 0.0);
    for (std::size_t a = 0; a < free.size(); ++a) {
        std::size_t i = free[a];
        double chi = sol.vector[a] * std::sqrt(k[i] / g.weights[i]);
        ep.phi[i] = chi / k[i];
    }
    auto imax = std::max_element(ep.phi.begin(), ep.phi.end(),
                                 [](double a, double b) { return std::fabs(a) < std::fabs(b); });
    if (*imax < 0.0)
        for (double& v : ep.phi) v = -v;
    for (std::size_t i : free)
        if (!(ep.phi[i] > 0.0)) throw ConvergenceError("linearised eigenfunction is not positive");
    Field kphi(n);
    for (std::size_t i = 0; i < n; ++i) kphi[i] = k[i] * ep.phi[i];
    double mass = integrate(kphi, g);
    for (std::size_t i = 0; i < n; ++i) {
        ep.phi[i] /= mass;
        kphi[i] /= mass;
    }
    ep.normalization = Normalization::Weighted;
    ep.convention = "-Laplace[K'(w) phi] = lambda f'(w) phi + mu phi (mu < 0: unstable)";
    Field r = L.apply(kphi);
    for (std::size_t i : free) r[i] = -r[i] - q[i] * ep.phi[i] - ep.mu * ep.phi[i];
    for (std::size_t i = 0; i < n; ++i)
        if (L.fixed[i]) r[i] = 0.0;
    ep.residual = weighted_norm(r, g) / weighted_norm(ep.phi, g);
    return ep;
}

}  // namespace filtlab
