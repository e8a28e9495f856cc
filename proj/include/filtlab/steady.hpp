#pragma once

// Steady states of Laplace K(w) + lambda f(w) = 0, computed in the variable z = K(w):
//   Laplace z + lambda g(z) = 0,  g(z) = f(K^{-1}(z)),  g'(z) = f'(w) / K'(w).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "filtlab/error.hpp"
#include "filtlab/grid.hpp"
#include "filtlab/model.hpp"

namespace filtlab {

struct SteadyState {
    double lambda = 0.0;
    Field z;
    Field w;
    double residual = 0.0;  ///< ||Laplace z + lambda g(z)||_w / max(1, ||lambda g(z)||_w)
    int iterations = 0;
};

struct SteadyOptions {
    double tolerance = 1e-10;
    int max_iterations = 60;
};

namespace detail {

/// Evaluates g and g' nodewise, updating the cached w = K^{-1}(z).
struct SteadyEvaluator {
    const NonlinearModel& m;
    const LinearOperator& L;
    const Grid& grid;

    void invert(const Field& z, Field& w) const {
        for (std::size_t i = 0; i < z.size(); ++i) w[i] = invert_increasing(m.K, z[i], w[i]);
    }

    // F = L z + lambda g(z) on free nodes, 0 on fixed ones; also returns ||lambda g||_w.
    Field residual(const Field& z, const Field& w, double lambda, double* forcing_norm = nullptr) const {
        Field F = L.apply(z);
        Field forcing(z.size(), 0.0);
        for (std::size_t i = 0; i < z.size(); ++i) {
            if (L.fixed[i]) continue;
            forcing[i] = lambda * m.f(w[i]);
            F[i] += forcing[i];
        }
        if (forcing_norm) *forcing_norm = weighted_norm(forcing, grid);
        return F;
    }

    Field g_values(const Field& w) const {
        Field out(w.size(), 0.0);
        for (std::size_t i = 0; i < w.size(); ++i)
            if (!L.fixed[i]) out[i] = m.f(w[i]);
        return out;
    }

    // Jacobian dF/dz = L + lambda diag(g'(z)), identity rows on fixed nodes.
    void jacobian(const Field& w, double lambda, Field& lo, Field& di, Field& up) const {
        lo = L.lower;
        di = L.diag;
        up = L.upper;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (L.fixed[i]) {
                lo[i] = up[i] = 0.0;
                di[i] = 1.0;
                continue;
            }
            double gp = m.f.eval(w[i], 1).d1 / m.K.eval(w[i], 1).d1;
            di[i] += lambda * gp;
        }
    }
};

inline double relative_residual(double fnorm, double forcing_norm) {
    return fnorm / std::max(1.0, forcing_norm);
}

inline double dirichlet_boundary_value(const NonlinearModel& m) {
    // Dirichlet acts on K(u): boundary nodes carry z = 0, i.e. u = K^{-1}(0).
    return invert_increasing(m.K, 0.0, 0.0);
}

}  // namespace detail

/// Damped Newton on the discrete steady residual. Throws NewtonDivergence on failure.
inline SteadyState solve_steady(const NonlinearModel& m, const Grid& grid, double lambda, const Field& guess,
                                const SteadyOptions& opt = {}) {
    if (lambda < 0.0) throw Error("solve_steady: lambda must be >= 0");
    LinearOperator L = laplacian(grid, m.boundary);
    detail::SteadyEvaluator ev{m, L, grid};
    const std::size_t n = grid.size();
    if (guess.size() != n) throw Error("solve_steady: guess/grid size mismatch");
    Field z = guess;
    for (std::size_t i = 0; i < n; ++i) {
        if (L.fixed[i]) z[i] = 0.0;
        if (!std::isfinite(z[i])) throw Error("solve_steady: non-finite guess");
    }
    Field w(n, 0.0);
    ev.invert(z, w);
    double fnorm_forcing = 0.0;
    Field F = ev.residual(z, w, lambda, &fnorm_forcing);
    double fn = weighted_norm(F, grid);
    int it = 0;
    for (; it <= opt.max_iterations; ++it) {
        if (detail::relative_residual(fn, fnorm_forcing) <= opt.tolerance) break;
        if (it == opt.max_iterations) throw NewtonDivergence("solve_steady: Newton did not converge");
        Field lo, di, up;
        ev.jacobian(w, lambda, lo, di, up);
        Field rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = -F[i];
        Field dz;
        try {
            dz = solve_tridiagonal(lo, di, up, rhs);
        } catch (const ConvergenceError&) {
            throw NewtonDivergence("solve_steady: singular Jacobian");
        }
        double alpha = 1.0;
        for (;;) {
            Field zt(n), wt = w;
            for (std::size_t i = 0; i < n; ++i) zt[i] = z[i] + alpha * dz[i];
            bool ok = true;
            double ft_forcing = 0.0, ftn = 0.0;
            Field Ft;
            try {
                ev.invert(zt, wt);
                Ft = ev.residual(zt, wt, lambda, &ft_forcing);
                ftn = weighted_norm(Ft, grid);
                ok = std::isfinite(ftn);
            } catch (const Error&) {
                ok = false;
            }
            if (ok && (ftn <= (1.0 - 1e-4 * alpha) * fn || detail::relative_residual(ftn, ft_forcing) <= opt.tolerance)) {
                z = std::move(zt);
                w = std::move(wt);
                F = std::move(Ft);
                fn = ftn;
                fnorm_forcing = ft_forcing;
                break;
            }
            alpha *= 0.5;
            if (alpha < 1.0 / 4096.0) throw NewtonDivergence("solve_steady: line search failed");
        }
    }
    return {lambda, z, w, detail::relative_residual(fn, fnorm_forcing), it};
}

/// Lower-branch steady state by lambda-ramping from zero.
inline SteadyState ramp_to_lambda(const NonlinearModel& m, const Grid& grid, double lambda, int steps = 8) {
    Field z(grid.size(), 0.0);
    SteadyState s = solve_steady(m, grid, 0.0, z);
    for (int k = 1; k <= steps; ++k) s = solve_steady(m, grid, lambda * k / steps, s.z);
    return s;
}

// ---------------------------------------------------------------------------------------------
// Pseudo-arclength continuation

struct SteadyBranch {
    std::vector<SteadyState> states;
    std::vector<double> arclength;
    std::vector<bool> turning;  ///< turning[k]: lambda direction reverses between segments k-1 and k
    bool aborted = false;       ///< step fell below ds_min; branch is partial
};

struct ContinuationOptions {
    double ds_min = 1e-8;
    int max_corrector = 12;
};

namespace detail {

struct BranchPoint {
    Field z;
    double lambda;
};

// Combined inner product <a, b> = <a_z, b_z>_w + a_lambda b_lambda.
inline double branch_dot(const BranchPoint& a, const BranchPoint& b, const Grid& g) {
    return inner(a.z, b.z, g) + a.lambda * b.lambda;
}

inline BranchPoint branch_diff(const BranchPoint& a, const BranchPoint& b) {
    BranchPoint d{Field(a.z.size()), a.lambda - b.lambda};
    for (std::size_t i = 0; i < a.z.size(); ++i) d.z[i] = a.z[i] - b.z[i];
    return d;
}

inline void normalize(BranchPoint& t, const Grid& g) {
    double nrm = std::sqrt(branch_dot(t, t, g));
    for (double& v : t.z) v /= nrm;
    t.lambda /= nrm;
}

/// Newton corrector on {F(z, lambda) = 0, <t, x - x_pred> = 0}. Returns nullopt on failure.
inline std::optional<SteadyState> correct_arclength(const NonlinearModel& m, const Grid& grid,
                                                    const LinearOperator& L, const BranchPoint& pred,
                                                    const BranchPoint& tangent, Field w_guess,
                                                    int max_iter, double tol = 1e-10) {
    SteadyEvaluator ev{m, L, grid};
    const std::size_t n = grid.size();
    Field z = pred.z;
    double lambda = pred.lambda;
    Field w = std::move(w_guess);
    for (int it = 0; it <= max_iter; ++it) {
        try {
            ev.invert(z, w);
        } catch (const Error&) {
            return std::nullopt;
        }
        double forcing = 0.0;
        Field F = ev.residual(z, w, lambda, &forcing);
        double fn = weighted_norm(F, grid);
        if (!std::isfinite(fn)) return std::nullopt;
        BranchPoint cur{z, lambda};
        double N = branch_dot(tangent, branch_diff(cur, pred), grid);
        if (relative_residual(fn, forcing) <= tol && std::fabs(N) <= 1e-10 * (1.0 + std::fabs(lambda)))
            return SteadyState{lambda, z, w, relative_residual(fn, forcing), it};
        if (it == max_iter) break;
        Field lo, di, up;
        ev.jacobian(w, lambda, lo, di, up);
        Field negF(n), G = ev.g_values(w);
        for (std::size_t i = 0; i < n; ++i) negF[i] = -F[i];
        Field a, b;
        try {
            a = solve_tridiagonal(lo, di, up, negF);
            b = solve_tridiagonal(lo, di, up, G);
        } catch (const ConvergenceError&) {
            return std::nullopt;
        }
        double denom = tangent.lambda - inner(tangent.z, b, grid);
        if (denom == 0.0 || !std::isfinite(denom)) return std::nullopt;
        double dl = (-N - inner(tangent.z, a, grid)) / denom;
        for (std::size_t i = 0; i < n; ++i) z[i] += a[i] - dl * b[i];
        lambda += dl;
        if (!std::isfinite(lambda)) return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace detail

/// Pseudo-arclength continuation (secant predictor, bordered Newton corrector) starting in the
/// direction of increasing lambda. Failed correctors halve the step; below ds_min the partial
/// branch is returned with `aborted` set.
inline SteadyBranch continue_branch(const NonlinearModel& m, const Grid& grid, const SteadyState& from, int steps,
                                    double ds, const ContinuationOptions& opt = {}) {
    SteadyBranch br;
    br.states.push_back(from);
    br.arclength.push_back(0.0);
    br.turning.push_back(false);
    if (steps <= 0) return br;
    LinearOperator L = laplacian(grid, m.boundary);
    detail::SteadyEvaluator ev{m, L, grid};
    const std::size_t n = grid.size();

    // Initial tangent: J zdot = -g(z), lambdadot = 1.
    detail::BranchPoint tangent{Field(n), 1.0};
    {
        Field lo, di, up;
        ev.jacobian(from.w, from.lambda, lo, di, up);
        Field G = ev.g_values(from.w);
        for (double& v : G) v = -v;
        tangent.z = solve_tridiagonal(lo, di, up, G);
        detail::normalize(tangent, grid);
    }
    double step = ds;
    for (int k = 0; k < steps; ++k) {
        const SteadyState& cur = br.states.back();
        std::optional<SteadyState> next;
        while (!next) {
            detail::BranchPoint pred{Field(n), cur.lambda + step * tangent.lambda};
            for (std::size_t i = 0; i < n; ++i) pred.z[i] = cur.z[i] + step * tangent.z[i];
            next = detail::correct_arclength(m, grid, L, pred, tangent, cur.w, opt.max_corrector);
            if (next) {
                detail::BranchPoint chord = detail::branch_diff({next->z, next->lambda}, {cur.z, cur.lambda});
                const double len = std::sqrt(detail::branch_dot(chord, chord, grid));
                if (len > ds) {
                    // Curvature lengthens the chord beyond the projected step.
                    step *= 0.99 * ds / len;
                    next.reset();
                    continue;
                }
            } else {
                step *= 0.5;
                if (step < opt.ds_min) {
                    br.aborted = true;
                    return br;
                }
            }
        }
        detail::BranchPoint secant = detail::branch_diff({next->z, next->lambda}, {cur.z, cur.lambda});
        double len = std::sqrt(detail::branch_dot(secant, secant, grid));
        detail::normalize(secant, grid);
        tangent = secant;
        br.arclength.push_back(br.arclength.back() + len);
        const double dl_prev = br.states.size() >= 2
                                   ? cur.lambda - br.states[br.states.size() - 2].lambda
                                   : 1.0;
        const double dl_now = next->lambda - cur.lambda;
        br.turning.push_back(dl_prev * dl_now < 0.0);
        br.states.push_back(std::move(*next));
        step = std::min(ds, step * 2.0);
    }
    return br;
}

struct FoldReport {
    double lambda_star = 0.0;
    SteadyState state;        ///< corrected state closest to the fold
    double lambda_before = 0.0;  ///< lambda of the branch point preceding the fold
    double lambda_after = 0.0;   ///< lambda of the branch point following the fold
    double arclength = 0.0;
    double accuracy = 0.0;    ///< last refinement change in lambda_star
    int refinements = 0;
};

namespace detail {

struct FitPoint {
    double s;
    SteadyState state;
};

// Vertex of the parabola through three (s, lambda) points.
inline std::pair<double, double> parabola_vertex(const FitPoint& p0, const FitPoint& p1, const FitPoint& p2) {
    const double s0 = p0.s, s1 = p1.s, s2 = p2.s;
    const double l0 = p0.state.lambda, l1 = p1.state.lambda, l2 = p2.state.lambda;
    const double d01 = (l1 - l0) / (s1 - s0), d12 = (l2 - l1) / (s2 - s1);
    const double a = (d12 - d01) / (s2 - s0);
    const double b = d01 - a * (s0 + s1);
    if (!(a < 0.0)) return {s1, l1};
    const double sv = -b / (2.0 * a);
    const double c = l0 - a * s0 * s0 - b * s0;
    return {sv, a * sv * sv + b * sv + c};
}

}  // namespace detail

/// Locates the fold (maximum of lambda along the branch) by a local quadratic fit in arclength,
/// refined by corrector re-solves at the fitted vertex.
inline FoldReport find_lambda_star(const SteadyBranch& b, const NonlinearModel& m, const Grid& grid,
                                   int max_refinements = 8) {
    const auto& st = b.states;
    std::size_t k = 0;
    for (std::size_t i = 1; i + 1 < st.size(); ++i) {
        if (st[i].lambda >= st[i - 1].lambda && st[i].lambda > st[i + 1].lambda) {
            k = i;
            break;
        }
    }
    if (k == 0) throw NoFoldError("find_lambda_star: lambda never turns along the branch");

    std::vector<detail::FitPoint> pts = {{b.arclength[k - 1], st[k - 1]}, {b.arclength[k], st[k]},
                                         {b.arclength[k + 1], st[k + 1]}};
    FoldReport rep;
    rep.lambda_before = st[k - 1].lambda;
    rep.lambda_after = st[k + 1].lambda;
    auto [s_star, l_star] = detail::parabola_vertex(pts[0], pts[1], pts[2]);
    rep.accuracy = std::fabs(l_star - st[k].lambda);
    LinearOperator L = laplacian(grid, m.boundary);
    const std::size_t n = grid.size();
    for (int r = 0; r < max_refinements; ++r) {
        // Quadratic (Lagrange) interpolation of the state and its arclength derivative at s_star.
        const double s0 = pts[0].s, s1 = pts[1].s, s2 = pts[2].s;
        const double c0 = (s_star - s1) * (s_star - s2) / ((s0 - s1) * (s0 - s2));
        const double c1 = (s_star - s0) * (s_star - s2) / ((s1 - s0) * (s1 - s2));
        const double c2 = (s_star - s0) * (s_star - s1) / ((s2 - s0) * (s2 - s1));
        const double e0 = ((s_star - s1) + (s_star - s2)) / ((s0 - s1) * (s0 - s2));
        const double e1 = ((s_star - s0) + (s_star - s2)) / ((s1 - s0) * (s1 - s2));
        const double e2 = ((s_star - s0) + (s_star - s1)) / ((s2 - s0) * (s2 - s1));
        detail::BranchPoint pred{Field(n), 0.0}, tan{Field(n), 0.0};
        pred.lambda = c0 * pts[0].state.lambda + c1 * pts[1].state.lambda + c2 * pts[2].state.lambda;
        tan.lambda = e0 * pts[0].state.lambda + e1 * pts[1].state.lambda + e2 * pts[2].state.lambda;
        for (std::size_t i = 0; i < n; ++i) {
            pred.z[i] = c0 * pts[0].state.z[i] + c1 * pts[1].state.z[i] + c2 * pts[2].state.z[i];
            tan.z[i] = e0 * pts[0].state.z[i] + e1 * pts[1].state.z[i] + e2 * pts[2].state.z[i];
        }
        detail::normalize(tan, grid);
        auto corrected = detail::correct_arclength(m, grid, L, pred, tan, pts[1].state.w, 20);
        if (!corrected) break;
        ++rep.refinements;
        // Replace the point farthest from the vertex, keeping the set ordered in s.
        std::size_t far = 0;
        for (std::size_t i = 1; i < 3; ++i)
            if (std::fabs(pts[i].s - s_star) > std::fabs(pts[far].s - s_star)) far = i;
        const double min_gap = 1e-4 * std::fabs(pts[2].s - pts[0].s);
        bool too_close = false;
        for (std::size_t i = 0; i < 3; ++i)
            if (i != far && std::fabs(pts[i].s - s_star) < min_gap) too_close = true;
        rep.state = *corrected;
        if (too_close) {
            rep.accuracy = std::fabs(corrected->lambda - l_star);
            l_star = std::max(l_star, corrected->lambda);
            break;
        }
        pts[far] = {s_star, *corrected};
        std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.s < b.s; });
        auto [s_new, l_new] = detail::parabola_vertex(pts[0], pts[1], pts[2]);
        rep.accuracy = std::fabs(l_new - l_star);
        s_star = s_new;
        l_star = l_new;
        if (rep.accuracy <= 1e-13 * std::fabs(l_star)) break;
    }
    if (rep.state.z.empty()) rep.state = st[k];
    rep.lambda_star = l_star;
    rep.arclength = s_star;
    return rep;
}

/// Fold report from the branch points alone (no re-solves).
inline FoldReport find_lambda_star(const SteadyBranch& b) {
    const auto& st = b.states;
    for (std::size_t i = 1; i + 1 < st.size(); ++i) {
        if (st[i].lambda >= st[i - 1].lambda && st[i].lambda > st[i + 1].lambda) {
            auto [s, l] = detail::parabola_vertex({b.arclength[i - 1], st[i - 1]}, {b.arclength[i], st[i]},
                                                  {b.arclength[i + 1], st[i + 1]});
            FoldReport rep;
            rep.lambda_star = l;
            rep.state = st[i];
            rep.lambda_before = st[i - 1].lambda;
            rep.lambda_after = st[i + 1].lambda;
            rep.arclength = s;
            rep.accuracy = std::fabs(l - st[i].lambda);
            return rep;
        }
    }
    throw NoFoldError("find_lambda_star: lambda never turns along the branch");
}

/// All branch states at a given lambda: each crossing of the branch is polished by Newton.
/// Index 0 is the first crossing along the branch (lower branch when started from lambda small).
inline std::vector<SteadyState> steady_states_at(const SteadyBranch& b, const NonlinearModel& m, const Grid& grid,
                                                 double lambda) {
    std::vector<SteadyState> out;
    const auto& st = b.states;
    for (std::size_t i = 0; i + 1 < st.size(); ++i) {
        const double l0 = st[i].lambda, l1 = st[i + 1].lambda;
        if ((l0 - lambda) * (l1 - lambda) > 0.0 || l0 == l1) continue;
        if (l1 == lambda && i + 2 < st.size()) continue;  // counted as the next segment's start
        const double t = (lambda - l0) / (l1 - l0);
        Field guess(grid.size());
        for (std::size_t j = 0; j < guess.size(); ++j) guess[j] = (1.0 - t) * st[i].z[j] + t * st[i + 1].z[j];
        out.push_back(solve_steady(m, grid, lambda, guess));
    }
    return out;
}

}  // namespace filtlab
