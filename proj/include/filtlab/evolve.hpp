#pragma once

// Time integration of u_t = Laplace K(u) + lambda f(u). Each step is linearly implicit in the
// diffusion, (I - dt L diag(K'(u_n))) du = dt (L K(u_n) + lambda f(u_n)), with explicit reaction.
// Step doubling supplies the local error estimate and a Richardson-extrapolated update.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "filtlab/error.hpp"
#include "filtlab/grid.hpp"
#include "filtlab/model.hpp"
#include "filtlab/quadrature.hpp"

namespace filtlab {

inline constexpr double kSaturation = 1e300;

/// Eigenfunctions and reference state used to record the scalar functionals.
struct Tracking {
    Field phi;           ///< L1-normalised principal eigenfunction of the auxiliary problem
    double mu = 0.0;     ///< its eigenvalue
    Field w;             ///< optional steady state (empty when absent)
    Field phi_lin;       ///< optional linearised eigenfunction, int K'(w) phi_lin = 1
};

struct EvolutionConfig {
    double t_end = 1.0;
    double dt_init = 1e-4;
    double dt_min = 1e-10;
    double safety = 0.9;
    double U_max = 1e3;
    double rtol = 1e-6;
    double atol = 1e-9;
    double growth_limit = 0.1;  ///< reject steps whose sup-norm grows by more than this fraction
    int snapshot_every = 16;
    long max_steps = 5'000'000;
    std::optional<Tracking> tracking;

    void validate(double sup_u0) const {
        if (!(t_end > 0.0)) throw Error("t_end must be positive");
        if (!(dt_min > 0.0) || !(dt_min < dt_init)) throw Error("need 0 < dt_min < dt_init");
        if (!(U_max > sup_u0)) throw Error("U_max must exceed max u0");
        if (!(rtol > 0.0) || !(atol >= 0.0)) throw Error("tolerances must be positive");
        if (snapshot_every < 1) throw Error("snapshot decimation must be >= 1");
    }
};

struct Functionals {
    double B = 0.0;
    double s = 0.0;
    double r = 0.0;
    double A = std::numeric_limits<double>::quiet_NaN();
    double kdiff = std::numeric_limits<double>::quiet_NaN();  ///< int (K(u) - K(w)) phi_lin
    double mass = 0.0;
};

struct Trajectory {
    std::vector<double> t, dt, sup, mass, B, s, r, A, kdiff;
    std::vector<double> snapshot_times;
    std::vector<Field> snapshots;
    long rejected = 0;

    std::size_t size() const { return t.size(); }
};

enum class BlowupStatus { Bounded, BlewUp, Inconclusive };

inline std::string to_string(BlowupStatus s) {
    switch (s) {
        case BlowupStatus::Bounded: return "bounded-at-t_end";
        case BlowupStatus::BlewUp: return "blew-up";
        default: return "inconclusive";
    }
}

struct BlowupEstimate {
    BlowupStatus status = BlowupStatus::Inconclusive;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double final_sup = 0.0;
    double final_dt = 0.0;
    std::vector<double> sup_tail;
    std::string reason;
};

struct EvolutionResult {
    Trajectory trajectory;
    BlowupEstimate estimate;
    Field final_u;
};

namespace detail {

inline double checked(double v) {
    if (!std::isfinite(v) || std::fabs(v) > kSaturation) throw OverflowError("f or K saturated");
    return v;
}

inline double sup_norm(const Field& u) {
    double s = 0.0;
    for (double v : u) s = std::max(s, std::fabs(v));
    return s;
}

}  // namespace detail

/// One linearly implicit step. Throws OverflowError when f or K saturate.
inline Field step(const Field& u, double dt, const NonlinearModel& m, [[maybe_unused]] const Grid& g,
                  const LinearOperator& L) {
    if (!(dt > 0.0)) throw Error("step: dt must be positive");
    const std::size_t n = u.size();
    Field Ku(n), k(n), fu(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(u[i])) throw OverflowError("non-finite state");
        auto K = m.K.eval(u[i], 1);
        Ku[i] = detail::checked(K.value);
        k[i] = detail::checked(K.d1);
        fu[i] = detail::checked(m.f(u[i]));
    }
    Field rhs = L.apply(Ku);
    Field lo(n, 0.0), di(n, 1.0), up(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (L.fixed[i]) {
            rhs[i] = 0.0;
            continue;
        }
        rhs[i] = dt * (rhs[i] + m.lambda * fu[i]);
        if (i > 0) lo[i] = -dt * L.lower[i] * k[i - 1];
        di[i] = 1.0 - dt * L.diag[i] * k[i];
        if (i + 1 < n) up[i] = -dt * L.upper[i] * k[i + 1];
    }
    Field du = solve_tridiagonal(lo, di, up, rhs);
    Field out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = u[i] + du[i];
        if (!std::isfinite(out[i])) throw OverflowError("non-finite state");
    }
    return out;
}

/// Quadrature values of B, s, r (against phi), A and kdiff (against phi_lin, when w is given) and mass.
inline Functionals track_functionals(const Field& u, const Grid& g, const NonlinearModel& m, const Field& phi,
                                     const Field* w = nullptr, const Field* kw = nullptr,
                                     const Field* phi_lin = nullptr) {
    Functionals out;
    const Field& pl = phi_lin ? *phi_lin : phi;
    double A = 0.0, kd = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double wt = g.weights[i];
        const double Ku = std::min(m.K(u[i]), kSaturation);
        out.B += wt * u[i] * phi[i];
        out.s += wt * std::min(m.f(u[i]), kSaturation) * phi[i];
        out.r += wt * Ku * phi[i];
        out.mass += wt * u[i];
        if (w) {
            const double kwi = kw ? (*kw)[i] : m.K.eval((*w)[i], 1).d1;
            A += wt * (u[i] - (*w)[i]) * kwi * pl[i];
            kd += wt * (Ku - m.K((*w)[i])) * pl[i];
        }
    }
    if (w) {
        out.A = A;
        out.kdiff = kd;
    }
    return out;
}

/// Adaptive integration with step doubling and blow-up detection.
inline EvolutionResult evolve(const NonlinearModel& m, const Grid& g, const EvolutionConfig& cfg,
                              std::optional<Field> initial = std::nullopt) {
    LinearOperator L = laplacian(g, m.boundary);
    const std::size_t n = g.size();
    Field u = initial ? *initial : sample(m.u0, g);
    if (u.size() != n) throw Error("evolve: initial field/grid size mismatch");
    if (L.any_fixed()) {
        const double ub = invert_increasing(m.K, 0.0, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            if (L.fixed[i]) u[i] = ub;
    }
    cfg.validate(detail::sup_norm(u));

    const Tracking* tr = cfg.tracking ? &*cfg.tracking : nullptr;
    Field kw;
    if (tr && !tr->w.empty()) {
        kw.resize(n);
        for (std::size_t i = 0; i < n; ++i) kw[i] = m.K.eval(tr->w[i], 1).d1;
    }

    EvolutionResult res;
    Trajectory& T = res.trajectory;
    auto record = [&](double t, double dt, const Field& v) {
        T.t.push_back(t);
        T.dt.push_back(dt);
        T.sup.push_back(detail::sup_norm(v));
        Functionals F;
        if (tr) {
            const bool has_w = !tr->w.empty();
            F = track_functionals(v, g, m, tr->phi, has_w ? &tr->w : nullptr, has_w ? &kw : nullptr,
                                  tr->phi_lin.empty() ? nullptr : &tr->phi_lin);
        } else {
            F.B = F.s = F.r = std::numeric_limits<double>::quiet_NaN();
            F.mass = integrate(v, g);
        }
        T.mass.push_back(F.mass);
        T.B.push_back(F.B);
        T.s.push_back(F.s);
        T.r.push_back(F.r);
        T.A.push_back(F.A);
        T.kdiff.push_back(F.kdiff);
    };
    auto snapshot = [&](double t, const Field& v) {
        T.snapshot_times.push_back(t);
        T.snapshots.push_back(v);
    };

    double t = 0.0, dt = cfg.dt_init;
    record(t, 0.0, u);
    snapshot(t, u);
    BlowupEstimate& est = res.estimate;
    long accepted = 0;
    bool last_snap = true;

    auto finish_blowup = [&](const std::string& reason) {
        const double U = detail::sup_norm(u);
        est.status = BlowupStatus::BlewUp;
        est.t_lo = t;
        double remaining = 0.0;
        try {
            auto tail = integrate_to_infinity(
                [&](double s) {
                    double fs = m.f(s);
                    return std::isfinite(fs) ? 1.0 / (m.lambda * fs) : 0.0;
                },
                U);
            remaining = tail.value;
        } catch (const Error&) {
            remaining = 0.0;
        }
        est.t_hi = t + remaining;
        est.reason = reason;
    };

    while (true) {
        if (t >= cfg.t_end) {
            est.status = BlowupStatus::Bounded;
            est.t_lo = est.t_hi = t;
            est.reason = "reached t_end";
            break;
        }
        if (accepted >= cfg.max_steps) {
            est.status = BlowupStatus::Inconclusive;
            est.t_lo = est.t_hi = t;
            est.reason = "step limit reached";
            break;
        }
        const double sup_now = detail::sup_norm(u);
        if (dt <= cfg.dt_min) {
            if (sup_now >= cfg.U_max) {
                finish_blowup("sup-norm reached U_max and the step size collapsed");
            } else {
                est.status = BlowupStatus::Inconclusive;
                est.t_lo = est.t_hi = t;
                est.reason = "step size collapsed below dt_min before sup-norm reached U_max";
            }
            break;
        }
        double h = std::min(dt, cfg.t_end - t);
        const bool clipped = h < dt;
        Field next;
        double err = std::numeric_limits<double>::infinity();
        bool overflow = false;
        try {
            Field full = step(u, h, m, g, L);
            Field half = step(step(u, 0.5 * h, m, g, L), 0.5 * h, m, g, L);
            err = 0.0;
            next.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double scale = cfg.atol + cfg.rtol * std::max(1.0, std::fabs(half[i]));
                err = std::max(err, std::fabs(half[i] - full[i]) / scale);
                next[i] = 2.0 * half[i] - full[i];
            }
            for (double v : next) detail::checked(m.f(v));
        } catch (const OverflowError&) {
            overflow = true;
        } catch (const ConvergenceError&) {
            overflow = true;
        }
        if (overflow) {
            ++T.rejected;
            if (sup_now >= cfg.U_max && 0.5 * dt <= cfg.dt_min) {
                finish_blowup("overflow with sup-norm above U_max");
                break;
            }
            dt *= 0.5;
            continue;
        }
        const double sup_next = detail::sup_norm(next);
        const bool too_fast = sup_next - sup_now > cfg.growth_limit * std::max(1.0, sup_now);
        if (err <= 1.0 && !too_fast) {
            u = std::move(next);
            t = clipped ? cfg.t_end : t + h;
            ++accepted;
            record(t, h, u);
            last_snap = accepted % cfg.snapshot_every == 0;
            if (last_snap) snapshot(t, u);
            const double grow = err > 0.0 ? cfg.safety / std::sqrt(err) : 2.0;
            if (!clipped) dt = h * std::clamp(grow, 0.2, 2.0);
        } else {
            ++T.rejected;
            dt = too_fast && err <= 1.0 ? 0.5 * h : h * std::clamp(cfg.safety / std::sqrt(err), 0.2, 0.5);
        }
        if (detail::sup_norm(u) >= cfg.U_max && dt <= cfg.dt_min) {
            finish_blowup("sup-norm reached U_max and the step size collapsed");
            break;
        }
    }
    if (!last_snap) snapshot(t, u);
    est.final_sup = detail::sup_norm(u);
    est.final_dt = dt;
    const std::size_t k = T.sup.size();
    est.sup_tail.assign(T.sup.begin() + static_cast<long>(k > 16 ? k - 16 : 0), T.sup.end());
    res.final_u = std::move(u);
    return res;
}

}  // namespace filtlab
